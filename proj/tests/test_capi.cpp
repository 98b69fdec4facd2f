#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "selfreport/selfreport.h"

namespace fs = std::filesystem;

namespace {

std::string take(char* text) {
  std::string out = text ? text : "";
  sr_string_free(text);
  return out;
}

struct Config {
  sr_config* handle = nullptr;
  Config() { EXPECT_EQ(sr_config_create(&handle), SR_OK); }
  ~Config() { sr_config_destroy(handle); }
};

struct Scratch {
  fs::path root;
  Scratch() {
    char pattern[] = "/tmp/selfreport-capi-XXXXXX";
    root = mkdtemp(pattern);
  }
  ~Scratch() { fs::remove_all(root); }
};

void small(sr_config* config, const char* seed) {
  ASSERT_EQ(sr_config_set(config, "seed.value", seed), SR_OK);
  ASSERT_EQ(sr_config_set(config, "contexts.limit", "6"), SR_OK);
  ASSERT_EQ(sr_config_set(config, "counts.reports_per_agent", "3"), SR_OK);
  ASSERT_EQ(sr_config_set(config, "counts.native_decisions_per_agent", "30"), SR_OK);
  ASSERT_EQ(sr_config_set(config, "bootstrap.draws", "300"), SR_OK);
}

}  // namespace

TEST(CApi, VersionAndStatusNames) {
  EXPECT_NE(std::string(sr_version()), "");
  EXPECT_STREQ(sr_status_name(SR_OK), "ok");
  EXPECT_STREQ(sr_status_name(SR_ERR_INTEGRITY), "integrity");
}

TEST(CApi, ExitCodeMapping) {
  EXPECT_EQ(sr_exit_code(SR_OK), 0);
  EXPECT_EQ(sr_exit_code(SR_ERR_DOMAIN), 1);
  EXPECT_EQ(sr_exit_code(SR_ERR_CONFIG), 1);
  EXPECT_EQ(sr_exit_code(SR_ERR_IO), 1);
  EXPECT_EQ(sr_exit_code(SR_ERR_INTEGRITY), 1);
  EXPECT_EQ(sr_exit_code(SR_ERR_INTERNAL), 1);
  EXPECT_EQ(sr_exit_code(SR_ERR_USAGE), 2);
  EXPECT_EQ(sr_exit_code(SR_ERR_TRANSPORT), 3);
}

TEST(CApi, ConfigSetAndSerialize) {
  Config config;
  EXPECT_EQ(sr_config_set(config.handle, "backend.max_in_flight", "4"), SR_OK);
  char* toml = nullptr;
  ASSERT_EQ(sr_config_to_toml(config.handle, &toml), SR_OK);
  EXPECT_NE(take(toml).find("max_in_flight = 4"), std::string::npos);

  EXPECT_EQ(sr_config_set(config.handle, "backend.no_such_key", "1"), SR_ERR_USAGE);
  EXPECT_NE(std::string(sr_last_error()).find("no_such_key"), std::string::npos);
  // Settings are checked together when a run opens.
  EXPECT_EQ(sr_config_set(config.handle, "backend.max_in_flight", "-1"), SR_OK);
  sr_run* run = nullptr;
  EXPECT_EQ(sr_run_open("/tmp/selfreport-capi-never-created", config.handle, "", &run), SR_ERR_CONFIG);
  EXPECT_FALSE(fs::exists("/tmp/selfreport-capi-never-created"));
  EXPECT_EQ(sr_config_set(nullptr, "seed.value", "1"), SR_ERR_USAGE);
}

TEST(CApi, LoadTomlReportsMissingFile) {
  Config config;
  EXPECT_EQ(sr_config_load_toml(config.handle, "/nonexistent/config.toml"), SR_ERR_IO);
  EXPECT_NE(std::string(sr_last_error()).find("/nonexistent/config.toml"), std::string::npos);
}

TEST(CApi, StagesRunAndReuse) {
  Scratch scratch;
  Config config;
  small(config.handle, "21");
  const auto dir = (scratch.root / "run").string();
  int found = 1;
  ASSERT_EQ(sr_config_load_run(config.handle, dir.c_str(), &found), SR_OK);
  EXPECT_EQ(found, 0);

  sr_run* run = nullptr;
  ASSERT_EQ(sr_run_open(dir.c_str(), config.handle, "capi test", &run), SR_OK) << sr_last_error();
  char* json = nullptr;
  ASSERT_EQ(sr_run_stage(run, "verify", &json), SR_OK) << sr_last_error();
  const auto first = take(json);
  EXPECT_NE(first.find("\"reused\": false"), std::string::npos) << first;
  ASSERT_EQ(sr_run_stage(run, "verify", &json), SR_OK);
  EXPECT_NE(take(json).find("\"reused\": true"), std::string::npos);

  char* content = nullptr;
  ASSERT_EQ(sr_run_read(run, "choices/verify.jsonl", &content), SR_OK);
  const auto choices = take(content);
  EXPECT_EQ(std::count(choices.begin(), choices.end(), '\n'), 300);

  EXPECT_EQ(sr_run_stage(run, "no-such-stage", nullptr), SR_ERR_USAGE);
  EXPECT_EQ(sr_run_read(run, "../outside", &content), SR_ERR_DOMAIN);
  EXPECT_EQ(sr_run_read(run, "missing.json", &content), SR_ERR_IO);
  sr_run_close(run);

  Config reloaded;
  ASSERT_EQ(sr_config_load_run(reloaded.handle, dir.c_str(), &found), SR_OK);
  EXPECT_EQ(found, 1);
  char* toml = nullptr;
  ASSERT_EQ(sr_config_to_toml(reloaded.handle, &toml), SR_OK);
  EXPECT_NE(take(toml).find("value = 21"), std::string::npos);
}

TEST(CApi, SimulateWritesAnalysis) {
  Scratch scratch;
  Config config;
  small(config.handle, "22");
  const auto dir = (scratch.root / "run").string();
  sr_run* run = nullptr;
  ASSERT_EQ(sr_run_open(dir.c_str(), config.handle, "capi test", &run), SR_OK);
  ASSERT_EQ(sr_run_stage(run, "simulate", nullptr), SR_OK) << sr_last_error();
  char* summary = nullptr;
  ASSERT_EQ(sr_run_read(run, "analysis/summary.md", &summary), SR_OK);
  EXPECT_NE(take(summary).find("target vs learned"), std::string::npos);
  char* json = nullptr;
  ASSERT_EQ(sr_run_estimate(run, "choices/native.jsonl", &json), SR_OK) << sr_last_error();
  take(json);
  sr_run_close(run);
}

TEST(CApi, TamperedRunFailsToOpen) {
  Scratch scratch;
  Config config;
  small(config.handle, "23");
  const auto dir = scratch.root / "run";
  sr_run* run = nullptr;
  ASSERT_EQ(sr_run_open(dir.c_str(), config.handle, "capi test", &run), SR_OK);
  ASSERT_EQ(sr_run_stage(run, "gen-weights", nullptr), SR_OK);
  sr_run_close(run);
  fs::remove(dir / "weights" / "targets.json");
  EXPECT_EQ(sr_run_open(dir.c_str(), config.handle, "capi test", &run), SR_ERR_INTEGRITY);
}

TEST(CApi, RemoteWithoutNetworkIsAConfigError) {
  Config config;
  ASSERT_EQ(sr_config_set(config.handle, "backend.kind", "remote"), SR_OK);
  ASSERT_EQ(sr_config_set(config.handle, "backend.model_id", "gpt-4o-2024-08-06"), SR_OK);
  setenv("NO_NETWORK", "1", 1);
  char* job = nullptr;
  EXPECT_EQ(sr_finetune_status(config.handle, "ftjob-1", &job), SR_ERR_CONFIG);
  unsetenv("NO_NETWORK");
}
