#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>

#include "selfreport/config.hpp"
#include "selfreport/error.hpp"
#include "support/test_data.hpp"

using namespace selfreport;
using namespace selfreport::testing;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::domain;
}

}  // namespace

TEST(Toml, ParsesScalarSubset) {
  const auto table = parse_toml(R"(# leading comment
top = 1
[backend]
kind = "remote"   # trailing comment
model_id = "gpt-4o-mini-2024-07-18"
max_retries = 3
request_timeout = 2.5
[subject]
choice_sharpness = inf
flag = true
neg = -1e3
quoted = "a \"b\" # not a comment"
)");
  EXPECT_EQ(std::get<std::int64_t>(table.at("top")), 1);
  EXPECT_EQ(std::get<std::string>(table.at("backend.kind")), "remote");
  EXPECT_EQ(std::get<std::int64_t>(table.at("backend.max_retries")), 3);
  EXPECT_EQ(std::get<double>(table.at("backend.request_timeout")), 2.5);
  EXPECT_TRUE(std::isinf(std::get<double>(table.at("subject.choice_sharpness"))));
  EXPECT_TRUE(std::get<bool>(table.at("subject.flag")));
  EXPECT_EQ(std::get<double>(table.at("subject.neg")), -1000.0);
  EXPECT_EQ(std::get<std::string>(table.at("subject.quoted")), "a \"b\" # not a comment");
}

TEST(Toml, RejectsUnsupportedSyntaxWithLocation) {
  for (const char* text : {"[a\nx = 1", "x = [1, 2]", "x = {a = 1}", "x 1", "x = 1\nx = 2", "[[arr]]\n"}) {
    try {
      parse_toml(text, "cfg.toml");
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::config) << text;
      EXPECT_NE(std::string(e.what()).find("cfg.toml"), std::string::npos) << e.what();
    }
  }
}

TEST(RunConfig, DefaultsAreValid) {
  RunConfig config;
  config.validate();
  EXPECT_EQ(config.preference_examples_per_agent, 50);
  EXPECT_EQ(config.decisions_per_agent, 50);
  EXPECT_EQ(config.reports_per_agent, 10);
  EXPECT_EQ(config.native_decisions_per_agent, 100);
  EXPECT_EQ(config.bootstrap.draws, 10000u);
  EXPECT_EQ(config.bootstrap.mass, 0.95);
  EXPECT_EQ(config.backend.credential_env_var, "OPENAI_API_KEY");
}

TEST(RunConfig, TomlRoundTripCoversEverySetting) {
  RunConfig config;
  config.seed = 12345678901ULL;
  config.backend.kind = BackendKind::remote;
  config.backend.model_id = "gpt-4o-2024-08-06";
  config.backend.endpoint_url = "http://localhost:9/v1";
  config.backend.credential_env_var = "MY_KEY";
  config.backend.max_in_flight = 3;
  config.backend.initial_backoff = 0.25;
  config.context_limit = 20;
  config.decisions_per_agent = 7;
  config.aggregation = ReportAggregation::median;
  config.bootstrap.draws = 500;
  config.subject.choice_sharpness = std::numeric_limits<double>::infinity();
  config.subject.report_noise_sd = 0.1;
  config.finetune_poll_interval = 1.0;

  TempDir dir;
  const auto path = dir.path() / "config.toml";
  std::ofstream(path) << to_toml(config);
  const auto back = load_run_config(path);
  EXPECT_EQ(to_toml(back), to_toml(config));
  EXPECT_EQ(back.seed, config.seed);
  EXPECT_EQ(back.backend.kind, BackendKind::remote);
  EXPECT_EQ(back.aggregation, ReportAggregation::median);
  EXPECT_TRUE(std::isinf(back.subject.choice_sharpness));
  EXPECT_EQ(back.subject.report_noise_sd, 0.1);
  EXPECT_EQ(back.context_limit, 20u);
}

TEST(RunConfig, TomlNeverCarriesCredentialValues) {
  ScopedEnv secret("OPENAI_API_KEY", "sk-top-secret");
  RunConfig config;
  config.backend.kind = BackendKind::remote;
  config.backend.model_id = "gpt-4o-2024-08-06";
  EXPECT_EQ(to_toml(config).find("sk-top-secret"), std::string::npos);
  EXPECT_EQ(config.to_json().dump().find("sk-top-secret"), std::string::npos);
}

TEST(RunConfig, UnknownKeysAndBadValuesAreConfigErrors) {
  EXPECT_EQ(kind_of([] { run_config_from_toml(parse_toml("[counts]\nbogus = 1\n")); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { run_config_from_toml(parse_toml("[counts]\ndecisions_per_agent = 0\n")); }),
            ErrorKind::config);
  EXPECT_EQ(kind_of([] { run_config_from_toml(parse_toml("[counts]\ndecisions_per_agent = \"ten\"\n")); }),
            ErrorKind::config);
  EXPECT_EQ(kind_of([] { run_config_from_toml(parse_toml("[bootstrap]\nmass = 1.5\n")); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { run_config_from_toml(parse_toml("[seed]\nvalue = -3\n")); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { run_config_from_toml(parse_toml("[backend]\nkind = \"remote\"\n")); }), ErrorKind::config);
}

TEST(RunConfig, OverridesParseLikeTheCommandLine) {
  RunConfig config;
  apply_override(config, "backend.max_in_flight", "4");
  apply_override(config, "subject.choice_sharpness", "inf");
  apply_override(config, "counts.aggregation", "median");
  apply_override(config, "backend.model_id", "1234");
  apply_override(config, "contexts.original", "\"transfer-100\"");
  EXPECT_EQ(config.backend.max_in_flight, 4);
  EXPECT_TRUE(std::isinf(config.subject.choice_sharpness));
  EXPECT_EQ(config.aggregation, ReportAggregation::median);
  EXPECT_EQ(config.backend.model_id, "1234");
  EXPECT_EQ(config.original_contexts, "transfer-100");
  EXPECT_EQ(kind_of([&] { apply_override(config, "nope.key", "1"); }), ErrorKind::usage);
  EXPECT_EQ(kind_of([&] { apply_override(config, "counts.reports_per_agent", "many"); }), ErrorKind::config);
}
