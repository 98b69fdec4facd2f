#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "selfreport/backend.hpp"
#include "selfreport/stats.hpp"

namespace selfreport {

// Scalar-only TOML: [tables], key = value, comments, basic strings, integers,
// floats (including inf/nan), and booleans. Arrays and inline tables are not
// needed by the run configuration and are rejected.
using TomlValue = std::variant<std::string, std::int64_t, double, bool>;
using TomlTable = std::map<std::string, TomlValue, std::less<>>;  // "section.key" -> value

TomlTable parse_toml(std::string_view text, std::string_view source = "config");

enum class ReportAggregation { mean, median };

struct SubjectParameters {
  double choice_sharpness = 0.025;
  double report_noise_sd = 250.0;
  double report_shrinkage = 1.0;
  double invalid_report_rate = 0.02;
  // Report fidelity after (simulated) introspection training.
  double trained_report_noise_sd = 110.0;
  double trained_report_shrinkage = 1.0;
  double trained_invalid_report_rate = 0.01;
};

struct RunConfig {
  std::uint64_t seed = 0;
  BackendSpec backend;
  SubjectParameters subject;
  std::string original_contexts = "original-100";
  std::string transfer_contexts = "transfer-100";
  // 0 = use every context of the set.
  std::size_t context_limit = 0;
  int preference_examples_per_agent = 50;
  int decisions_per_agent = 50;
  int reports_per_agent = 10;
  int native_decisions_per_agent = 100;
  ReportAggregation aggregation = ReportAggregation::mean;
  BootstrapOptions bootstrap;
  // Remote fine-tuning polling.
  double finetune_poll_interval = 30.0;
  double finetune_max_wait = 6.0 * 3600.0;

  void validate() const;
  Json to_json() const;
};

RunConfig run_config_from_toml(const TomlTable& table);
RunConfig load_run_config(const std::filesystem::path& path);

// Every setting as a TOML document that load_run_config reads back to an
// equal configuration. Credentials are never part of the configuration.
std::string to_toml(const RunConfig& config);

// Applies one "section.key" override expressed as text, as the CLI does.
void apply_override(RunConfig& config, std::string_view key, std::string_view value);

}  // namespace selfreport
