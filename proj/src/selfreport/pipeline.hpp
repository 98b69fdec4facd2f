#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "selfreport/config.hpp"
#include "selfreport/experiments.hpp"
#include "selfreport/run_directory.hpp"

namespace selfreport {

struct StageOutcome {
  StageRecord record;
  // True when an identical completed stage was found and nothing ran.
  bool reused = false;
};

// Stage-by-stage driver over one run directory. Each stage declares its
// input files and parameters; a stage whose inputs are unchanged since its
// last completion is not re-run. Missing prerequisites run first.
class Pipeline {
 public:
  // `command` is recorded verbatim with every stage this instance completes.
  Pipeline(std::filesystem::path run_dir, RunConfig config, std::string command);

  const RunConfig& config() const { return config_; }
  RunDirectory& run() { return run_; }

  StageOutcome configure();
  StageOutcome contexts();
  StageOutcome gen_weights();
  StageOutcome synthetic_subject();
  StageOutcome make_dataset(DatasetKind kind);
  StageOutcome verify_preferences();
  StageOutcome elicit_reports();
  StageOutcome crossfold();
  StageOutcome transfer();
  StageOutcome analyze();
  // Fits a choices file inside the run directory into estimates/<stem>.json.
  StageOutcome estimate(const std::string& choices_path);

  // Every stage in order, ending with the analysis.
  StageOutcome simulate();

  ContextSet original_set();
  ContextSet transfer_set();

 private:
  StageOutcome run_stage(const std::string& name, const std::string& kind, const Json& params,
                         const std::vector<std::string>& inputs,
                         const std::function<std::pair<StageOutputs, Json>()>& body);
  std::unique_ptr<BackendFactory> factory();
  ContextSet union_set();
  std::vector<std::string> subject_inputs() const;

  RunDirectory run_;
  RunConfig config_;
  std::string command_;
};

// The resolved configuration of an existing run (config.toml), if any.
std::optional<RunConfig> stored_run_config(const std::filesystem::path& run_dir);

}  // namespace selfreport
