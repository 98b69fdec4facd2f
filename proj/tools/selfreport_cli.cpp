#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "selfreport/selfreport.h"

namespace {

constexpr const char* kLayout =
    "Run directory layout: manifest.json, config.toml, contexts/*.json, weights/*.json, subjects/*.json,\n"
    "datasets/*.jsonl, choices/*.jsonl, reports/*.jsonl, estimates/*.json, analysis/{report.json,draws.json,summary.md}.\n"
    "Completed stages are reused when their inputs are unchanged.";

constexpr const char* kEnvironment =
    "Environment: the remote backend reads its API key from the variable named by backend.credential_env_var\n"
    "(default OPENAI_API_KEY). NO_NETWORK=1 disables every remote call.";

struct Failure {
  sr_status status;
  std::string message;
};

void check(sr_status status) {
  if (status != SR_OK) throw Failure{status, {}};
}

std::string take(char* text) {
  std::string out = text ? text : "";
  sr_string_free(text);
  return out;
}

class Config {
 public:
  Config() { check(sr_config_create(&handle_)); }
  ~Config() { sr_config_destroy(handle_); }
  Config(const Config&) = delete;
  Config& operator=(const Config&) = delete;
  sr_config* get() const { return handle_; }

 private:
  sr_config* handle_ = nullptr;
};

class Run {
 public:
  Run(const std::string& dir, const Config& config, const std::string& command) {
    check(sr_run_open(dir.c_str(), config.get(), command.c_str(), &handle_));
  }
  ~Run() { sr_run_close(handle_); }
  Run(const Run&) = delete;
  Run& operator=(const Run&) = delete;

  std::string stage(const std::string& name) {
    char* out = nullptr;
    check(sr_run_stage(handle_, name.c_str(), &out));
    return take(out);
  }
  std::string estimate(const std::string& path) {
    char* out = nullptr;
    check(sr_run_estimate(handle_, path.c_str(), &out));
    return take(out);
  }
  std::string read(const std::string& path) {
    char* out = nullptr;
    check(sr_run_read(handle_, path.c_str(), &out));
    return take(out);
  }

 private:
  sr_run* handle_ = nullptr;
};

// Options shared by every command that touches a run directory.
struct Common {
  std::string run = ".";
  std::string config_file;
  std::vector<std::string> settings;
  std::optional<std::uint64_t> seed;
  std::string backend;
  std::string model;
  std::optional<int> max_in_flight;
  std::optional<int> limit;

  void attach(CLI::App* app, bool run_option = true) {
    if (run_option) app->add_option("--run", run, "Run directory (created if missing)")->capture_default_str();
    app->add_option("--config", config_file, "TOML configuration file")->check(CLI::ExistingFile);
    app->add_option("--set", settings, "Override one setting, e.g. --set counts.reports_per_agent=10")
        ->type_name("KEY=VALUE");
    app->add_option("--seed", seed, "Root seed");
    app->add_option("--backend", backend, "Backend kind")->check(CLI::IsMember({"synthetic", "remote"}));
    app->add_option("--model", model, "Remote model id (the preference-trained model)");
    app->add_option("--max-in-flight", max_in_flight, "Concurrent backend calls")->check(CLI::PositiveNumber);
    app->add_option("--limit", limit, "Use only the first N contexts of each set (0 = all)")
        ->check(CLI::NonNegativeNumber);
  }

  void set(Config& config, const std::string& key, const std::string& value) const {
    check(sr_config_set(config.get(), key.c_str(), value.c_str()));
  }

  // Defaults, then the run's stored configuration, then --config, then flags.
  void resolve(Config& config, bool use_stored = true) const {
    if (use_stored) {
      int found = 0;
      if (std::filesystem::exists(run)) check(sr_config_load_run(config.get(), run.c_str(), &found));
    }
    if (!config_file.empty()) check(sr_config_load_toml(config.get(), config_file.c_str()));
    if (seed) set(config, "seed.value", std::to_string(*seed));
    if (!backend.empty()) set(config, "backend.kind", backend);
    if (!model.empty()) set(config, "backend.model_id", model);
    if (max_in_flight) set(config, "backend.max_in_flight", std::to_string(*max_in_flight));
    if (limit) set(config, "contexts.limit", std::to_string(*limit));
    for (const auto& entry : settings) {
      const auto eq = entry.find('=');
      if (eq == std::string::npos) {
        throw Failure{SR_ERR_USAGE, "--set expects KEY=VALUE, got " + entry};
      }
      set(config, entry.substr(0, eq), entry.substr(eq + 1));
    }
  }
};

std::string command_line(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    std::string arg = argv[i];
    if (i > 0) out += ' ';
    if (arg.empty() || arg.find_first_of(" \t\"'\\$") != std::string::npos) {
      std::string quoted = "'";
      for (char c : arg) quoted += c == '\'' ? std::string("'\\''") : std::string(1, c);
      out += quoted + "'";
    } else {
      out += arg;
    }
  }
  return out;
}

void print_stage(const std::string& stage_json) {
  // The stage record is JSON; print the two fields people look for.
  const auto find = [&](const std::string& key) {
    const auto at = stage_json.find("\"" + key + "\": ");
    if (at == std::string::npos) return std::string();
    const auto start = at + key.size() + 4;
    const auto end = stage_json.find_first_of(",\n", start);
    return stage_json.substr(start, end - start);
  };
  std::cout << "stage " << find("name") << (find("reused") == "true" ? " reused" : " completed") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measure how accurately a model reports the attribute weights behind its choices.\n" +
               std::string(kEnvironment)};
  app.set_version_flag("--version", std::string(sr_version()));
  app.require_subcommand(1);
  app.footer(kLayout);

  std::string command = command_line(argc, argv);

  auto* gen = app.add_subcommand("gen-weights", "Copy the context sets into the run and draw target weights.\n"
                                                "Writes contexts/*.json, weights/targets.json, weights/native_latent.json.");
  Common gen_opts;
  gen_opts.attach(gen);

  auto* dataset = app.add_subcommand("make-dataset", "Emit a fine-tuning dataset as chat JSON-Lines.\n"
                                                     "preference -> datasets/preference.jsonl (one line per example);\n"
                                                     "introspection -> datasets/introspection-{fold1,fold2,all}.jsonl.");
  Common dataset_opts;
  dataset_opts.attach(dataset);
  std::string dataset_kind;
  std::string dataset_contexts;
  std::optional<int> per_agent;
  dataset->add_option("--kind", dataset_kind, "Dataset kind")
      ->required()
      ->check(CLI::IsMember({"preference", "introspection"}));
  dataset->add_option("--contexts", dataset_contexts, "Context set name or JSON file (default original-100)");
  dataset->add_option("--per-agent", per_agent, "Preference examples per agent")->check(CLI::PositiveNumber);

  auto* elicit = app.add_subcommand("elicit", "Query the backend.\n"
                                              "decision -> choices/verify.jsonl and estimates/verify.json;\n"
                                              "introspection -> reports/base.jsonl and weights/reported-base.json.");
  Common elicit_opts;
  elicit_opts.attach(elicit);
  std::string task;
  elicit->add_option("--task", task, "Prompt kind")->required()->check(CLI::IsMember({"decision", "introspection"}));

  auto* estimate = app.add_subcommand("estimate", "Fit per-context logistic weights to a choices file.\n"
                                                  "Writes estimates/<name>.json next to the file's run directory.");
  std::string choices;
  std::string estimate_run;
  estimate->add_option("--choices", choices, "Choices JSON-Lines file inside a run directory")
      ->required()
      ->check(CLI::ExistingFile);
  estimate->add_option("--run", estimate_run, "Run directory (default: two levels above the choices file)");

  auto* analyze = app.add_subcommand("analyze", "Correlations, HDIs, and contrasts over everything in the run.\n"
                                                "Writes analysis/report.json, analysis/draws.json, analysis/summary.md.");
  Common analyze_opts;
  analyze_opts.attach(analyze);
  std::string format = "markdown";
  analyze->add_option("--format", format, "Printed output")
      ->check(CLI::IsMember({"json", "markdown"}))
      ->capture_default_str();

  auto* crossfold = app.add_subcommand("crossfold", "Two-fold introspection training: train on one half, test on the other.\n"
                                                    "Writes reports/crossfold-fold*.jsonl and weights/reported-crossfold.json.");
  Common crossfold_opts;
  crossfold_opts.attach(crossfold);

  auto* transfer = app.add_subcommand("transfer", "Native-preference generalization on the transfer contexts.\n"
                                                  "Writes choices/native.jsonl, estimates/native.json, reports/native-*.jsonl.");
  Common transfer_opts;
  transfer_opts.attach(transfer);

  auto* simulate = app.add_subcommand("simulate", "Run every stage end to end and analyze.");
  Common simulate_opts;
  simulate_opts.attach(simulate, false);
  simulate->add_option("--out", simulate_opts.run, "Run directory")->required();

  auto* finetune = app.add_subcommand("finetune", "Fine-tuning jobs on the remote backend.");
  finetune->require_subcommand(1);
  auto* submit = finetune->add_subcommand("submit", "Validate a dataset, upload it, and create a job. Prints the job.");
  Common submit_opts;
  submit_opts.attach(submit, false);
  std::string submit_dataset;
  std::string submit_kind;
  submit->add_option("--dataset", submit_dataset, "Dataset JSON-Lines file")->required()->check(CLI::ExistingFile);
  submit->add_option("--kind", submit_kind, "Dataset kind")
      ->required()
      ->check(CLI::IsMember({"preference", "introspection"}));
  auto* status = finetune->add_subcommand("status", "Print a job's current state.");
  Common status_opts;
  status_opts.attach(status, false);
  std::string job_id;
  status->add_option("--job", job_id, "Job id")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Config config;
    if (*gen) {
      gen_opts.resolve(config);
      Run run(gen_opts.run, config, command);
      run.stage("configure");
      print_stage(run.stage("gen-weights"));
    } else if (*dataset) {
      dataset_opts.resolve(config);
      if (!dataset_contexts.empty()) dataset_opts.set(config, "contexts.original", dataset_contexts);
      if (per_agent) dataset_opts.set(config, "counts.preference_examples_per_agent", std::to_string(*per_agent));
      Run run(dataset_opts.run, config, command);
      run.stage("configure");
      print_stage(run.stage("dataset-" + dataset_kind));
    } else if (*elicit) {
      elicit_opts.resolve(config);
      Run run(elicit_opts.run, config, command);
      run.stage("configure");
      print_stage(run.stage(task == "decision" ? "verify" : "elicit-reports"));
    } else if (*estimate) {
      namespace fs = std::filesystem;
      const fs::path file = fs::absolute(choices).lexically_normal();
      const fs::path root = estimate_run.empty() ? file.parent_path().parent_path() : fs::absolute(estimate_run);
      const fs::path relative = file.lexically_relative(root.lexically_normal());
      if (relative.empty() || *relative.begin() == "..") {
        std::cerr << "error: " << choices << " is not inside run directory " << root.string() << "\n";
        return 2;
      }
      int found = 0;
      check(sr_config_load_run(config.get(), root.c_str(), &found));
      Run run(root.string(), config, command);
      print_stage(run.estimate(relative.string()));
    } else if (*analyze) {
      analyze_opts.resolve(config);
      Run run(analyze_opts.run, config, command);
      run.stage("configure");
      run.stage("analyze");
      std::cout << run.read(format == "json" ? "analysis/report.json" : "analysis/summary.md");
    } else if (*crossfold) {
      crossfold_opts.resolve(config);
      Run run(crossfold_opts.run, config, command);
      run.stage("configure");
      print_stage(run.stage("crossfold"));
    } else if (*transfer) {
      transfer_opts.resolve(config);
      Run run(transfer_opts.run, config, command);
      run.stage("configure");
      print_stage(run.stage("transfer"));
    } else if (*simulate) {
      simulate_opts.resolve(config);
      Run run(simulate_opts.run, config, command);
      run.stage("simulate");
      std::cout << run.read("analysis/summary.md");
    } else if (*submit) {
      submit_opts.resolve(config, false);
      char* out = nullptr;
      check(sr_finetune_submit(config.get(), submit_dataset.c_str(), submit_kind.c_str(), &out));
      std::cout << take(out) << "\n";
    } else if (*status) {
      status_opts.resolve(config, false);
      char* out = nullptr;
      check(sr_finetune_status(config.get(), job_id.c_str(), &out));
      std::cout << take(out) << "\n";
    }
  } catch (const Failure& failure) {
    const std::string message = failure.message.empty() ? sr_last_error() : failure.message;
    std::cerr << "error (" << sr_status_name(failure.status) << "): " << message << "\n";
    return sr_exit_code(failure.status);
  }
  return 0;
}
