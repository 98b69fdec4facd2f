#include "selfreport/selfreport.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "selfreport/config.hpp"
#include "selfreport/error.hpp"
#include "selfreport/finetune.hpp"
#include "selfreport/pipeline.hpp"

struct sr_config {
  selfreport::RunConfig value;
};

struct sr_run {
  std::unique_ptr<selfreport::Pipeline> pipeline;
};

namespace {

thread_local std::string last_error;

sr_status status_for(selfreport::ErrorKind kind) {
  using selfreport::ErrorKind;
  switch (kind) {
    case ErrorKind::domain: return SR_ERR_DOMAIN;
    case ErrorKind::config: return SR_ERR_CONFIG;
    case ErrorKind::usage: return SR_ERR_USAGE;
    case ErrorKind::transport: return SR_ERR_TRANSPORT;
    case ErrorKind::io: return SR_ERR_IO;
    case ErrorKind::integrity: return SR_ERR_INTEGRITY;
  }
  return SR_ERR_INTERNAL;
}

template <typename F>
sr_status guarded(F&& body) {
  try {
    body();
    return SR_OK;
  } catch (const selfreport::Error& e) {
    last_error = e.what();
    return status_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return SR_ERR_IO;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return SR_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return SR_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return SR_ERR_INTERNAL;
  }
}

void require(const void* pointer, const char* name) {
  if (pointer == nullptr) selfreport::raise(selfreport::ErrorKind::usage, std::string(name) + " must not be null");
}

char* duplicate(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, text.data(), text.size() + 1);
  return out;
}

void emit(char** out, const std::string& text) {
  if (out != nullptr) *out = duplicate(text);
}

std::string outcome_json(const selfreport::StageOutcome& outcome) {
  selfreport::Json out = outcome.record.to_json();
  out["reused"] = outcome.reused;
  return out.dump(2);
}

selfreport::DatasetKind dataset_kind(const char* kind) {
  require(kind, "kind");
  const std::string_view text(kind);
  if (text != "preference" && text != "introspection") {
    selfreport::raise(selfreport::ErrorKind::usage, "dataset kind must be preference or introspection");
  }
  return selfreport::dataset_kind_from_string(text);
}

}  // namespace

extern "C" {

const char* sr_version(void) { return SELFREPORT_VERSION; }

const char* sr_last_error(void) { return last_error.c_str(); }

const char* sr_status_name(sr_status status) {
  switch (status) {
    case SR_OK: return "ok";
    case SR_ERR_DOMAIN: return "domain";
    case SR_ERR_CONFIG: return "config";
    case SR_ERR_USAGE: return "usage";
    case SR_ERR_TRANSPORT: return "transport";
    case SR_ERR_IO: return "io";
    case SR_ERR_INTEGRITY: return "integrity";
    case SR_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

int sr_exit_code(sr_status status) {
  switch (status) {
    case SR_OK: return 0;
    case SR_ERR_USAGE: return 2;
    case SR_ERR_TRANSPORT: return 3;
    default: return 1;
  }
}

sr_status sr_config_create(sr_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new sr_config{};
  });
}

void sr_config_destroy(sr_config* config) { delete config; }

sr_status sr_config_load_toml(sr_config* config, const char* path) {
  return guarded([&] {
    require(config, "config");
    require(path, "path");
    config->value = selfreport::load_run_config(path);
  });
}

sr_status sr_config_load_run(sr_config* config, const char* run_dir, int* found) {
  return guarded([&] {
    require(config, "config");
    require(run_dir, "run_dir");
    auto stored = selfreport::stored_run_config(run_dir);
    if (found != nullptr) *found = stored ? 1 : 0;
    if (stored) config->value = std::move(*stored);
  });
}

sr_status sr_config_set(sr_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    selfreport::RunConfig updated = config->value;
    selfreport::apply_override(updated, key, value);
    config->value = std::move(updated);
  });
}

sr_status sr_config_to_toml(const sr_config* config, char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    emit(out, selfreport::to_toml(config->value));
  });
}

sr_status sr_run_open(const char* run_dir, const sr_config* config, const char* command, sr_run** out) {
  return guarded([&] {
    require(run_dir, "run_dir");
    require(config, "config");
    require(out, "out");
    auto run = std::make_unique<sr_run>();
    run->pipeline = std::make_unique<selfreport::Pipeline>(run_dir, config->value, command ? command : "");
    *out = run.release();
  });
}

void sr_run_close(sr_run* run) { delete run; }

sr_status sr_run_stage(sr_run* run, const char* stage, char** stage_json) {
  return guarded([&] {
    require(run, "run");
    require(stage, "stage");
    auto& p = *run->pipeline;
    const std::string_view name(stage);
    selfreport::StageOutcome outcome;
    if (name == "configure") {
      outcome = p.configure();
    } else if (name == "contexts") {
      outcome = p.contexts();
    } else if (name == "gen-weights") {
      outcome = p.gen_weights();
    } else if (name == "dataset-preference") {
      outcome = p.make_dataset(selfreport::DatasetKind::preference);
    } else if (name == "dataset-introspection") {
      outcome = p.make_dataset(selfreport::DatasetKind::introspection);
    } else if (name == "verify") {
      outcome = p.verify_preferences();
    } else if (name == "elicit-reports") {
      outcome = p.elicit_reports();
    } else if (name == "crossfold") {
      outcome = p.crossfold();
    } else if (name == "transfer") {
      outcome = p.transfer();
    } else if (name == "analyze") {
      outcome = p.analyze();
    } else if (name == "simulate") {
      outcome = p.simulate();
    } else {
      selfreport::raise(selfreport::ErrorKind::usage, "unknown stage " + std::string(name));
    }
    emit(stage_json, outcome_json(outcome));
  });
}

sr_status sr_run_estimate(sr_run* run, const char* choices_path, char** stage_json) {
  return guarded([&] {
    require(run, "run");
    require(choices_path, "choices_path");
    emit(stage_json, outcome_json(run->pipeline->estimate(choices_path)));
  });
}

sr_status sr_run_read(sr_run* run, const char* path, char** content) {
  return guarded([&] {
    require(run, "run");
    require(path, "path");
    require(content, "content");
    emit(content, run->pipeline->run().read(path));
  });
}

sr_status sr_finetune_submit(const sr_config* config, const char* dataset_path, const char* kind, char** job_json) {
  return guarded([&] {
    require(config, "config");
    require(dataset_path, "dataset_path");
    const auto job = selfreport::submit_finetune(config->value.backend, dataset_path, dataset_kind(kind));
    emit(job_json, job.to_json().dump(2));
  });
}

sr_status sr_finetune_status(const sr_config* config, const char* job_id, char** job_json) {
  return guarded([&] {
    require(config, "config");
    require(job_id, "job_id");
    emit(job_json, selfreport::finetune_status(config->value.backend, job_id).to_json().dump(2));
  });
}

void sr_string_free(char* text) { std::free(text); }

}  // extern "C"
