#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "selfreport/backend.hpp"
#include "selfreport/datasets.hpp"

namespace selfreport {

struct FinetuneHyperparameters {
  int n_epochs = 3;
  int batch_size = 10;
  double learning_rate_multiplier = 2.0;
};

// Values the provider's defaults resolved to: 3 epochs; batch size 10 for
// preference training and 1 for introspection training; learning-rate
// multiplier 2 for gpt-4o and 1.8 for gpt-4o-mini.
FinetuneHyperparameters default_hyperparameters(DatasetKind kind, std::string_view base_model);

struct FinetuneJob {
  std::string id;
  std::string status;
  std::string base_model;
  std::string training_file;
  std::string fine_tuned_model;
  std::string error;

  bool terminal() const { return status == "succeeded" || status == "failed" || status == "cancelled"; }
  bool succeeded() const { return status == "succeeded"; }
  Json to_json() const;
};

Json finetune_job_request(const std::string& training_file, const std::string& base_model,
                          const FinetuneHyperparameters& hyperparameters, const std::string& suffix = {});

// Validates the dataset locally (no network call on failure), uploads it,
// and creates the job.
FinetuneJob submit_finetune(const BackendSpec& backend, const std::filesystem::path& dataset, DatasetKind kind,
                            std::optional<FinetuneHyperparameters> hyperparameters = std::nullopt,
                            const std::string& suffix = {});

FinetuneJob finetune_status(const BackendSpec& backend, const std::string& job_id);

// Polls until the job is terminal or max_wait elapses (transport error).
FinetuneJob wait_for_finetune(const BackendSpec& backend, const std::string& job_id,
                              std::chrono::duration<double> poll_interval, std::chrono::duration<double> max_wait,
                              const std::function<void(const FinetuneJob&)>& on_update = {});

}  // namespace selfreport
