#include "selfreport/finetune.hpp"

#include <thread>

#include "selfreport/context_io.hpp"
#include "selfreport/error.hpp"
#include "selfreport/remote_backend.hpp"

namespace selfreport {
namespace {

Json checked_body(const httplib::Result& response, const std::string& what) {
  if (!response) raise(ErrorKind::transport, what + ": " + httplib::to_string(response.error()));
  if (response->status < 200 || response->status >= 300) {
    raise(ErrorKind::transport, what + ": http " + std::to_string(response->status) + " " + response->body);
  }
  auto document = Json::parse(response->body, nullptr, false);
  if (document.is_discarded() || !document.is_object()) raise(ErrorKind::transport, what + ": malformed response body");
  return document;
}

std::string string_field(const Json& document, std::string_view key) {
  auto it = document.find(key);
  return it != document.end() && it->is_string() ? it->get<std::string>() : std::string();
}

FinetuneJob job_from_json(const Json& document) {
  FinetuneJob job;
  job.id = string_field(document, "id");
  job.status = string_field(document, "status");
  job.base_model = string_field(document, "model");
  job.training_file = string_field(document, "training_file");
  job.fine_tuned_model = string_field(document, "fine_tuned_model");
  if (auto it = document.find("error"); it != document.end() && it->is_object()) {
    job.error = string_field(*it, "message");
  }
  if (job.id.empty()) raise(ErrorKind::transport, "fine-tuning job response lacks an id");
  return job;
}

}  // namespace

FinetuneHyperparameters default_hyperparameters(DatasetKind kind, std::string_view base_model) {
  FinetuneHyperparameters hp;
  hp.n_epochs = 3;
  hp.batch_size = kind == DatasetKind::preference ? 10 : 1;
  hp.learning_rate_multiplier = base_model.find("gpt-4o-mini") != std::string_view::npos ? 1.8 : 2.0;
  return hp;
}

Json FinetuneJob::to_json() const {
  return Json{{"id", id},
              {"status", status},
              {"model", base_model},
              {"training_file", training_file},
              {"fine_tuned_model", fine_tuned_model},
              {"error", error}};
}

Json finetune_job_request(const std::string& training_file, const std::string& base_model,
                          const FinetuneHyperparameters& hp, const std::string& suffix) {
  Json body{{"training_file", training_file},
            {"model", base_model},
            {"hyperparameters",
             Json{{"n_epochs", hp.n_epochs},
                  {"batch_size", hp.batch_size},
                  {"learning_rate_multiplier", hp.learning_rate_multiplier}}}};
  if (!suffix.empty()) body["suffix"] = suffix;
  return body;
}

FinetuneJob submit_finetune(const BackendSpec& backend, const std::filesystem::path& dataset, DatasetKind kind,
                            std::optional<FinetuneHyperparameters> hyperparameters, const std::string& suffix) {
  backend.validate();
  if (backend.kind != BackendKind::remote) raise(ErrorKind::config, "fine-tuning needs a remote backend");
  const auto records = read_dataset(dataset);
  for (const auto& record : records) {
    const bool choice = record.messages[2].content == "A" || record.messages[2].content == "B";
    if (choice != (kind == DatasetKind::preference)) {
      raise(ErrorKind::domain, dataset.string() + " mixes record kinds; expected " + std::string(to_string(kind)));
    }
  }

  const HttpEndpoint endpoint(backend);
  auto cli = endpoint.client();
  httplib::MultipartFormDataItems items = {
      {"purpose", "fine-tune", "", ""},
      {"file", read_file(dataset), dataset.filename().string(), "application/jsonl"},
  };
  const Json uploaded = checked_body(cli->Post(endpoint.path("/files"), endpoint.headers(), items), "file upload");
  const std::string file_id = string_field(uploaded, "id");
  if (file_id.empty()) raise(ErrorKind::transport, "file upload response lacks an id");

  const auto hp = hyperparameters.value_or(default_hyperparameters(kind, backend.model_id));
  const Json request = finetune_job_request(file_id, backend.model_id, hp, suffix);
  const Json created = checked_body(
      cli->Post(endpoint.path("/fine_tuning/jobs"), endpoint.headers(), request.dump(), "application/json"),
      "fine-tuning job creation");
  return job_from_json(created);
}

FinetuneJob finetune_status(const BackendSpec& backend, const std::string& job_id) {
  if (job_id.empty()) raise(ErrorKind::usage, "job id must not be empty");
  const HttpEndpoint endpoint(backend);
  auto cli = endpoint.client();
  return job_from_json(
      checked_body(cli->Get(endpoint.path("/fine_tuning/jobs/" + job_id), endpoint.headers()), "job " + job_id));
}

FinetuneJob wait_for_finetune(const BackendSpec& backend, const std::string& job_id,
                              std::chrono::duration<double> poll_interval, std::chrono::duration<double> max_wait,
                              const std::function<void(const FinetuneJob&)>& on_update) {
  const auto deadline = std::chrono::steady_clock::now() + max_wait;
  while (true) {
    FinetuneJob job = finetune_status(backend, job_id);
    if (on_update) on_update(job);
    if (job.terminal()) return job;
    if (std::chrono::steady_clock::now() >= deadline) {
      raise(ErrorKind::transport, "fine-tuning job " + job_id + " still " + job.status + " after the wait limit");
    }
    std::this_thread::sleep_for(poll_interval);
  }
}

}  // namespace selfreport
