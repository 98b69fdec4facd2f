#include "selfreport/backend.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "selfreport/error.hpp"
#include "selfreport/rng.hpp"

namespace selfreport {

std::string_view to_string(BackendKind kind) { return kind == BackendKind::remote ? "remote" : "synthetic"; }

BackendKind backend_kind_from_string(std::string_view text) {
  if (text == "remote") return BackendKind::remote;
  if (text == "synthetic") return BackendKind::synthetic;
  raise(ErrorKind::config, "backend kind must be remote or synthetic, got " + std::string(text));
}

std::string_view to_string(TransportStatus status) {
  switch (status) {
    case TransportStatus::ok: return "ok";
    case TransportStatus::retried_ok: return "retried_ok";
    case TransportStatus::failed: return "failed";
  }
  return "failed";
}

void BackendSpec::validate() const {
  if (max_in_flight < 1) raise(ErrorKind::config, "max_in_flight must be at least 1");
  if (max_retries < 0) raise(ErrorKind::config, "max_retries must be non-negative");
  if (!(request_timeout > 0.0)) raise(ErrorKind::config, "request_timeout must be positive");
  if (!(initial_backoff >= 0.0) || !(max_backoff >= 0.0)) raise(ErrorKind::config, "backoff delays must be non-negative");
  if (kind == BackendKind::remote) {
    if (model_id.empty()) raise(ErrorKind::config, "remote backend needs a model_id");
    if (endpoint_url.empty()) raise(ErrorKind::config, "remote backend needs an endpoint_url");
    if (credential_env_var.empty()) raise(ErrorKind::config, "remote backend needs a credential environment variable name");
  }
}

Json BackendSpec::describe() const {
  Json out{{"kind", to_string(kind)}};
  if (kind == BackendKind::remote) {
    out["model_id"] = model_id;
    out["endpoint_url"] = endpoint_url;
    out["credential_env_var"] = credential_env_var;
  } else if (!subject_config_path.empty()) {
    out["subject_config_path"] = subject_config_path;
  }
  out["request_timeout"] = request_timeout;
  out["max_retries"] = max_retries;
  return out;
}

bool network_disabled() {
  const char* value = std::getenv("NO_NETWORK");
  return value != nullptr && *value != '\0' && std::string_view(value) != "0";
}

std::string synthetic_complete(const SubjectConfig& subject, const ContextSet& contexts, const PromptBundle& prompt,
                               std::uint64_t seed) {
  const ParsedPrompt parsed = parse_prompt(prompt.user_text, contexts);
  const DecisionContext& context = *parsed.context;
  if (!prompt.context_id.empty() && prompt.context_id != context.context_id) {
    raise(ErrorKind::domain, "prompt drift: tagged " + prompt.context_id + " but text belongs to " + context.context_id);
  }
  if (parsed.task_kind != prompt.task_kind) raise(ErrorKind::domain, "prompt drift: task block does not match task_kind");
  if (parsed.task_kind == TaskKind::decision) {
    ChoicePair pair{context.context_id, parsed.option_a, parsed.option_b, prompt.pair_id};
    const auto draw = derive_seed(SeedKey{seed, "synthetic-decision", context.context_id, prompt.pair_id});
    return std::string(to_string(subject_decide(subject, context, pair, draw)));
  }
  const auto draw = derive_seed(SeedKey{seed, "synthetic-introspection", context.context_id, prompt.pair_id});
  return subject_report(subject, context, draw);
}

SyntheticBackend::SyntheticBackend(SubjectConfig subject, ContextSet contexts, std::uint64_t seed, int max_in_flight)
    : subject_(std::move(subject)), contexts_(std::move(contexts)), seed_(seed), max_in_flight_(max_in_flight) {
  subject_.validate();
  if (max_in_flight_ < 1) raise(ErrorKind::config, "max_in_flight must be at least 1");
}

CompletionResult SyntheticBackend::complete(const PromptBundle& prompt) {
  CompletionResult result;
  result.text = synthetic_complete(subject_, contexts_, prompt, seed_);
  return result;
}

Json SyntheticBackend::describe() const {
  Json out{{"kind", "synthetic"}};
  if (std::isinf(subject_.choice_sharpness)) {
    out["choice_sharpness"] = "inf";
  } else {
    out["choice_sharpness"] = subject_.choice_sharpness;
  }
  out["report_noise_sd"] = subject_.report_noise_sd;
  out["report_shrinkage"] = subject_.report_shrinkage;
  out["invalid_report_rate"] = subject_.invalid_report_rate;
  return out;
}

std::vector<CompletionResult> complete_batch(Backend& backend, std::span<const PromptBundle> prompts) {
  std::vector<CompletionResult> results(prompts.size());
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(1, backend.max_in_flight())), prompts.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < prompts.size(); ++i) results[i] = backend.complete(prompts[i]);
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (!stop.load()) {
          const std::size_t i = next.fetch_add(1);
          if (i >= prompts.size()) return;
          try {
            results[i] = backend.complete(prompts[i]);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            stop = true;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace selfreport
