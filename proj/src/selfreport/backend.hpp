#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "selfreport/context_io.hpp"
#include "selfreport/prompts.hpp"
#include "selfreport/subject.hpp"

namespace selfreport {

enum class BackendKind { remote, synthetic };

std::string_view to_string(BackendKind kind);
BackendKind backend_kind_from_string(std::string_view text);

inline constexpr std::string_view kDefaultCredentialEnv = "OPENAI_API_KEY";

struct BackendSpec {
  BackendKind kind = BackendKind::synthetic;
  // remote
  std::string model_id;
  std::string endpoint_url = "https://api.openai.com/v1";
  std::string credential_env_var = std::string(kDefaultCredentialEnv);
  // synthetic
  std::string subject_config_path;
  double request_timeout = 60.0;  // seconds
  int max_retries = 5;
  int max_in_flight = 8;
  double initial_backoff = 1.0;  // seconds; doubles per retry
  double max_backoff = 30.0;

  void validate() const;
  // Safe to persist: never includes the credential value.
  Json describe() const;
};

enum class TransportStatus { ok, retried_ok, failed };

std::string_view to_string(TransportStatus status);

struct CompletionResult {
  std::string text;
  double latency = 0.0;  // seconds
  int attempt_count = 1;
  TransportStatus transport_status = TransportStatus::ok;
  std::string diagnostic;

  bool delivered() const { return transport_status != TransportStatus::failed; }
};

// Stateless completion interface: every call is an independent conversation
// at temperature 0.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResult complete(const PromptBundle& prompt) = 0;
  virtual int max_in_flight() const = 0;
  virtual Json describe() const = 0;
};

// Recovers (context, pair) from the prompt text, then answers as the subject.
// Seeds derive from (seed, context_id, task kind, pair_id), never call order.
std::string synthetic_complete(const SubjectConfig& subject, const ContextSet& contexts, const PromptBundle& prompt,
                               std::uint64_t seed);

class SyntheticBackend final : public Backend {
 public:
  SyntheticBackend(SubjectConfig subject, ContextSet contexts, std::uint64_t seed, int max_in_flight = 1);

  CompletionResult complete(const PromptBundle& prompt) override;
  int max_in_flight() const override { return max_in_flight_; }
  Json describe() const override;

  const SubjectConfig& subject() const { return subject_; }

 private:
  SubjectConfig subject_;
  ContextSet contexts_;
  std::uint64_t seed_;
  int max_in_flight_;
};

// Runs prompts concurrently (up to max_in_flight) and returns results in
// input order. Exceptions from the backend propagate after all workers stop.
std::vector<CompletionResult> complete_batch(Backend& backend, std::span<const PromptBundle> prompts);

bool network_disabled();

}  // namespace selfreport
