#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>

#include <httplib.h>

#include "selfreport/backend.hpp"

namespace selfreport {

// Base URL split into what httplib needs, plus the bearer header.
class HttpEndpoint {
 public:
  explicit HttpEndpoint(const BackendSpec& spec);

  std::unique_ptr<httplib::Client> client() const;
  std::string path(std::string_view suffix) const { return base_path_ + std::string(suffix); }
  const httplib::Headers& headers() const { return headers_; }

 private:
  std::string scheme_host_port_;
  std::string base_path_;
  httplib::Headers headers_;
  std::chrono::duration<double> timeout_;
};

// Retry schedule: timeouts, connection errors, 429, and 5xx are retried with
// exponential backoff (honoring Retry-After up to max_backoff); other 4xx
// fail immediately. Temperature-0 requests are idempotent, so resending is
// safe.
struct RetryPolicy {
  int max_retries = 5;
  double initial_backoff = 1.0;
  double max_backoff = 30.0;

  static bool retryable_status(int status) { return status == 429 || status >= 500; }
  double delay_for(int attempt, std::optional<double> retry_after) const;
};

// OpenAI-compatible chat-completions client.
class RemoteBackend final : public Backend {
 public:
  explicit RemoteBackend(BackendSpec spec);

  CompletionResult complete(const PromptBundle& prompt) override;
  int max_in_flight() const override { return spec_.max_in_flight; }
  Json describe() const override { return spec_.describe(); }

  // Request body for one prompt; exposed for wire-format tests.
  static Json request_body(const std::string& model_id, const PromptBundle& prompt);

 private:
  BackendSpec spec_;
  HttpEndpoint endpoint_;
  RetryPolicy retry_;
};

inline constexpr int kDecisionMaxTokens = 2;
inline constexpr int kIntrospectionMaxTokens = 200;

std::unique_ptr<Backend> make_remote_backend(const BackendSpec& spec);

}  // namespace selfreport
