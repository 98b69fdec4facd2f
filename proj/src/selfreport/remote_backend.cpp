#include "selfreport/remote_backend.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "selfreport/error.hpp"

namespace selfreport {

HttpEndpoint::HttpEndpoint(const BackendSpec& spec) : timeout_(spec.request_timeout) {
  if (network_disabled()) raise(ErrorKind::config, "NO_NETWORK is set; remote backends are disabled");
  const std::string& url = spec.endpoint_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) raise(ErrorKind::config, "endpoint_url needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  base_path_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();

  const char* credential = std::getenv(spec.credential_env_var.c_str());
  if (credential == nullptr || *credential == '\0') {
    raise(ErrorKind::config, "environment variable " + spec.credential_env_var + " holds no credential");
  }
  headers_.emplace("Authorization", std::string("Bearer ") + credential);
}

std::unique_ptr<httplib::Client> HttpEndpoint::client() const {
  auto cli = std::make_unique<httplib::Client>(scheme_host_port_);
  cli->set_connection_timeout(timeout_);
  cli->set_read_timeout(timeout_);
  cli->set_write_timeout(timeout_);
  return cli;
}

double RetryPolicy::delay_for(int attempt, std::optional<double> retry_after) const {
  double delay = initial_backoff * std::pow(2.0, attempt - 1);
  if (retry_after) delay = std::max(delay, *retry_after);
  return std::min(delay, max_backoff);
}

RemoteBackend::RemoteBackend(BackendSpec spec)
    : spec_((spec.validate(), std::move(spec))),
      endpoint_(spec_),
      retry_{spec_.max_retries, spec_.initial_backoff, spec_.max_backoff} {}

Json RemoteBackend::request_body(const std::string& model_id, const PromptBundle& prompt) {
  return Json{{"model", model_id},
              {"messages", Json::array({Json{{"role", "system"}, {"content", prompt.system_text}},
                                        Json{{"role", "user"}, {"content", prompt.user_text}}})},
              {"temperature", 0},
              {"max_tokens", prompt.task_kind == TaskKind::decision ? kDecisionMaxTokens : kIntrospectionMaxTokens}};
}

CompletionResult RemoteBackend::complete(const PromptBundle& prompt) {
  const std::string body = request_body(spec_.model_id, prompt).dump();
  const auto started = std::chrono::steady_clock::now();
  auto cli = endpoint_.client();
  CompletionResult result;
  result.transport_status = TransportStatus::failed;

  for (int attempt = 1; attempt <= retry_.max_retries + 1; ++attempt) {
    result.attempt_count = attempt;
    std::optional<double> retry_after;
    bool retryable = false;
    auto response = cli->Post(endpoint_.path("/chat/completions"), endpoint_.headers(), body, "application/json");
    if (!response) {
      result.diagnostic = "transport: " + httplib::to_string(response.error());
      retryable = true;
    } else if (response->status == 200) {
      const auto document = Json::parse(response->body, nullptr, false);
      try {
        result.text = document.at("choices").at(0).at("message").at("content").get<std::string>();
        result.transport_status = attempt == 1 ? TransportStatus::ok : TransportStatus::retried_ok;
        result.diagnostic.clear();
      } catch (const nlohmann::json::exception&) {
        result.diagnostic = "malformed completion body";
      }
      break;
    } else {
      result.diagnostic = "http " + std::to_string(response->status);
      retryable = RetryPolicy::retryable_status(response->status);
      if (response->has_header("Retry-After")) {
        char* end = nullptr;
        const std::string value = response->get_header_value("Retry-After");
        const double seconds = std::strtod(value.c_str(), &end);
        if (end != value.c_str()) retry_after = seconds;
      }
    }
    if (!retryable || attempt > retry_.max_retries) break;
    std::this_thread::sleep_for(std::chrono::duration<double>(retry_.delay_for(attempt, retry_after)));
  }
  result.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::unique_ptr<Backend> make_remote_backend(const BackendSpec& spec) { return std::make_unique<RemoteBackend>(spec); }

}  // namespace selfreport
