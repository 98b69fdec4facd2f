#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "selfreport/backend.hpp"

namespace selfreport::testing {

// In-process stand-in for an OpenAI-compatible API. Chat answers come from
// synthetic subjects: models whose id starts with "ft:" use the trained
// subject, everything else the base subject.
class MockOpenAI {
 public:
  struct Options {
    SubjectConfig base;
    SubjectConfig trained;
    ContextSet contexts;
    std::uint64_t seed = 0;
    std::string api_key = "mock-key";
    // A prompt whose digest is divisible by this is throttled (429) on its
    // first `throttle_attempts` deliveries; 0 disables throttling.
    std::uint64_t throttle_modulus = 0;
    int throttle_attempts = 1;
    std::string retry_after = "0";
    // Status for every chat request, overriding normal answers (e.g. 400).
    int forced_status = 0;
    // Polls that report "running" before a job succeeds.
    int job_polls_before_success = 1;
  };

  struct Upload {
    std::string purpose;
    std::string filename;
    std::string content;
  };

  explicit MockOpenAI(Options options);
  ~MockOpenAI();
  MockOpenAI(const MockOpenAI&) = delete;
  MockOpenAI& operator=(const MockOpenAI&) = delete;

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  std::size_t chat_requests() const { return chat_requests_.load(); }
  std::size_t throttled() const { return throttled_.load(); }
  std::size_t unauthorized() const { return unauthorized_.load(); }
  std::vector<Json> chat_bodies() const;
  std::vector<Upload> uploads() const;
  std::vector<Json> job_requests() const;
  std::vector<std::string> authorization_headers() const;

  // Whether this prompt text is throttled under the current options.
  bool throttles(const std::string& user_text) const;

 private:
  void handle_chat(const httplib::Request& request, httplib::Response& response);
  void handle_upload(const httplib::Request& request, httplib::Response& response);
  void handle_job_create(const httplib::Request& request, httplib::Response& response);
  void handle_job_get(const httplib::Request& request, httplib::Response& response);
  bool authorized(const httplib::Request& request, httplib::Response& response);

  Options options_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;

  mutable std::mutex mutex_;
  std::atomic<std::size_t> chat_requests_{0};
  std::atomic<std::size_t> throttled_{0};
  std::atomic<std::size_t> unauthorized_{0};
  std::map<std::string, int> deliveries_;
  std::vector<Json> chat_bodies_;
  std::vector<Upload> uploads_;
  std::vector<Json> job_requests_;
  std::vector<std::string> authorization_;
  std::map<std::string, Json> jobs_;
  std::map<std::string, int> job_polls_;
};

// FNV-1a over the text; stands in for a pair id on the wire.
std::uint64_t text_digest(std::string_view text);

}  // namespace selfreport::testing
