#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "optbench/prompts.hpp"

namespace optbench {

struct ChatMessage {
  std::string role;
  std::string content;
};

// Identifies a rendered template; the mock backend keys replies on it.
struct RequestTag {
  std::string template_name;
  std::string bindings_sha256;
};

inline constexpr double kSamplingTemperature = 0.7;
inline constexpr double kRefinementTemperature = 0.0;

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = kSamplingTemperature;
  int max_tokens = 0;  // 0: client default
  std::string model;   // empty: client default
  std::optional<RequestTag> tag;
};

// A single user message rendered from a template, tagged for the mock.
ChatRequest make_request(const TemplateRegistry& templates, TemplateName name,
                         const Bindings& bindings, double temperature);

// One transport attempt. status 200 carries the assistant text; 0 means the
// request never got an HTTP answer (connection failure).
struct BackendReply {
  int status = 200;
  std::string text;
  std::string error;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual BackendReply send(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
};

struct HttpBackendOptions {
  std::string endpoint;  // e.g. https://host/v1/chat/completions
  std::string key_env = "OPENAI_API_KEY";
  double timeout_s = 120.0;
};

// Chat-completions over HTTP(S). The API key is read from the environment on
// every request; a missing key raises Error{AuthError} before any connection.
// Unparseable success bodies raise Error{MalformedResponse}.
std::unique_ptr<ChatBackend> make_http_backend(HttpBackendOptions options);

// Scripted replies from JSONL lines
//   {"match": {"template": T, "sha256": H?, "contains": S?}, "reply": R}
// or with "status": N instead of "reply" to script a transport failure.
// Lookup order: exact sha256, then `contains` (substring of the last user
// message), then template-only entries. Lines with an identical match are
// consumed in order, the last one repeating. Untagged requests use template
// "raw" and the sha256 of the last user message. Misses raise Error{MockMiss}.
class MockBackend : public ChatBackend {
 public:
  static std::unique_ptr<MockBackend> from_file(const std::filesystem::path& path);
  static std::unique_ptr<MockBackend> from_jsonl(const std::string& text);

  BackendReply send(const ChatRequest& request) override;
  std::string name() const override { return "mock"; }
  std::size_t calls() const;

 private:
  struct Entry {
    std::string template_name;
    std::optional<std::string> sha256;
    std::optional<std::string> contains;
    std::vector<BackendReply> replies;
    std::size_t next = 0;
  };
  mutable std::mutex mu_;
  std::vector<Entry> entries_;
  std::size_t calls_ = 0;
};

// Adapts a callable; handy for tests and in-process experiments.
class FunctionBackend : public ChatBackend {
 public:
  explicit FunctionBackend(std::function<BackendReply(const ChatRequest&)> fn,
                           std::string name = "function")
      : fn_(std::move(fn)), name_(std::move(name)) {}
  BackendReply send(const ChatRequest& request) override { return fn_(request); }
  std::string name() const override { return name_; }

 private:
  std::function<BackendReply(const ChatRequest&)> fn_;
  std::string name_;
};

struct RetryPolicy {
  int max_retries = 3;  // attempts = 1 + max_retries
  double base_delay_s = 1.0;
  double max_delay_s = 30.0;
};

struct ClientOptions {
  std::string model = "gpt-4o";
  int max_tokens = 2048;
  RetryPolicy retry;
  int rpm = 0;  // dispatched requests per window; 0 disables the cap
  double window_s = 60.0;
  int concurrency = 4;
};

struct AttemptLog {
  int attempt = 0;
  int status = 0;
  std::string error;
  double seconds = 0.0;
};

struct Completion {
  std::string text;
  std::vector<AttemptLog> attempts;
  double seconds = 0.0;
};

// Thread-safe client adding retries, a sliding-window request cap and a
// bound on in-flight requests on top of a backend.
//   401/403            -> Error{AuthError}, no retry
//   429 after retries  -> Error{RateLimited}
//   5xx / no answer    -> retried, then Error{Unavailable}
//   other statuses     -> Error{LlmFailure}
class LlmClient {
 public:
  LlmClient(std::shared_ptr<ChatBackend> backend, ClientOptions options = {});

  Completion complete(ChatRequest request);
  std::string complete_text(const ChatRequest& request) { return complete(request).text; }

  const ClientOptions& options() const { return options_; }
  ChatBackend& backend() { return *backend_; }
  // Steady-clock dispatch instants, in seconds since the client was created.
  std::vector<double> dispatch_times() const;

 private:
  void acquire_slot();
  void release_slot();
  void wait_for_rate();

  std::shared_ptr<ChatBackend> backend_;
  ClientOptions options_;
  std::chrono::steady_clock::time_point epoch_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  std::deque<std::chrono::steady_clock::time_point> window_;
  std::vector<double> dispatched_;
};

}  // namespace optbench
