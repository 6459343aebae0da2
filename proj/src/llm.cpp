#include "optbench/llm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "optbench/error.hpp"
#include "optbench/util.hpp"

namespace optbench {

ChatRequest make_request(const TemplateRegistry& templates, TemplateName name,
                         const Bindings& bindings, double temperature) {
  ChatRequest r;
  r.messages.push_back({"user", render(templates.get(name), bindings)});
  r.temperature = temperature;
  r.tag = RequestTag{to_string(name), bindings_sha256(bindings)};
  return r;
}

// ------------------------------------------------------------------ mock

namespace {

std::string last_user_message(const ChatRequest& r) {
  for (auto it = r.messages.rbegin(); it != r.messages.rend(); ++it)
    if (it->role == "user") return it->content;
  return r.messages.empty() ? std::string() : r.messages.back().content;
}

}  // namespace

std::unique_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& path) {
  return from_jsonl(read_file(path.string()));
}

std::unique_ptr<MockBackend> MockBackend::from_jsonl(const std::string& text) {
  auto mock = std::make_unique<MockBackend>();
  std::map<std::string, std::size_t> index;  // match key -> entry
  std::size_t lineno = 0;
  for (const auto& line : split_lines(text)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ConfigError, "mock script line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("match") || !j["match"].is_object() ||
        !j["match"].contains("template") || (!j.contains("reply") && !j.contains("status")))
      throw Error(ErrorKind::ConfigError,
                  "mock script line " + std::to_string(lineno) + ": need match.template and reply");
    const auto& m = j["match"];
    Entry e;
    e.template_name = m["template"].get<std::string>();
    if (m.contains("sha256") && !m["sha256"].is_null()) e.sha256 = m["sha256"].get<std::string>();
    if (m.contains("contains") && !m["contains"].is_null()) e.contains = m["contains"].get<std::string>();
    BackendReply reply;
    reply.status = j.value("status", 200);
    reply.text = j.value("reply", std::string());
    if (reply.status != 200) reply.error = "scripted status " + std::to_string(reply.status);
    const std::string key = m.dump();
    if (auto it = index.find(key); it != index.end()) {
      mock->entries_[it->second].replies.push_back(std::move(reply));
    } else {
      e.replies.push_back(std::move(reply));
      index[key] = mock->entries_.size();
      mock->entries_.push_back(std::move(e));
    }
  }
  return mock;
}

BackendReply MockBackend::send(const ChatRequest& request) {
  const std::string message = last_user_message(request);
  const std::string tmpl = request.tag ? request.tag->template_name : "raw";
  const std::string sha = request.tag ? request.tag->bindings_sha256 : sha256_hex(message);
  std::lock_guard lock(mu_);
  ++calls_;
  Entry* hit = nullptr;
  for (int tier = 0; tier < 3 && !hit; ++tier) {
    for (auto& e : entries_) {
      if (e.template_name != tmpl) continue;
      const bool ok = tier == 0   ? (e.sha256 && *e.sha256 == sha)
                      : tier == 1 ? (!e.sha256 && e.contains && message.find(*e.contains) != std::string::npos)
                                  : (!e.sha256 && !e.contains);
      if (ok) {
        hit = &e;
        break;
      }
    }
  }
  if (!hit) throw Error(ErrorKind::MockMiss, "no scripted reply for template " + tmpl + " sha256 " + sha);
  const std::size_t i = std::min(hit->next, hit->replies.size() - 1);
  if (hit->next < hit->replies.size()) ++hit->next;
  return hit->replies[i];
}

std::size_t MockBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

// ---------------------------------------------------------------- client

LlmClient::LlmClient(std::shared_ptr<ChatBackend> backend, ClientOptions options)
    : backend_(std::move(backend)), options_(std::move(options)), epoch_(std::chrono::steady_clock::now()) {
  if (!backend_) throw Error(ErrorKind::InvalidArgument, "LLM client needs a backend");
  if (options_.concurrency < 1) options_.concurrency = 1;
  if (options_.retry.max_retries < 0) options_.retry.max_retries = 0;
  if (!(options_.window_s > 0)) options_.window_s = 60.0;
}

void LlmClient::acquire_slot() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return in_flight_ < options_.concurrency; });
  ++in_flight_;
}

void LlmClient::release_slot() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_all();
}

void LlmClient::wait_for_rate() {
  using clock = std::chrono::steady_clock;
  const auto window = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(options_.window_s));
  std::unique_lock lock(mu_);
  for (;;) {
    const auto now = clock::now();
    while (!window_.empty() && window_.front() + window <= now) window_.pop_front();
    if (options_.rpm <= 0 || static_cast<int>(window_.size()) < options_.rpm) {
      window_.push_back(now);
      dispatched_.push_back(std::chrono::duration<double>(now - epoch_).count());
      return;
    }
    cv_.wait_until(lock, window_.front() + window);
  }
}

std::vector<double> LlmClient::dispatch_times() const {
  std::lock_guard lock(mu_);
  return dispatched_;
}

Completion LlmClient::complete(ChatRequest request) {
  if (request.messages.empty()) throw Error(ErrorKind::InvalidArgument, "chat request has no messages");
  if (request.model.empty()) request.model = options_.model;
  if (request.max_tokens <= 0) request.max_tokens = options_.max_tokens;
  Completion out;
  const auto start = std::chrono::steady_clock::now();
  const int attempts = 1 + options_.retry.max_retries;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    wait_for_rate();
    acquire_slot();
    const auto t0 = std::chrono::steady_clock::now();
    BackendReply reply;
    try {
      reply = backend_->send(request);
    } catch (...) {
      release_slot();
      throw;
    }
    release_slot();
    AttemptLog log{attempt, reply.status, reply.error,
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
    out.attempts.push_back(log);
    if (reply.status == 200) {
      out.text = std::move(reply.text);
      out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (attempt > 1) spdlog::info("llm: succeeded after {} attempts", attempt);
      return out;
    }
    spdlog::warn("llm: attempt {}/{} failed with status {} {}", attempt, attempts, reply.status, reply.error);
    if (reply.status == 401 || reply.status == 403)
      throw Error(ErrorKind::AuthError, "backend rejected credentials (HTTP " + std::to_string(reply.status) + ")");
    const bool transient = reply.status == 429 || reply.status == 0 || reply.status >= 500;
    if (!transient)
      throw Error(ErrorKind::LlmFailure, "HTTP " + std::to_string(reply.status) + ": " + reply.error);
    if (attempt == attempts) {
      const std::string msg = std::to_string(attempts) + " attempts, last status " + std::to_string(reply.status);
      if (reply.status == 429) throw Error(ErrorKind::RateLimited, msg);
      throw Error(ErrorKind::Unavailable, msg);
    }
    const double delay = std::min(options_.retry.max_delay_s,
                                  options_.retry.base_delay_s * std::pow(2.0, attempt - 1));
    if (delay > 0) std::this_thread::sleep_for(std::chrono::duration<double>(delay));
  }
  throw Error(ErrorKind::Unavailable, "no attempts made");
}

}  // namespace optbench
