#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include <nlohmann/json.hpp>

#include "optbench/error.hpp"
#include "optbench/llm.hpp"

namespace optbench {

namespace {

class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(HttpBackendOptions o) : opts_(std::move(o)) {
    const auto scheme_end = opts_.endpoint.find("://");
    if (scheme_end == std::string::npos)
      throw Error(ErrorKind::ConfigError, "llm endpoint must be an http(s) URL: " + opts_.endpoint);
    const auto path_start = opts_.endpoint.find('/', scheme_end + 3);
    base_ = opts_.endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : opts_.endpoint.substr(path_start);
  }

  BackendReply send(const ChatRequest& request) override {
    const char* key = std::getenv(opts_.key_env.c_str());
    if (!key || !*key)
      throw Error(ErrorKind::AuthError, "environment variable " + opts_.key_env + " is not set");
    nlohmann::json body = {{"model", request.model},
                           {"temperature", request.temperature},
                           {"max_tokens", request.max_tokens},
                           {"messages", nlohmann::json::array()}};
    for (const auto& m : request.messages)
      body["messages"].push_back({{"role", m.role}, {"content", m.content}});

    httplib::Client cli(base_);
    const auto secs = static_cast<time_t>(opts_.timeout_s);
    cli.set_connection_timeout(secs, 0);
    cli.set_read_timeout(secs, 0);
    cli.set_write_timeout(secs, 0);
    httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};
    auto res = cli.Post(path_, headers, body.dump(), "application/json");
    if (!res) return {0, "", httplib::to_string(res.error())};
    if (res->status != 200) return {res->status, "", res->body.substr(0, 500)};
    try {
      const auto j = nlohmann::json::parse(res->body);
      return {200, j.at("choices").at(0).at("message").at("content").get<std::string>(), ""};
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::MalformedResponse, std::string("unexpected response body: ") + e.what());
    }
  }

  std::string name() const override { return "http"; }

 private:
  HttpBackendOptions opts_;
  std::string base_;
  std::string path_;
};

}  // namespace

std::unique_ptr<ChatBackend> make_http_backend(HttpBackendOptions options) {
  return std::make_unique<HttpBackend>(std::move(options));
}

}  // namespace optbench
