#include "optbench/config.hpp"

#include <cstdlib>
#include <functional>
#include <map>

#include "optbench/error.hpp"
#include "optbench/util.hpp"

namespace optbench {

namespace {

using json = nlohmann::json;
using Setter = std::function<void(const json&)>;

void apply_section(const json& j, const std::string& name, const std::map<std::string, Setter>& setters) {
  if (!j.is_object()) throw Error(ErrorKind::ConfigError, "'" + name + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorKind::ConfigError, "unknown key '" + name + "." + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ConfigError, "bad value for '" + name + "." + key + "': " + e.what());
    }
  }
}

template <typename T>
Setter set(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

}  // namespace

Config config_from_json(const json& j) {
  Config c;
  if (!j.is_object()) throw Error(ErrorKind::ConfigError, "config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "paths") {
        apply_section(value, key, {{"corpus", set(c.paths.corpus)},
                                   {"tests", set(c.paths.tests)},
                                   {"workdir", set(c.paths.workdir)},
                                   {"output", set(c.paths.output)}});
      } else if (key == "toolchain") {
        c.toolchain = toolchain_from_json(value);
      } else if (key == "llm") {
        apply_section(value, key, {{"backend", set(c.llm.backend)},
                                   {"endpoint", set(c.llm.endpoint)},
                                   {"model", set(c.llm.model)},
                                   {"key_env", set(c.llm.key_env)},
                                   {"rpm", set(c.llm.rpm)},
                                   {"concurrency", set(c.llm.concurrency)},
                                   {"max_tokens", set(c.llm.max_tokens)},
                                   {"max_retries", set(c.llm.max_retries)},
                                   {"retry_base_delay_s", set(c.llm.retry_base_delay_s)},
                                   {"mock_script", set(c.llm.mock_script)},
                                   {"templates_dir", set(c.llm.templates_dir)}});
        if (c.llm.backend != "mock" && c.llm.backend != "http")
          throw Error(ErrorKind::ConfigError, "llm.backend must be 'mock' or 'http'");
      } else if (key == "pairing") {
        apply_section(value, key,
                      {{"user_mode", [&](const json& v) { c.pairing.user_mode = parse_pair_mode(v.get<std::string>()); }},
                       {"problem_mode", [&](const json& v) { c.pairing.problem_mode = parse_pair_mode(v.get<std::string>()); }},
                       {"require_faster", set(c.pairing.require_faster)},
                       {"drop_identical_source", set(c.pairing.drop_identical_source)}});
      } else if (key == "metrics") {
        apply_section(value, key,
                      {{"output_policy", [&](const json& v) { c.metrics.output_policy = parse_output_policy(v.get<std::string>()); }},
                       {"repetitions", set(c.metrics.repetitions)},
                       {"k", set(c.metrics.k)}});
      } else if (key == "analysis") {
        apply_section(value, key, {{"budget", set(c.analysis.budget)}, {"bucket_width", set(c.analysis.bucket_width)}});
      } else if (key == "verify") {
        apply_section(value, key, {{"max_iterations", set(c.verify.max_iterations)}, {"n_inputs", set(c.verify.n_inputs)}});
      } else if (key == "parallelism") {
        apply_section(value, key, {{"workers", set(c.workers)}});
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else {
        throw Error(ErrorKind::ConfigError, "unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    throw Error(ErrorKind::ConfigError, e.what());
  }
  if (c.metrics.repetitions < 1) throw Error(ErrorKind::ConfigError, "metrics.repetitions must be >= 1");
  if (c.verify.max_iterations < 0) throw Error(ErrorKind::ConfigError, "verify.max_iterations must be >= 0");
  if (c.verify.n_inputs < 1) throw Error(ErrorKind::ConfigError, "verify.n_inputs must be >= 1");
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path.string());
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigError, e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

json to_json(const Config& c) {
  return {{"paths", {{"corpus", c.paths.corpus}, {"tests", c.paths.tests}, {"workdir", c.paths.workdir}, {"output", c.paths.output}}},
          {"toolchain", to_json(c.toolchain)},
          {"llm",
           {{"backend", c.llm.backend},
            {"endpoint", c.llm.endpoint},
            {"model", c.llm.model},
            {"key_env", c.llm.key_env},
            {"rpm", c.llm.rpm},
            {"concurrency", c.llm.concurrency},
            {"max_tokens", c.llm.max_tokens},
            {"max_retries", c.llm.max_retries},
            {"retry_base_delay_s", c.llm.retry_base_delay_s},
            {"mock_script", c.llm.mock_script},
            {"templates_dir", c.llm.templates_dir}}},
          {"pairing",
           {{"user_mode", to_string(c.pairing.user_mode)},
            {"problem_mode", to_string(c.pairing.problem_mode)},
            {"require_faster", c.pairing.require_faster},
            {"drop_identical_source", c.pairing.drop_identical_source}}},
          {"metrics", {{"output_policy", to_string(c.metrics.output_policy)}, {"repetitions", c.metrics.repetitions}, {"k", c.metrics.k}}},
          {"analysis", {{"budget", c.analysis.budget}, {"bucket_width", c.analysis.bucket_width}}},
          {"verify", {{"max_iterations", c.verify.max_iterations}, {"n_inputs", c.verify.n_inputs}}},
          {"parallelism", {{"workers", c.workers}}},
          {"seed", c.seed}};
}

std::shared_ptr<ChatBackend> make_backend(const LlmConfig& c) {
  if (c.backend == "mock") {
    if (c.mock_script.empty()) throw Error(ErrorKind::ConfigError, "llm.mock_script is required for the mock backend");
    return MockBackend::from_file(c.mock_script);
  }
  if (c.endpoint.empty()) throw Error(ErrorKind::ConfigError, "llm.endpoint is required for the http backend");
  const char* key = std::getenv(c.key_env.c_str());
  if (!key || !*key) throw Error(ErrorKind::AuthError, "environment variable " + c.key_env + " is not set");
  return make_http_backend({c.endpoint, c.key_env, 120.0});
}

ClientOptions client_options(const LlmConfig& c) {
  ClientOptions o;
  o.model = c.model;
  o.max_tokens = c.max_tokens;
  o.rpm = c.rpm;
  o.concurrency = c.concurrency;
  o.retry.max_retries = c.max_retries;
  o.retry.base_delay_s = c.retry_base_delay_s;
  return o;
}

}  // namespace optbench
