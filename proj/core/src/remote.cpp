#include "sos/eval.hpp"

#include <chrono>
#include <cstdlib>
#include <regex>
#include <thread>

// After Eigen: <resolv.h> defines a `_res` macro that clashes with Eigen parameter names.
#include <httplib.h>

namespace sos {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/\s]+)(/[^\s]*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw EndpointError("malformed endpoint URL '" + url + "'");
  return {m[1].str(), m[2].matched ? m[2].str() : std::string("/")};
}

// OpenAI-style choices[0].message.content, or a bare "content"/"response" string.
std::optional<std::string> response_text(const std::string& body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const auto& c = j["choices"][0];
    if (c.contains("message") && c["message"].contains("content") && c["message"]["content"].is_string()) {
      return c["message"]["content"].get<std::string>();
    }
    if (c.contains("text") && c["text"].is_string()) return c["text"].get<std::string>();
  }
  for (const char* key : {"content", "response"}) {
    if (j.contains(key) && j[key].is_string()) return j[key].get<std::string>();
  }
  return std::nullopt;
}

}  // namespace

Responder remote_responder(const EndpointConfig& config) {
  if (!(config.timeout_seconds > 0.0)) throw EndpointError("timeout must be positive");
  if (config.max_retries < 0) throw EndpointError("max_retries must be >= 0");
  const ParsedUrl url = parse_url(config.url);
  std::string key;
  if (const char* v = std::getenv(config.api_key_env.c_str()); v != nullptr) key = v;
  if (key.empty() && config.require_api_key) {
    throw EndpointError("environment variable " + config.api_key_env + " is not set");
  }

  return [config, url, key](const DatasetRecord&, const std::string& prompt) {
    nlohmann::json body;
    if (!config.model.empty()) body["model"] = config.model;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
    const std::string payload = body.dump();
    const auto timeout = std::chrono::duration<double>(config.timeout_seconds);
    const auto timeout_ms = std::chrono::duration_cast<std::chrono::milliseconds>(timeout);

    Reply reply;
    for (int attempt = 0;; ++attempt) {
      httplib::Client client(url.origin);
      client.set_connection_timeout(std::min(timeout_ms, std::chrono::milliseconds(30000)));
      client.set_read_timeout(timeout_ms);
      client.set_write_timeout(timeout_ms);
      if (!key.empty()) client.set_bearer_token_auth(key);

      const auto t0 = std::chrono::steady_clock::now();
      const auto res = client.Post(url.path, payload, "application/json");
      const auto elapsed = std::chrono::steady_clock::now() - t0;

      if (!res) {
        const httplib::Error err = res.error();
        // A read that ran into the deadline is a timeout, which is final.
        if (err == httplib::Error::Read && elapsed >= 0.95 * timeout) {
          reply.error = "timeout";
          return reply;
        }
        if (attempt < config.max_retries) {
          std::this_thread::sleep_for(std::chrono::duration<double>(config.retry_backoff_seconds * (attempt + 1)));
          continue;
        }
        reply.error = "transport: " + httplib::to_string(err);
        return reply;
      }
      if (res->status == 401 || res->status == 403) {
        throw EndpointError("endpoint rejected the credential (HTTP " + std::to_string(res->status) + ")");
      }
      if ((res->status >= 500 || res->status == 429) && attempt < config.max_retries) {
        std::this_thread::sleep_for(std::chrono::duration<double>(config.retry_backoff_seconds * (attempt + 1)));
        continue;
      }
      if (res->status != 200) {
        reply.error = "http " + std::to_string(res->status);
        reply.text = res->body;
        return reply;
      }
      if (auto text = response_text(res->body)) {
        reply.text = std::move(*text);
      } else {
        reply.error = "unrecognized response body";
        reply.text = res->body;
      }
      return reply;
    }
  };
}

}  // namespace sos
