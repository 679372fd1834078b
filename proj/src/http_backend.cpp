#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "toporag/http_backend.hpp"

#include <cstdlib>
#include <regex>

#include <httplib.h>

#include "toporag/error.hpp"

namespace toporag {

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.base_url, m, kUrl)) {
    throw Error(Errc::InvalidArgument, "base_url must look like http://host[:port][/path], got " + config_.base_url);
  }
  origin_ = m[1].str();
  std::string prefix = m[2].str();
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix + "/chat/completions";
  if (config_.timeout_s <= 0.0) throw Error(Errc::InvalidArgument, "timeout must be positive");
}

nlohmann::json HttpBackend::request_body(const BackendRequest& request) const {
  std::string user;
  for (const PromptPart& part : request.prompt_parts) {
    if (!user.empty()) user += "\n\n";
    user += "### " + part.label + "\n" + part.text;
  }
  nlohmann::json messages = nlohmann::json::array();
  if (!request.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
  messages.push_back({{"role", "user"}, {"content", user}});
  return {{"model", config_.model},
          {"messages", std::move(messages)},
          {"max_tokens", request.token_cap},
          {"temperature", config_.temperature},
          {"seed", request.seed}};
}

BackendResponse HttpBackend::complete(const BackendRequest& request) {
  httplib::Client client(origin_);
  const auto seconds = static_cast<time_t>(config_.timeout_s);
  const auto micros = static_cast<time_t>((config_.timeout_s - static_cast<double>(seconds)) * 1e6);
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0') {
    client.set_bearer_token_auth(key);
  }

  const auto result = client.Post(path_, request_body(request).dump(), "application/json");
  if (!result) {
    throw Error(Errc::BackendError, origin_ + path_ + ": " + httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    throw Error(Errc::BackendError, origin_ + path_ + " returned HTTP " + std::to_string(result->status));
  }

  BackendResponse out;
  try {
    const auto body = nlohmann::json::parse(result->body);
    const auto& choice = body.at("choices").at(0);
    out.text = choice.at("message").at("content").get<std::string>();
    out.truncated = choice.value("finish_reason", std::string()) == "length";
    if (body.contains("usage") && body.at("usage").contains("completion_tokens")) {
      out.tokens_used = body.at("usage").at("completion_tokens").get<std::size_t>();
    } else {
      out.tokens_used = estimate_tokens(out.text);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BackendError, std::string("unexpected completion payload: ") + e.what());
  }
  return out;
}

}  // namespace toporag
