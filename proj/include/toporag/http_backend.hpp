#pragma once

#include <string>

#include "toporag/backend.hpp"

namespace toporag {

struct HttpBackendConfig {
  std::string base_url = "http://127.0.0.1:8000/v1";  // chat/completions is appended
  std::string model = "local";
  std::string api_key_env = "TOPORAG_API_KEY";
  double timeout_s = 120.0;
  double temperature = 0.0;
};

// OpenAI-compatible chat-completions client. Text only: constraints are
// enforced after the fact by the generation agent.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  std::string name() const override { return "http"; }
  BackendResponse complete(const BackendRequest& request) override;

  // Request body sent for `request`.
  nlohmann::json request_body(const BackendRequest& request) const;

 private:
  HttpBackendConfig config_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;    // path of the completions endpoint
};

}  // namespace toporag
