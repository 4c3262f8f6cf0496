#pragma once

#include <memory>
#include <string>

#include "json.hpp"

namespace autoprov::llm {

struct HttpJsonOptions {
  std::string url;
  std::string api_key_env;
  int retry_limit = 2;
  int timeout_ms = 60000;
  int max_in_flight = 4;
  int backoff_ms = 250;
};

// POSTs JSON to one URL with retries on transport failure and a bound on
// concurrent requests. Non-2xx answers raise ProtocolError without retry.
class HttpJsonClient {
 public:
  explicit HttpJsonClient(HttpJsonOptions options);
  ~HttpJsonClient();
  HttpJsonClient(const HttpJsonClient&) = delete;
  HttpJsonClient& operator=(const HttpJsonClient&) = delete;

  nlohmann::json post(const nlohmann::json& body) const;
  const std::string& url() const { return options_.url; }

 private:
  struct Impl;
  HttpJsonOptions options_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace autoprov::llm
