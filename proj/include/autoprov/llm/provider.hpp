#pragma once

#include <memory>
#include <string>

#include "autoprov/core/error.hpp"
#include "autoprov/llm/prompt.hpp"

namespace autoprov::llm {

class TransportError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  ProtocolError(int status, const std::string& what)
      : Error("HTTP " + std::to_string(status) + ": " + what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  // Returns the assistant text. Implementations must be safe to call concurrently.
  virtual std::string complete(const ChatRequest& request) = 0;
  // Stable description recorded in run manifests.
  virtual std::string identity() const = 0;
};

struct ChatProviderConfig {
  std::string endpoint_url;
  std::string model_name;
  std::string api_key_env;
  int retry_limit = 2;
  int timeout_ms = 60000;
  int max_in_flight = 4;
  int backoff_ms = 250;
};

std::unique_ptr<ChatProvider> make_http_chat_provider(const ChatProviderConfig& config);

}  // namespace autoprov::llm
