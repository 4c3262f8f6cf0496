#include "autoprov/llm/http_json.hpp"
#include "autoprov/llm/provider.hpp"

namespace autoprov::llm {
namespace {

class HttpChatProvider : public ChatProvider {
 public:
  explicit HttpChatProvider(const ChatProviderConfig& c)
      : model_(c.model_name),
        client_({c.endpoint_url, c.api_key_env, c.retry_limit, c.timeout_ms, c.max_in_flight,
                 c.backoff_ms}) {}

  std::string complete(const ChatRequest& request) override {
    nlohmann::json body = {
        {"model", model_},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", render_prompt(request)}}})},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
    };
    auto res = client_.post(body);
    try {
      return res.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(200, std::string("unexpected chat response shape: ") + e.what());
    }
  }

  std::string identity() const override { return "http:" + model_ + "@" + client_.url(); }

 private:
  std::string model_;
  HttpJsonClient client_;
};

}  // namespace

std::unique_ptr<ChatProvider> make_http_chat_provider(const ChatProviderConfig& config) {
  return std::make_unique<HttpChatProvider>(config);
}

}  // namespace autoprov::llm
