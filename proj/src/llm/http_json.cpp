#include "autoprov/llm/http_json.hpp"

#include <chrono>
#include <cstdlib>
#include <semaphore>
#include <thread>

#include "autoprov/llm/provider.hpp"
#include "httplib.h"

namespace autoprov::llm {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error("endpoint url lacks a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

struct HttpJsonClient::Impl {
  explicit Impl(int max_in_flight) : slots(max_in_flight < 1 ? 1 : max_in_flight) {}
  std::counting_semaphore<1024> slots;
  SplitUrl target;
  std::string api_key;
};

HttpJsonClient::HttpJsonClient(HttpJsonOptions options)
    : options_(std::move(options)), impl_(std::make_unique<Impl>(options_.max_in_flight)) {
  if (options_.retry_limit < 0) throw Error("retry_limit must be >= 0");
  impl_->target = split_url(options_.url);
  if (!options_.api_key_env.empty()) {
    if (const char* key = std::getenv(options_.api_key_env.c_str())) impl_->api_key = key;
  }
}

HttpJsonClient::~HttpJsonClient() = default;

nlohmann::json HttpJsonClient::post(const nlohmann::json& body) const {
  const std::string payload = body.dump();
  httplib::Headers headers;
  if (!impl_->api_key.empty()) headers.emplace("Authorization", "Bearer " + impl_->api_key);

  impl_->slots.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{impl_->slots};

  std::string last_error;
  for (int attempt = 0; attempt <= options_.retry_limit; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(options_.backoff_ms) * (1 << (attempt - 1)));
    httplib::Client client(impl_->target.origin);
    const auto timeout = std::chrono::milliseconds(options_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(impl_->target.path, headers, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) throw ProtocolError(res->status, res->body);
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(res->status, std::string("response is not JSON: ") + e.what());
    }
  }
  throw TransportError(options_.url + ": " + last_error + " after " +
                       std::to_string(options_.retry_limit + 1) + " attempt(s)");
}

}  // namespace autoprov::llm
