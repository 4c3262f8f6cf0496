#include "autoprov/embed/embedding.hpp"

#include <atomic>
#include <cctype>
#include <cmath>

#include "autoprov/core/hash.hpp"
#include "autoprov/llm/http_json.hpp"
#include "autoprov/llm/provider.hpp"

namespace autoprov::embed {

Embedding Embedding::normalized(std::vector<double> raw) {
  double sq = 0;
  for (double v : raw) sq += v * v;
  Embedding e;
  if (sq == 0) {
    e.values.assign(raw.size(), 0.0);
    e.zero = true;
    return e;
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (double& v : raw) v *= inv;
  e.values = std::move(raw);
  return e;
}

double dot(const Embedding& a, const Embedding& b) {
  if (a.dimension() != b.dimension())
    throw DimensionMismatch("embedding dimension mismatch: " + std::to_string(a.dimension()) +
                            " vs " + std::to_string(b.dimension()));
  double s = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
  return s;
}

double cosine_distance(const Embedding& a, const Embedding& b) {
  double d = 1.0 - dot(a, b);
  if (d < 0) d = 0;
  if (d > 2) d = 2;
  return d;
}

std::vector<Embedding> EmbeddingProvider::embed_batch(const std::vector<std::string>& texts) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

Embedding HashingEmbedder::embed(std::string_view text) const {
  if (text.empty()) throw Error("empty text");
  std::string s;
  s.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const bool digit = std::isdigit(static_cast<unsigned char>(text[i]));
    if (fold_digits_ && digit) {
      if (s.empty() || s.back() != '0' || i == 0 ||
          !std::isdigit(static_cast<unsigned char>(text[i - 1])))
        s += '0';
      continue;
    }
    s += text[i];
  }
  std::vector<double> v(dim_, 0.0);
  if (s.size() < 3) {
    // Shorter than one trigram: hash the whole string as a single feature.
    auto h = fnv1a64(s);
    v[h % dim_] += (h >> 63) ? -1.0 : 1.0;
  } else {
    for (std::size_t i = 0; i + 3 <= s.size(); ++i) {
      auto h = fnv1a64(std::string_view(s).substr(i, 3));
      v[h % dim_] += (h >> 63) ? -1.0 : 1.0;
    }
  }
  return Embedding::normalized(std::move(v));
}

std::string HashingEmbedder::identity() const {
  return "hashing-trigram-fnv1a64:d=" + std::to_string(dim_) + (fold_digits_ ? ":fold-digits" : "");
}

namespace {

class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(const HttpEmbeddingConfig& c)
      : model_(c.model_name),
        client_({c.endpoint_url, c.api_key_env, c.retry_limit, c.timeout_ms, c.max_in_flight,
                 c.backoff_ms}),
        dim_(c.dimension) {}

  Embedding embed(std::string_view text) const override {
    if (text.empty()) throw Error("empty text");
    return embed_batch({std::string(text)}).front();
  }

  std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) const override {
    for (const auto& t : texts)
      if (t.empty()) throw Error("empty text");
    if (texts.empty()) return {};
    auto res = client_.post({{"model", model_}, {"input", texts}});
    std::vector<Embedding> out;
    try {
      const auto& data = res.at("data");
      if (data.size() != texts.size())
        throw llm::ProtocolError(200, "embedding count does not match input count");
      for (const auto& item : data) {
        auto e = Embedding::normalized(item.at("embedding").get<std::vector<double>>());
        std::size_t expected = dim_.load();
        if (expected == 0) dim_.compare_exchange_strong(expected, e.dimension());
        if (dim_.load() != e.dimension())
          throw DimensionMismatch("remote embedding dimension changed to " +
                                  std::to_string(e.dimension()));
        out.push_back(std::move(e));
      }
    } catch (const nlohmann::json::exception& e) {
      throw llm::ProtocolError(200, std::string("unexpected embedding response shape: ") + e.what());
    }
    return out;
  }

  std::size_t dimension() const override {
    if (dim_.load() == 0) (void)embed("dimension probe");
    return dim_.load();
  }

  std::string identity() const override { return "http:" + model_ + "@" + client_.url(); }

 private:
  std::string model_;
  llm::HttpJsonClient client_;
  mutable std::atomic<std::size_t> dim_;
};

}  // namespace

std::unique_ptr<EmbeddingProvider> make_http_embedding_provider(const HttpEmbeddingConfig& config) {
  return std::make_unique<HttpEmbeddingProvider>(config);
}

}  // namespace autoprov::embed
