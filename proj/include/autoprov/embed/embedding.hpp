#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "autoprov/core/error.hpp"

namespace autoprov::embed {

// Unit-norm vector. The all-zero input stays zero and is flagged.
struct Embedding {
  std::vector<double> values;
  bool zero = false;

  std::size_t dimension() const { return values.size(); }
  bool operator==(const Embedding&) const = default;

  // L2-normalizes `raw`; an all-zero vector yields a flagged zero embedding.
  static Embedding normalized(std::vector<double> raw);
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

double dot(const Embedding& a, const Embedding& b);
// 1 - dot(a, b), in [0, 2].
double cosine_distance(const Embedding& a, const Embedding& b);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  // Throws Error("empty text") for empty input.
  virtual Embedding embed(std::string_view text) const = 0;
  virtual std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) const;
  virtual std::size_t dimension() const = 0;
  virtual std::string identity() const = 0;
};

// Character trigram feature hashing with FNV-1a 64. Digit runs are folded to
// a single '0' first so lines of one format that differ only in numbers
// (pids, inodes, timestamps) land close together.
class HashingEmbedder : public EmbeddingProvider {
 public:
  explicit HashingEmbedder(std::size_t dimension = 256, bool fold_digits = true)
      : dim_(dimension), fold_digits_(fold_digits) {}
  Embedding embed(std::string_view text) const override;
  std::size_t dimension() const override { return dim_; }
  std::string identity() const override;

 private:
  std::size_t dim_;
  bool fold_digits_;
};

struct HttpEmbeddingConfig {
  std::string endpoint_url;
  std::string model_name;
  std::string api_key_env;
  std::size_t dimension = 0;  // 0: learned from the first response
  int retry_limit = 2;
  int timeout_ms = 60000;
  int max_in_flight = 4;
  int backoff_ms = 250;
};

std::unique_ptr<EmbeddingProvider> make_http_embedding_provider(const HttpEmbeddingConfig& config);

}  // namespace autoprov::embed
