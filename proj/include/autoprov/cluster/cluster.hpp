#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "autoprov/core/records.hpp"
#include "autoprov/embed/embedding.hpp"
#include "json.hpp"

namespace autoprov::cluster {

struct MicroCluster {
  std::int64_t cluster_id = 0;
  embed::Embedding center;
  double weight = 1.0;
  std::int64_t last_update_seq = 0;
  std::vector<std::string> member_sample;  // reservoir of log ids
  std::int64_t members_seen = 0;

  bool operator==(const MicroCluster&) const = default;
};

void to_json(nlohmann::json& j, const MicroCluster& c);
void from_json(const nlohmann::json& j, MicroCluster& c);

struct ClusterParams {
  double radius = 0.3;  // cosine distance
  double decay = 0.0;   // lambda; weights scale by 2^(-lambda * dseq)
  double w_min = 0.5;
  std::size_t reservoir_cap = 64;
  std::uint64_t seed = 0;
};

// Leader-style streaming micro-clustering with decay and pruning.
class Clusterer {
 public:
  explicit Clusterer(ClusterParams params = {}) : params_(params) {}

  // Returns the id of the cluster that absorbed the embedding.
  std::int64_t insert(const std::string& log_id, const embed::Embedding& e, std::int64_t seq);

  // Nearest live cluster and its cosine distance; nullopt when empty.
  std::optional<std::pair<std::int64_t, double>> nearest(const embed::Embedding& e) const;

  const std::vector<MicroCluster>& clusters() const { return clusters_; }
  const ClusterParams& params() const { return params_; }
  std::int64_t next_cluster_id() const { return next_id_; }

  void save(const std::filesystem::path& path) const;
  static Clusterer load(const std::filesystem::path& path, ClusterParams params);

 private:
  void apply_decay(std::int64_t seq);

  ClusterParams params_;
  std::vector<MicroCluster> clusters_;
  std::int64_t next_id_ = 0;
  std::optional<std::int64_t> last_seq_;
};

// Greedy farthest-point selection. The first pick is the vector farthest
// from the mean direction; each later pick maximizes its minimum distance to
// the picks so far. Ties go to the lowest index.
std::vector<std::size_t> gfp_sample(const std::vector<embed::Embedding>& embeddings, std::size_t k);

struct CandidateEntry {
  std::string log_id;
  std::string raw_text;
  std::int64_t cluster_id = 0;
  bool operator==(const CandidateEntry&) const = default;
};

struct CandidateLogSet {
  std::int64_t window_id = 0;
  std::vector<CandidateEntry> entries;
};

void to_json(nlohmann::json& j, const CandidateEntry& c);
void from_json(const nlohmann::json& j, CandidateEntry& c);

// Uniform sample of min(m, |members|) ids per cluster, seeded by
// (seed, window, cluster) so results do not depend on map iteration.
CandidateLogSet select_representatives(
    const std::map<std::int64_t, std::vector<std::string>>& window_members,
    const std::map<std::string, std::string>& raw_text, std::size_t m, std::uint64_t seed,
    std::int64_t window_id);

struct WindowResult {
  CandidateLogSet candidates;
  std::map<std::string, std::int64_t> assignments;  // every log of the window
  std::vector<std::size_t> sampled;                 // indices into the window, pick order
};

WindowResult process_window(Clusterer& state, const std::vector<LogRecord>& logs,
                            const embed::EmbeddingProvider& provider, std::size_t k, std::size_t m,
                            std::uint64_t seed);

}  // namespace autoprov::cluster
