#include "autoprov/cluster/cluster.hpp"

#include <algorithm>
#include <cmath>

#include "autoprov/core/jsonl.hpp"
#include "autoprov/core/rng.hpp"

namespace autoprov::cluster {

void to_json(nlohmann::json& j, const MicroCluster& c) {
  j = {{"cluster_id", c.cluster_id},         {"center", c.center.values},
       {"zero", c.center.zero},              {"weight", c.weight},
       {"last_update_seq", c.last_update_seq}, {"member_sample", c.member_sample},
       {"members_seen", c.members_seen}};
}

void from_json(const nlohmann::json& j, MicroCluster& c) {
  c.cluster_id = j.at("cluster_id").get<std::int64_t>();
  c.center.values = j.at("center").get<std::vector<double>>();
  c.center.zero = j.value("zero", false);
  c.weight = j.at("weight").get<double>();
  c.last_update_seq = j.at("last_update_seq").get<std::int64_t>();
  c.member_sample = j.at("member_sample").get<std::vector<std::string>>();
  c.members_seen = j.value("members_seen", std::int64_t{0});
}

void to_json(nlohmann::json& j, const CandidateEntry& c) {
  j = {{"log_id", c.log_id}, {"raw_text", c.raw_text}, {"cluster_id", c.cluster_id}};
}

void from_json(const nlohmann::json& j, CandidateEntry& c) {
  c.log_id = j.at("log_id").get<std::string>();
  c.raw_text = j.at("raw_text").get<std::string>();
  c.cluster_id = j.at("cluster_id").get<std::int64_t>();
}

void Clusterer::apply_decay(std::int64_t seq) {
  if (params_.decay > 0 && last_seq_ && seq > *last_seq_) {
    const double f = std::exp2(-params_.decay * static_cast<double>(seq - *last_seq_));
    for (auto& c : clusters_) c.weight *= f;
    std::erase_if(clusters_, [&](const MicroCluster& c) { return c.weight < params_.w_min; });
  }
  last_seq_ = seq;
}

std::optional<std::pair<std::int64_t, double>> Clusterer::nearest(const embed::Embedding& e) const {
  std::optional<std::pair<std::int64_t, double>> best;
  for (const auto& c : clusters_) {
    double d = embed::cosine_distance(c.center, e);
    if (!best || d < best->second) best = {c.cluster_id, d};
  }
  return best;
}

std::int64_t Clusterer::insert(const std::string& log_id, const embed::Embedding& e,
                               std::int64_t seq) {
  apply_decay(seq);
  MicroCluster* target = nullptr;
  if (auto near = nearest(e); near && near->second <= params_.radius) {
    for (auto& c : clusters_)
      if (c.cluster_id == near->first) target = &c;
  }
  if (!target) {
    clusters_.push_back({next_id_++, e, 1.0, seq, {log_id}, 1});
    return clusters_.back().cluster_id;
  }
  std::vector<double> merged(e.values.size());
  for (std::size_t i = 0; i < merged.size(); ++i)
    merged[i] = target->center.values[i] * target->weight + e.values[i];
  target->center = embed::Embedding::normalized(std::move(merged));
  target->weight += 1.0;
  target->last_update_seq = seq;
  // Reservoir sampling with a per-cluster deterministic draw.
  const auto n = ++target->members_seen;
  if (target->member_sample.size() < params_.reservoir_cap) {
    target->member_sample.push_back(log_id);
  } else {
    auto j = mix_seed(mix_seed(params_.seed, static_cast<std::uint64_t>(target->cluster_id)),
                      static_cast<std::uint64_t>(n)) %
             static_cast<std::uint64_t>(n);
    if (j < params_.reservoir_cap) target->member_sample[j] = log_id;
  }
  return target->cluster_id;
}

void Clusterer::save(const std::filesystem::path& path) const { write_jsonl(path, clusters_); }

Clusterer Clusterer::load(const std::filesystem::path& path, ClusterParams params) {
  Clusterer c(params);
  c.clusters_ = read_jsonl<MicroCluster>(path);
  for (const auto& m : c.clusters_) {
    c.next_id_ = std::max(c.next_id_, m.cluster_id + 1);
    c.last_seq_ = std::max(c.last_seq_.value_or(m.last_update_seq), m.last_update_seq);
  }
  return c;
}

std::vector<std::size_t> gfp_sample(const std::vector<embed::Embedding>& es, std::size_t k) {
  if (es.empty()) throw Error("gfp_sample: empty input");
  if (k == 0) throw Error("gfp_sample: k must be >= 1");
  const std::size_t n = es.size();
  std::vector<double> mean(es.front().dimension(), 0.0);
  for (const auto& e : es)
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += e.values.at(i);
  const auto mean_dir = embed::Embedding::normalized(std::move(mean));

  std::vector<std::size_t> picks;
  std::vector<bool> taken(n, false);
  // Distances within kTieEps count as equal so rounding noise cannot
  // override the lowest-index rule (two points are always equidistant
  // from their mean direction).
  constexpr double kTieEps = 1e-12;
  std::size_t first = 0;
  double best = -1;
  for (std::size_t i = 0; i < n; ++i) {
    double d = embed::cosine_distance(es[i], mean_dir);
    if (d > best + kTieEps) {
      best = d;
      first = i;
    }
  }
  picks.push_back(first);
  taken[first] = true;
  std::vector<double> min_d(n);
  for (std::size_t i = 0; i < n; ++i) min_d[i] = embed::cosine_distance(es[i], es[first]);

  while (picks.size() < std::min(k, n)) {
    std::size_t arg = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!taken[i] && (arg == n || min_d[i] > min_d[arg] + kTieEps)) arg = i;
    picks.push_back(arg);
    taken[arg] = true;
    for (std::size_t i = 0; i < n; ++i)
      min_d[i] = std::min(min_d[i], embed::cosine_distance(es[i], es[arg]));
  }
  return picks;
}

CandidateLogSet select_representatives(
    const std::map<std::int64_t, std::vector<std::string>>& window_members,
    const std::map<std::string, std::string>& raw_text, std::size_t m, std::uint64_t seed,
    std::int64_t window_id) {
  if (m == 0) throw Error("select_representatives: m must be >= 1");
  CandidateLogSet out;
  out.window_id = window_id;
  for (const auto& [cid, members] : window_members) {
    Rng rng(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(window_id)),
                     static_cast<std::uint64_t>(cid)));
    for (auto idx : rng.sample(members.size(), m)) {
      const auto& id = members[idx];
      auto it = raw_text.find(id);
      out.entries.push_back({id, it == raw_text.end() ? std::string() : it->second, cid});
    }
  }
  return out;
}

WindowResult process_window(Clusterer& state, const std::vector<LogRecord>& logs,
                            const embed::EmbeddingProvider& provider, std::size_t k, std::size_t m,
                            std::uint64_t seed) {
  WindowResult out;
  if (logs.empty()) return out;
  const auto window_id = logs.front().window_id;
  out.candidates.window_id = window_id;
  std::vector<std::string> texts;
  texts.reserve(logs.size());
  for (const auto& l : logs) texts.push_back(l.raw_text);
  const auto es = provider.embed_batch(texts);

  out.sampled = gfp_sample(es, k);
  std::vector<bool> sampled(logs.size(), false);
  std::map<std::int64_t, std::vector<std::string>> members;
  std::map<std::string, std::string> raw;
  // Insert sampled logs in arrival order so the clusterer sees a stream.
  std::vector<std::size_t> order = out.sampled;
  std::sort(order.begin(), order.end());
  for (auto i : order) {
    sampled[i] = true;
    auto cid = state.insert(logs[i].log_id, es[i], logs[i].arrival_seq);
    out.assignments[logs[i].log_id] = cid;
    members[cid].push_back(logs[i].log_id);
    raw[logs[i].log_id] = logs[i].raw_text;
  }
  for (std::size_t i = 0; i < logs.size(); ++i) {
    if (sampled[i]) continue;
    auto near = state.nearest(es[i]);
    out.assignments[logs[i].log_id] = near ? near->first : -1;
  }
  out.candidates = select_representatives(members, raw, m, seed, window_id);
  return out;
}

}  // namespace autoprov::cluster
