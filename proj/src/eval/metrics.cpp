#include "autoprov/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "autoprov/core/text.hpp"

namespace autoprov::eval {

namespace {

double pairs(double n) { return n * (n - 1) / 2; }

void require_finite(const std::vector<RankedItem>& items) {
  for (const auto& it : items)
    if (!std::isfinite(it.score)) throw Error("non-finite score for " + it.node_key);
}

std::vector<RankedItem> ranked(std::vector<RankedItem> items) {
  std::sort(items.begin(), items.end(), [](const RankedItem& a, const RankedItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.node_key < b.node_key;
  });
  return items;
}

}  // namespace

double adjusted_rand_index_codes(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth) {
  if (pred.size() != truth.size()) throw Error("partitions cover different item counts");
  if (pred.size() < 2) throw Error("ARI needs at least two items");
  std::map<std::pair<std::size_t, std::size_t>, double> cell;
  std::map<std::size_t, double> rows, cols;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++cell[{pred[i], truth[i]}];
    ++rows[pred[i]];
    ++cols[truth[i]];
  }
  double index = 0, a = 0, b = 0;
  for (const auto& [_, n] : cell) index += pairs(n);
  for (const auto& [_, n] : rows) a += pairs(n);
  for (const auto& [_, n] : cols) b += pairs(n);
  const double expected = a * b / pairs(static_cast<double>(pred.size()));
  const double max_index = (a + b) / 2;
  if (max_index == expected) return 1.0;  // both partitions trivial in the same way
  return (index - expected) / (max_index - expected);
}

double auc_roc(const std::vector<RankedItem>& items) {
  require_finite(items);
  std::vector<const RankedItem*> v;
  for (const auto& it : items) v.push_back(&it);
  std::sort(v.begin(), v.end(), [](auto* a, auto* b) { return a->score < b->score; });
  // Mann-Whitney U with midranks.
  double rank_sum = 0, n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j]->score == v[i]->score) ++j;
    double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2;
    for (std::size_t k = i; k < j; ++k) {
      if (v[k]->attack_id) {
        rank_sum += mid;
        ++n_pos;
      } else {
        ++n_neg;
      }
    }
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) throw Error("AUC-ROC needs both attack and benign items");
  return (rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg);
}

double auc_pr(const std::vector<RankedItem>& items) {
  require_finite(items);
  auto v = ranked(items);
  double total_pos = 0;
  for (const auto& it : v) total_pos += it.attack_id.has_value();
  if (total_pos == 0) throw Error("AUC-PR needs at least one attack item");
  double ap = 0, tp = 0, prev_recall = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j].score == v[i].score) tp += v[j++].attack_id.has_value();
    double recall = tp / total_pos;
    ap += (recall - prev_recall) * (tp / static_cast<double>(j));
    prev_recall = recall;
    i = j;
  }
  return ap;
}

double adp(const std::vector<RankedItem>& items) {
  require_finite(items);
  auto v = ranked(items);
  std::set<std::string> attacks;
  for (const auto& it : v)
    if (it.attack_id) attacks.insert(*it.attack_id);
  if (attacks.empty()) throw Error("ADP needs at least one attack");
  std::map<std::string, double> first_precision;
  double hits = 0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v[k].attack_id) continue;
    ++hits;
    first_precision.try_emplace(*v[k].attack_id, hits / static_cast<double>(k + 1));
  }
  double sum = 0;
  for (const auto& [_, p] : first_precision) sum += p;
  return sum / static_cast<double>(attacks.size());
}

double tactic_consistency(const std::vector<std::string>& original, const std::vector<std::string>& poisoned) {
  std::set<std::string> o, p;
  for (const auto& t : original) o.insert(text::casefold(text::trim(t)));
  for (const auto& t : poisoned) p.insert(text::casefold(text::trim(t)));
  if (o.empty()) throw Error("tactic consistency needs at least one original tactic");
  std::size_t both = 0;
  for (const auto& t : o) both += p.count(t);
  return static_cast<double>(both) / static_cast<double>(o.size());
}

}  // namespace autoprov::eval
