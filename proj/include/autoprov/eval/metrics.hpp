#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "autoprov/core/error.hpp"

namespace autoprov::eval {

// ARI over integer-coded partitions of the same items.
double adjusted_rand_index_codes(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth);

template <class A, class B>
double adjusted_rand_index(const std::vector<A>& pred, const std::vector<B>& truth) {
  if (pred.size() != truth.size()) throw Error("partitions cover different item counts");
  auto code = [](const auto& v) {
    std::map<std::decay_t<decltype(v[0])>, std::size_t> ids;
    std::vector<std::size_t> out;
    for (const auto& x : v) out.push_back(ids.try_emplace(x, ids.size()).first->second);
    return out;
  };
  return adjusted_rand_index_codes(code(pred), code(truth));
}

struct RankedItem {
  std::string node_key;
  double score = 0;
  std::optional<std::string> attack_id;  // nullopt: benign
};

// Probability that an attack item outscores a benign one; ties count half.
double auc_roc(const std::vector<RankedItem>& items);
// Average precision over descending score thresholds; tied scores form one step.
double auc_pr(const std::vector<RankedItem>& items);
// Mean over attacks of precision at the first rank where the attack surfaces.
// Ranking is score descending, key ascending.
double adp(const std::vector<RankedItem>& items);

// |M_o ∩ M_p| / |M_o| after case folding.
double tactic_consistency(const std::vector<std::string>& original, const std::vector<std::string>& poisoned);

}  // namespace autoprov::eval
