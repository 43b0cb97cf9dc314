#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "robex/attack.hpp"
#include "robex/attribution.hpp"
#include "robex/game.hpp"

namespace robex {

// The twin set objectives: anchor the selected features and demand the
// complement attack stays hard (maximize), or perturb only the selected
// features and demand the attack gets easy (minimize).
enum class SetObjective { kMaxComplementRobustness, kMinSetRobustness };

struct GreedyConfig {
  SetObjective objective = SetObjective::kMaxComplementRobustness;
  double target_fraction = 0.45;  // final |S_r| = ceil(target_fraction * d)
  double step_fraction = 0.05;    // batch added per greedy step
  int num_subset_samples = 5000;
  double subset_inclusion_prob = 0.5;
  std::uint64_t seed = 0;
  AttackGoal goal = AttackGoal::untargeted(0);
  // When the unchosen pool is at most this large, enumerate every subset
  // instead of sampling; step-0 then matches the exact Banzhaf ranking.
  int exhaustive_below = 0;

  void validate(int d) const {
    if (target_fraction <= 0 || target_fraction > 1) {
      throw std::invalid_argument("greedy: target_fraction must be in (0, 1]");
    }
    if (step_fraction <= 0 || step_fraction > 1) {
      throw std::invalid_argument("greedy: step_fraction must be in (0, 1]");
    }
    if (num_subset_samples < 1) throw std::invalid_argument("greedy: need >= 1 subset sample");
    if (subset_inclusion_prob <= 0 || subset_inclusion_prob >= 1) {
      throw std::invalid_argument("greedy: inclusion prob must be in (0, 1)");
    }
    if (exhaustive_below > 20) throw std::invalid_argument("greedy: exhaustive_below too large");
    if (static_cast<int>(std::ceil(target_fraction * d)) < 1) {
      throw std::invalid_argument("greedy: target set would be empty");
    }
  }
};

// Objective value v(S_r) for the configured objective: the minimum restricted
// perturbation norm on the complement (maximize flavor) or on the set itself
// (minimize flavor). An empty perturbable set counts as unattackable and
// yields eps_cap.
inline double objective_value(const Model& m, const Vector& x, const FeatureSet& relevant,
                              const GreedyConfig& config, const AttackConfig& attack_cfg) {
  const FeatureSet perturbable = config.objective == SetObjective::kMaxComplementRobustness
                                     ? relevant.complement()
                                     : relevant;
  if (perturbable.empty()) return attack_cfg.resolved_eps_cap(m.input_dim);
  AttackResult r = min_perturbation(m, x, perturbable, config.goal, attack_cfg);
  return r.norm;  // capped results already carry eps_cap
}

struct GreedySelection {
  std::vector<int> order;  // features in the order they were selected
  Attribution attribution;
};

namespace detail {

// Memoizes v(S_r) per selection run, keyed by the relevant-set mask.
class ObjectiveCache {
 public:
  ObjectiveCache(const Model& m, const Vector& x, const GreedyConfig& config,
                 const AttackConfig& attack_cfg)
      : model_(m), x_(x), config_(config), attack_cfg_(attack_cfg) {}

  double value(const std::vector<std::uint8_t>& relevant_mask) {
    std::string key(relevant_mask.begin(), relevant_mask.end());
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    std::vector<int> ids;
    for (int i = 0; i < static_cast<int>(relevant_mask.size()); ++i) {
      if (relevant_mask[i]) ids.push_back(i);
    }
    FeatureSet relevant(std::move(ids), static_cast<int>(relevant_mask.size()));
    double v = objective_value(model_, x_, relevant, config_, attack_cfg_);
    cache_.emplace(std::move(key), v);
    return v;
  }

 private:
  const Model& model_;
  const Vector& x_;
  const GreedyConfig& config_;
  const AttackConfig& attack_cfg_;
  std::unordered_map<std::string, double> cache_;
};

inline int batch_size(double step_fraction, int d) {
  return std::max(1, static_cast<int>(std::floor(step_fraction * d + 1e-12)));
}

inline int target_size(double target_fraction, int d) {
  return static_cast<int>(std::ceil(target_fraction * d - 1e-12));
}

// Selection order -> attribution scores: the k-th selected feature gets score
// d - k, unselected features share the bottom tier at 0.
inline Attribution order_attribution(const std::vector<int>& order, int d, std::string name) {
  Vector scores(d, 0.0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    scores[order[k]] = static_cast<double>(d - static_cast<int>(k));
  }
  return Attribution(std::move(scores), std::move(name));
}

inline std::vector<int> unchosen_features(const std::vector<std::uint8_t>& chosen) {
  std::vector<int> u;
  for (int i = 0; i < static_cast<int>(chosen.size()); ++i) {
    if (!chosen[i]) u.push_back(i);
  }
  return u;
}

}  // namespace detail

// Plain greedy: each step scores every unchosen feature by the objective of
// adding it alone, then moves the best batch into the relevant set.
inline GreedySelection greedy_select(const Model& m, const Vector& x, const GreedyConfig& config,
                                     const AttackConfig& attack_cfg) {
  detail::check_input(m, x);
  const int d = m.input_dim;
  config.validate(d);
  const int target = detail::target_size(config.target_fraction, d);
  const int batch = detail::batch_size(config.step_fraction, d);
  const bool maximize = config.objective == SetObjective::kMaxComplementRobustness;

  detail::ObjectiveCache cache(m, x, config, attack_cfg);
  std::vector<std::uint8_t> chosen(d, 0);
  std::vector<int> order;
  order.reserve(target);

  while (static_cast<int>(order.size()) < target) {
    std::vector<int> candidates = detail::unchosen_features(chosen);
    std::vector<double> value(candidates.size());
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      std::vector<std::uint8_t> mask = chosen;
      mask[candidates[k]] = 1;
      value[k] = cache.value(mask);
    }
    std::vector<std::size_t> rank(candidates.size());
    for (std::size_t k = 0; k < rank.size(); ++k) rank[k] = k;
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
      if (value[a] != value[b]) return maximize ? value[a] > value[b] : value[a] < value[b];
      return candidates[a] < candidates[b];
    });
    const int take = std::min<int>(batch, target - static_cast<int>(order.size()));
    for (int k = 0; k < take; ++k) {
      const int feat = candidates[rank[k]];
      chosen[feat] = 1;
      order.push_back(feat);
    }
  }
  return {order, detail::order_attribution(order, d, "greedy")};
}

// Greedy by set-aggregation score: each step regresses the objective over
// random subsets of the unchosen features and moves the batch with the best
// regression coefficients (restricted Banzhaf values).
inline GreedySelection greedy_as_select(const Model& m, const Vector& x,
                                        const GreedyConfig& config,
                                        const AttackConfig& attack_cfg) {
  detail::check_input(m, x);
  const int d = m.input_dim;
  config.validate(d);
  const int target = detail::target_size(config.target_fraction, d);
  const int batch = detail::batch_size(config.step_fraction, d);
  const bool maximize = config.objective == SetObjective::kMaxComplementRobustness;

  detail::ObjectiveCache cache(m, x, config, attack_cfg);
  Rng rng(config.seed);
  std::vector<std::uint8_t> chosen(d, 0);
  std::vector<int> order;
  order.reserve(target);

  while (static_cast<int>(order.size()) < target) {
    const std::vector<int> unchosen = detail::unchosen_features(chosen);
    const std::size_t n = unchosen.size();

    std::vector<SubsetSample> samples;
    const bool exhaustive = static_cast<int>(n) <= config.exhaustive_below;
    if (exhaustive) {
      const std::uint32_t total = 1u << n;
      samples.resize(total);
      for (std::uint32_t maskbits = 0; maskbits < total; ++maskbits) {
        samples[maskbits].membership.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
          samples[maskbits].membership[j] = (maskbits >> j) & 1u;
        }
      }
    } else {
      samples.resize(config.num_subset_samples);
      for (SubsetSample& s : samples) {
        s.membership.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
          s.membership[j] = rng.bernoulli(config.subset_inclusion_prob) ? 1 : 0;
        }
      }
    }

    for (SubsetSample& s : samples) {
      std::vector<std::uint8_t> mask = chosen;
      for (std::size_t j = 0; j < n; ++j) {
        if (s.membership[j]) mask[unchosen[j]] = 1;
      }
      s.value = cache.value(mask);
    }

    RegressionSolution reg = banzhaf_regression(samples);

    std::vector<std::size_t> rank(n);
    for (std::size_t k = 0; k < n; ++k) rank[k] = k;
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
      if (reg.w[a] != reg.w[b]) return maximize ? reg.w[a] > reg.w[b] : reg.w[a] < reg.w[b];
      return unchosen[a] < unchosen[b];
    });
    const int take = std::min<int>(batch, target - static_cast<int>(order.size()));
    for (int k = 0; k < take; ++k) {
      const int feat = unchosen[rank[k]];
      chosen[feat] = 1;
      order.push_back(feat);
    }
  }
  return {order, detail::order_attribution(order, d, "greedy-as")};
}

}  // namespace robex
