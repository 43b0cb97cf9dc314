#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "robex/feature_set.hpp"
#include "robex/model.hpp"

namespace robex {

// What counts as a successful attack: any class other than y, or exactly t.
struct AttackGoal {
  enum class Kind { kUntargeted, kTargeted };
  Kind kind = Kind::kUntargeted;
  int class_index = 0;  // y for untargeted, t for targeted

  static AttackGoal untargeted(int y) { return {Kind::kUntargeted, y}; }
  static AttackGoal targeted(int t) { return {Kind::kTargeted, t}; }

  bool satisfied_by(int predicted) const {
    return kind == Kind::kUntargeted ? predicted != class_index : predicted == class_index;
  }
};

struct AttackConfig {
  double step_size = 1.0;   // gradient is L2-normalized, so this is the step length
  int num_steps = 100;
  int binsearch_iters = 12;
  double eps_cap = 0.0;     // <= 0 resolves to 2*sqrt(d)
  std::optional<std::pair<double, double>> clip_box;  // clamp x+delta when set
  // Untargeted searches on models with >2 classes take the best of per-target
  // searches; the margin-head walk alone can settle on a suboptimal class
  // boundary and miss the tight radius.
  bool per_target_search = true;

  double resolved_eps_cap(int d) const {
    return eps_cap > 0.0 ? eps_cap : 2.0 * std::sqrt(static_cast<double>(d));
  }

  void validate() const {
    if (step_size <= 0) throw std::invalid_argument("attack: step_size must be positive");
    if (num_steps <= 0) throw std::invalid_argument("attack: num_steps must be positive");
    if (binsearch_iters <= 0) throw std::invalid_argument("attack: binsearch_iters must be positive");
    if (clip_box && clip_box->first > clip_box->second) {
      throw std::invalid_argument("attack: clip_box lo > hi");
    }
  }
};

struct AttackResult {
  Vector delta;             // exactly zero outside S
  double norm = 0.0;        // ||delta||_2 for successes, eps_cap when capped
  bool success = false;
  int achieved_class = -1;
  bool capped = false;
};

namespace detail {

inline ScalarHead head_for_goal(AttackGoal goal) {
  return goal.kind == AttackGoal::Kind::kUntargeted ? ScalarHead::margin(goal.class_index)
                                                    : ScalarHead::target_margin(goal.class_index);
}

inline void zero_complement(Vector& v, const std::vector<std::uint8_t>& mask) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!mask[i]) v[i] = 0.0;
  }
}

}  // namespace detail

// Projected gradient ascent on the goal's margin head at a fixed L2 radius.
// delta starts at 0; each step adds step_size times the S-restricted,
// L2-normalized gradient, then re-zeroes the complement, projects onto the
// eps-ball, and applies the clip box if configured. Returns the first iterate
// that satisfies the goal, else the final iterate with success=false.
inline AttackResult pgd_fixed_eps(const Model& m, const Vector& x, const FeatureSet& s,
                                  AttackGoal goal, double eps, const AttackConfig& config) {
  detail::check_input(m, x);
  config.validate();
  if (s.empty()) throw std::invalid_argument("pgd_fixed_eps: empty feature set");
  if (s.dim() != m.input_dim) throw std::invalid_argument("pgd_fixed_eps: set dim mismatch");
  if (eps < 0) throw std::invalid_argument("pgd_fixed_eps: negative eps");
  if (goal.class_index < 0 || goal.class_index >= m.num_classes) {
    throw std::invalid_argument("pgd_fixed_eps: goal class out of range");
  }

  const ScalarHead head = detail::head_for_goal(goal);
  const std::vector<std::uint8_t> mask = s.mask();
  const int d = m.input_dim;

  AttackResult res;
  res.delta.assign(d, 0.0);

  Vector point = x;
  int cls = predict(m, point);
  if (goal.satisfied_by(cls)) {
    res.success = true;
    res.achieved_class = cls;
    res.norm = 0.0;
    return res;
  }

  for (int step = 0; step < config.num_steps; ++step) {
    Vector g = input_gradient(m, point, head);
    detail::zero_complement(g, mask);
    const double gnorm = l2_norm(g);
    if (gnorm == 0.0) break;  // flat restricted landscape; iterates would stall

    for (int i = 0; i < d; ++i) res.delta[i] += config.step_size * g[i] / gnorm;
    detail::zero_complement(res.delta, mask);
    const double dnorm = l2_norm(res.delta);
    if (dnorm > eps && dnorm > 0.0) {
      const double scale = eps / dnorm;
      for (double& v : res.delta) v *= scale;
    }
    if (config.clip_box) {
      const auto [lo, hi] = *config.clip_box;
      for (int i = 0; i < d; ++i) {
        double xi = x[i] + res.delta[i];
        if (xi < lo) xi = lo;
        if (xi > hi) xi = hi;
        res.delta[i] = xi - x[i];
      }
      detail::zero_complement(res.delta, mask);
    }

    for (int i = 0; i < d; ++i) point[i] = x[i] + res.delta[i];
    cls = predict(m, point);
    if (goal.satisfied_by(cls)) {
      res.success = true;
      res.achieved_class = cls;
      res.norm = l2_norm(res.delta);
      return res;
    }
  }

  res.success = false;
  res.achieved_class = cls;
  res.norm = l2_norm(res.delta);
  return res;
}

namespace detail {

// Doubling bracket then bisection for one goal. Tracks the smallest successful
// perturbation seen across all probes.
inline AttackResult search_min_radius(const Model& m, const Vector& x, const FeatureSet& s,
                                      AttackGoal goal, const AttackConfig& config) {
  const int d = m.input_dim;
  const double cap = config.resolved_eps_cap(d);
  const double start =
      0.1 * std::sqrt(static_cast<double>(s.size()) / static_cast<double>(d)) * l2_norm(x) + 0.1;

  std::optional<AttackResult> best;
  auto consider = [&](AttackResult&& r) {
    if (r.success && (!best || r.norm < best->norm)) best = std::move(r);
  };

  double lo = 0.0;
  double hi = -1.0;
  AttackResult last_fail;
  double eps = std::min(start, cap);
  for (;;) {
    AttackResult r = pgd_fixed_eps(m, x, s, goal, eps, config);
    if (r.success) {
      hi = eps;
      consider(std::move(r));
      break;
    }
    lo = eps;
    last_fail = std::move(r);
    if (eps >= cap) break;
    eps = std::min(eps * 2.0, cap);
  }

  if (hi < 0.0) {
    AttackResult r = std::move(last_fail);
    r.capped = true;
    r.success = false;
    r.norm = cap;
    return r;
  }

  for (int it = 0; it < config.binsearch_iters; ++it) {
    const double mid = 0.5 * (lo + hi);
    AttackResult r = pgd_fixed_eps(m, x, s, goal, mid, config);
    if (r.success) {
      hi = mid;
      consider(std::move(r));
    } else {
      lo = mid;
    }
  }
  return std::move(*best);
}

}  // namespace detail

// Upper bound on the minimum adversarial perturbation norm restricted to S:
// doubling phase to bracket a successful radius, then bisection. Untargeted
// goals on multiclass models take the minimum over per-target searches (a
// successful untargeted perturbation always realizes some target class, so
// the minimum over targets equals the untargeted optimum). Never-successful
// searches report norm = eps_cap with capped = true.
inline AttackResult min_perturbation(const Model& m, const Vector& x, const FeatureSet& s,
                                     AttackGoal goal, const AttackConfig& config) {
  detail::check_input(m, x);
  config.validate();
  if (s.empty()) throw std::invalid_argument("min_perturbation: empty feature set");

  const int current = predict(m, x);
  if (goal.satisfied_by(current)) {
    AttackResult r;
    r.delta.assign(m.input_dim, 0.0);
    r.success = true;
    r.achieved_class = current;
    r.norm = 0.0;
    return r;
  }

  const bool decompose = goal.kind == AttackGoal::Kind::kUntargeted && m.num_classes > 2 &&
                         config.per_target_search;
  if (!decompose) return detail::search_min_radius(m, x, s, goal, config);

  std::optional<AttackResult> best;
  std::optional<AttackResult> capped;
  for (int t = 0; t < m.num_classes; ++t) {
    if (t == goal.class_index) continue;
    AttackResult r = detail::search_min_radius(m, x, s, AttackGoal::targeted(t), config);
    if (r.success) {
      if (!best || r.norm < best->norm) best = std::move(r);
    } else if (!capped) {
      capped = std::move(r);
    }
  }
  if (best) return std::move(*best);
  return std::move(*capped);
}

}  // namespace robex
