#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "robex/attack.hpp"
#include "robex/attribution.hpp"
#include "robex/parallel.hpp"

namespace robex {

enum class Criterion { kRobustnessComplement, kRobustnessSet, kInsertion, kDeletion };

inline std::string criterion_name(Criterion c) {
  switch (c) {
    case Criterion::kRobustnessComplement: return "robustness_sbar";
    case Criterion::kRobustnessSet: return "robustness_s";
    case Criterion::kInsertion: return "insertion";
    case Criterion::kDeletion: return "deletion";
  }
  return "?";
}

inline std::optional<Criterion> criterion_from_name(const std::string& s) {
  if (s == "robustness_sbar") return Criterion::kRobustnessComplement;
  if (s == "robustness_s") return Criterion::kRobustnessSet;
  if (s == "insertion") return Criterion::kInsertion;
  if (s == "deletion") return Criterion::kDeletion;
  return std::nullopt;
}

// Trapezoidal area under a curve with strictly increasing x.
inline double auc(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw std::invalid_argument("auc: need >= 2 points");
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double dx = points[i].first - points[i - 1].first;
    if (dx <= 0) throw std::invalid_argument("auc: x values must be strictly increasing");
    area += 0.5 * (points[i].second + points[i - 1].second) * dx;
  }
  return area;
}

struct EvalCurve {
  Criterion criterion = Criterion::kRobustnessComplement;
  std::vector<std::pair<double, double>> points;  // (fraction of features, mean value)
  double auc_value = 0.0;
  int n_examples = 0;                // examples contributing to the means
  int n_skipped = 0;                 // examples excluded by the goal precondition
  std::vector<int> capped_per_point; // attacks that hit eps_cap, per fraction
};

// The stand-in value x' used to "remove" features in Insertion/Deletion.
struct ReferenceSpec {
  enum class Kind { kScalar, kPerFeature, kUniformRandom };
  Kind kind = Kind::kScalar;
  double scalar_value = 0.0;
  Vector per_feature_values;
  double lo = 0.0, hi = 1.0;
  std::uint64_t seed = 0;

  static ReferenceSpec scalar(double v) {
    ReferenceSpec r;
    r.kind = Kind::kScalar;
    r.scalar_value = v;
    return r;
  }
  static ReferenceSpec per_feature(Vector v) {
    ReferenceSpec r;
    r.kind = Kind::kPerFeature;
    r.per_feature_values = std::move(v);
    return r;
  }
  static ReferenceSpec uniform_random(double lo, double hi, std::uint64_t seed) {
    if (lo > hi) throw std::invalid_argument("reference: lo > hi");
    ReferenceSpec r;
    r.kind = Kind::kUniformRandom;
    r.lo = lo;
    r.hi = hi;
    r.seed = seed;
    return r;
  }

  // One reference vector per example, fixed across fractions. The random kind
  // derives its stream from (seed, example index) so results are independent
  // of evaluation order.
  Vector resolve(int d, std::uint64_t example_index) const {
    switch (kind) {
      case Kind::kScalar:
        return Vector(static_cast<std::size_t>(d), scalar_value);
      case Kind::kPerFeature:
        if (static_cast<int>(per_feature_values.size()) != d) {
          throw std::invalid_argument("reference: per-feature length != d");
        }
        return per_feature_values;
      case Kind::kUniformRandom: {
        Rng rng = Rng::for_stream(seed, example_index);
        Vector v(static_cast<std::size_t>(d));
        for (double& x : v) x = rng.uniform(lo, hi);
        return v;
      }
    }
    return {};
  }
};

inline std::vector<double> default_fractions() {
  std::vector<double> f;
  for (int i = 1; i <= 9; ++i) f.push_back(0.05 * i);
  return f;
}

struct CriteriaConfig {
  std::vector<double> fractions = default_fractions();
  // nullopt: untargeted, per example against its own predicted class.
  std::optional<int> targeted_class;
  AttackConfig attack;
  int jobs = 1;

  void validate() const {
    if (fractions.size() < 2) throw std::invalid_argument("criteria: need >= 2 fractions");
    double prev = 0.0;
    for (double f : fractions) {
      if (f <= prev || f >= 1.0) {
        throw std::invalid_argument("criteria: fractions must be strictly increasing in (0, 1)");
      }
      prev = f;
    }
  }
};

namespace detail {

inline int top_k_count(double fraction, int d) {
  return std::min(d, static_cast<int>(std::ceil(fraction * d - 1e-12)));
}

// Examples usable under the goal: correctly classified, and for targeted
// goals not already predicted as the target.
inline std::vector<std::size_t> evaluable_examples(const Model& m,
                                                   const std::vector<Example>& examples,
                                                   const std::optional<int>& targeted_class) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const int pred = predict(m, examples[i].x);
    if (pred != examples[i].label) continue;
    if (targeted_class && pred == *targeted_class) continue;
    kept.push_back(i);
  }
  return kept;
}

}  // namespace detail

// Mean restricted-attack norm per fraction of top-ranked features. Mode
// selects whether the complement (sufficiency) or the set itself (necessity)
// is attacked. Capped attacks contribute eps_cap and are tallied.
inline EvalCurve robustness_curve(const Model& m, const std::vector<Example>& examples,
                                  const std::vector<Attribution>& attributions, Criterion mode,
                                  const CriteriaConfig& config) {
  if (mode != Criterion::kRobustnessComplement && mode != Criterion::kRobustnessSet) {
    throw std::invalid_argument("robustness_curve: mode must be a robustness criterion");
  }
  if (attributions.size() != examples.size()) {
    throw std::invalid_argument("robustness_curve: one attribution per example required");
  }
  config.validate();
  const int d = m.input_dim;
  for (const Attribution& a : attributions) {
    if (static_cast<int>(a.scores.size()) != d) {
      throw std::invalid_argument("robustness_curve: attribution length mismatch");
    }
  }

  const std::vector<std::size_t> kept =
      detail::evaluable_examples(m, examples, config.targeted_class);
  EvalCurve curve;
  curve.criterion = mode;
  curve.n_examples = static_cast<int>(kept.size());
  curve.n_skipped = static_cast<int>(examples.size() - kept.size());
  if (kept.empty()) throw NumericError("robustness_curve: no evaluable examples");

  const std::size_t nf = config.fractions.size();
  const double cap = config.attack.resolved_eps_cap(d);
  std::vector<std::vector<double>> value(kept.size(), std::vector<double>(nf, 0.0));
  std::vector<std::vector<std::uint8_t>> was_capped(kept.size(),
                                                    std::vector<std::uint8_t>(nf, 0));

  parallel_for(kept.size(), config.jobs, [&](std::size_t row) {
    const Example& e = examples[kept[row]];
    const Attribution& attr = attributions[kept[row]];
    const AttackGoal goal = config.targeted_class ? AttackGoal::targeted(*config.targeted_class)
                                                  : AttackGoal::untargeted(e.label);
    for (std::size_t fi = 0; fi < nf; ++fi) {
      const int k = detail::top_k_count(config.fractions[fi], d);
      const FeatureSet relevant = attribution_to_set(attr, k);
      const FeatureSet perturbable =
          mode == Criterion::kRobustnessComplement ? relevant.complement() : relevant;
      if (perturbable.empty()) {
        value[row][fi] = cap;
        was_capped[row][fi] = 1;
        continue;
      }
      AttackResult r = min_perturbation(m, e.x, perturbable, goal, config.attack);
      value[row][fi] = r.norm;
      was_capped[row][fi] = r.capped ? 1 : 0;
    }
  });

  curve.capped_per_point.assign(nf, 0);
  for (std::size_t fi = 0; fi < nf; ++fi) {
    double mean = 0.0;
    for (std::size_t row = 0; row < kept.size(); ++row) {
      mean += value[row][fi];
      curve.capped_per_point[fi] += was_capped[row][fi];
    }
    curve.points.emplace_back(config.fractions[fi], mean / static_cast<double>(kept.size()));
  }
  curve.auc_value = auc(curve.points);
  return curve;
}

// Mean softmax probability of the originally predicted class when the top
// fraction of features is replaced by the reference (Deletion) or is the only
// part kept (Insertion).
inline EvalCurve insertion_deletion_curve(const Model& m, const std::vector<Example>& examples,
                                          const std::vector<Attribution>& attributions,
                                          Criterion mode, const ReferenceSpec& reference,
                                          const std::vector<double>& fractions, int jobs = 1) {
  if (mode != Criterion::kInsertion && mode != Criterion::kDeletion) {
    throw std::invalid_argument("insertion_deletion_curve: bad mode");
  }
  if (attributions.size() != examples.size()) {
    throw std::invalid_argument("insertion_deletion_curve: one attribution per example required");
  }
  const int d = m.input_dim;
  const std::vector<std::size_t> kept = detail::evaluable_examples(m, examples, std::nullopt);
  EvalCurve curve;
  curve.criterion = mode;
  curve.n_examples = static_cast<int>(kept.size());
  curve.n_skipped = static_cast<int>(examples.size() - kept.size());
  if (kept.empty()) throw NumericError("insertion_deletion_curve: no evaluable examples");

  const std::size_t nf = fractions.size();
  std::vector<std::vector<double>> value(kept.size(), std::vector<double>(nf, 0.0));

  parallel_for(kept.size(), jobs, [&](std::size_t row) {
    const Example& e = examples[kept[row]];
    const Attribution& attr = attributions[kept[row]];
    const Vector ref = reference.resolve(d, kept[row]);
    const int y = predict(m, e.x);
    for (std::size_t fi = 0; fi < nf; ++fi) {
      const int k = detail::top_k_count(fractions[fi], d);
      const FeatureSet top = attribution_to_set(attr, k);
      Vector composite = mode == Criterion::kDeletion ? e.x : ref;
      for (int i : top.indices()) {
        composite[i] = mode == Criterion::kDeletion ? ref[i] : e.x[i];
      }
      value[row][fi] = softmax_probs(forward(m, composite))[y];
    }
  });

  for (std::size_t fi = 0; fi < nf; ++fi) {
    double mean = 0.0;
    for (std::size_t row = 0; row < kept.size(); ++row) mean += value[row][fi];
    curve.points.emplace_back(fractions[fi], mean / static_cast<double>(kept.size()));
  }
  curve.capped_per_point.assign(nf, 0);
  curve.auc_value = auc(curve.points);
  return curve;
}

// Worst-case disagreement of a set explainer under perturbations within an
// L2 ball of radius r, estimated by sampling:
// 1 - min over sampled y of |phi(f, y) ∩ phi(f, x)| / |phi(f, x)|.
inline double sensitivity(const Model& m,
                          const std::function<FeatureSet(const Model&, const Vector&)>& phi,
                          const Vector& x, double radius, int num_samples, std::uint64_t seed) {
  detail::check_input(m, x);
  if (radius < 0) throw std::invalid_argument("sensitivity: negative radius");
  if (num_samples < 1) throw std::invalid_argument("sensitivity: need >= 1 sample");
  const FeatureSet base = phi(m, x);
  if (base.empty()) throw std::invalid_argument("sensitivity: explainer returned empty set");
  const int d = m.input_dim;
  const auto base_mask = base.mask();

  Rng rng(seed);
  double worst = 0.0;
  Vector y(x.size());
  for (int s = 0; s < num_samples; ++s) {
    // Uniform in the ball: normalized Gaussian direction, radius r * u^(1/d).
    Vector dir(d);
    for (double& v : dir) v = rng.normal();
    const double n = l2_norm(dir);
    const double rad = radius * std::pow(rng.uniform(), 1.0 / d);
    for (int i = 0; i < d; ++i) y[i] = x[i] + (n > 0 ? rad * dir[i] / n : 0.0);
    const FeatureSet moved = phi(m, y);
    int inter = 0;
    for (int i : moved.indices()) inter += base_mask[i];
    const double ratio = static_cast<double>(inter) / static_cast<double>(base.size());
    worst = std::max(worst, 1.0 - ratio);
  }
  return worst;
}

namespace detail {

// Ranks over scores, descending, average rank across ties.
inline Vector average_ranks(const Vector& scores) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  Vector ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

// Spearman rank correlation with average ranks for ties.
inline double spearman_rank_correlation(const Attribution& a, const Attribution& b) {
  if (a.scores.size() != b.scores.size()) {
    throw std::invalid_argument("spearman: length mismatch");
  }
  const Vector ra = detail::average_ranks(a.scores);
  const Vector rb = detail::average_ranks(b.scores);
  const std::size_t n = ra.size();
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_a += ra[i];
    mean_b += rb[i];
  }
  mean_a /= n;
  mean_b /= n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = ra[i] - mean_a;
    const double db = rb[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 && var_b == 0.0) return 1.0;  // both fully tied: identical rankings
  if (var_a == 0.0 || var_b == 0.0) return 0.0;
  return cov / std::sqrt(var_a * var_b);
}

struct SanityCheckResult {
  std::vector<double> per_example_rho;
  double mean_rho = 0.0;
};

// Model-randomization sanity check: rank correlation between attributions
// under the original model and under a last-layer re-initialization. An
// explainer that ignores the model scores exactly 1.
inline SanityCheckResult sanity_check(
    const Model& m, const std::vector<Example>& examples,
    const std::function<Attribution(const Model&, const Vector&)>& explain_fn,
    std::uint64_t seed) {
  const Model randomized = randomize_last_layer(m, seed);
  SanityCheckResult result;
  for (const Example& e : examples) {
    const Attribution original = explain_fn(m, e.x);
    const Attribution shuffled = explain_fn(randomized, e.x);
    result.per_example_rho.push_back(spearman_rank_correlation(original, shuffled));
  }
  if (result.per_example_rho.empty()) throw std::invalid_argument("sanity_check: no examples");
  result.mean_rho = std::accumulate(result.per_example_rho.begin(), result.per_example_rho.end(),
                                    0.0) /
                    static_cast<double>(result.per_example_rho.size());
  return result;
}

}  // namespace robex
