#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "robex/feature_set.hpp"
#include "robex/model.hpp"
#include "robex/rng.hpp"

namespace robex {

// Per-feature scores plus the induced ranking: descending score, ties broken
// by lower index.
struct Attribution {
  Vector scores;
  std::vector<int> ranking;
  std::string method_name;

  Attribution() = default;

  Attribution(Vector s, std::string name) : scores(std::move(s)), method_name(std::move(name)) {
    ranking.resize(scores.size());
    std::iota(ranking.begin(), ranking.end(), 0);
    std::stable_sort(ranking.begin(), ranking.end(), [&](int a, int b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return a < b;
    });
  }
};

// Top-k of the ranking as a feature set.
inline FeatureSet attribution_to_set(const Attribution& attr, int k) {
  const int d = static_cast<int>(attr.scores.size());
  if (k < 0 || k > d) throw std::invalid_argument("attribution_to_set: k out of range");
  if (k == 0) return FeatureSet::empty_set(d);
  std::vector<int> ids(attr.ranking.begin(), attr.ranking.begin() + k);
  return FeatureSet(std::move(ids), d);
}

// |d z_y / d x| at x for the predicted class y.
inline Attribution grad_attr(const Model& m, const Vector& x) {
  const int y = predict(m, x);
  Vector g = input_gradient(m, x, ScalarHead::logit(y));
  for (double& v : g) v = std::fabs(v);
  return Attribution(std::move(g), "grad");
}

// Integrated gradients along the straight path from the baseline, midpoint
// rule with m_steps cells, attributing the predicted-class logit.
inline Attribution ig_attr(const Model& m, const Vector& x, const Vector& baseline, int m_steps) {
  detail::check_input(m, x);
  if (baseline.size() != x.size()) throw std::invalid_argument("ig_attr: baseline length");
  if (m_steps < 1) throw std::invalid_argument("ig_attr: m_steps must be >= 1");
  const int y = predict(m, x);
  const int d = m.input_dim;
  Vector avg(d, 0.0);
  Vector point(d);
  for (int k = 1; k <= m_steps; ++k) {
    const double alpha = (k - 0.5) / m_steps;
    for (int i = 0; i < d; ++i) point[i] = baseline[i] + alpha * (x[i] - baseline[i]);
    Vector g = input_gradient(m, point, ScalarHead::logit(y));
    for (int i = 0; i < d; ++i) avg[i] += g[i];
  }
  Vector scores(d);
  for (int i = 0; i < d; ++i) scores[i] = (x[i] - baseline[i]) * avg[i] / m_steps;
  return Attribution(std::move(scores), "ig");
}

// Expected gradients: IG averaged over baselines drawn uniformly from the
// background set with uniform path positions. Deterministic per seed.
inline Attribution eg_attr(const Model& m, const Vector& x, const std::vector<Vector>& background,
                           int num_samples, std::uint64_t seed) {
  detail::check_input(m, x);
  if (background.empty()) throw std::invalid_argument("eg_attr: empty background");
  if (num_samples < 1) throw std::invalid_argument("eg_attr: num_samples must be >= 1");
  const int y = predict(m, x);
  const int d = m.input_dim;
  Rng rng(seed);
  Vector scores(d, 0.0);
  Vector point(d);
  for (int k = 0; k < num_samples; ++k) {
    const Vector& ref = background[rng.uniform_int(background.size())];
    if (static_cast<int>(ref.size()) != d) throw std::invalid_argument("eg_attr: background dim");
    const double alpha = rng.uniform();
    for (int i = 0; i < d; ++i) point[i] = ref[i] + alpha * (x[i] - ref[i]);
    Vector g = input_gradient(m, point, ScalarHead::logit(y));
    for (int i = 0; i < d; ++i) scores[i] += (x[i] - ref[i]) * g[i];
  }
  for (double& v : scores) v /= num_samples;
  return Attribution(std::move(scores), "eg");
}

// Leave-one-out: drop in the predicted-class logit when feature i is replaced
// by the reference value.
inline Attribution loo_attr(const Model& m, const Vector& x, const Vector& reference) {
  detail::check_input(m, x);
  if (reference.size() != x.size()) throw std::invalid_argument("loo_attr: reference length");
  const int y = predict(m, x);
  const double base = forward(m, x)[y];
  Vector scores(m.input_dim);
  Vector probe = x;
  for (int i = 0; i < m.input_dim; ++i) {
    probe[i] = reference[i];
    scores[i] = base - forward(m, probe)[y];
    probe[i] = x[i];
  }
  return Attribution(std::move(scores), "loo");
}

// Seeded random ranking; scores are the shuffled positions.
inline Attribution random_attr(int d, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("random_attr: d must be >= 1");
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.shuffle(perm);
  Vector scores(d);
  for (int i = 0; i < d; ++i) scores[i] = static_cast<double>(perm[i]);
  return Attribution(std::move(scores), "random");
}

}  // namespace robex
