#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "robex/attack.hpp"
#include "robex/dense.hpp"
#include "robex/feature_set.hpp"

namespace robex {

// Exact minimum L2 perturbation norm, restricted to S, that flips the decision
// of the linear multiclass model z = Wx + b. Returns nullopt when the goal is
// unreachable within span(S). Independent of the PGD path; used to check it.
//
// Untargeted: the decision region of y is bounded by the hyperplanes
// z_y = z_j, and the closest restricted crossing is feasible, so the answer is
// min_j (z_y - z_j) / ||(w_y - w_j)_S||.
//
// Targeted: minimum-norm point of the polyhedron {z_t >= z_j for all j != t},
// found by enumerating active constraint sets, solving the equality-constrained
// least-norm problem for each, and keeping feasible candidates only.
inline std::optional<double> linear_min_perturbation(const std::vector<Vector>& weight_rows,
                                                     const Vector& bias, const Vector& x,
                                                     const FeatureSet& s, AttackGoal goal) {
  const int num_classes = static_cast<int>(weight_rows.size());
  const int d = static_cast<int>(x.size());
  if (num_classes < 2) throw std::invalid_argument("linear oracle: need >= 2 classes");
  if (static_cast<int>(bias.size()) != num_classes) {
    throw std::invalid_argument("linear oracle: bias length mismatch");
  }
  for (const Vector& row : weight_rows) {
    if (static_cast<int>(row.size()) != d) {
      throw std::invalid_argument("linear oracle: weight row length mismatch");
    }
  }
  if (s.dim() != d) throw std::invalid_argument("linear oracle: set dim mismatch");
  if (goal.class_index < 0 || goal.class_index >= num_classes) {
    throw std::invalid_argument("linear oracle: goal class out of range");
  }

  Vector z(num_classes);
  for (int j = 0; j < num_classes; ++j) z[j] = dot(weight_rows[j], x) + bias[j];
  const int current = argmax_index(z);
  if (goal.satisfied_by(current)) return 0.0;

  const std::vector<int>& support = s.indices();

  if (goal.kind == AttackGoal::Kind::kUntargeted) {
    const int y = goal.class_index;
    std::optional<double> best;
    for (int j = 0; j < num_classes; ++j) {
      if (j == y) continue;
      double nsq = 0.0;
      for (int i : support) {
        const double diff = weight_rows[y][i] - weight_rows[j][i];
        nsq += diff * diff;
      }
      if (nsq == 0.0) continue;
      const double margin = z[y] - z[j];
      const double dist = margin <= 0.0 ? 0.0 : margin / std::sqrt(nsq);
      if (!best || dist < *best) best = dist;
    }
    return best;
  }

  // Targeted: constraints g_j . delta >= c_j over the S coordinates, where
  // g_j = (w_t - w_j)_S and c_j = z_j - z_t.
  const int t = goal.class_index;
  std::vector<Vector> g;
  Vector c;
  std::vector<int> constraint_class;
  for (int j = 0; j < num_classes; ++j) {
    if (j == t) continue;
    Vector row(support.size());
    for (std::size_t k = 0; k < support.size(); ++k) {
      row[k] = weight_rows[t][support[k]] - weight_rows[j][support[k]];
    }
    g.push_back(std::move(row));
    c.push_back(z[j] - z[t]);
    constraint_class.push_back(j);
  }
  const int nc = static_cast<int>(g.size());

  auto feasible = [&](const Vector& delta_s) {
    const double slack = 1e-9;
    for (int j = 0; j < nc; ++j) {
      double lhs = 0.0;
      for (std::size_t k = 0; k < delta_s.size(); ++k) lhs += g[j][k] * delta_s[k];
      if (lhs < c[j] - slack * (1.0 + std::fabs(c[j]))) return false;
    }
    return true;
  };

  std::optional<double> best;
  for (unsigned active = 1; active < (1u << nc); ++active) {
    std::vector<int> idx;
    for (int j = 0; j < nc; ++j) {
      if (active & (1u << j)) idx.push_back(j);
    }
    const std::size_t k = idx.size();
    if (k > support.size()) continue;
    // Least-norm delta with G_A delta = c_A: delta = G_A^T (G_A G_A^T)^{-1} c_A.
    DenseMatrix gram(k, k);
    Vector rhs(k);
    for (std::size_t a = 0; a < k; ++a) {
      rhs[a] = c[idx[a]];
      for (std::size_t bcol = 0; bcol < k; ++bcol) {
        double v = 0.0;
        for (std::size_t w = 0; w < support.size(); ++w) v += g[idx[a]][w] * g[idx[bcol]][w];
        gram.at(a, bcol) = v;
      }
    }
    auto lambda = solve_linear_system(gram, rhs);
    if (!lambda) continue;  // dependent active set; a smaller subset covers it
    Vector delta_s(support.size(), 0.0);
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t w = 0; w < support.size(); ++w) delta_s[w] += (*lambda)[a] * g[idx[a]][w];
    }
    if (!feasible(delta_s)) continue;
    const double norm = l2_norm(delta_s);
    if (!best || norm < *best) best = norm;
  }
  return best;
}

// Convenience: oracle applied to a single-layer identity model.
inline std::optional<double> linear_min_perturbation(const Model& m, const Vector& x,
                                                     const FeatureSet& s, AttackGoal goal) {
  if (m.layers.size() != 1 || m.layers[0].activation != Activation::kIdentity) {
    throw std::invalid_argument("linear oracle: model is not a single identity layer");
  }
  const Layer& l = m.layers[0];
  std::vector<Vector> rows(l.out_dim, Vector(l.in_dim));
  for (int r = 0; r < l.out_dim; ++r) {
    for (int c = 0; c < l.in_dim; ++c) {
      rows[r][c] = l.weights[static_cast<std::size_t>(r) * l.in_dim + c];
    }
  }
  return linear_min_perturbation(rows, l.bias, x, s, goal);
}

}  // namespace robex
