#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "robex/common.hpp"
#include "robex/dense.hpp"

namespace robex {

// One observation of the restricted game: which unchosen features were added
// (binary membership over the unchosen list) and the objective value reached.
struct SubsetSample {
  std::vector<std::uint8_t> membership;
  double value = 0.0;
};

struct RegressionSolution {
  Vector w;       // one coefficient per unchosen feature
  double c = 0.0; // intercept
};

// Least-squares fit of value ~ w . membership + c over the samples, solved by
// normal equations with a small ridge term on the Gram diagonal. Over the full
// subset enumeration this recovers the Banzhaf values exactly (up to the
// ridge damping).
inline RegressionSolution banzhaf_regression(const std::vector<SubsetSample>& samples,
                                             double ridge = 1e-6) {
  if (samples.size() < 2) throw std::invalid_argument("banzhaf_regression: need >= 2 samples");
  const std::size_t n = samples[0].membership.size();
  for (const SubsetSample& s : samples) {
    if (s.membership.size() != n) {
      throw std::invalid_argument("banzhaf_regression: inconsistent membership length");
    }
  }

  bool all_identical = true;
  for (std::size_t k = 1; k < samples.size() && all_identical; ++k) {
    all_identical = samples[k].membership == samples[0].membership;
  }
  if (all_identical) {
    RegressionSolution sol;
    sol.w.assign(n, 0.0);
    double mean = 0.0;
    for (const SubsetSample& s : samples) mean += s.value;
    sol.c = mean / static_cast<double>(samples.size());
    return sol;
  }

  // Design row per sample: [membership, 1]; accumulate X^T X and X^T v.
  const std::size_t p = n + 1;
  DenseMatrix gram(p, p);
  Vector rhs(p, 0.0);
  for (const SubsetSample& s : samples) {
    for (std::size_t i = 0; i <= n; ++i) {
      const double xi = i < n ? static_cast<double>(s.membership[i]) : 1.0;
      if (xi == 0.0) continue;
      rhs[i] += xi * s.value;
      for (std::size_t j = 0; j <= n; ++j) {
        const double xj = j < n ? static_cast<double>(s.membership[j]) : 1.0;
        if (xj != 0.0) gram.at(i, j) += xi * xj;
      }
    }
  }
  for (std::size_t i = 0; i < p; ++i) gram.at(i, i) += ridge;

  auto beta = solve_linear_system(std::move(gram), std::move(rhs));
  if (!beta) throw NumericError("banzhaf_regression: singular normal equations");
  RegressionSolution sol;
  sol.w.assign(beta->begin(), beta->begin() + n);
  sol.c = beta->back();
  return sol;
}

// Exact Banzhaf values by exhaustive enumeration:
// phi_i = 2^{-(n-1)} * sum over S not containing i of v(S + i) - v(S).
// value_of_mask(bitmask) evaluates the coalition encoded in the low n bits.
inline Vector exact_banzhaf(int n, const std::function<double(std::uint32_t)>& value_of_mask) {
  if (n < 1 || n > 16) throw std::invalid_argument("exact_banzhaf: n must be in [1, 16]");
  Vector phi(n, 0.0);
  const std::uint32_t total = 1u << n;
  std::vector<double> values(total);
  for (std::uint32_t mask = 0; mask < total; ++mask) values[mask] = value_of_mask(mask);
  for (int i = 0; i < n; ++i) {
    const std::uint32_t bit = 1u << i;
    double acc = 0.0;
    for (std::uint32_t mask = 0; mask < total; ++mask) {
      if (mask & bit) continue;
      acc += values[mask | bit] - values[mask];
    }
    phi[i] = acc / static_cast<double>(1u << (n - 1));
  }
  return phi;
}

}  // namespace robex
