#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "robex/attack.hpp"
#include "robex/feature_set.hpp"
#include "robex/linear_oracle.hpp"

using namespace robex;

namespace {

// w = (3, 4), b = 0, x = (1, 1): margin 7, full distance 7/5.
const Vector kX = {1.0, 1.0};

Model boundary_model() { return oracles::hyperplane_model({3.0, 4.0}, 0.0); }

FeatureSet random_subset(int d, Rng& rng) {
  std::vector<int> ids;
  for (int i = 0; i < d; ++i) {
    if (rng.bernoulli(0.4)) ids.push_back(i);
  }
  if (ids.empty()) ids.push_back(static_cast<int>(rng.uniform_int(d)));
  return FeatureSet(std::move(ids), d);
}

}  // namespace

TEST_CASE("feature sets validate indices and complement exactly", "[attack][featureset]") {
  REQUIRE_THROWS_AS(FeatureSet({0, 0}, 3), std::invalid_argument);
  REQUIRE_THROWS_AS(FeatureSet({3}, 3), std::invalid_argument);
  REQUIRE_THROWS_AS(FeatureSet({-1}, 3), std::invalid_argument);

  FeatureSet s({4, 1}, 5);
  REQUIRE(s.indices() == std::vector<int>{1, 4});
  REQUIRE(s.complement().indices() == std::vector<int>{0, 2, 3});
  REQUIRE(s.complement().complement().indices() == s.indices());
  REQUIRE(FeatureSet::full(4).size() == 4);
  REQUIRE(FeatureSet::empty_set(4).complement().size() == 4);
}

TEST_CASE("pgd at radius zero only reports pre-existing success", "[attack]") {
  Model m = boundary_model();
  AttackConfig cfg;
  AttackResult keep = pgd_fixed_eps(m, kX, FeatureSet::full(2), AttackGoal::untargeted(1), 0.0, cfg);
  REQUIRE_FALSE(keep.success);
  REQUIRE(keep.delta == Vector{0.0, 0.0});

  // Goal already satisfied at x: class 1 is predicted, so "not 0" holds.
  AttackResult done = pgd_fixed_eps(m, kX, FeatureSet::full(2), AttackGoal::untargeted(0), 0.0, cfg);
  REQUIRE(done.success);
  REQUIRE(done.norm == 0.0);
}

TEST_CASE("pgd succeeds exactly when the radius covers the boundary distance", "[attack]") {
  Model m = boundary_model();
  AttackConfig cfg;
  AttackResult hit = pgd_fixed_eps(m, kX, FeatureSet::full(2), AttackGoal::untargeted(1), 1.5, cfg);
  REQUIRE(hit.success);  // 1.5 > 7/5
  REQUIRE(hit.achieved_class == 0);
  REQUIRE(hit.norm <= 1.5 + 1e-12);

  AttackResult miss = pgd_fixed_eps(m, kX, FeatureSet::full(2), AttackGoal::untargeted(1), 1.3, cfg);
  REQUIRE_FALSE(miss.success);  // 1.3 < 7/5
}

TEST_CASE("pgd validates inputs", "[attack]") {
  Model m = boundary_model();
  AttackConfig cfg;
  REQUIRE_THROWS_AS(pgd_fixed_eps(m, kX, FeatureSet::empty_set(2), AttackGoal::untargeted(1), 1.0, cfg),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(pgd_fixed_eps(m, kX, FeatureSet::full(2), AttackGoal::untargeted(1), -1.0, cfg),
                    std::invalid_argument);
}

TEST_CASE("min_perturbation approaches closed-form hyperplane distances", "[attack]") {
  Model m = boundary_model();
  AttackConfig cfg;
  const AttackGoal goal = AttackGoal::untargeted(1);

  AttackResult full = min_perturbation(m, kX, FeatureSet::full(2), goal, cfg);
  REQUIRE(full.success);
  REQUIRE(full.norm >= 1.4 - 1e-6);
  REQUIRE(full.norm <= 1.4 * 1.02);

  AttackResult first = min_perturbation(m, kX, FeatureSet({0}, 2), goal, cfg);
  REQUIRE(first.success);
  REQUIRE(first.norm >= 7.0 / 3.0 - 1e-6);
  REQUIRE(first.norm <= 7.0 / 3.0 * 1.02);
}

TEST_CASE("min_perturbation caps out on an unreachable subspace", "[attack]") {
  Model m = oracles::hyperplane_model({3.0, 4.0, 0.0}, 0.0);
  Vector x = {1.0, 1.0, 1.0};
  AttackConfig cfg;
  AttackResult r = min_perturbation(m, x, FeatureSet({2}, 3), AttackGoal::untargeted(1), cfg);
  REQUIRE_FALSE(r.success);
  REQUIRE(r.capped);
  REQUIRE(r.norm == cfg.resolved_eps_cap(3));
}

TEST_CASE("returned perturbations are bitwise zero off the feature set", "[attack]") {
  Rng rng(77);
  for (int rep = 0; rep < 10; ++rep) {
    Model m = oracles::random_model({6, 10, 3}, rng);
    Vector x(6);
    for (double& v : x) v = rng.uniform(0.0, 1.0);
    FeatureSet s = random_subset(6, rng);
    const int y = predict(m, x);
    AttackConfig cfg;
    cfg.num_steps = 40;
    cfg.binsearch_iters = 6;
    AttackResult r = min_perturbation(m, x, s, AttackGoal::untargeted(y), cfg);
    for (int i = 0; i < 6; ++i) {
      if (!s.contains(i)) REQUIRE(r.delta[i] == 0.0);
    }
    if (r.success) {
      Vector moved = x;
      for (int i = 0; i < 6; ++i) moved[i] += r.delta[i];
      REQUIRE(predict(m, moved) != y);
      REQUIRE(r.norm == Catch::Approx(l2_norm(r.delta)).margin(1e-9));
    }
  }
}

TEST_CASE("clip box keeps perturbed points inside the box", "[attack]") {
  Rng rng(78);
  Model m = oracles::random_model({4, 8, 2}, rng);
  Vector x = {0.1, 0.9, 0.5, 0.0};
  AttackConfig cfg;
  cfg.clip_box = std::make_pair(0.0, 1.0);
  const int y = predict(m, x);
  AttackResult r = min_perturbation(m, x, FeatureSet::full(4), AttackGoal::untargeted(y), cfg);
  if (r.success) {
    for (int i = 0; i < 4; ++i) {
      REQUIRE(x[i] + r.delta[i] >= 0.0);
      REQUIRE(x[i] + r.delta[i] <= 1.0);
    }
  }
}

TEST_CASE("attacks are deterministic", "[attack]") {
  Rng rng(79);
  Model m = oracles::random_model({5, 9, 4}, rng);
  Vector x(5);
  for (double& v : x) v = rng.uniform(0.0, 1.0);
  const int y = predict(m, x);
  AttackConfig cfg;
  cfg.num_steps = 30;
  AttackResult a = min_perturbation(m, x, FeatureSet::full(5), AttackGoal::untargeted(y), cfg);
  AttackResult b = min_perturbation(m, x, FeatureSet::full(5), AttackGoal::untargeted(y), cfg);
  REQUIRE(a.delta == b.delta);
  REQUIRE(a.norm == b.norm);
  REQUIRE(a.success == b.success);
}

TEST_CASE("linear oracle reproduces closed-form distances", "[attack][oracle]") {
  std::vector<Vector> rows = {{0.0, 0.0}, {3.0, 4.0}};
  Vector bias = {0.0, 0.0};

  auto full = linear_min_perturbation(rows, bias, kX, FeatureSet::full(2), AttackGoal::untargeted(1));
  REQUIRE(full.has_value());
  REQUIRE(*full == Catch::Approx(1.4).margin(1e-12));

  auto second = linear_min_perturbation(rows, bias, kX, FeatureSet({1}, 2), AttackGoal::untargeted(1));
  REQUIRE(*second == Catch::Approx(1.75).margin(1e-12));

  // y is already not the argmax: distance 0.
  auto already = linear_min_perturbation(rows, bias, kX, FeatureSet::full(2), AttackGoal::untargeted(0));
  REQUIRE(*already == 0.0);

  // No weight support on S.
  std::vector<Vector> rows3 = {{0.0, 0.0, 0.0}, {3.0, 4.0, 0.0}};
  Vector bias3 = {0.0, 0.0};
  auto infeasible = linear_min_perturbation(rows3, bias3, {1.0, 1.0, 1.0}, FeatureSet({2}, 3),
                                            AttackGoal::untargeted(1));
  REQUIRE_FALSE(infeasible.has_value());
}

TEST_CASE("targeted linear oracle minimizes over the halfspace intersection", "[attack][oracle]") {
  // z = (0, x0, x1) at x = (-1, -0.5): class 0 wins. Making class 1 the argmax
  // needs x0 >= 0 (distance 1) and x0 >= x1 (already true); the single-facet
  // projection is feasible, so the exact distance is 1.
  std::vector<Vector> rows = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  Vector bias = {0.0, 0.0, 0.0};
  Vector x = {-1.0, -0.5};
  auto dist = linear_min_perturbation(rows, bias, x, FeatureSet::full(2), AttackGoal::targeted(1));
  REQUIRE(dist.has_value());
  REQUIRE(*dist == Catch::Approx(1.0).margin(1e-9));

  // Corner case where both constraints are active at the optimum: target 2
  // must beat class 1 near the diagonal.
  Vector x2 = {0.5, -1.0};
  auto dist2 = linear_min_perturbation(rows, bias, x2, FeatureSet::full(2), AttackGoal::targeted(2));
  REQUIRE(dist2.has_value());
  Vector z = {0.0, x2[0], x2[1]};
  // Verified by brute force below.
  double brute = 1e9;
  for (double dx = -3; dx <= 3; dx += 0.002) {
    for (double dy = -3; dy <= 3; dy += 0.002) {
      const double z1 = x2[0] + dx;
      const double z2 = x2[1] + dy;
      if (z2 >= 0.0 && z2 >= z1) brute = std::min(brute, std::hypot(dx, dy));
    }
  }
  REQUIRE(*dist2 == Catch::Approx(brute).margin(5e-3));
}

TEST_CASE("oracle distances shrink as the feature set grows", "[attack][oracle]") {
  Rng rng(101);
  for (int rep = 0; rep < 25; ++rep) {
    oracles::RandomLinear lin = oracles::random_linear(4, 8, rng);
    Vector x(8);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    const int y = argmax_index(forward(lin.model, x));
    FeatureSet small = random_subset(8, rng);
    std::vector<int> grown = small.indices();
    for (int i = 0; i < 8; ++i) {
      if (!small.contains(i) && rng.bernoulli(0.5)) grown.push_back(i);
    }
    FeatureSet big(std::move(grown), 8);
    auto dsmall = linear_min_perturbation(lin.rows, lin.bias, x, small, AttackGoal::untargeted(y));
    auto dbig = linear_min_perturbation(lin.rows, lin.bias, x, big, AttackGoal::untargeted(y));
    if (dsmall && dbig) REQUIRE(*dsmall >= *dbig - 1e-12);
    if (!dsmall) continue;  // infeasible small sets say nothing about big ones
  }
}

TEST_CASE("pgd search stays within two percent of the linear oracle", "[attack][oracle]") {
  Rng rng(103);
  AttackConfig cfg;
  int checked = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const int num_classes = rep % 2 == 0 ? 2 : 5;
    oracles::RandomLinear lin = oracles::random_linear(num_classes, 20, rng);
    Vector x(20);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    const int y = argmax_index(forward(lin.model, x));
    FeatureSet s = random_subset(20, rng);
    auto oracle = linear_min_perturbation(lin.rows, lin.bias, x, s, AttackGoal::untargeted(y));
    if (!oracle) continue;
    AttackResult r = min_perturbation(lin.model, x, s, AttackGoal::untargeted(y), cfg);
    REQUIRE(r.success);
    REQUIRE(r.norm >= *oracle - 1e-6);
    REQUIRE(r.norm <= *oracle * 1.02);
    ++checked;
  }
  REQUIRE(checked >= 15);
}

TEST_CASE("targeted pgd tracks the targeted oracle", "[attack][oracle]") {
  Rng rng(107);
  AttackConfig cfg;
  for (int rep = 0; rep < 10; ++rep) {
    oracles::RandomLinear lin = oracles::random_linear(3, 10, rng);
    Vector x(10);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    const int y = argmax_index(forward(lin.model, x));
    const int t = (y + 1) % 3;
    auto oracle =
        linear_min_perturbation(lin.rows, lin.bias, x, FeatureSet::full(10), AttackGoal::targeted(t));
    REQUIRE(oracle.has_value());
    AttackResult r = min_perturbation(lin.model, x, FeatureSet::full(10), AttackGoal::targeted(t), cfg);
    REQUIRE(r.success);
    REQUIRE(r.achieved_class == t);
    REQUIRE(r.norm >= *oracle - 1e-6);
    REQUIRE(r.norm <= *oracle * 1.02 + 1e-9);
  }
}
