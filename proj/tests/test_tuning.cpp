#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "anasamp/oracle.hpp"
#include "anasamp/spec.hpp"
#include "anasamp/tuning.hpp"

using namespace anasamp;

namespace {

// Brute-force maximum of y/Phi(y) on a grid over (0, hi].
double grid_max(const SimpleTreeFamily& f, double hi, double step) {
  double best = 0.0;
  for (double y = step; y <= hi; y += step) best = std::max(best, y / f.phi(y));
  return best;
}

bool region_nonempty(const SimpleTreeFamily& f, double z, double y_hi) {
  const int n = 200000;
  for (int i = 1; i <= n; ++i) {
    const double y = y_hi * i / n;
    if (y >= z * f.phi(y)) return true;
  }
  return false;
}

}  // namespace

TEST(Tune, Motzkin) {
  const auto r = tune_simply_generated(SimpleTreeFamily({0, 1, 2}));
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.z_star, 1.0 / 3.0, 1e-9);
  EXPECT_NEAR(r.y_star, 1.0, 1e-6);
  EXPECT_EQ(r.oracle_calls, 0u);
  EXPECT_GT(r.function_evals, 0u);
}

TEST(Tune, Binary) {
  const auto r = tune_simply_generated(SimpleTreeFamily({0, 2}));
  EXPECT_NEAR(r.z_star, 0.5, 1e-9);
  EXPECT_NEAR(r.y_star, 1.0, 1e-6);
}

TEST(Tune, Ternary) {
  const SimpleTreeFamily f({0, 3});
  const auto r = tune_simply_generated(f);
  EXPECT_NEAR(r.y_star, std::pow(2.0, -1.0 / 3.0), 1e-6);
  EXPECT_NEAR(r.z_star, 0.52913, 1e-5);
  EXPECT_NEAR(r.z_star, grid_max(f, 4.0, 1e-5), 1e-9);
}

TEST(Tune, Multiset) {
  // Two kinds of binary node: Phi = 1 + 2y^2, maximum at y = 1/sqrt 2.
  const SimpleTreeFamily f({2, 0, 2});
  const auto r = tune_simply_generated(f);
  EXPECT_NEAR(r.y_star, 1.0 / std::sqrt(2.0), 1e-6);
  EXPECT_NEAR(r.z_star, 1.0 / (2.0 * std::sqrt(2.0)), 1e-9);
}

TEST(Tune, MaximumOutsideUnitInterval) {
  // Phi = 2 + y^2 peaks at y = sqrt 2; Phi = 3 + y^2 at sqrt 3.
  const auto r = tune_simply_generated(SimpleTreeFamily({0, 0, 2}));
  EXPECT_NEAR(r.y_star, std::sqrt(2.0), 1e-6);
  EXPECT_NEAR(r.z_star, std::sqrt(2.0) / 4.0, 1e-9);
  const auto r3 = tune_simply_generated(SimpleTreeFamily({0, 0, 0, 2}));
  EXPECT_NEAR(r3.y_star, std::sqrt(3.0), 1e-6);
}

TEST(Tune, Errors) {
  EXPECT_THROW(tune_simply_generated(SimpleTreeFamily({0, 1})), DomainError);
  EXPECT_THROW(tune_simply_generated(SimpleTreeFamily({0})), DomainError);
  EXPECT_THROW(tune_simply_generated(SimpleTreeFamily({1, 2})), DomainError);
  EXPECT_THROW(tune_simply_generated(SimpleTreeFamily({})), DomainError);
}

TEST(Tune, StationaryPoint) {
  const double tol = 1e-6;
  for (const auto& omega : std::vector<std::vector<unsigned>>{{0, 1, 2}, {0, 2}, {0, 3}, {0, 1, 1, 4}, {0, 0, 2, 3}}) {
    const SimpleTreeFamily f(omega);
    const auto r = tune_simply_generated(f, tol);
    EXPECT_LT(std::abs(f.phi(r.y_star) - r.y_star * f.phi_prime(r.y_star)), tol * f.phi(r.y_star));
    EXPECT_NEAR(r.z_star * f.phi(r.y_star), r.y_star, 1e-12);
    EXPECT_GT(r.z_star, 0.0);
    EXPECT_LT(r.z_star, 1.0);
  }
}

TEST(Tune, RegionGeometry) {
  for (const auto& omega : std::vector<std::vector<unsigned>>{{0, 1, 2}, {0, 2}, {0, 3}, {0, 2, 2, 5}}) {
    const SimpleTreeFamily f(omega);
    const auto r = tune_simply_generated(f);
    EXPECT_FALSE(region_nonempty(f, r.z_star * (1 + 1e-3), 10 * r.y_star));
    EXPECT_TRUE(region_nonempty(f, r.z_star * (1 - 1e-3), 10 * r.y_star));
  }
}

TEST(Tune, FamilySpec) {
  EXPECT_EQ(to_string(SimpleTreeFamily({0, 1, 2}).to_spec()), "Y = atom * (eps + Y + Y * Y);\n");
}

TEST(Bisection, BinaryTrees) {
  const auto r = find_singularity_bisection(parse_spec("B = atom + atom*B*B;"), "B", 0.9, 1e-9);
  EXPECT_NEAR(r.rho, 0.5, 1e-7);
  EXPECT_LE(r.lo, r.hi);
  EXPECT_GT(r.oracle_calls, 20u);
}

TEST(Bisection, Motzkin) {
  const auto r = find_singularity_bisection(parse_spec("Y = atom*(E + Y + Y*Y); E = eps;"), "Y", 0.9, 1e-9);
  EXPECT_NEAR(r.rho, 1.0 / 3.0, 1e-7);
}

TEST(Bisection, Otter) {
  const auto r = find_singularity_bisection(parse_spec("V = atom + mset2(V);"), "V", 0.9, 1e-9);
  EXPECT_NEAR(r.rho, 0.40270, 1e-5);
}

TEST(Bisection, BadBracket) {
  EXPECT_THROW(find_singularity_bisection(parse_spec("B = atom + atom*B*B;"), "B", 0.4, 1e-9), DomainError);
}

TEST(Bisection, AgreesWithTuner) {
  const double tol = 1e-6;
  for (const auto& omega : std::vector<std::vector<unsigned>>{{0, 1, 2}, {0, 2}, {0, 3}, {0, 2, 2}, {0, 1, 3}}) {
    const SimpleTreeFamily f(omega);
    const auto tuned = tune_simply_generated(f, tol);
    const auto bisected = find_singularity_bisection(f.to_spec(), "Y", 0.99, tol);
    EXPECT_LT(std::abs(bisected.rho - tuned.z_star), 10 * tol) << to_string(f.to_spec());
    EXPECT_GT(bisected.oracle_calls, tuned.oracle_calls);
  }
}
