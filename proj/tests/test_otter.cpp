#include <cmath>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "anasamp/oracle.hpp"
#include "anasamp/otter.hpp"
#include "anasamp/random.hpp"
#include "anasamp/sampler.hpp"
#include "anasamp/series.hpp"

using namespace anasamp;

namespace {

// The textbook quadratic formula for the lower root of c K^2 + (c-1) K + 1.
double lower_root(double z, unsigned i0) {
  const double c = std::pow(z, std::pow(2.0, i0 + 1)) / 2.0;
  return ((1.0 - c) - std::sqrt((1.0 - c) * (1.0 - c) - 4.0 * c)) / (2.0 * c);
}

double series_value(double z, std::size_t n) {
  return evaluate_series(series_coefficients(otter_spec(), "V", n), z);
}

constexpr double kRho = 0.4026975;

}  // namespace

TEST(SolveK, QuadraticRoot) {
  const double K = solve_K(0.4, 2);
  EXPECT_NEAR(K, lower_root(0.4, 2), 1e-9);
  EXPECT_NEAR(K, 1.000656, 1e-6);
  EXPECT_TRUE(tail_holds(0.4, 2, K));
  EXPECT_TRUE(tail_holds(0.4, 2, 1.01));
  EXPECT_NEAR(1.0 + 1.01 * std::pow(0.4, 8) * 2.01 / 2.0, 1.00067, 1e-5);
}

TEST(SolveK, SmallZ) {
  EXPECT_GT(solve_K(1e-3, 2), 1.0);
  EXPECT_LT(solve_K(1e-3, 2), 1.0 + 1e-9);
  EXPECT_GT(solve_K(0.0, 0), 1.0);
}

TEST(SolveK, ThresholdTooLow) {
  EXPECT_THROW(solve_K(0.99, 0), DomainError);
  EXPECT_THROW(solve_K(1.0, 3), DomainError);
}

TEST(Backsolve, ZeroZ) {
  for (double v : otter_backsolve(0.0, 5, 2.0)) EXPECT_EQ(v, 0.0);
}

TEST(Backsolve, MatchesSeries) {
  const auto v = otter_backsolve(0.3, 4, solve_K(0.3, 4));
  ASSERT_EQ(v.size(), 5u);
  EXPECT_NEAR(v[0], series_value(0.3, 60), 1e-6);
  EXPECT_NEAR(v[1], series_value(0.09, 60), 1e-9);
}

TEST(Backsolve, EqualityAtEveryLevel) {
  const double z = 0.38;
  const unsigned i0 = 6;
  const double K = solve_K(z, i0);
  const auto v = otter_backsolve(z, i0, K);
  for (unsigned i = 0; i <= i0; ++i) {
    const double zi = std::pow(z, std::pow(2.0, i));
    const double next = i < i0 ? v[i + 1] : K * std::pow(z, std::pow(2.0, i0 + 1));
    const double phi = zi + (v[i] * v[i] + next) / 2.0;
    EXPECT_GT(v[i], 0.0);
    EXPECT_LE(v[i], 1.0);
    EXPECT_NEAR(v[i], phi, 1e-15) << i;
  }
}

TEST(Backsolve, BeyondSingularity) {
  try {
    otter_backsolve(0.45, 8, solve_K(0.45, 8));
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("level 0"), std::string::npos) << e.what();
  }
}

TEST(Backsolve, ConvergesToSeries) {
  const double exact = series_value(0.95 * kRho, 600);
  EXPECT_NEAR(otter_backsolve(0.95 * kRho, 10, solve_K(0.95 * kRho, 10))[0], exact, 1e-8);
  for (double f : {0.5, 0.8, 0.9}) {
    const double z = f * kRho;
    EXPECT_NEAR(otter_backsolve(z, 10, solve_K(z, 10))[0], series_value(z, 600), 1e-8) << z;
  }
}

TEST(Backsolve, MoreLevelsLessValue) {
  // A higher threshold tightens v[0] towards V(z), hence less failure.
  const double z = 0.4;
  double previous = 2.0;
  for (unsigned i0 = 0; i0 <= 10; ++i0) {
    const double v0 = otter_backsolve(z, i0, solve_K(z, i0))[0];
    EXPECT_LE(v0, previous) << i0;
    previous = v0;
  }
  EXPECT_NEAR(previous, gf_value(otter_spec(), "V", z, 1e-15).value, 1e-12);
}

TEST(Params, Defaults) {
  EXPECT_EQ(default_i0(0.4), 8u);
  EXPECT_GE(default_i0(0.99), 12u);
  EXPECT_LT(std::pow(0.99, std::pow(2.0, default_i0(0.99) + 1)), 1e-12);
  const auto p = make_otter_params(0.4);
  EXPECT_EQ(p.v.size(), p.i0 + 1);
  EXPECT_GT(p.K, 1.0);
  EXPECT_TRUE(check_validity(otter_spec(), p.coordinates()).valid());
  EXPECT_THROW(make_otter_params(0.4, 2, 1.0), DomainError);
}

TEST(Singularity, Value) {
  const double rho = otter_singular_z();
  EXPECT_NEAR(rho, kRho, 1e-6);
  EXPECT_NEAR(otter_singular_z(12), rho, 1e-9);
  EXPECT_NO_THROW(make_otter_params(rho));
}

TEST(SampleOtter, FailuresOnlyAtTailLevels) {
  const auto p = make_otter_params(0.4, 1);
  const auto s = make_otter_sampler(p);
  Rng rng(1);
  int failures = 0;
  for (int i = 0; i < 100000; ++i) {
    auto o = s.sample_once(rng, 1000000);
    if (auto* f = std::get_if<Failure>(&o)) {
      ++failures;
      EXPECT_GT(f->level, p.i0);
    }
  }
  EXPECT_GT(failures, 0);
  for (unsigned i = 0; i <= p.i0; ++i) EXPECT_NEAR(s.success_probability(0, i), 1.0, 1e-14) << i;
}

TEST(SampleOtter, ConditionalSizeLaw) {
  // P(size n | accepted) = c_n z^n / V(z).
  const double z = 0.3;
  const auto p = make_otter_params(z, 6);
  const auto counts = series_coefficients(otter_spec(), "V", 8);
  const double V = series_value(z, 200);
  Rng rng(2);
  const int accepts = 200000;
  std::map<std::uint64_t, double> seen;
  int got = 0;
  while (got < accepts) {
    auto o = sample_otter(p, rng, 100000);
    if (auto* ok = std::get_if<Accepted>(&o)) {
      ++got;
      seen[ok->size] += 1;
    }
  }
  for (std::uint64_t n = 1; n <= 8; ++n) {
    const double q = counts[n].convert_to<double>() * std::pow(z, static_cast<double>(n)) / V;
    EXPECT_NEAR(seen[n] / accepts, q, 4 * std::sqrt(q * (1 - q) / accepts)) << n;
  }
}

TEST(SampleOtter, SizeOneIsLeaf) {
  const auto s = make_otter_sampler(make_otter_params(0.35));
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto r = sample_targeted(s, rng, 1, 0.0, 1000000);
    EXPECT_EQ(canonical_serialize(r.tree), "0:●");
  }
}

TEST(SampleOtter, TargetedNearSingularity) {
  const auto p = make_otter_params(otter_singular_z());
  const auto s = make_otter_sampler(p);
  Rng rng(4);
  for (int i = 0; i < 3; ++i) {
    const auto r = sample_targeted(s, rng, 2000, 0.1, 100000000);
    EXPECT_GE(r.size, 1800u);
    EXPECT_LE(r.size, 2200u);
    std::uint64_t mass = 0;
    for (const auto& [m, c] : symmetry_histogram(r.tree)) mass += m * c;
    EXPECT_EQ(mass, r.size);
  }
}
