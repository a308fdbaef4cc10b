#include "rdalloc/allocator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "rdalloc/errors.hpp"
#include "rdalloc/synthetic_oracle.hpp"
#include "test_support.hpp"

namespace rdalloc {
namespace {

using testing::relative_error;

const SurfaceParams kReferenceSurface(0.80, {72.45, 183.09}, {7.07e-4, 2.11e-2});

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

void expect_budget_exact(const Allocation& a) {
  EXPECT_LE(std::abs(sum(a.rates) - a.budget), 1e-9 * std::max(1.0, a.budget));
}

TEST(ClosedForm, SingleStreamTakesBudget) {
  const auto a = allocate_closed_form(SurfaceParams(0.1, {3.0}, {0.02}), 1500);
  ASSERT_EQ(a.rates.size(), 1u);
  EXPECT_NEAR(a.rates[0], 1500.0, 1e-9);
}

TEST(ClosedForm, SymmetricSplit) {
  const auto a = allocate_closed_form(SurfaceParams(0, {100, 100}, {0.01, 0.01}), 1000);
  EXPECT_NEAR(a.rates[0], 500.0, 1e-9);
  EXPECT_NEAR(a.rates[1], 500.0, 1e-9);
}

TEST(ClosedForm, ReferenceSurfaceAtBudget1500) {
  // Frozen from a 40-digit evaluation of the stationarity conditions.
  const auto a = allocate_closed_form(kReferenceSurface, 1500);
  EXPECT_NEAR(a.rates[0], 1165.3650490657694, 1e-8);
  EXPECT_NEAR(a.rates[1], 334.63495093423058, 1e-8);
  EXPECT_NEAR(a.predicted_distortion, 43.098922474452008, 1e-10);
  // Independent check: golden-section search along R_1 + R_2 = 1500.
  const double r1 = testing::golden_section(
      [](double t) { return eval_surface(kReferenceSurface, RateVector({t, 1500 - t})); }, 0,
      1500);
  EXPECT_NEAR(a.rates[0], r1, 1e-3);
}

TEST(ClosedForm, ExposesNegativeRates) {
  const auto a = allocate_closed_form(SurfaceParams(0, {1000, 1e-6}, {0.01, 0.01}), 100);
  EXPECT_LT(a.rates[1], 0.0);
  expect_budget_exact(a);
}

TEST(ClosedForm, RejectsNonFiniteBudget) {
  EXPECT_THROW(allocate_closed_form(kReferenceSurface, std::nan("")), DomainError);
}

TEST(ClosedForm, EqualSlopeAtStationarity) {
  testing::InstanceGenerator gen(31);
  for (int i = 0; i < 500; ++i) {
    const auto p = gen.surface(gen.pick(2, 6));
    const double budget = gen.uniform(10, 5000);
    const auto a = allocate_closed_form(p, budget);
    expect_budget_exact(a);
    const double ref = p.alpha(0) * p.beta(0) * std::exp2(-p.beta(0) * a.rates[0]);
    for (std::size_t j = 1; j < p.streams(); ++j) {
      const double s = p.alpha(j) * p.beta(j) * std::exp2(-p.beta(j) * a.rates[j]);
      EXPECT_LE(relative_error(s, ref), 1e-9);
    }
    ASSERT_TRUE(a.multiplier.has_value());
    EXPECT_LE(relative_error(*a.multiplier, ref * std::numbers::ln2), 1e-9);
  }
}

TEST(Clipped, MatchesClosedFormWhenNonnegative) {
  const auto c = allocate_closed_form(kReferenceSurface, 1500);
  const auto k = allocate_clipped(kReferenceSurface, 1500);
  EXPECT_EQ(c.rates, k.rates);
  EXPECT_EQ(k.method, Method::clipped);
}

TEST(Clipped, PinsWeakStreamAtZero) {
  const SurfaceParams p(0, {1000, 1e-6}, {0.01, 0.01});
  const auto a = allocate_clipped(p, 100);
  EXPECT_NEAR(a.rates[0], 100.0, 1e-9);
  EXPECT_EQ(a.rates[1], 0.0);
  const auto oracle = grid_search_allocation(p, 100, 0.01);
  EXPECT_NEAR(oracle.rates[0], a.rates[0], 0.01);
  EXPECT_LE(a.predicted_distortion, oracle.predicted_distortion + 1e-12);
}

TEST(Clipped, ZeroBudget) {
  testing::InstanceGenerator gen(37);
  for (int i = 0; i < 50; ++i) {
    const auto a = allocate_clipped(gen.surface(gen.pick(1, 5)), 0.0);
    for (double r : a.rates) EXPECT_EQ(r, 0.0);
  }
}

TEST(Clipped, NegativeBudgetThrows) {
  EXPECT_THROW(allocate_clipped(kReferenceSurface, -1.0), DomainError);
}

TEST(Clipped, KktAndFeasibility) {
  testing::InstanceGenerator gen(41);
  int clipped_cases = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto p = gen.surface(gen.pick(2, 6));
    const double budget = gen.uniform(10, 5000);
    const auto a = allocate_clipped(p, budget);
    expect_budget_exact(a);
    ASSERT_TRUE(a.multiplier.has_value());
    for (std::size_t j = 0; j < p.streams(); ++j) {
      EXPECT_GE(a.rates[j], 0.0);
      const double slope0 = p.alpha(j) * p.beta(j) * std::numbers::ln2;
      if (a.rates[j] == 0.0) {
        ++clipped_cases;
        EXPECT_LE(slope0, *a.multiplier * (1 + 1e-9));
      } else {
        const double s = slope0 * std::exp2(-p.beta(j) * a.rates[j]);
        EXPECT_LE(relative_error(s, *a.multiplier), 1e-9);
      }
    }
  }
  EXPECT_GT(clipped_cases, 0);
}

TEST(Clipped, FeasiblePerturbationsNeverHelp) {
  testing::InstanceGenerator gen(43);
  for (int i = 0; i < 300; ++i) {
    const auto p = gen.surface(gen.pick(2, 4));
    const double budget = gen.uniform(10, 5000);
    const auto a = allocate_clipped(p, budget);
    for (int k = 0; k < 20; ++k) {
      // Move mass between two streams, keeping both nonnegative.
      const std::size_t from = gen.pick(0, p.streams() - 1);
      std::size_t to = gen.pick(0, p.streams() - 2);
      if (to >= from) ++to;
      const double delta = gen.uniform(0, 1) * a.rates[from];
      auto r = a.rates;
      r[from] -= delta;
      r[to] += delta;
      const double d = eval_surface(p, RateVector(r));
      EXPECT_GE(d, a.predicted_distortion - 1e-12 * std::abs(a.predicted_distortion));
    }
  }
}

TEST(Clipped, DistortionNonincreasingInBudget) {
  testing::InstanceGenerator gen(47);
  for (int i = 0; i < 100; ++i) {
    const auto p = gen.surface(gen.pick(2, 4));
    double prev = allocate_clipped(p, 0.0).predicted_distortion;
    for (double b = 50; b <= 5000; b += 50) {
      const double d = allocate_clipped(p, b).predicted_distortion;
      EXPECT_LE(d, prev + 1e-12 * std::abs(prev));
      prev = d;
    }
  }
}

TEST(Clipped, AgreesWithGoldenSectionOnTwoStreams) {
  testing::InstanceGenerator gen(53);
  for (int i = 0; i < 200; ++i) {
    const auto p = gen.surface(2);
    const double budget = gen.uniform(10, 5000);
    const auto a = allocate_clipped(p, budget);
    const double t = testing::golden_section(
        [&](double x) { return eval_surface(p, RateVector({x, budget - x})); }, 0, budget);
    const double oracle = eval_surface(p, RateVector({t, budget - t}));
    EXPECT_LE(a.predicted_distortion, oracle + 1e-9 * std::abs(oracle));
  }
}

TEST(Equal, Splits) {
  EXPECT_EQ(allocate_equal(2, 1500).rates, (std::vector<double>{750, 750}));
  EXPECT_EQ(allocate_equal(1, 1000).rates, (std::vector<double>{1000}));
  EXPECT_EQ(allocate_equal(4, 0).rates, (std::vector<double>{0, 0, 0, 0}));
  EXPECT_THROW(allocate_equal(0, 10), DomainError);
}

TEST(Proportional, Splits) {
  EXPECT_EQ(allocate_proportional(std::vector<double>{3, 1}, 1000).rates,
            (std::vector<double>{750, 250}));
  EXPECT_EQ(allocate_proportional(std::vector<double>{1, 1, 1}, 900).rates,
            (std::vector<double>{300, 300, 300}));
  EXPECT_EQ(allocate_proportional(std::vector<double>{0, 5}, 200).rates,
            (std::vector<double>{0, 200}));
  EXPECT_THROW(allocate_proportional(std::vector<double>{0, 0}, 200), DomainError);
  EXPECT_THROW(allocate_proportional(std::vector<double>{1, -1}, 200), DomainError);
}

TEST(Baselines, BudgetExact) {
  testing::InstanceGenerator gen(59);
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = gen.pick(1, 6);
    const double budget = gen.uniform(0, 5000);
    std::vector<double> shares(n);
    for (auto& s : shares) s = gen.uniform(0, 1e6);
    expect_budget_exact(allocate_equal(n, budget));
    expect_budget_exact(allocate_proportional(shares, budget));
  }
}

TEST(CompareMethods, SymmetricSurfaceCollapses) {
  const SurfaceParams p(0.1, {5, 5}, {0.01, 0.01});
  const StreamStats stats{{100, 100}, {2.0, 2.0}};
  const auto rows = compare_methods(p, stats, 800);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    EXPECT_NEAR(r.allocation.rates[0], 400, 1e-9);
    EXPECT_NEAR(r.predicted_distortion, rows.front().predicted_distortion, 1e-12);
  }
}

TEST(CompareMethods, ProposedIsLowest) {
  testing::InstanceGenerator gen(61);
  for (int i = 0; i < 200; ++i) {
    const auto p = gen.surface(gen.pick(2, 4));
    StreamStats stats;
    for (std::size_t j = 0; j < p.streams(); ++j) {
      stats.element_counts.push_back(std::round(gen.uniform(1, 1e6)));
      stats.variances.push_back(gen.uniform(0, 5));
    }
    const auto rows = compare_methods(p, stats, gen.uniform(10, 5000));
    ASSERT_EQ(rows.front().method, Method::clipped);
    for (const auto& r : rows) {
      EXPECT_LE(rows.front().predicted_distortion,
                r.predicted_distortion + 1e-12 * std::abs(r.predicted_distortion));
    }
  }
}

TEST(CompareMethods, ReferenceSurfaceAtBudget1500) {
  const auto rows = compare_methods(kReferenceSurface, default_stream_stats(), 1500);
  EXPECT_EQ(rows[1].method, Method::equal);
  EXPECT_NEAR(rows[1].predicted_distortion, 50.970050491983946, 1e-9);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(rows[0].predicted_distortion, rows[i].predicted_distortion);
  }
}

TEST(CompareMethods, BadStats) {
  EXPECT_THROW(compare_methods(kReferenceSurface, {{1}, {1}}, 100), DomainError);
  EXPECT_THROW(compare_methods(kReferenceSurface, {{1, 1}, {0, 0}}, 100), DomainError);
  EXPECT_THROW(compare_methods(kReferenceSurface, {{0, 1}, {1, 1}}, 100), DomainError);
}

}  // namespace
}  // namespace rdalloc
