#include <cmath>

#include <gtest/gtest.h>

#include "riskstop/continuous.hpp"
#include "riskstop/markov.hpp"
#include "support.hpp"

using namespace riskstop;

namespace {

struct Ctmc {
  Matrix Q;
  CostSpec costs;
};

Ctmc two_state_ct() {
  Matrix Q(2, 2);
  Q << -1, 1, 0, 0;
  return {Q, CostSpec{Vector::Constant(2, 0.1), (Vector(2) << 2, 0).finished(), 0.1}};
}

Ctmc single_state(double g, double G) {
  return {Matrix::Zero(1, 1), CostSpec{Vector::Constant(1, g), Vector::Constant(1, G), g}};
}

bool ones(const ValueFunction& v) { return (v.values.array() == 1.0).all(); }

}  // namespace

TEST(DyadicGrid, StepsAndRefinement) {
  EXPECT_EQ((DyadicGrid{3, std::nullopt}.step()), 0.125);
  EXPECT_EQ((DyadicGrid{2, 4.0}.step()), 1.0);
  EXPECT_EQ((DyadicGrid{5, 1.0}.steps()), 32u);
  EXPECT_TRUE((DyadicGrid{5, 1.0}.refines(DyadicGrid{4, 1.0})));
  EXPECT_FALSE((DyadicGrid{4, 1.0}.refines(DyadicGrid{5, 1.0})));
  EXPECT_THROW((DyadicGrid{3, std::nullopt}.steps()), std::logic_error);
}

TEST(DyadicBackward, SingleStateCollapses) {
  const auto s = single_state(0.1, 1.0);
  for (int m : {0, 3, 8}) {
    EXPECT_NEAR(dyadic_backward(s.Q, s.costs, 20.0, m, Bound::Upper)[0], std::exp(1.0), 1e-15);
    EXPECT_NEAR(dyadic_backward(s.Q, s.costs, 20.0, m, Bound::Lower)[0], std::exp(1.0), 1e-15);
  }
}

TEST(DyadicBackward, ZeroHorizonReturnsSeed) {
  const auto c = two_state_ct();
  EXPECT_TRUE(ones(dyadic_backward(c.Q, c.costs, 0.0, 5, Bound::Lower)));
  EXPECT_EQ(dyadic_backward(c.Q, c.costs, 0.0, 5, Bound::Upper).values, c.costs.exp_G());
}

TEST(DyadicBackward, TwoStateLongHorizon) {
  const auto c = two_state_ct();
  const auto v = dyadic_backward(c.Q, c.costs, 40.0, 12, Bound::Upper);
  EXPECT_NEAR(v[0], 1.0 / 0.9, 2e-3);
  EXPECT_EQ(v[1], 1.0);
}

TEST(DyadicBackward, RejectsBadArguments) {
  const auto c = two_state_ct();
  EXPECT_THROW(dyadic_backward(c.Q, c.costs, -1.0, 3, Bound::Lower), std::invalid_argument);
  EXPECT_THROW(dyadic_backward(c.Q, c.costs, 1.0, 31, Bound::Lower), std::invalid_argument);
  EXPECT_THROW(dyadic_backward(c.Q, c.costs, 1e4, 0, Bound::Lower), Unrepresentable);
}

TEST(HorizonSweep, ZeroHorizon) {
  const auto c = two_state_ct();
  const auto s = horizon_sweep(c.Q, c.costs, {0.0}, 4);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_TRUE(ones(s[0].lower));
  EXPECT_EQ(s[0].upper.values, c.costs.exp_G());
  EXPECT_TRUE(horizon_sweep(c.Q, c.costs, {}, 4).empty());
}

TEST(HorizonSweep, TwoStateMonotoneColumns) {
  const auto c = two_state_ct();
  const auto s = horizon_sweep(c.Q, c.costs, {1, 2, 4, 8}, 10);
  ASSERT_EQ(s.size(), 4u);
  for (std::size_t i = 1; i < s.size(); ++i) {
    EXPECT_TRUE((s[i].lower.values.array() >= s[i - 1].lower.values.array()).all());
    EXPECT_TRUE((s[i].upper.values.array() <= s[i - 1].upper.values.array()).all());
  }
  EXPECT_LT(sup_distance(s.back().upper, s.back().lower), 1e-2);
  const auto oracle = ctmc_oracle(c.Q, c.costs);
  EXPECT_LE(s.back().lower[0], oracle.value[0] + 1e-3);
  EXPECT_GE(s.back().upper[0], oracle.value[0] - 1e-3);
}

TEST(HorizonSweep, SingleStateZeroTerminal) {
  const auto s = single_state(0.1, 0.0);
  for (const auto& hv : horizon_sweep(s.Q, s.costs, {0, 1, 5, 10}, 2)) {
    EXPECT_TRUE(ones(hv.lower));
    EXPECT_TRUE(ones(hv.upper));
  }
}

TEST(HorizonSweep, RejectsOffLatticeAndUnsorted) {
  const auto c = two_state_ct();
  EXPECT_THROW(horizon_sweep(c.Q, c.costs, {0.3}, 2), std::invalid_argument);
  EXPECT_THROW(horizon_sweep(c.Q, c.costs, {2, 1}, 2), std::invalid_argument);
}

TEST(SolveInfinite, TwoStateClosedForm) {
  const auto c = two_state_ct();
  const auto r = solve_infinite(c.Q, c.costs, {.tol = 1e-4});
  EXPECT_TRUE(r.report.converged);
  EXPECT_NEAR(r.report.value[0], 1.0 / 0.9, 1e-4);
  EXPECT_EQ(r.report.value[1], 1.0);
  EXPECT_EQ(r.report.region, StoppingRegion::from_indices(2, {1}));
  EXPECT_LE(r.horizon_gap, 1e-4);
  EXPECT_LE(r.grid_gap, 1e-4);
}

TEST(SolveInfinite, ZeroTerminalImmediate) {
  std::mt19937_64 rng(1);
  const auto m = riskstop::testing::with_zero_terminal(riskstop::testing::random_ctmc(rng, 4));
  const auto r = solve_infinite(m.kernel, m.costs);
  EXPECT_TRUE(ones(r.report.value));
  EXPECT_EQ(r.report.region, StoppingRegion::all(4));
  EXPECT_EQ(r.report.iterations, 0u);
}

TEST(SolveInfinite, FourStateAgainstOracle) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 4; ++k) {
    const auto m = riskstop::testing::random_ctmc(rng, 4);
    const auto r = solve_infinite(m.kernel, m.costs, {.tol = 1e-4});
    const auto o = ctmc_oracle(m.kernel, m.costs);
    EXPECT_LE(sup_distance(r.report.value, o.value), 5e-4);
  }
}

TEST(CtmcRegionValue, Examples) {
  const auto c = two_state_ct();
  const auto b = ctmc_region_value(c.Q, c.costs, StoppingRegion::from_indices(2, {1}));
  ASSERT_TRUE(b.finite());
  EXPECT_NEAR((*b.value)[0], 1.0 / 0.9, 1e-14);
  EXPECT_EQ((*b.value)[1], 1.0);

  const auto all = ctmc_region_value(c.Q, c.costs, StoppingRegion::all(2));
  ASSERT_TRUE(all.finite());
  EXPECT_EQ(all.value->values, c.costs.exp_G());

  const auto a = ctmc_region_value(c.Q, c.costs, StoppingRegion::from_indices(2, {0}));
  EXPECT_FALSE(a.finite());
  EXPECT_NEAR(a.spectral_bound, 0.1, 1e-12);
}

TEST(CtmcOracle, Examples) {
  const auto c = two_state_ct();
  const auto o = ctmc_oracle(c.Q, c.costs);
  EXPECT_NEAR(o.value[0], 1.0 / 0.9, 1e-14);
  EXPECT_EQ(o.region, StoppingRegion::from_indices(2, {1}));

  auto z = c.costs;
  z.G.setZero();
  const auto oz = ctmc_oracle(c.Q, z);
  EXPECT_TRUE(ones(oz.value));
  EXPECT_EQ(oz.region, StoppingRegion::all(2));
}

TEST(DefaultLadder, Arithmetic) {
  CostSpec costs{Vector::Constant(2, 0.1), (Vector(2) << 2, 0).finished(), 0.1};
  const auto l = default_ladder(costs, 0.05, 20);
  EXPECT_EQ(l.max_level(), 20);
  EXPECT_EQ(l.g[0], Vector::Constant(2, 0.05));
  EXPECT_DOUBLE_EQ(l.g[1](0), 0.075);
  EXPECT_DOUBLE_EQ(l.G[2](0), 1.5);
  EXPECT_EQ(l.G[2](1), 0.0);
  EXPECT_NEAR((l.g[20] - costs.g).cwiseAbs().maxCoeff(), 0.05 * std::ldexp(1.0, -20), 1e-16);
  EXPECT_THROW(default_ladder(costs, 0.2, 4), std::invalid_argument);
  EXPECT_THROW(default_ladder(costs, 0.0, 4), std::invalid_argument);
}

TEST(DefaultLadder, MonotoneRandom) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const auto m = riskstop::testing::random_ctmc(rng, 5);
    const auto l = default_ladder(m.costs, m.costs.c, 20);
    EXPECT_TRUE((l.g[0].array() >= m.costs.c).all());
    for (int i = 0; i < 20; ++i) {
      EXPECT_TRUE((l.g[i].array() <= l.g[i + 1].array()).all());
      EXPECT_TRUE((l.g[i + 1].array() <= m.costs.g.array()).all());
      EXPECT_TRUE((l.G[i].array() >= 0.0).all());
      EXPECT_GE((l.G[i] - m.costs.G).cwiseAbs().maxCoeff(),
                (l.G[i + 1] - m.costs.G).cwiseAbs().maxCoeff());
    }
  }
}

TEST(ApproximationLadder, TwoStateWithinTolerance) {
  const auto c = two_state_ct();
  const auto t = approximation_ladder(c.Q, c.costs, default_ladder(c.costs, c.costs.c, 12), 12,
                                      {.tol = 1e-3});
  ASSERT_EQ(t.rows.size(), 13u);
  for (std::size_t i = 0; i < t.rows.size(); ++i) EXPECT_EQ(t.rows[i].m, static_cast<int>(i));
  EXPECT_TRUE(t.complete);
  EXPECT_TRUE(t.final_within_tol);
  EXPECT_LE(t.rows.back().sup_gap, 1e-3);
  EXPECT_TRUE(t.tail_non_increasing(4));
  EXPECT_NEAR(t.reference[0], 1.0 / 0.9, 1e-4);
}

TEST(ApproximationLadder, ZeroTerminalGapsVanish) {
  auto c = two_state_ct();
  c.costs.G.setZero();
  const auto t = approximation_ladder(c.Q, c.costs, default_ladder(c.costs, 0.05, 6), 6);
  for (const auto& row : t.rows) EXPECT_EQ(row.sup_gap, 0.0);
  for (const auto& v : t.values) EXPECT_TRUE(ones(v));
}

TEST(ApproximationLadder, FourStateEventuallyMonotone) {
  std::mt19937_64 rng(4);
  const auto m = riskstop::testing::random_ctmc(rng, 4);
  const auto t = approximation_ladder(m.kernel, m.costs, default_ladder(m.costs, m.costs.c, 14),
                                      14, {.tol = 1e-3});
  EXPECT_TRUE(t.tail_non_increasing(4));
  EXPECT_TRUE(t.final_within_tol);
}

TEST(ContinuousProperties, RefinementHorizonAndBracket) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 10; ++k) {
    const auto m = riskstop::testing::random_ctmc(rng, riskstop::testing::pick_size(rng, 2, 6));
    const Vector top = m.costs.exp_G();
    ValueFunction previous;
    for (int level = 2; level <= 10; ++level) {
      const auto lo = dyadic_backward(m.kernel, m.costs, 2.0, level, Bound::Lower);
      const auto up = dyadic_backward(m.kernel, m.costs, 2.0, level, Bound::Upper);
      EXPECT_TRUE((lo.values.array() >= 1.0).all());
      EXPECT_TRUE((lo.values.array() <= up.values.array()).all());
      EXPECT_TRUE((up.values.array() <= top.array()).all());
      if (level > 2) EXPECT_TRUE(((lo.values - previous.values).array() <= 1e-12).all());
      previous = lo;
    }
    const auto sweep = horizon_sweep(m.kernel, m.costs, {0, 0.5, 1, 2, 4, 8}, 6);
    for (std::size_t i = 1; i < sweep.size(); ++i) {
      EXPECT_TRUE((sweep[i].lower.values.array() >= sweep[i - 1].lower.values.array()).all());
      EXPECT_TRUE((sweep[i].upper.values.array() <= sweep[i - 1].upper.values.array()).all());
      EXPECT_TRUE((sweep[i].lower.values.array() <= sweep[i].upper.values.array()).all());
    }
  }
}
