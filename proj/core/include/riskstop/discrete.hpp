#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "riskstop/types.hpp"

namespace riskstop {

// Discrete-time risk-sensitive stopping of the chain X_0, X_1, ...:
//
//   w(x) = inf_tau E_x[exp(g(X_0) + ... + g(X_{tau-1}) + G(X_tau))].
//
// The Bellman operator is S h = min(e^g * P h, e^G). Its iterates from 1
// increase to w and its iterates from e^G decrease to w.

/// min(e^{g(x)} (P h)(x), e^{G(x)}) for every state x. Throws
/// std::invalid_argument on a dimension mismatch or a nonpositive entry of h.
ValueFunction bellman_apply(const Matrix& P, const CostSpec& costs, const ValueFunction& h);

/// Finite-horizon values without the terminal cost at the horizon:
/// [1, S 1, ..., S^n 1], non-decreasing.
std::vector<ValueFunction> iterate_lower(const MarkovModel& model, std::size_t n);

/// Finite-horizon values with forced stopping at the horizon:
/// [e^G, S e^G, ..., S^n e^G], non-increasing.
std::vector<ValueFunction> iterate_upper(const MarkovModel& model, std::size_t n);

struct FixedPointOptions {
  double tol = 1e-10;
  std::size_t max_iter = 10'000'000;
  /// Extra iterate started here; must satisfy 1 <= seed <= e^G. When set the
  /// report carries this iterate, otherwise the upper one.
  std::optional<ValueFunction> seed;
};

/// Runs the lower, upper and optional seeded iterations in lockstep until the
/// sup-norm sandwich gap is <= tol. A report with converged == false carries
/// the last iterate when max_iter runs out first.
SolveReport solve_fixed_point(const MarkovModel& model, const FixedPointOptions& options = {});

/// {x : w(x) >= e^{G(x)} - tol}. Throws std::runtime_error when empty.
StoppingRegion extract_region(const ValueFunction& w, const CostSpec& costs, double tol);

/// Expected cost of stopping at the first visit to `region`: v = e^G on the
/// region and v = e^g P v off it. Infinite when the Perron root of the
/// continuation block of diag(e^g) P is >= 1 - kInfiniteMargin.
RegionValue region_value(const MarkovModel& model, const StoppingRegion& region);

inline constexpr double kInfiniteMargin = 1e-9;
inline constexpr std::size_t kDefaultOracleCap = 12;

/// Pointwise minimum of region_value over all 2^n regions, with the smallest
/// (bitmask order) region attaining it.
OracleResult oracle_enumerate(const MarkovModel& model, std::size_t cap = kDefaultOracleCap);

}  // namespace riskstop
