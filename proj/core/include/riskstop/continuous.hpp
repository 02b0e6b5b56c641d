#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "riskstop/types.hpp"

namespace riskstop {

// Continuous-time stopping of a finite CTMC with generator Q:
//
//   w(x) = inf_tau E_x[exp(int_0^tau g(X_s) ds + G(X_tau))],
//
// computed through stopping problems restricted to dyadic time lattices,
// where one lattice step of length h acts as v -> min(P^g_h v, e^G) with
// P^g_h = exp(h (Q + diag g)).

enum class Bound { Lower, Upper };

/// Dyadic lattice of level m. Without a horizon the step is 2^-m; with a
/// horizon T the lattice is {0, T/2^m, ..., T}.
struct DyadicGrid {
  int level = 0;
  std::optional<double> horizon;

  double step() const;
  /// Number of steps covering the horizon (2^level). Requires a horizon.
  std::size_t steps() const;
  /// True when every point of `coarser` is a point of this lattice.
  bool refines(const DyadicGrid& coarser) const;
};

inline constexpr int kMaxDyadicLevel = 30;

/// Backward recursion over the lattice {0, T/2^m, ..., T}: starts from 1
/// (Lower: no terminal cost at T) or e^G (Upper: forced stop at T) and
/// applies v -> min(P^g_{T/2^m} v, e^G) 2^m times. T = 0 returns the start.
ValueFunction dyadic_backward(const Matrix& generator, const CostSpec& costs, double T, int m,
                              Bound variant);

struct HorizonValue {
  double T = 0.0;
  ValueFunction lower;
  ValueFunction upper;
};

/// Lower and upper horizon values on the level-m lattice of step 2^-m, in
/// one forward pass. Horizons must be ascending multiples of 2^-m.
std::vector<HorizonValue> horizon_sweep(const Matrix& generator, const CostSpec& costs,
                                        const std::vector<double>& horizons, int m);

struct InfiniteOptions {
  double tol = 1e-6;
  int m_max = 20;
  int m_start = 4;
  double T_start = 1.0;
  double T_max = 4096.0;
};

struct InfiniteReport {
  SolveReport report;
  int level = 0;
  double horizon = 0.0;
  double horizon_gap = 0.0;  // upper - lower at (horizon, level)
  double grid_gap = 0.0;     // upper at level vs level - 1, same horizon
};

/// Infinite-horizon value. The horizon doubles while the horizon gap
/// dominates and the level increases while the grid gap dominates, until both
/// are <= tol. The reported value is the level's upper iterate.
InfiniteReport solve_infinite(const Matrix& generator, const CostSpec& costs,
                              const InfiniteOptions& options = {});

/// Expected cost of stopping at the first visit to `region`: v = e^G on the
/// region and (Q + diag g) v = 0 off it. Infinite unless the spectral
/// abscissa of the continuation block is < -kInfiniteMargin.
RegionValue ctmc_region_value(const Matrix& generator, const CostSpec& costs,
                              const StoppingRegion& region);

OracleResult ctmc_oracle(const Matrix& generator, const CostSpec& costs, std::size_t cap = 12);

/// Cost sequences g_m increasing to g and G_m converging to G, indexed by
/// level 0..m_max.
struct LadderSpec {
  std::vector<Vector> g;
  std::vector<Vector> G;
  double c0 = 0.0;

  int max_level() const { return static_cast<int>(g.size()) - 1; }
};

/// g_m = g - (g - c0) 2^-m and G_m = G (1 - 2^-m). Requires 0 < c0 <= min g.
LadderSpec default_ladder(const CostSpec& costs, double c0, int m_max);

struct LadderRow {
  int m = 0;
  double delta = 0.0;
  double sup_gap = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct LadderOptions {
  double tol = 1e-3;
  /// Sandwich tolerance of each level's fixed-point solve.
  double inner_tol = 1e-7;
  /// Tolerance of the solve_infinite reference; defaults to tol / 100.
  std::optional<double> reference_tol;
  int reference_m_max = 22;
  double T_max = 4096.0;
};

struct LadderTable {
  std::vector<LadderRow> rows;  // ascending m
  std::vector<ValueFunction> values;
  ValueFunction reference;
  InfiniteReport reference_report;
  bool complete = false;          // every level's inner solve converged
  bool final_within_tol = false;  // last sup_gap <= tol

  /// True when sup_gap is non-increasing over the last `count` rows.
  bool tail_non_increasing(std::size_t count = 4) const;
};

/// For each level m: w_m is the fixed point of v -> min(P^{g_m}_{2^-m} v, e^{G_m});
/// rows hold ||w_m - w||_inf against the solve_infinite reference w.
LadderTable approximation_ladder(const Matrix& generator, const CostSpec& costs,
                                 const LadderSpec& ladder, int m_max,
                                 const LadderOptions& options = {});

}  // namespace riskstop
