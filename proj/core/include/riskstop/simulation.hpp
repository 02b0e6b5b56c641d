#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "riskstop/types.hpp"

namespace riskstop {

/// Counter-based generator: output k of stream (seed, stream) is a SplitMix64
/// finalisation of key + k * golden, where key mixes seed and stream. Streams
/// are independent of each other and of evaluation order.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on the open interval (0, 1).
  double uniform_open();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

struct PathSample {
  std::vector<std::size_t> states;
  std::vector<double> times;  // entry epoch of each state (step index in discrete time)
  std::optional<std::size_t> stopped_at;  // index of the first visit to the region
  double end_time = 0.0;                   // stopping epoch, or the truncation horizon

  bool truncated() const { return !stopped_at.has_value(); }
};

/// Runs the chain from x0 until it enters `region` or `horizon` steps have
/// elapsed. Transitions are drawn by inverse CDF over each row in label order.
PathSample sample_dtmc_path(const Matrix& P, std::size_t x0, const StoppingRegion& region,
                            std::size_t horizon, std::uint64_t seed, std::uint64_t stream = 0);

/// Exponential holding times at rate -Q(x,x); jumps proportional to the
/// off-diagonal row. Absorbing states outside the region hold until T_trunc.
PathSample sample_ctmc_path(const Matrix& Q, std::size_t x0, const StoppingRegion& region,
                            double T_trunc, std::uint64_t seed, std::uint64_t stream = 0);

/// exp(accrued running cost + G(final state)) along a sampled path.
double path_payoff(const PathSample& path, const CostSpec& costs, TimeMode time);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  double truncated_fraction = 0.0;

  /// More than 1% of paths reached the truncation horizon.
  bool truncation_warning() const { return truncated_fraction > 0.01; }
};

struct McOptions {
  std::size_t n_paths = 100000;
  std::uint64_t seed = 1;
  /// Steps (discrete) or time (continuous); default_truncation() when unset.
  std::optional<double> truncation;
};

/// Horizon t with e^{||G||} e^{-c t} < stat_tol, from P[tau > t] <= e^{||G||} e^{-ct}
/// for the optimal hitting time. Rounded up to whole steps in discrete time.
double default_truncation(const MarkovModel& model, double stat_tol = 1e-6);

/// Sample mean and standard error of the hitting-policy payoff from x0.
/// Truncated paths pay the accrued cost times e^{G} at the truncation state.
/// Path i uses stream i, so results do not depend on the thread count.
McEstimate evaluate_region_policy(const MarkovModel& model, const StoppingRegion& region,
                                  std::size_t x0, const McOptions& options = {});

struct IntegrabilityResult {
  McEstimate estimate;  // of E[e^{c tau}]
  double bound = 0.0;   // e^{G(x0)}
  bool violated = false;  // mean - 4 std_error > bound
};

/// Checks E_x0[e^{c tau}] <= e^{G(x0)} for the hitting time of `region`.
IntegrabilityResult integrability_check(const MarkovModel& model, const StoppingRegion& region,
                                        std::size_t x0, const McOptions& options = {});

}  // namespace riskstop
