#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "riskstop/types.hpp"

namespace riskstop {

/// Row sums, entry signs and cost bounds are checked at this absolute
/// tolerance.
inline constexpr double kStructuralTolerance = 1e-12;

/// Every broken invariant of the model, in document order. Empty iff valid.
std::vector<Violation> validate_model(const MarkovModel& model);

/// Throws ModelError listing all violations when the model is invalid.
void require_valid(const MarkovModel& model);

/// exp(tQ) for a generator Q, by uniformization. Rejects t < 0, non-finite
/// entries and negative off-diagonal rates.
Matrix transition_matrix(const Matrix& generator, double t);

/// exp(t(Q + diag g)), the Feynman-Kac weighted semigroup of the chain:
/// entry (x, y) is E_x[exp(int_0^t g(X_s) ds); X_t = y]. Throws
/// Unrepresentable when t * max g exceeds kMaxExponent.
Matrix weighted_transition_matrix(const Matrix& generator, const Vector& g, double t);

inline constexpr double kMaxExponent = 600.0;

/// M h. Throws std::invalid_argument on a dimension mismatch.
Vector apply_kernel(const Matrix& kernel, const Vector& h);

/// Two-sided Collatz-Wielandt bounds on the Perron root of a nonnegative
/// matrix, tightened by shifted power iteration.
struct PerronBounds {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t iterations = 0;
  bool converged = false;  // upper - lower <= rel_tol * upper
};

/// When `decide_against` is set, iteration stops as soon as the bounds place
/// the root strictly on one side of that threshold.
PerronBounds perron_bounds(const Matrix& nonnegative, double rel_tol = 1e-12,
                           std::size_t max_iter = 20000,
                           std::optional<double> decide_against = std::nullopt);

/// Spectral radius of a nonnegative matrix. Power iteration first; falls back
/// to a dense eigensolve when the bounds do not close (reducible matrices).
double spectral_radius(const Matrix& nonnegative);

/// Largest real part of the spectrum of a Metzler matrix (nonnegative off the
/// diagonal), i.e. its Perron eigenvalue.
double spectral_abscissa(const Matrix& metzler);

}  // namespace riskstop
