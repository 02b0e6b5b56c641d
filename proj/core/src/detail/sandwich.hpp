#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>

#include "riskstop/types.hpp"

namespace riskstop::detail {

inline double sup_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Lower, upper and (optionally) seeded iterates of a monotone operator
// advanced in lockstep. The lower iterate starts at 1, the upper at `top`.
struct Sandwich {
  Vector lower;
  Vector upper;
  std::optional<Vector> seeded;
  std::size_t steps = 0;

  Sandwich(const Vector& top, const std::optional<Vector>& seed)
      : lower(Vector::Ones(top.size())), upper(top), seeded(seed) {}

  double gap() const { return sup_norm(upper - lower); }

  template <class Op>
  void advance(const Op& apply, std::size_t count) {
    for (std::size_t k = 0; k < count; ++k) {
      lower = apply(lower);
      upper = apply(upper);
      if (seeded) *seeded = apply(*seeded);
    }
    steps += count;
  }

  // Iterates until gap() <= tol, checking before every step.
  template <class Op>
  bool run_until(const Op& apply, double tol, std::size_t max_steps) {
    while (true) {
      if (gap() <= tol) return true;
      if (steps >= max_steps) return false;
      advance(apply, 1);
    }
  }
};

}  // namespace riskstop::detail
