#pragma once

#include <cstddef>
#include <algorithm>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "riskstop/parallel.hpp"
#include "riskstop/types.hpp"

namespace riskstop::detail {

inline constexpr std::size_t kHardOracleCap = 24;

// Evaluates every region (bitmask order) in parallel, then merges
// sequentially: pointwise minimum over finite values, and the smallest mask
// whose value attains that minimum to within `tie_tol` (relative to the
// largest value).
inline OracleResult enumerate_regions(std::size_t n, std::size_t cap, double tie_tol,
                                      const std::function<RegionValue(const StoppingRegion&)>& eval,
                                      const char* who) {
  if (cap > kHardOracleCap) cap = kHardOracleCap;
  if (n > cap)
    throw std::invalid_argument(std::string(who) + ": " + std::to_string(n) +
                                " states exceed the enumeration cap of " + std::to_string(cap));
  if (n == 0) throw std::invalid_argument(std::string(who) + ": empty state space");

  const std::size_t count = std::size_t{1} << n;
  std::vector<RegionValue> values(count);
  parallel_for(count, [&](std::size_t mask) {
    values[mask] = eval(StoppingRegion::from_mask(n, mask));
  });

  OracleResult out;
  bool any = false;
  for (const auto& rv : values) {
    if (!rv.finite()) continue;
    ++out.finite_regions;
    if (!any) {
      out.value = *rv.value;
      any = true;
    } else {
      out.value.values = out.value.values.cwiseMin(rv.value->values);
    }
  }
  if (!any) throw std::runtime_error(std::string(who) + ": no region has finite value");

  const double scale = std::max(1.0, out.value.values.maxCoeff());
  double best_gap = std::numeric_limits<double>::infinity();
  std::size_t best_mask = 0;
  for (std::size_t mask = 0; mask < count; ++mask) {
    if (!values[mask].finite()) continue;
    const double gap = (values[mask].value->values - out.value.values).maxCoeff();
    if (gap <= tie_tol * scale) {
      best_mask = mask;
      best_gap = gap;
      break;
    }
    if (gap < best_gap) {
      best_gap = gap;
      best_mask = mask;
    }
  }
  out.region = StoppingRegion::from_mask(n, best_mask);
  return out;
}

}  // namespace riskstop::detail
