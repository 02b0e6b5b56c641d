#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "riskstop/types.hpp"

namespace riskstop::testing {

// Portable uniform on [0, 1): std::uniform_real_distribution is not
// reproducible across standard libraries.
inline double u01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * u01(rng);
}

inline std::size_t pick_size(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

/// Random row-stochastic chain with g in [0.05, 0.5], G in [0, 2], c = min g.
MarkovModel random_dtmc(std::mt19937_64& rng, std::size_t n);

/// Random generator, off-diagonal rates in [0.1, 2] with density about 0.6,
/// and costs drawn as in random_dtmc.
MarkovModel random_ctmc(std::mt19937_64& rng, std::size_t n);

/// exp(tA) by a 60-term Taylor series in long double. Accurate when |tA| is
/// a few units; meant only as an independent reference.
std::vector<std::vector<long double>> series_exp(const Matrix& A, double t, int terms = 60);

/// Same model with every terminal cost set to zero.
MarkovModel with_zero_terminal(MarkovModel model);

}  // namespace riskstop::testing
