#include "riskstop/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

#include "riskstop/markov.hpp"
#include "riskstop/parallel.hpp"

namespace riskstop {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 16) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

void check_start(const Matrix& K, std::size_t x0, const StoppingRegion& region, const char* who) {
  if (K.rows() != K.cols()) throw std::invalid_argument(std::string(who) + ": kernel not square");
  const auto n = static_cast<std::size_t>(K.rows());
  if (x0 >= n) throw std::invalid_argument(std::string(who) + ": start state out of range");
  if (region.state_count() != n)
    throw std::invalid_argument(std::string(who) + ": region size mismatch");
}

// Index j with cumulative weight first exceeding `target`; falls back to the
// last positive weight when rounding leaves target beyond the row total.
std::size_t pick(const Matrix& K, Eigen::Index row, double target, Eigen::Index skip) {
  double acc = 0.0;
  Eigen::Index last = -1;
  for (Eigen::Index j = 0; j < K.cols(); ++j) {
    if (j == skip) continue;
    const double w = K(row, j);
    if (w <= 0.0) continue;
    last = j;
    acc += w;
    if (target < acc) return static_cast<std::size_t>(j);
  }
  if (last < 0) throw std::logic_error("sample path: row has no outgoing mass");
  return static_cast<std::size_t>(last);
}

struct PolicyPaths {
  std::vector<double> values;
  std::size_t truncated = 0;
};

McEstimate summarize(const PolicyPaths& paths) {
  McEstimate est;
  est.n_paths = paths.values.size();
  const double n = static_cast<double>(est.n_paths);
  // Shifted by the first payoff: constant payoffs give an exact mean and a
  // zero standard error.
  const double shift = paths.values.front();
  std::vector<double> d(paths.values.size()), sq(paths.values.size());
  std::transform(paths.values.begin(), paths.values.end(), d.begin(),
                 [&](double v) { return v - shift; });
  std::transform(d.begin(), d.end(), sq.begin(), [](double x) { return x * x; });
  const double sum = pairwise_sum(d);
  est.mean = shift + sum / n;
  if (est.n_paths > 1) {
    const double ss = std::max(0.0, pairwise_sum(sq) - sum * sum / n);
    est.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  est.truncated_fraction = static_cast<double>(paths.truncated) / n;
  return est;
}

// Samples every path of the policy and maps it through `score`.
template <class Score>
PolicyPaths run_paths(const MarkovModel& model, const StoppingRegion& region, std::size_t x0,
                      const McOptions& options, const char* who, Score score) {
  require_valid(model);
  check_start(model.kernel, x0, region, who);
  if (options.n_paths == 0) throw std::invalid_argument(std::string(who) + ": n_paths must be >= 1");
  const double horizon = options.truncation.value_or(default_truncation(model));
  if (!(horizon >= 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument(std::string(who) + ": truncation must be finite and >= 0");

  PolicyPaths out;
  out.values.resize(options.n_paths);
  std::vector<char> truncated(options.n_paths, 0);
  constexpr std::size_t kBlock = 1024;
  const std::size_t blocks = (options.n_paths + kBlock - 1) / kBlock;
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t end = std::min(options.n_paths, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      const PathSample path =
          model.time == TimeMode::Discrete
              ? sample_dtmc_path(model.kernel, x0, region,
                                 static_cast<std::size_t>(std::ceil(horizon)), options.seed, i)
              : sample_ctmc_path(model.kernel, x0, region, horizon, options.seed, i);
      out.values[i] = score(path);
      truncated[i] = path.truncated() ? 1 : 0;
    }
  });
  out.truncated = static_cast<std::size_t>(std::count(truncated.begin(), truncated.end(), 1));
  return out;
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(seed + kGolden) ^ mix64(stream * kGolden + 0x632BE59BD9B4E019ULL)) {}

std::uint64_t CounterRng::next() { return mix64(key_ + (++counter_) * kGolden); }

double CounterRng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double CounterRng::uniform_open() {
  return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

PathSample sample_dtmc_path(const Matrix& P, std::size_t x0, const StoppingRegion& region,
                            std::size_t horizon, std::uint64_t seed, std::uint64_t stream) {
  check_start(P, x0, region, "sample_dtmc_path");
  CounterRng rng(seed, stream);
  PathSample path;
  path.states.push_back(x0);
  path.times.push_back(0.0);
  std::size_t x = x0;
  if (region.contains(x)) {
    path.stopped_at = 0;
    return path;
  }
  for (std::size_t step = 1; step <= horizon; ++step) {
    x = pick(P, static_cast<Eigen::Index>(x), rng.uniform(), -1);
    path.states.push_back(x);
    path.times.push_back(static_cast<double>(step));
    if (region.contains(x)) {
      path.stopped_at = step;
      path.end_time = static_cast<double>(step);
      return path;
    }
  }
  path.end_time = static_cast<double>(horizon);
  return path;
}

PathSample sample_ctmc_path(const Matrix& Q, std::size_t x0, const StoppingRegion& region,
                            double T_trunc, std::uint64_t seed, std::uint64_t stream) {
  check_start(Q, x0, region, "sample_ctmc_path");
  CounterRng rng(seed, stream);
  PathSample path;
  path.states.push_back(x0);
  path.times.push_back(0.0);
  std::size_t x = x0;
  double t = 0.0;
  while (true) {
    if (region.contains(x)) {
      path.stopped_at = path.states.size() - 1;
      path.end_time = t;
      return path;
    }
    const auto row = static_cast<Eigen::Index>(x);
    const double rate = -Q(row, row);
    if (rate <= 0.0) break;
    const double hold = -std::log(rng.uniform_open()) / rate;
    if (t + hold >= T_trunc) break;
    t += hold;
    x = pick(Q, row, rng.uniform() * rate, row);
    path.states.push_back(x);
    path.times.push_back(t);
  }
  path.end_time = T_trunc;
  return path;
}

double path_payoff(const PathSample& path, const CostSpec& costs, TimeMode time) {
  if (path.states.empty()) throw std::invalid_argument("path_payoff: empty path");
  double accrued = 0.0;
  const std::size_t last = path.states.size() - 1;
  if (time == TimeMode::Discrete) {
    for (std::size_t i = 0; i < last; ++i)
      accrued += costs.g(static_cast<Eigen::Index>(path.states[i]));
  } else {
    for (std::size_t i = 0; i < last; ++i)
      accrued += costs.g(static_cast<Eigen::Index>(path.states[i])) *
                 (path.times[i + 1] - path.times[i]);
    accrued += costs.g(static_cast<Eigen::Index>(path.states[last])) *
               (path.end_time - path.times[last]);
  }
  return std::exp(accrued + costs.G(static_cast<Eigen::Index>(path.states[last])));
}

double default_truncation(const MarkovModel& model, double stat_tol) {
  if (!(stat_tol > 0.0 && stat_tol < 1.0))
    throw std::invalid_argument("default_truncation: stat_tol must lie in (0, 1)");
  const double g_norm = model.costs.G.size() ? model.costs.G.cwiseAbs().maxCoeff() : 0.0;
  const double t = (g_norm + std::log(1.0 / stat_tol)) / model.costs.c;
  return model.time == TimeMode::Discrete ? std::ceil(t) : t;
}

McEstimate evaluate_region_policy(const MarkovModel& model, const StoppingRegion& region,
                                  std::size_t x0, const McOptions& options) {
  const auto paths = run_paths(model, region, x0, options, "evaluate_region_policy",
                               [&](const PathSample& p) {
                                 return path_payoff(p, model.costs, model.time);
                               });
  return summarize(paths);
}

IntegrabilityResult integrability_check(const MarkovModel& model, const StoppingRegion& region,
                                        std::size_t x0, const McOptions& options) {
  const double c = model.costs.c;
  const auto paths = run_paths(model, region, x0, options, "integrability_check",
                               [&](const PathSample& p) { return std::exp(c * p.end_time); });
  IntegrabilityResult out;
  out.estimate = summarize(paths);
  out.bound = std::exp(model.costs.G(static_cast<Eigen::Index>(x0)));
  out.violated = out.estimate.mean - 4.0 * out.estimate.std_error > out.bound;
  return out;
}

}  // namespace riskstop
