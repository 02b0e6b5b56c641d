#include "riskstop/discrete.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "detail/enumerate.hpp"
#include "detail/sandwich.hpp"
#include "detail/numfmt.hpp"
#include "riskstop/markov.hpp"

namespace riskstop {

namespace {

class DiscreteBellman {
 public:
  DiscreteBellman(const Matrix& P, const CostSpec& costs)
      : P_(P), exp_g_(costs.exp_g()), exp_G_(costs.exp_G()) {}

  Vector operator()(const Vector& h) const {
    return exp_g_.cwiseProduct(P_ * h).cwiseMin(exp_G_);
  }
  const Vector& stop_payoff() const { return exp_G_; }

 private:
  const Matrix& P_;
  Vector exp_g_;
  Vector exp_G_;
};

void require_discrete(const MarkovModel& model, const char* who) {
  require_valid(model);
  if (model.time != TimeMode::Discrete)
    throw std::invalid_argument(std::string(who) + ": model '" + model.name +
                                "' is a continuous-time model");
}

Matrix select(const Matrix& M, const std::vector<std::size_t>& rows,
              const std::vector<std::size_t>& cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          M(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
  return out;
}

Vector select(const Vector& v, const std::vector<std::size_t>& idx) {
  Vector out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
  return out;
}

}  // namespace

ValueFunction bellman_apply(const Matrix& P, const CostSpec& costs, const ValueFunction& h) {
  const auto n = P.rows();
  if (P.cols() != n || costs.g.size() != n || costs.G.size() != n || h.values.size() != n)
    throw std::invalid_argument("bellman_apply: dimension mismatch");
  if (n > 0 && !(h.values.minCoeff() > 0.0))
    throw std::invalid_argument("bellman_apply: value function must be strictly positive");
  return ValueFunction(DiscreteBellman(P, costs)(h.values));
}

std::vector<ValueFunction> iterate_lower(const MarkovModel& model, std::size_t n) {
  require_discrete(model, "iterate_lower");
  DiscreteBellman S(model.kernel, model.costs);
  std::vector<ValueFunction> out;
  out.reserve(n + 1);
  out.push_back(ValueFunction::constant(model.size(), 1.0));
  for (std::size_t k = 0; k < n; ++k) out.emplace_back(S(out.back().values));
  return out;
}

std::vector<ValueFunction> iterate_upper(const MarkovModel& model, std::size_t n) {
  require_discrete(model, "iterate_upper");
  DiscreteBellman S(model.kernel, model.costs);
  std::vector<ValueFunction> out;
  out.reserve(n + 1);
  out.emplace_back(S.stop_payoff());
  for (std::size_t k = 0; k < n; ++k) out.emplace_back(S(out.back().values));
  return out;
}

SolveReport solve_fixed_point(const MarkovModel& model, const FixedPointOptions& options) {
  require_discrete(model, "solve_fixed_point");
  if (!(options.tol > 0.0)) throw std::invalid_argument("solve_fixed_point: tol must be positive");
  const std::size_t n = model.size();
  DiscreteBellman S(model.kernel, model.costs);

  std::optional<Vector> seed;
  if (options.seed) {
    const Vector& s = options.seed->values;
    if (static_cast<std::size_t>(s.size()) != n)
      throw std::invalid_argument("solve_fixed_point: seed has wrong length");
    if ((s.array() < 1.0).any() || (s.array() > S.stop_payoff().array()).any())
      throw std::invalid_argument("solve_fixed_point: seed must satisfy 1 <= seed <= e^G");
    seed = s;
  }

  SolveReport report;
  if (model.costs.terminal_is_zero()) {
    // e^G = 1 closes the bracket [1, e^G].
    report.value = ValueFunction::constant(n, 1.0);
    report.region = StoppingRegion::all(n);
    report.converged = true;
    return report;
  }

  detail::Sandwich sandwich(S.stop_payoff(), seed);
  report.converged = sandwich.run_until(S, options.tol, options.max_iter);
  report.iterations = sandwich.steps;
  report.sandwich_gap = sandwich.gap();
  report.value = ValueFunction(sandwich.seeded ? *sandwich.seeded : sandwich.upper);
  report.residual = detail::sup_norm(S(report.value.values) - report.value.values);
  try {
    report.region = extract_region(report.value, model.costs, options.tol);
  } catch (const std::runtime_error&) {
    if (report.converged) throw;
    report.region = StoppingRegion(n);
  }
  return report;
}

StoppingRegion extract_region(const ValueFunction& w, const CostSpec& costs, double tol) {
  if (w.values.size() != costs.G.size())
    throw std::invalid_argument("extract_region: dimension mismatch");
  const Vector stop = costs.exp_G();
  StoppingRegion region(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] >= stop(static_cast<Eigen::Index>(i)) - tol) region.insert(i);
  if (region.empty())
    throw std::runtime_error("extract_region: no state within " + detail::shortest(tol) +
                             " of its stopping payoff; the value function is not converged");
  return region;
}

RegionValue region_value(const MarkovModel& model, const StoppingRegion& region) {
  require_discrete(model, "region_value");
  const std::size_t n = model.size();
  if (region.state_count() != n) throw std::invalid_argument("region_value: region size mismatch");

  const Vector exp_g = model.costs.exp_g();
  const Vector exp_G = model.costs.exp_G();
  const auto stop = region.members();
  const auto cont = region.complement();

  RegionValue out;
  Vector v = exp_G;
  if (cont.empty()) {
    out.value = ValueFunction(v);
    return out;
  }

  const Vector eg_c = select(exp_g, cont);
  const Matrix M = eg_c.asDiagonal() * select(model.kernel, cont, cont);
  const double threshold = 1.0 - kInfiniteMargin;
  const auto bounds = perron_bounds(M, 1e-12, 500, threshold);
  double radius = bounds.upper;
  if (!bounds.converged && bounds.upper >= threshold && bounds.lower < threshold)
    radius = spectral_radius(M);
  out.spectral_bound = radius;
  if (radius >= threshold) return out;

  const Eigen::Index k = static_cast<Eigen::Index>(cont.size());
  Vector rhs = Vector::Zero(k);
  if (!stop.empty())
    rhs = eg_c.asDiagonal() * (select(model.kernel, cont, stop) * select(exp_G, stop));
  const Matrix A = Matrix::Identity(k, k) - M;
  const Vector x = A.partialPivLu().solve(rhs);
  const double residual = detail::sup_norm(A * x - rhs);
  if (!x.allFinite() || residual > 1e-8 * std::max(1.0, detail::sup_norm(x)))
    throw std::runtime_error("region_value: continuation system is numerically singular "
                             "(spectral radius " + detail::shortest(radius) + ")");
  for (std::size_t i = 0; i < cont.size(); ++i)
    v(static_cast<Eigen::Index>(cont[i])) = x(static_cast<Eigen::Index>(i));
  out.value = ValueFunction(v);
  return out;
}

OracleResult oracle_enumerate(const MarkovModel& model, std::size_t cap) {
  require_discrete(model, "oracle_enumerate");
  return detail::enumerate_regions(
      model.size(), cap, 1e-10,
      [&](const StoppingRegion& r) { return region_value(model, r); }, "oracle_enumerate");
}

}  // namespace riskstop
