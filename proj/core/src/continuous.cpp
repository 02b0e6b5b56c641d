#include "riskstop/continuous.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

#include "detail/enumerate.hpp"
#include "detail/expm.hpp"
#include "detail/numfmt.hpp"
#include "detail/sandwich.hpp"
#include "riskstop/discrete.hpp"
#include "riskstop/markov.hpp"
#include "riskstop/parallel.hpp"

namespace riskstop {

namespace {

void require_continuous(const Matrix& Q, const CostSpec& costs, const char* who) {
  MarkovModel model;
  model.name = who;
  model.time = TimeMode::Continuous;
  model.states = StateSpace::indexed(static_cast<std::size_t>(Q.rows()));
  model.kernel = Q;
  model.costs = costs;
  require_valid(model);
}

void require_level(int m, const char* who) {
  if (m < 0 || m > kMaxDyadicLevel)
    throw std::invalid_argument(std::string(who) + ": level " + std::to_string(m) +
                                " outside [0, " + std::to_string(kMaxDyadicLevel) + "]");
}

// One lattice step v -> min(K v, e^G).
class LatticeStep {
 public:
  LatticeStep(Matrix kernel, Vector stop) : K_(std::move(kernel)), stop_(std::move(stop)) {}
  Vector operator()(const Vector& v) const { return (K_ * v).cwiseMin(stop_); }
  const Vector& stop_payoff() const { return stop_; }

 private:
  Matrix K_;
  Vector stop_;
};

// Lockstep lower/upper iterates on the level-m lattice of step 2^-m.
struct LevelRun {
  int m;
  LatticeStep step;
  detail::Sandwich sandwich;

  LevelRun(const Matrix& Q, const CostSpec& costs, int level)
      : m(level),
        step(weighted_transition_matrix(Q, costs.g, std::ldexp(1.0, -level)), costs.exp_G()),
        sandwich(step.stop_payoff(), std::nullopt) {}

  void advance_to(double T) {
    const auto target = static_cast<std::size_t>(std::llround(std::ldexp(T, m)));
    if (target > sandwich.steps) sandwich.advance(step, target - sandwich.steps);
  }
};

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

double DyadicGrid::step() const {
  return std::ldexp(horizon.value_or(1.0), -level);
}

std::size_t DyadicGrid::steps() const {
  if (!horizon) throw std::logic_error("DyadicGrid::steps: grid has no horizon");
  return std::size_t{1} << level;
}

bool DyadicGrid::refines(const DyadicGrid& coarser) const {
  return horizon == coarser.horizon && level >= coarser.level;
}

ValueFunction dyadic_backward(const Matrix& generator, const CostSpec& costs, double T, int m,
                              Bound variant) {
  require_continuous(generator, costs, "dyadic_backward");
  require_level(m, "dyadic_backward");
  if (!std::isfinite(T) || T < 0.0)
    throw std::invalid_argument("dyadic_backward: horizon must be finite and >= 0");

  const auto n = generator.rows();
  if (T == 0.0)
    return ValueFunction(variant == Bound::Lower ? Vector::Ones(n) : costs.exp_G());

  const DyadicGrid grid{m, T};
  const double h = grid.step();
  if (n > 0 && h * costs.g.maxCoeff() > kMaxExponent)
    throw Unrepresentable("dyadic_backward: step * max g = " +
                          detail::shortest(h * costs.g.maxCoeff()) + " exceeds " +
                          detail::shortest(kMaxExponent));

  // Extended precision: over 2^m steps double rounding alone drifts by more
  // than the differences between neighbouring levels.
  using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  LMatrix A = generator.cast<long double>();
  A.diagonal() += costs.g.cast<long double>();
  const LMatrix K = detail::exp_metzler<long double>(A, static_cast<long double>(h));
  const LVector stop = costs.G.cast<long double>().array().exp().matrix();
  LVector v = variant == Bound::Lower ? LVector::Ones(n) : stop;
  for (std::size_t j = 0; j < grid.steps(); ++j) v = (K * v).cwiseMin(stop);
  // The result stays within [1, e^G] after rounding back to double.
  return ValueFunction(v.cast<double>().cwiseMax(1.0).cwiseMin(costs.exp_G()));
}

std::vector<HorizonValue> horizon_sweep(const Matrix& generator, const CostSpec& costs,
                                        const std::vector<double>& horizons, int m) {
  require_continuous(generator, costs, "horizon_sweep");
  require_level(m, "horizon_sweep");

  std::vector<std::size_t> counts;
  counts.reserve(horizons.size());
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    const double T = horizons[i];
    if (!std::isfinite(T) || T < 0.0)
      throw std::invalid_argument("horizon_sweep: horizons must be finite and >= 0");
    if (i > 0 && T < horizons[i - 1])
      throw std::invalid_argument("horizon_sweep: horizons must be ascending");
    const double scaled = std::ldexp(T, m);
    const double rounded = std::round(scaled);
    if (std::abs(scaled - rounded) > 1e-9 * std::max(1.0, scaled))
      throw std::invalid_argument("horizon_sweep: horizon " + detail::shortest(T) +
                                  " is not a multiple of 2^-" + std::to_string(m));
    counts.push_back(static_cast<std::size_t>(rounded));
  }

  std::vector<HorizonValue> out;
  if (horizons.empty()) return out;
  const Vector exp_G = costs.exp_G();
  detail::Sandwich sandwich(exp_G, std::nullopt);
  std::unique_ptr<LatticeStep> step;
  if (counts.back() > 0)
    step = std::make_unique<LatticeStep>(
        weighted_transition_matrix(generator, costs.g, std::ldexp(1.0, -m)), exp_G);
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (counts[i] > sandwich.steps) sandwich.advance(*step, counts[i] - sandwich.steps);
    out.push_back({horizons[i], ValueFunction(sandwich.lower), ValueFunction(sandwich.upper)});
  }
  return out;
}

InfiniteReport solve_infinite(const Matrix& generator, const CostSpec& costs,
                              const InfiniteOptions& options) {
  require_continuous(generator, costs, "solve_infinite");
  if (!(options.tol > 0.0)) throw std::invalid_argument("solve_infinite: tol must be positive");
  require_level(options.m_max, "solve_infinite");
  const std::size_t n = static_cast<std::size_t>(generator.rows());

  InfiniteReport out;
  if (costs.terminal_is_zero()) {
    out.report.value = ValueFunction::constant(n, 1.0);
    out.report.region = StoppingRegion::all(n);
    out.report.converged = true;
    return out;
  }

  int m = std::clamp(options.m_start, 0, options.m_max);
  double T = options.T_start;
  // Horizons stay on every lattice in use.
  if (!(T > 0.0) || std::abs(std::ldexp(T, m) - std::round(std::ldexp(T, m))) > 1e-9)
    throw std::invalid_argument("solve_infinite: T_start must be a positive multiple of 2^-m_start");

  std::unique_ptr<LevelRun> coarse;
  if (m > 0) coarse = std::make_unique<LevelRun>(generator, costs, m - 1);
  auto fine = std::make_unique<LevelRun>(generator, costs, m);

  while (true) {
    fine->advance_to(T);
    if (coarse) coarse->advance_to(T);
    out.horizon_gap = fine->sandwich.gap();
    out.grid_gap = coarse ? detail::sup_norm(fine->sandwich.upper - coarse->sandwich.upper)
                          : std::numeric_limits<double>::infinity();
    if (std::max(out.horizon_gap, out.grid_gap) <= options.tol) {
      out.report.converged = true;
      break;
    }
    const bool can_extend = 2.0 * T <= options.T_max;
    const bool can_refine = m < options.m_max;
    const bool horizon_dominates = out.horizon_gap >= out.grid_gap;
    if (horizon_dominates && can_extend) {
      T *= 2.0;
    } else if (can_refine && out.grid_gap > options.tol) {
      coarse = std::move(fine);
      fine = std::make_unique<LevelRun>(generator, costs, ++m);
    } else if (out.horizon_gap > options.tol && can_extend) {
      T *= 2.0;
    } else if (can_refine) {
      coarse = std::move(fine);
      fine = std::make_unique<LevelRun>(generator, costs, ++m);
    } else {
      break;
    }
  }

  out.level = m;
  out.horizon = T;
  SolveReport& report = out.report;
  report.value = ValueFunction(fine->sandwich.upper);
  report.iterations = fine->sandwich.steps;
  report.sandwich_gap = out.horizon_gap;
  report.residual = detail::sup_norm(fine->step(report.value.values) - report.value.values);
  try {
    report.region = extract_region(report.value, costs, options.tol);
  } catch (const std::runtime_error&) {
    if (report.converged) throw;
    report.region = StoppingRegion(n);
  }
  return out;
}

RegionValue ctmc_region_value(const Matrix& generator, const CostSpec& costs,
                              const StoppingRegion& region) {
  require_continuous(generator, costs, "ctmc_region_value");
  const std::size_t n = static_cast<std::size_t>(generator.rows());
  if (region.state_count() != n)
    throw std::invalid_argument("ctmc_region_value: region size mismatch");

  const Vector exp_G = costs.exp_G();
  const auto stop = region.members();
  const auto cont = region.complement();

  RegionValue out;
  Vector v = exp_G;
  if (cont.empty()) {
    out.value = ValueFunction(v);
    return out;
  }

  Matrix A = select(generator, cont, cont);
  A.diagonal() += select(costs.g, cont);
  // Abscissa of A = Perron root of A + shift I minus shift.
  const double shift = std::max(0.0, (-A.diagonal()).maxCoeff());
  Matrix B = A;
  B.diagonal().array() += shift;
  B = B.cwiseMax(0.0);
  const double threshold = shift - kInfiniteMargin;
  const auto bounds = perron_bounds(B, 1e-12, 500, threshold);
  double root = bounds.upper;
  if (!bounds.converged && bounds.upper >= threshold && bounds.lower < threshold)
    root = spectral_radius(B);
  out.spectral_bound = root - shift;
  if (root >= threshold) return out;

  const Eigen::Index k = static_cast<Eigen::Index>(cont.size());
  Vector rhs = Vector::Zero(k);
  if (!stop.empty()) rhs = -(select(generator, cont, stop) * select(exp_G, stop));
  const Vector x = A.partialPivLu().solve(rhs);
  const double residual = detail::sup_norm(A * x - rhs);
  const double scale = std::max(1.0, detail::sup_norm(A)) * std::max(1.0, detail::sup_norm(x));
  if (!x.allFinite() || residual > 1e-8 * scale)
    throw std::runtime_error("ctmc_region_value: continuation system is numerically singular "
                             "(spectral abscissa " + detail::shortest(out.spectral_bound) + ")");
  for (std::size_t i = 0; i < cont.size(); ++i)
    v(static_cast<Eigen::Index>(cont[i])) = x(static_cast<Eigen::Index>(i));
  out.value = ValueFunction(v);
  return out;
}

OracleResult ctmc_oracle(const Matrix& generator, const CostSpec& costs, std::size_t cap) {
  require_continuous(generator, costs, "ctmc_oracle");
  return detail::enumerate_regions(
      static_cast<std::size_t>(generator.rows()), cap, 1e-10,
      [&](const StoppingRegion& r) { return ctmc_region_value(generator, costs, r); },
      "ctmc_oracle");
}

LadderSpec default_ladder(const CostSpec& costs, double c0, int m_max) {
  if (costs.g.size() == 0) throw std::invalid_argument("default_ladder: empty cost vector");
  if (!(c0 > 0.0) || c0 > costs.g.minCoeff())
    throw std::invalid_argument("default_ladder: c0 = " + detail::shortest(c0) +
                                " must lie in (0, min g = " + detail::shortest(costs.g.minCoeff()) +
                                "]");
  require_level(m_max, "default_ladder");
  LadderSpec spec;
  spec.c0 = c0;
  for (int m = 0; m <= m_max; ++m) {
    const double scale = std::ldexp(1.0, -m);
    // Written from c0 upwards so g_0 == c0 exactly and rounding cannot push
    // g_m past g.
    const Vector g_m = (c0 + (costs.g.array() - c0) * (1.0 - scale)).matrix();
    spec.g.push_back(g_m.cwiseMin(costs.g));
    spec.G.push_back(costs.G * (1.0 - scale));
  }
  return spec;
}

bool LadderTable::tail_non_increasing(std::size_t count) const {
  if (rows.size() < 2) return true;
  const std::size_t first = rows.size() > count ? rows.size() - count : 0;
  for (std::size_t i = first + 1; i < rows.size(); ++i)
    if (rows[i].sup_gap > rows[i - 1].sup_gap + 1e-12) return false;
  return true;
}

LadderTable approximation_ladder(const Matrix& generator, const CostSpec& costs,
                                 const LadderSpec& ladder, int m_max,
                                 const LadderOptions& options) {
  require_continuous(generator, costs, "approximation_ladder");
  require_level(m_max, "approximation_ladder");
  if (ladder.max_level() < m_max || ladder.G.size() != ladder.g.size())
    throw std::invalid_argument("approximation_ladder: ladder has fewer than m_max + 1 levels");
  if (!(ladder.c0 > 0.0)) throw std::invalid_argument("approximation_ladder: c0 must be positive");
  const auto n = generator.rows();
  for (int m = 0; m <= m_max; ++m) {
    const auto& gm = ladder.g[static_cast<std::size_t>(m)];
    const auto& Gm = ladder.G[static_cast<std::size_t>(m)];
    if (gm.size() != n || Gm.size() != n)
      throw std::invalid_argument("approximation_ladder: ladder vector has wrong length");
    if ((gm.array() < ladder.c0).any() || (Gm.array() < 0.0).any() ||
        (m > 0 && (gm.array() < ladder.g[static_cast<std::size_t>(m) - 1].array()).any()) ||
        (gm.array() > costs.g.array()).any())
      throw std::invalid_argument("approximation_ladder: ladder violates c0 <= g_m <= g_{m+1} <= g"
                                  " or G_m >= 0 at level " + std::to_string(m));
  }

  LadderTable table;
  const std::size_t levels = static_cast<std::size_t>(m_max) + 1;
  table.rows.resize(levels);
  table.values.resize(levels);

  // Reference first; the level solves below are independent work items.
  InfiniteOptions ref;
  ref.tol = options.reference_tol.value_or(options.tol / 100.0);
  ref.m_max = options.reference_m_max;
  ref.T_max = options.T_max;
  table.reference_report = solve_infinite(generator, costs, ref);
  table.reference = table.reference_report.report.value;

  parallel_for(levels, [&](std::size_t level) {
    const int m = static_cast<int>(level);
    const double delta = std::ldexp(1.0, -m);
    const LatticeStep step(weighted_transition_matrix(generator, ladder.g[level], delta),
                           ladder.G[level].array().exp().matrix());
    detail::Sandwich sandwich(step.stop_payoff(), std::nullopt);
    const auto max_steps = static_cast<std::size_t>(std::ceil(options.T_max / delta));
    LadderRow& row = table.rows[level];
    row.m = m;
    row.delta = delta;
    row.converged = sandwich.run_until(step, options.inner_tol, max_steps);
    row.iterations = sandwich.steps;
    table.values[level] = ValueFunction(sandwich.upper);
    row.sup_gap = sup_distance(table.values[level], table.reference);
  });

  table.complete = table.reference_report.report.converged &&
                   std::all_of(table.rows.begin(), table.rows.end(),
                               [](const LadderRow& r) { return r.converged; });
  table.final_within_tol = table.rows.back().sup_gap <= options.tol;
  return table;
}

}  // namespace riskstop
