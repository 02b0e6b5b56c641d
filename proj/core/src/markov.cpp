#include "riskstop/markov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "detail/expm.hpp"
#include "detail/numfmt.hpp"

namespace riskstop {

namespace {

using detail::shortest;

std::string row_field(std::size_t i) { return "kernel.row[" + std::to_string(i) + "]"; }
std::string entry_field(std::size_t i, std::size_t j) {
  return row_field(i) + "[" + std::to_string(j) + "]";
}

void check_vector(const Vector& v, const char* name, std::size_t n, std::vector<Violation>& out) {
  if (static_cast<std::size_t>(v.size()) != n) {
    out.push_back({name, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()),
                   std::string(name) + " has " + std::to_string(v.size()) + " entries, expected " +
                       std::to_string(n)});
    return;
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i))) {
      const std::string field = std::string(name) + "[" + std::to_string(i) + "]";
      out.push_back({field, "non-finite value",
                     std::string(name) + "(state " + std::to_string(i) + ") is not finite"});
    }
  }
}

void check_kernel(const MarkovModel& model, std::vector<Violation>& out) {
  const auto n = static_cast<Eigen::Index>(model.size());
  const Matrix& K = model.kernel;
  if (K.rows() != n || K.cols() != n) {
    std::ostringstream d;
    d << "expected " << n << "x" << n << ", got " << K.rows() << "x" << K.cols();
    out.push_back({"kernel", d.str(), "kernel is " + std::to_string(K.rows()) + "x" +
                                          std::to_string(K.cols()) + ", expected " +
                                          std::to_string(n) + "x" + std::to_string(n)});
    return;
  }
  const bool discrete = model.time == TimeMode::Discrete;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    bool finite_row = true;
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      const double v = K(i, j);
      if (!std::isfinite(v)) {
        finite_row = false;
        out.push_back({entry_field(ui, uj), "non-finite entry",
                       "kernel(" + std::to_string(i) + "," + std::to_string(j) + ") is not finite"});
        continue;
      }
      if (discrete && v < 0.0) {
        out.push_back({entry_field(ui, uj), "negative probability " + shortest(v),
                       "P(" + std::to_string(i) + "," + std::to_string(j) + ")=" + shortest(v) +
                           " < 0"});
      } else if (!discrete && i != j && v < 0.0) {
        out.push_back({entry_field(ui, uj), "negative rate " + shortest(v),
                       "Q(" + std::to_string(i) + "," + std::to_string(j) + ")=" + shortest(v) +
                           " < 0"});
      } else if (!discrete && i == j && v > 0.0) {
        out.push_back({entry_field(ui, uj), "positive diagonal " + shortest(v),
                       "Q(" + std::to_string(i) + "," + std::to_string(i) + ")=" + shortest(v) +
                           " > 0"});
      }
    }
    if (!finite_row) continue;
    const double sum = K.row(i).sum();
    if (discrete) {
      if (std::abs(sum - 1.0) > kStructuralTolerance) {
        out.push_back({row_field(ui), "sums to " + shortest(sum) + ", expected 1.0",
                       "row " + std::to_string(i) + " sums to " + shortest(sum)});
      }
    } else {
      const double scale = std::max(1.0, std::abs(K(i, i)));
      if (std::abs(sum) > kStructuralTolerance * scale) {
        out.push_back({row_field(ui), "sums to " + shortest(sum) + ", expected 0",
                       "row " + std::to_string(i) + " sums to " + shortest(sum)});
      }
    }
  }
}

void check_costs(const MarkovModel& model, std::vector<Violation>& out) {
  const std::size_t n = model.size();
  const CostSpec& costs = model.costs;
  const std::size_t before = out.size();
  check_vector(costs.g, "g", n, out);
  check_vector(costs.G, "G", n, out);
  if (out.size() != before) return;
  const bool c_ok = std::isfinite(costs.c) && costs.c > 0.0;
  if (!c_ok)
    out.push_back({"c", "must be > 0, got " + shortest(costs.c),
                   "c=" + shortest(costs.c) + " must be positive"});
  for (std::size_t i = 0; c_ok && i < n; ++i) {
    const double gi = costs.g(static_cast<Eigen::Index>(i));
    if (gi < costs.c) {
      out.push_back({"g[" + std::to_string(i) + "]", shortest(gi) + " < c=" + shortest(costs.c),
                     "g(state " + std::to_string(i) + ")=" + shortest(gi) + " < c=" +
                         shortest(costs.c)});
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double Gi = costs.G(static_cast<Eigen::Index>(i));
    if (Gi < 0.0) {
      out.push_back({"G[" + std::to_string(i) + "]", "negative terminal cost " + shortest(Gi),
                     "G(state " + std::to_string(i) + ")=" + shortest(Gi) + " < 0"});
    }
  }
}

void check_generator_argument(const Matrix& Q, double t, const char* who) {
  if (Q.rows() != Q.cols()) throw std::invalid_argument(std::string(who) + ": matrix is not square");
  if (!std::isfinite(t)) throw std::invalid_argument(std::string(who) + ": time is not finite");
  if (t < 0.0) throw std::invalid_argument(std::string(who) + ": negative time " + shortest(t));
  for (Eigen::Index i = 0; i < Q.rows(); ++i)
    for (Eigen::Index j = 0; j < Q.cols(); ++j) {
      if (!std::isfinite(Q(i, j)))
        throw std::invalid_argument(std::string(who) + ": non-finite generator entry");
      if (i != j && Q(i, j) < 0.0)
        throw std::invalid_argument(std::string(who) + ": negative off-diagonal rate");
    }
}

}  // namespace

std::vector<Violation> validate_model(const MarkovModel& model) {
  std::vector<Violation> out;
  const auto& labels = model.states.labels();
  if (labels.empty()) {
    out.push_back({"states", "must list at least one state", "model has no states"});
    return out;
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!seen.insert(labels[i]).second) {
      out.push_back({"states[" + std::to_string(i) + "]", "duplicate label \"" + labels[i] + "\"",
                     "state label \"" + labels[i] + "\" is repeated"});
    }
  }
  check_kernel(model, out);
  check_costs(model, out);
  return out;
}

void require_valid(const MarkovModel& model) {
  auto violations = validate_model(model);
  if (violations.empty()) return;
  std::string what = "invalid model";
  if (!model.name.empty()) what += " '" + model.name + "'";
  what += ":";
  for (const auto& v : violations) what += " " + v.summary + ";";
  what.pop_back();
  throw ModelError(what, std::move(violations));
}

Matrix transition_matrix(const Matrix& generator, double t) {
  check_generator_argument(generator, t, "transition_matrix");
  return detail::exp_metzler<double>(generator, t);
}

Matrix weighted_transition_matrix(const Matrix& generator, const Vector& g, double t) {
  check_generator_argument(generator, t, "weighted_transition_matrix");
  if (g.size() != generator.rows())
    throw std::invalid_argument("weighted_transition_matrix: cost vector has wrong length");
  if (!g.allFinite()) throw std::invalid_argument("weighted_transition_matrix: non-finite cost");
  if (g.size() > 0 && t * g.maxCoeff() > kMaxExponent)
    throw Unrepresentable("weighted_transition_matrix: t * max g = " + shortest(t * g.maxCoeff()) +
                          " exceeds " + shortest(kMaxExponent));
  Matrix A = generator;
  A.diagonal() += g;
  return detail::exp_metzler<double>(A, t);
}

Vector apply_kernel(const Matrix& kernel, const Vector& h) {
  if (kernel.cols() != h.size())
    throw std::invalid_argument("apply_kernel: matrix has " + std::to_string(kernel.cols()) +
                                " columns but vector has " + std::to_string(h.size()) + " entries");
  return kernel * h;
}

namespace {
// Power iterations tried before the dense eigensolve fallback.
constexpr std::size_t kPowerIterations = 500;
}  // namespace

PerronBounds perron_bounds(const Matrix& M, double rel_tol, std::size_t max_iter,
                           std::optional<double> decide_against) {
  if (M.rows() != M.cols()) throw std::invalid_argument("perron_bounds: matrix is not square");
  PerronBounds out;
  const Eigen::Index n = M.rows();
  if (n == 0) {
    out.converged = true;
    return out;
  }
  // The unit shift gives a positive diagonal, so the iterate stays positive
  // and periodic blocks cannot stall the iteration.
  Matrix B = M;
  B.diagonal().array() += 1.0;
  Vector x = Vector::Ones(n);
  for (std::size_t it = 1; it <= max_iter; ++it) {
    Vector y = B * x;
    const Vector ratio = y.cwiseQuotient(x);
    const double hi = ratio.maxCoeff();
    const double lo = ratio.minCoeff();
    out.lower = std::max(0.0, lo - 1.0);
    out.upper = std::max(0.0, hi - 1.0);
    out.iterations = it;
    if (hi - lo <= rel_tol * hi) {
      out.converged = true;
      return out;
    }
    if (decide_against && (out.upper < *decide_against || out.lower >= *decide_against)) return out;
    // Any positive vector gives valid bounds; the floor keeps components of
    // reducible blocks from underflowing to 0/0.
    x = (y / y.maxCoeff()).cwiseMax(1e-250);
  }
  return out;
}

double spectral_radius(const Matrix& M) {
  const auto bounds = perron_bounds(M, 1e-12, kPowerIterations);
  if (bounds.converged) return bounds.upper;
  // Reducible matrices leave the lower bound behind; eigenvalues are exact.
  Eigen::EigenSolver<Matrix> solver(M, false);
  if (solver.info() != Eigen::Success) return bounds.upper;
  return std::min(bounds.upper, solver.eigenvalues().cwiseAbs().maxCoeff());
}

double spectral_abscissa(const Matrix& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("spectral_abscissa: matrix is not square");
  if (A.rows() == 0) return -std::numeric_limits<double>::infinity();
  const double shift = std::max(0.0, (-A.diagonal()).maxCoeff());
  Matrix B = A;
  B.diagonal().array() += shift;
  return spectral_radius(B.cwiseMax(0.0)) - shift;
}

}  // namespace riskstop
