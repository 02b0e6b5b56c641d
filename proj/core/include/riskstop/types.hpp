#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace riskstop {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class TimeMode { Discrete, Continuous };

const char* to_string(TimeMode mode);

/// Ordered, distinct state labels. The index of a label is its identity.
class StateSpace {
 public:
  StateSpace() = default;
  explicit StateSpace(std::vector<std::string> labels);

  /// Labels "S0", "S1", ... for generated models.
  static StateSpace indexed(std::size_t n);

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  std::optional<std::size_t> index_of(const std::string& label) const;

  bool operator==(const StateSpace&) const = default;

 private:
  std::vector<std::string> labels_;
};

/// Running cost g (per step or per unit time) and terminal cost G.
/// `c` is the strictly positive lower bound on g.
struct CostSpec {
  Vector g;
  Vector G;
  double c = 0.0;

  Vector exp_g() const { return g.array().exp().matrix(); }
  Vector exp_G() const { return G.array().exp().matrix(); }
  bool terminal_is_zero() const { return (G.array() == 0.0).all(); }
};

/// A finite Markov chain with cost data. `kernel` is a row-stochastic
/// one-step matrix in discrete time and a generator in continuous time.
struct MarkovModel {
  std::string name;
  TimeMode time = TimeMode::Discrete;
  StateSpace states;
  Matrix kernel;
  CostSpec costs;

  std::size_t size() const { return states.size(); }
};

/// A per-state multiplicative cost, kept in [1, e^G] by every solver.
struct ValueFunction {
  Vector values;

  ValueFunction() = default;
  explicit ValueFunction(Vector v) : values(std::move(v)) {}
  static ValueFunction constant(std::size_t n, double value) {
    return ValueFunction(Vector::Constant(static_cast<Eigen::Index>(n), value));
  }

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  double operator[](std::size_t i) const { return values(static_cast<Eigen::Index>(i)); }
};

double sup_distance(const ValueFunction& a, const ValueFunction& b);

/// Set of states where the hitting-time policy stops.
class StoppingRegion {
 public:
  StoppingRegion() = default;
  explicit StoppingRegion(std::size_t n) : member_(n, false) {}
  static StoppingRegion from_indices(std::size_t n, const std::vector<std::size_t>& indices);
  static StoppingRegion from_mask(std::size_t n, unsigned long long mask);
  static StoppingRegion all(std::size_t n);

  std::size_t state_count() const { return member_.size(); }
  bool contains(std::size_t i) const { return member_.at(i); }
  void insert(std::size_t i) { member_.at(i) = true; }
  bool empty() const;
  std::size_t size() const;
  std::vector<std::size_t> members() const;
  std::vector<std::size_t> complement() const;

  bool operator==(const StoppingRegion&) const = default;

 private:
  std::vector<bool> member_;
};

/// Outcome of a fixed-point solve.
struct SolveReport {
  ValueFunction value;
  StoppingRegion region;
  std::size_t iterations = 0;
  double residual = 0.0;      // sup norm of S w - w
  double sandwich_gap = 0.0;  // sup norm of upper - lower at termination
  bool converged = false;
};

/// Value of a hitting-time policy, or nullopt when its expected cost is
/// infinite. `spectral_bound` is the quantity that decided finiteness: the
/// Perron root of the continuation block of diag(e^g) P in discrete time, its
/// spectral abscissa of Q + diag(g) in continuous time.
struct RegionValue {
  std::optional<ValueFunction> value;
  double spectral_bound = 0.0;

  bool finite() const { return value.has_value(); }
};

/// Exhaustive minimum over all stopping regions.
struct OracleResult {
  ValueFunction value;
  StoppingRegion region;
  std::size_t finite_regions = 0;
};

/// One structural problem with a model: `field` is a document path such as
/// "kernel.row[0]", `detail` the violated bound relative to that field and
/// `summary` a self-contained sentence.
struct Violation {
  std::string field;
  std::string detail;
  std::string summary;
};

class ModelError : public std::runtime_error {
 public:
  ModelError(const std::string& what, std::vector<Violation> violations)
      : std::runtime_error(what), violations_(std::move(violations)) {}
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Raised when a requested quantity would overflow double precision.
class Unrepresentable : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

}  // namespace riskstop
