#include "support.hpp"

namespace riskstop::testing {

namespace {

void draw_costs(std::mt19937_64& rng, MarkovModel& model, std::size_t n) {
  model.costs.g.resize(static_cast<Eigen::Index>(n));
  model.costs.G.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    model.costs.g(static_cast<Eigen::Index>(i)) = uniform(rng, 0.05, 0.5);
    model.costs.G(static_cast<Eigen::Index>(i)) = uniform(rng, 0.0, 2.0);
  }
  model.costs.c = model.costs.g.minCoeff();
}

}  // namespace

MarkovModel random_dtmc(std::mt19937_64& rng, std::size_t n) {
  MarkovModel model;
  model.name = "random-dtmc-" + std::to_string(n);
  model.time = TimeMode::Discrete;
  model.states = StateSpace::indexed(n);
  model.kernel = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < model.kernel.rows(); ++i) {
    double total = 0.0;
    while (total == 0.0) {
      for (Eigen::Index j = 0; j < model.kernel.cols(); ++j) {
        const double w = u01(rng) < 0.7 ? u01(rng) : 0.0;
        model.kernel(i, j) = w;
        total += w;
      }
    }
    model.kernel.row(i) /= total;
  }
  draw_costs(rng, model, n);
  return model;
}

MarkovModel random_ctmc(std::mt19937_64& rng, std::size_t n) {
  MarkovModel model;
  model.name = "random-ctmc-" + std::to_string(n);
  model.time = TimeMode::Continuous;
  model.states = StateSpace::indexed(n);
  model.kernel = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < model.kernel.rows(); ++i) {
    double out = 0.0;
    for (Eigen::Index j = 0; j < model.kernel.cols(); ++j) {
      if (j == i) continue;
      if (u01(rng) < 0.6) {
        model.kernel(i, j) = uniform(rng, 0.1, 2.0);
        out += model.kernel(i, j);
      }
    }
    model.kernel(i, i) = -out;
  }
  draw_costs(rng, model, n);
  return model;
}

std::vector<std::vector<long double>> series_exp(const Matrix& A, double t, int terms) {
  const auto n = static_cast<std::size_t>(A.rows());
  using Mat = std::vector<std::vector<long double>>;
  Mat term(n, std::vector<long double>(n, 0.0L));
  Mat sum = term;
  for (std::size_t i = 0; i < n; ++i) term[i][i] = sum[i][i] = 1.0L;
  for (int k = 1; k < terms; ++k) {
    Mat next(n, std::vector<long double>(n, 0.0L));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < n; ++l)
        for (std::size_t j = 0; j < n; ++j)
          next[i][j] += term[i][l] * static_cast<long double>(A(static_cast<Eigen::Index>(l),
                                                               static_cast<Eigen::Index>(j)));
    for (auto& row : next)
      for (auto& x : row) x *= static_cast<long double>(t) / k;
    term = std::move(next);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) sum[i][j] += term[i][j];
  }
  return sum;
}

MarkovModel with_zero_terminal(MarkovModel model) {
  model.costs.G.setZero();
  return model;
}

}  // namespace riskstop::testing
