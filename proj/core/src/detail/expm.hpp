#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace riskstop::detail {

// exp(tA) for a Metzler matrix A (nonnegative off the diagonal) by
// uniformization: with lambda = max(-A_ii), B = A + lambda I >= 0 and
// mu = max row sum of B,
//
//   exp(tA) = e^{(mu - lambda)t} sum_k Poisson(k; mu t) (B/mu)^k,
//
// where B/mu is substochastic, so every partial sum is entrywise
// nonnegative. Large mu t is handled by squaring. The series runs until the
// Poisson tail drops below the precision of Scalar.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> exp_metzler(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A, Scalar t) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Scalar tail = std::numeric_limits<Scalar>::epsilon() / 64;
  constexpr double kMaxPoissonMean = 8.0;
  constexpr int kMaxTerms = 1000;

  const Eigen::Index n = A.rows();
  if (t == Scalar(0) || n == 0) return Mat::Identity(n, n);

  const Scalar lambda = std::max(Scalar(0), (-A.diagonal()).maxCoeff());
  Mat B = A;
  B.diagonal().array() += lambda;
  // Rounding in the shift must not produce tiny negative diagonals.
  B = B.cwiseMax(Scalar(0));
  const Scalar mu = B.rowwise().sum().maxCoeff();
  if (mu == Scalar(0)) return Mat::Identity(n, n) * std::exp(-lambda * t);

  int squarings = 0;
  Scalar step = t;
  while (mu * step > Scalar(kMaxPoissonMean)) {
    step /= 2;
    ++squarings;
  }

  const Scalar mean = mu * step;
  const Mat N = B / mu;
  Mat power = Mat::Identity(n, n);
  Scalar weight = std::exp(-mean);
  Scalar mass = weight;
  Mat sum = weight * power;
  for (int k = 1; k < kMaxTerms; ++k) {
    if (k > mean && Scalar(1) - mass < tail) break;
    power = power * N;
    weight *= mean / Scalar(k);
    mass += weight;
    sum += weight * power;
  }
  sum *= std::exp((mu - lambda) * step);
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

}  // namespace riskstop::detail
