#pragma once

#include "hessrb/problem.hpp"

#include <random>

namespace hessrb::testing {

inline Vector random_vector(Index n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> unif(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = unif(rng);
  return v;
}

/// Largest angle by which span(v) sticks out of span(u); both bases must be
/// orthonormal in the inner product ip (Euclidean when absent). Sine-based,
/// so tiny angles are resolved to machine precision.
inline double max_principal_angle(const Matrix& u, const Matrix& v,
                                  const std::function<Vector(const Vector&)>& ip = nullptr) {
  const auto apply_ip = [&](const Matrix& m) {
    if (!ip) return m;
    Matrix out(m.rows(), m.cols());
    for (Index j = 0; j < m.cols(); ++j) out.col(j) = ip(m.col(j));
    return out;
  };
  const Matrix residual = v - u * (u.transpose() * apply_ip(v));
  const Matrix gram = residual.transpose() * apply_ip(residual);
  const double lambda = Eigen::SelfAdjointEigenSolver<Matrix>(gram).eigenvalues().maxCoeff();
  return std::asin(std::min(1.0, std::sqrt(std::max(0.0, lambda))));
}

/// Dense covariance / precision oracles for small gaussian fields.
inline Matrix dense_apply(const std::function<Vector(const Vector&)>& action, Index n) {
  Matrix out(n, n);
  Vector e = Vector::Zero(n);
  for (Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    out.col(j) = action(e);
    e[j] = 0.0;
  }
  return out;
}

inline double qoi_at(const ParametricProblem& problem, const Vector& p) {
  return eval_qoi(problem, solve_state(problem, p));
}

}  // namespace hessrb::testing
