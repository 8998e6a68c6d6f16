#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace hessrb {

template <typename Scalar>
using DenseVector = Eigen::Vector<Scalar, Eigen::Dynamic>;
template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorAction = std::function<DenseVector<Scalar>(const DenseVector<Scalar>&)>;

template <typename Scalar = double>
VectorAction<Scalar> identity_action() {
  return [](const DenseVector<Scalar>& x) { return x; };
}

/// Eigenpairs of H phi = lambda C^{-1} phi, sorted by descending |lambda|,
/// with C^{-1}-orthonormal eigenvectors. Each column is scaled so its first
/// entry of largest magnitude is nonnegative.
template <typename Scalar = double>
struct GeneralizedEigenPairs {
  DenseVector<Scalar> eigenvalues;
  DenseMatrix<Scalar> eigenvectors;  // K x L
  bool rank_deficient = false;

  Eigen::Index count() const { return eigenvalues.size(); }
};

namespace detail {

template <typename Scalar>
void fix_column_signs(DenseMatrix<Scalar>& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Eigen::Index imax = 0;
    m.col(j).cwiseAbs().maxCoeff(&imax);
    if (m(imax, j) < Scalar(0)) m.col(j) = -m.col(j);
  }
}

template <typename Scalar>
std::vector<Eigen::Index> order_by_abs(const DenseVector<Scalar>& values) {
  std::vector<Eigen::Index> order(values.size());
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(values[a]) > std::abs(values[b]);
  });
  return order;
}

}  // namespace detail

template <typename Scalar = double>
struct WeightedQrResult {
  DenseMatrix<Scalar> q;          // K x (kept count), Q^T C^{-1} Q = I
  DenseMatrix<Scalar> r;          // m x m; row j is zero when column j was dropped
  std::vector<Eigen::Index> kept; // Y-column index of each q column
};

/// QR in the C^{-1} inner product: modified Gram-Schmidt with one
/// reorthogonalization pass. Columns whose residual collapses below
/// 1e-13 of their original norm are dropped (zero diagonal in R).
template <typename Scalar = double>
WeightedQrResult<Scalar> weighted_qr(const DenseMatrix<Scalar>& y, const VectorAction<Scalar>& cinv_action) {
  using Vec = DenseVector<Scalar>;
  const Eigen::Index n = y.rows();
  const Eigen::Index m = y.cols();
  if (m > n) throw std::invalid_argument("weighted_qr: more columns than rows");

  WeightedQrResult<Scalar> out;
  out.q.resize(n, m);
  out.r = DenseMatrix<Scalar>::Zero(m, m);
  std::vector<Vec> cinv_q;  // cached C^{-1} q_i

  const Scalar drop_tol = Scalar(1e-13);
  Eigen::Index kept_count = 0;
  for (Eigen::Index j = 0; j < m; ++j) {
    Vec w = y.col(j);
    Vec z = cinv_action(w);
    const Scalar norm0 = std::sqrt(std::max(Scalar(0), Scalar(w.dot(z))));
    Scalar norm = norm0;
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < kept_count; ++i) {
        const Scalar coeff = cinv_q[i].dot(w);
        out.r(out.kept[i], j) += coeff;
        w -= coeff * out.q.col(i);
      }
      z = cinv_action(w);
      norm = std::sqrt(std::max(Scalar(0), Scalar(w.dot(z))));
    }
    if (!(norm > drop_tol * norm0)) continue;  // dropped: R(j,j) stays zero
    out.r(j, j) = norm;
    out.q.col(kept_count) = w / norm;
    cinv_q.push_back(z / norm);
    out.kept.push_back(j);
    ++kept_count;
  }
  out.q.conservativeResize(n, kept_count);
  return out;
}

/// Dense reference solver for H phi = lambda C^{-1} phi by symmetric
/// reduction with a Cholesky factor of C^{-1}.
template <typename Scalar = double>
GeneralizedEigenPairs<Scalar> dense_gevp(const DenseMatrix<Scalar>& h, const DenseMatrix<Scalar>& cinv,
                                         Eigen::Index l) {
  const Eigen::Index n = h.rows();
  if (h.cols() != n || cinv.rows() != n || cinv.cols() != n)
    throw std::invalid_argument("dense_gevp: shape mismatch");
  if (l < 1 || l > n) throw std::invalid_argument("dense_gevp: need 1 <= L <= K");

  Eigen::LLT<DenseMatrix<Scalar>> llt(DenseMatrix<Scalar>(Scalar(0.5) * (cinv + cinv.transpose())));
  if (llt.info() != Eigen::Success) throw std::invalid_argument("dense_gevp: C^{-1} is not SPD");
  const auto lfac = llt.matrixL();

  // W = L^{-1} H L^{-T}; eigenpairs of W map back through phi = L^{-T} z
  DenseMatrix<Scalar> w = Scalar(0.5) * (h + h.transpose());
  lfac.solveInPlace(w);
  w.transposeInPlace();
  lfac.solveInPlace(w);
  w = Scalar(0.5) * (w + w.transpose());

  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> eig(w);
  if (eig.info() != Eigen::Success) throw std::runtime_error("dense_gevp: eigendecomposition failed");

  const auto order = detail::order_by_abs<Scalar>(eig.eigenvalues());
  GeneralizedEigenPairs<Scalar> pairs;
  pairs.eigenvalues.resize(l);
  pairs.eigenvectors.resize(n, l);
  for (Eigen::Index k = 0; k < l; ++k) {
    pairs.eigenvalues[k] = eig.eigenvalues()[order[k]];
    DenseVector<Scalar> z = eig.eigenvectors().col(order[k]);
    pairs.eigenvectors.col(k) = lfac.transpose().solve(z);
  }
  detail::fix_column_signs(pairs.eigenvectors);
  return pairs;
}

/// Randomized solver for the generalized eigenvalue problem: probes H with a
/// Gaussian test block, orthonormalizes Y = C H Omega in the C^{-1} inner
/// product, and solves the small projected problem. Performs exactly
/// 2(L + c) H-actions. If Y is rank deficient the probe basis is refilled
/// with fresh random directions and the pairs are flagged.
template <typename Scalar = double>
GeneralizedEigenPairs<Scalar> randomized_gevp(const VectorAction<Scalar>& h_action,
                                              const VectorAction<Scalar>& c_action,
                                              const VectorAction<Scalar>& cinv_action, Eigen::Index k_dim,
                                              Eigen::Index l, Eigen::Index c, uint64_t seed,
                                              long* action_count = nullptr) {
  using Vec = DenseVector<Scalar>;
  using Mat = DenseMatrix<Scalar>;
  if (l < 1) throw std::invalid_argument("randomized_gevp: need L >= 1");
  if (c < 0 || l + c > k_dim) throw std::invalid_argument("randomized_gevp: need L + c <= K");

  std::mt19937_64 rng(seed);
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  const Eigen::Index r = l + c;
  long actions = 0;

  Mat omega(k_dim, r);
  for (Eigen::Index j = 0; j < r; ++j)
    for (Eigen::Index i = 0; i < k_dim; ++i) omega(i, j) = normal(rng);

  Mat y(k_dim, r);
  for (Eigen::Index j = 0; j < r; ++j) {
    y.col(j) = c_action(h_action(omega.col(j)));
    ++actions;
  }

  auto qr = weighted_qr<Scalar>(y, cinv_action);
  Mat q = qr.q;
  const bool deficient = q.cols() < l;

  // Refill rank-deficient probes so the projected problem keeps size L + c.
  while (q.cols() < r) {
    Vec g(k_dim);
    for (Eigen::Index i = 0; i < k_dim; ++i) g[i] = normal(rng);
    Vec z = cinv_action(g);
    for (int pass = 0; pass < 2; ++pass) {
      g -= q * (q.transpose() * z);
      z = cinv_action(g);
    }
    const Scalar norm = std::sqrt(std::max(Scalar(0), Scalar(g.dot(z))));
    if (!(norm > Scalar(0))) continue;
    q.conservativeResize(Eigen::NoChange, q.cols() + 1);
    q.col(q.cols() - 1) = g / norm;
  }

  Mat hq(k_dim, r);
  for (Eigen::Index j = 0; j < r; ++j) {
    hq.col(j) = h_action(q.col(j));
    ++actions;
  }
  Mat t = q.transpose() * hq;
  t = Scalar(0.5) * (t + t.transpose());

  Eigen::SelfAdjointEigenSolver<Mat> eig(t);
  if (eig.info() != Eigen::Success) throw std::runtime_error("randomized_gevp: projected eigensolve failed");

  const auto order = detail::order_by_abs<Scalar>(eig.eigenvalues());
  GeneralizedEigenPairs<Scalar> pairs;
  pairs.rank_deficient = deficient;
  pairs.eigenvalues.resize(l);
  Mat s_l(r, l);
  for (Eigen::Index k = 0; k < l; ++k) {
    pairs.eigenvalues[k] = eig.eigenvalues()[order[k]];
    s_l.col(k) = eig.eigenvectors().col(order[k]);
  }
  pairs.eigenvectors = q * s_l;
  detail::fix_column_signs(pairs.eigenvectors);
  if (action_count) *action_count = actions;
  return pairs;
}

}  // namespace hessrb
