#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <stdexcept>
#include <vector>

namespace hessrb {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Sparse symmetric matrix; only the upper triangle (i <= j) is stored.
struct SparseSymMatrix {
  Index dim = 0;
  SparseMatrix upper;

  Vector apply(const Vector& x) const {
    return upper.selfadjointView<Eigen::Upper>() * x;
  }
  /// u^T A v
  double inner(const Vector& u, const Vector& v) const { return u.dot(apply(v)); }
  double norm_of(const Vector& u) const { return std::sqrt(std::max(0.0, inner(u, u))); }
  Index nonzeros() const { return upper.nonZeros(); }
};

/// Builds from triplets that may contain both (i,j) and (j,i); folds into the
/// upper triangle, summing duplicates in insertion order.
SparseSymMatrix make_sparse_sym(Index dim, const std::vector<Triplet>& triplets);

/// Keeps rows/columns listed in `keep` (ascending), reindexed to 0..keep.size()-1.
SparseSymMatrix extract_submatrix(const SparseSymMatrix& a, const std::vector<Index>& keep);

/// Weighted sum of terms that share one sparsity pattern (value-array arithmetic).
SparseSymMatrix weighted_term_sum(const std::vector<SparseSymMatrix>& terms, const Vector& weights);

Matrix dense_from_sym(const SparseSymMatrix& a);

}  // namespace hessrb
