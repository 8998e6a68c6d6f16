#include "hessrb/types.hpp"

namespace hessrb {

SparseSymMatrix make_sparse_sym(Index dim, const std::vector<Triplet>& triplets) {
  std::vector<Triplet> upper;
  upper.reserve(triplets.size());
  for (const auto& t : triplets) {
    if (!std::isfinite(t.value())) throw std::invalid_argument("make_sparse_sym: non-finite entry");
    if (t.row() <= t.col())
      upper.emplace_back(t.row(), t.col(), t.value());
    else
      upper.emplace_back(t.col(), t.row(), t.value());
  }
  SparseSymMatrix a;
  a.dim = dim;
  a.upper.resize(dim, dim);
  a.upper.setFromTriplets(upper.begin(), upper.end());
  a.upper.makeCompressed();
  return a;
}

SparseSymMatrix extract_submatrix(const SparseSymMatrix& a, const std::vector<Index>& keep) {
  Eigen::VectorXi map = Eigen::VectorXi::Constant(a.dim, -1);
  for (size_t i = 0; i < keep.size(); ++i) map[keep[i]] = static_cast<int>(i);

  std::vector<Triplet> triplets;
  for (Index k = 0; k < a.upper.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a.upper, k); it; ++it) {
      const int i = map[it.row()];
      const int j = map[it.col()];
      if (i >= 0 && j >= 0) triplets.emplace_back(i, j, it.value());
    }
  }
  SparseSymMatrix out;
  out.dim = static_cast<Index>(keep.size());
  out.upper.resize(out.dim, out.dim);
  out.upper.setFromTriplets(triplets.begin(), triplets.end());
  out.upper.makeCompressed();
  return out;
}

SparseSymMatrix weighted_term_sum(const std::vector<SparseSymMatrix>& terms, const Vector& weights) {
  if (terms.empty() || weights.size() != static_cast<Index>(terms.size()))
    throw std::invalid_argument("weighted_term_sum: terms/weights mismatch");
  SparseSymMatrix out;
  out.dim = terms[0].dim;
  out.upper = terms[0].upper;
  const Index nnz = out.upper.nonZeros();
  Eigen::Map<Vector> values(out.upper.valuePtr(), nnz);
  values *= weights[0];
  for (size_t q = 1; q < terms.size(); ++q) {
    if (terms[q].upper.nonZeros() != nnz || terms[q].dim != out.dim)
      throw std::invalid_argument("weighted_term_sum: terms do not share a pattern");
    values += weights[static_cast<Index>(q)] * Eigen::Map<const Vector>(terms[q].upper.valuePtr(), nnz);
  }
  return out;
}

Matrix dense_from_sym(const SparseSymMatrix& a) {
  Matrix up = Matrix(a.upper);
  Matrix full = up.selfadjointView<Eigen::Upper>();
  return full;
}

}  // namespace hessrb
