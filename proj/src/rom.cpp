#include "hessrb/rom.hpp"

#include <Eigen/SVD>

#include <iostream>

namespace hessrb {

namespace {

/// Norm factor B with X = B^T B (identity for the l2 norm). From the sparse
/// Cholesky X = P^{-1} L L^T P we take B = L^T P.
class NormFactor {
 public:
  NormFactor(const SparseSymMatrix& x, NormKind kind) : kind_(kind) {
    if (kind_ == NormKind::energy) {
      llt_ = std::make_shared<Eigen::SimplicialLLT<SparseMatrix, Eigen::Upper>>();
      llt_->compute(x.upper);
      if (llt_->info() != Eigen::Success) throw std::runtime_error("NormFactor: X is not SPD");
    }
  }

  Vector apply(const Vector& u) const {
    if (kind_ == NormKind::l2) return u;
    return llt_->matrixU() * (llt_->permutationP() * u);
  }

  Vector apply_inverse(const Vector& z) const {
    if (kind_ == NormKind::l2) return z;
    Vector y = llt_->matrixU().solve(z);
    return llt_->permutationPinv() * y;
  }

 private:
  NormKind kind_;
  std::shared_ptr<Eigen::SimplicialLLT<SparseMatrix, Eigen::Upper>> llt_;
};

std::vector<SparseSymMatrix> interior_terms(const ParametricProblem& problem) {
  std::vector<SparseSymMatrix> out;
  if (!problem.affine) return out;
  out.reserve(problem.affine->operator_terms.size());
  for (const auto& term : problem.affine->operator_terms)
    out.push_back(extract_submatrix(term, problem.dofs.interior));
  return out;
}

void project_affine_blocks(ReducedModel& model) {
  const ParametricProblem& problem = *model.problem;
  if (!problem.affine) return;
  const auto terms = interior_terms(problem);
  model.op_blocks.clear();
  model.rhs_blocks.clear();
  for (size_t q = 0; q < terms.size(); ++q) {
    const Matrix az = terms[q].upper.selfadjointView<Eigen::Upper>() * model.basis;
    model.op_blocks.push_back(model.basis.transpose() * az);
    model.rhs_blocks.push_back(model.basis.transpose() *
                               problem.dofs.restrict_interior(problem.affine->rhs_terms[q]));
  }
}

void project_dual_blocks(ReducedModel& model) {
  const ParametricProblem& problem = *model.problem;
  if (!problem.affine || !model.has_dual()) return;
  const auto terms = interior_terms(problem);
  model.dual_op_blocks.clear();
  model.cross_blocks.clear();
  model.dual_rhs_blocks.clear();
  for (size_t q = 0; q < terms.size(); ++q) {
    const Matrix aw = terms[q].upper.selfadjointView<Eigen::Upper>() * model.dual_basis;
    model.dual_op_blocks.push_back(model.dual_basis.transpose() * aw);
    model.cross_blocks.push_back(aw.transpose() * model.basis);  // W^T A^q Z
    model.dual_rhs_blocks.push_back(model.dual_basis.transpose() *
                                    problem.dofs.restrict_interior(problem.affine->rhs_terms[q]));
  }
  model.dual_qoi_block = model.dual_basis.transpose() * problem.dofs.restrict_interior(problem.qoi);
}

}  // namespace

Snapshots collect_snapshots(ProblemPtr problem, const std::vector<Vector>& training) {
  Snapshots snaps;
  snaps.problem = problem;
  std::vector<Vector> columns;
  for (size_t i = 0; i < training.size(); ++i) {
    try {
      Vector u = solve_state(*problem, training[i]);
      columns.push_back(problem->dofs.restrict_interior(u - problem->lift));
      snaps.parameters.push_back(training[i]);
    } catch (const std::exception& err) {
      std::cerr << "collect_snapshots: sample " << i << " skipped (" << err.what() << ")\n";
      snaps.failed.push_back(static_cast<Index>(i));
    }
  }
  snaps.u.resize(static_cast<Index>(problem->dofs.interior.size()), static_cast<Index>(columns.size()));
  for (size_t j = 0; j < columns.size(); ++j) snaps.u.col(static_cast<Index>(j)) = columns[j];
  return snaps;
}

ReducedModel pod_construct(const Snapshots& snapshots, double epsilon, Index n_max, NormKind norm) {
  if (snapshots.u.cols() == 0) throw std::invalid_argument("pod_construct: no snapshots");
  if (!(epsilon > 0) || epsilon >= 1) throw std::invalid_argument("pod_construct: need epsilon in (0,1)");
  if (snapshots.u.norm() == 0) throw std::invalid_argument("pod_construct: all-zero snapshot matrix");
  const ParametricProblem& problem = *snapshots.problem;

  NormFactor b(problem.v_metric_interior, norm);
  const Index nt = snapshots.u.cols();

  Vector sigma;
  Matrix basis;
  // The Gram route only resolves singular values down to sqrt(eps) * sigma_1,
  // so its numerical-rank cutoff is correspondingly coarser.
  double rank_tol = 1e-12;
  if (nt <= 2000) {
    Matrix bu(snapshots.u.rows(), nt);
    for (Index j = 0; j < nt; ++j) bu.col(j) = b.apply(snapshots.u.col(j));
    Eigen::BDCSVD<Matrix> svd(bu, Eigen::ComputeThinU);
    sigma = svd.singularValues();
    basis.resize(snapshots.u.rows(), sigma.size());
    for (Index j = 0; j < sigma.size(); ++j) basis.col(j) = b.apply_inverse(svd.matrixU().col(j));
  } else {
    // Gram-matrix route: eigendecomposition of U^T X U; basis = U w / sigma
    rank_tol = 1e-7;
    Matrix bu(snapshots.u.rows(), nt);
    for (Index j = 0; j < nt; ++j) bu.col(j) = b.apply(snapshots.u.col(j));
    Matrix gram = bu.transpose() * bu;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (gram + gram.transpose()));
    sigma.resize(nt);
    basis.resize(snapshots.u.rows(), nt);
    for (Index j = 0; j < nt; ++j) {
      const Index src = nt - 1 - j;  // descending
      const double mu = std::max(0.0, eig.eigenvalues()[src]);
      sigma[j] = std::sqrt(mu);
      if (sigma[j] > 0) basis.col(j) = snapshots.u * eig.eigenvectors().col(src) / sigma[j];
    }
  }

  Index rank = 0;
  for (Index i = 0; i < sigma.size(); ++i)
    if (sigma[i] > sigma[0] * rank_tol) ++rank;
  const double total = sigma.head(rank).squaredNorm();
  double cumulative = 0;
  Index n = rank;
  for (Index i = 0; i < rank; ++i) {
    cumulative += sigma[i] * sigma[i];
    if (cumulative / total >= 1.0 - epsilon) {
      n = i + 1;
      break;
    }
  }
  n = std::min(n, std::min(rank, n_max));

  ReducedModel model;
  model.problem = snapshots.problem;
  model.basis = basis.leftCols(n);
  model.singular_values = sigma.head(rank);
  model.norm = norm;
  model.epsilon = epsilon;
  model.qoi_block = model.basis.transpose() * problem.dofs.restrict_interior(problem.qoi);
  model.lift_qoi = problem.qoi.dot(problem.lift);
  project_affine_blocks(model);
  return model;
}

namespace {

/// X-orthonormalizes v against the columns of basis (two Gram-Schmidt passes);
/// returns false when v is numerically in the span.
bool orthonormalize_against(const SparseSymMatrix& x, const Matrix& basis, Index n_cols, Vector& v) {
  const double norm0 = x.norm_of(v);
  if (!(norm0 > 0)) return false;
  for (int pass = 0; pass < 2; ++pass) {
    const Vector xv = x.apply(v);
    if (n_cols > 0) v -= basis.leftCols(n_cols) * (basis.leftCols(n_cols).transpose() * xv);
  }
  const double norm = x.norm_of(v);
  if (!(norm > 1e-12 * norm0)) return false;
  v /= norm;
  return true;
}

}  // namespace

ReducedModel greedy_construct(ProblemPtr problem, const std::vector<Vector>& training, Index n_max,
                              double tol) {
  if (!problem->affine)
    throw std::invalid_argument(
        "greedy_construct: the dual-weighted residual indicator needs the affine decomposition; "
        "use pod_construct for nonaffine problems");
  if (training.empty()) throw std::invalid_argument("greedy_construct: empty training set");

  const ParametricProblem& prob = *problem;
  const auto& affine = *prob.affine;
  const Index q_a = static_cast<Index>(affine.operator_terms.size());
  const Index q_f = static_cast<Index>(affine.rhs_terms.size());
  const Index n_cand = static_cast<Index>(training.size());
  const auto terms = interior_terms(prob);
  const Vector s_interior = prob.dofs.restrict_interior(prob.qoi);
  const SparseSymMatrix& x = prob.v_metric_interior;
  const Index ni = static_cast<Index>(prob.dofs.interior.size());

  std::vector<Vector> f_interior(q_f);
  for (Index q = 0; q < q_f; ++q) f_interior[q] = prob.dofs.restrict_interior(affine.rhs_terms[q]);

  Matrix theta_a(q_a, n_cand), theta_f(q_f, n_cand);
  for (Index i = 0; i < n_cand; ++i) {
    theta_a.col(i) = affine.operator_coeffs(training[i]);
    theta_f.col(i) = affine.rhs_coeffs(training[i]);
  }

  ReducedModel model;
  model.problem = problem;
  model.norm = NormKind::energy;
  model.basis.resize(ni, 0);
  model.dual_basis.resize(ni, 0);
  model.op_blocks.assign(q_a, Matrix());
  model.cross_blocks.assign(q_a, Matrix());
  model.dual_op_blocks.assign(q_a, Matrix());
  model.rhs_blocks.assign(q_f, Vector());
  model.dual_rhs_blocks.assign(q_f, Vector());
  model.lift_qoi = prob.qoi.dot(prob.lift);

  auto enrich = [&](Index pick) {
    const AssembledSystem sys = assemble_at(prob, training[pick]);
    InteriorSolver solver(sys.op_interior);
    Vector z = solver.solve(sys.rhs_interior);
    Vector w = solver.solve(s_interior);
    const Index n = model.rank();
    const Index nd = model.dual_rank();
    if (orthonormalize_against(x, model.basis, n, z)) {
      model.basis.conservativeResize(Eigen::NoChange, n + 1);
      model.basis.col(n) = z;
      for (Index q = 0; q < q_a; ++q) {
        const Vector az = terms[q].apply(z);
        model.op_blocks[q].conservativeResize(n + 1, n + 1);
        model.op_blocks[q].col(n).head(n) = model.basis.leftCols(n).transpose() * az;
        model.op_blocks[q].row(n).head(n) = model.op_blocks[q].col(n).head(n).transpose();
        model.op_blocks[q](n, n) = z.dot(az);
        model.cross_blocks[q].conservativeResize(nd, n + 1);
        if (nd > 0) model.cross_blocks[q].col(n) = model.dual_basis.transpose() * az;
      }
      for (Index q = 0; q < q_f; ++q) {
        model.rhs_blocks[q].conservativeResize(n + 1);
        model.rhs_blocks[q][n] = z.dot(f_interior[q]);
      }
      model.qoi_block.conservativeResize(n + 1);
      model.qoi_block[n] = z.dot(s_interior);
    }
    const Index n2 = model.rank();
    if (orthonormalize_against(x, model.dual_basis, nd, w)) {
      model.dual_basis.conservativeResize(Eigen::NoChange, nd + 1);
      model.dual_basis.col(nd) = w;
      for (Index q = 0; q < q_a; ++q) {
        const Vector aw = terms[q].apply(w);
        model.dual_op_blocks[q].conservativeResize(nd + 1, nd + 1);
        model.dual_op_blocks[q].col(nd).head(nd) = model.dual_basis.leftCols(nd).transpose() * aw;
        model.dual_op_blocks[q].row(nd).head(nd) = model.dual_op_blocks[q].col(nd).head(nd).transpose();
        model.dual_op_blocks[q](nd, nd) = w.dot(aw);
        model.cross_blocks[q].conservativeResize(nd + 1, n2);
        model.cross_blocks[q].row(nd) = (model.basis.transpose() * aw).transpose();
      }
      for (Index q = 0; q < q_f; ++q) {
        model.dual_rhs_blocks[q].conservativeResize(nd + 1);
        model.dual_rhs_blocks[q][nd] = w.dot(f_interior[q]);
      }
      model.dual_qoi_block.conservativeResize(nd + 1);
      model.dual_qoi_block[nd] = w.dot(s_interior);
    }
    model.selected.push_back(pick);
  };

  enrich(0);  // initialize with the first training sample

  while (model.rank() < n_max) {
    const Index n = model.rank();
    const Index nd = model.dual_rank();
    double best = -1;
    Index best_idx = -1;
    for (Index i = 0; i < n_cand; ++i) {
      Matrix a_n = Matrix::Zero(n, n);
      Matrix a_w = Matrix::Zero(nd, nd);
      for (Index q = 0; q < q_a; ++q) {
        a_n += theta_a(q, i) * model.op_blocks[q];
        a_w += theta_a(q, i) * model.dual_op_blocks[q];
      }
      Vector rhs = Vector::Zero(n);
      for (Index q = 0; q < q_f; ++q) rhs += theta_f(q, i) * model.rhs_blocks[q];
      const Vector u_n = a_n.ldlt().solve(rhs);
      const Vector psi = a_w.ldlt().solve(model.dual_qoi_block);
      double r = 0;
      for (Index q = 0; q < q_f; ++q) r += theta_f(q, i) * model.dual_rhs_blocks[q].dot(psi);
      for (Index q = 0; q < q_a; ++q) r -= theta_a(q, i) * psi.dot(model.cross_blocks[q] * u_n);
      const double delta = std::abs(r);
      if (delta > best) {  // strict comparison: ties resolve to the lowest index
        best = delta;
        best_idx = i;
      }
    }
    if (best <= tol) break;
    const Index before = model.rank();
    enrich(best_idx);
    if (model.rank() == before) break;  // candidate added nothing new
  }
  return model;
}

Vector rb_solve(const ReducedModel& model, const Vector& p, Index n) {
  if (n < 0) n = model.rank();
  if (n > model.rank()) throw std::invalid_argument("rb_solve: truncation above model rank");
  if (n == 0) return Vector();

  Matrix a;
  Vector rhs;
  if (model.affine()) {
    const auto& affine = *model.problem->affine;
    const Vector ta = affine.operator_coeffs(p);
    const Vector tf = affine.rhs_coeffs(p);
    a = Matrix::Zero(n, n);
    for (size_t q = 0; q < model.op_blocks.size(); ++q)
      a += ta[static_cast<Index>(q)] * model.op_blocks[q].topLeftCorner(n, n);
    rhs = Vector::Zero(n);
    for (size_t q = 0; q < model.rhs_blocks.size(); ++q)
      rhs += tf[static_cast<Index>(q)] * model.rhs_blocks[q].head(n);
  } else {
    const AssembledSystem sys = assemble_at(*model.problem, p);
    const auto z = model.basis.leftCols(n);
    a = z.transpose() * (sys.op_interior.upper.selfadjointView<Eigen::Upper>() * z);
    rhs = z.transpose() * sys.rhs_interior;
  }
  Eigen::LDLT<Matrix> ldlt(a);
  Vector u = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || !u.allFinite())
    throw std::runtime_error("rb_solve: singular reduced matrix (basis degeneracy)");
  return u;
}

double rb_qoi(const ReducedModel& model, const Vector& u_n) {
  return model.lift_qoi + model.qoi_block.head(u_n.size()).dot(u_n);
}

Vector reconstruct(const ReducedModel& model, const Vector& u_n) {
  const ParametricProblem& problem = *model.problem;
  Vector full = problem.lift;
  if (u_n.size() > 0) {
    const Vector interior = model.basis.leftCols(u_n.size()) * u_n;
    for (size_t i = 0; i < problem.dofs.interior.size(); ++i)
      full[problem.dofs.interior[i]] += interior[static_cast<Index>(i)];
  }
  return full;
}

double error_indicator(const ReducedModel& model, const Vector& p, Index n) {
  if (!model.affine()) throw std::logic_error("error_indicator: affine blocks required");
  if (!model.has_dual()) throw std::logic_error("error_indicator: dual blocks missing");
  if (n < 0) n = model.rank();
  // Greedy bases grow in lockstep and truncate together; an expanded dual
  // space (dual_rank > rank) is used whole.
  const Index nd = model.dual_rank() <= model.rank() ? std::min(n, model.dual_rank()) : model.dual_rank();

  const Vector u_n = rb_solve(model, p, n);
  const auto& affine = *model.problem->affine;
  const Vector ta = affine.operator_coeffs(p);
  const Vector tf = affine.rhs_coeffs(p);

  Matrix a_w = Matrix::Zero(nd, nd);
  for (size_t q = 0; q < model.dual_op_blocks.size(); ++q)
    a_w += ta[static_cast<Index>(q)] * model.dual_op_blocks[q].topLeftCorner(nd, nd);
  const Vector psi = a_w.ldlt().solve(model.dual_qoi_block.head(nd));

  double r = 0;
  for (size_t q = 0; q < model.dual_rhs_blocks.size(); ++q)
    r += tf[static_cast<Index>(q)] * model.dual_rhs_blocks[q].head(nd).dot(psi);
  for (size_t q = 0; q < model.cross_blocks.size(); ++q)
    r -= ta[static_cast<Index>(q)] * psi.dot(model.cross_blocks[q].topLeftCorner(nd, n) * u_n);
  return std::abs(r);
}

void expand_dual_to_full(ReducedModel& model) {
  const ParametricProblem& problem = *model.problem;
  const Index ni = static_cast<Index>(problem.dofs.interior.size());
  if (ni > 4000) throw std::invalid_argument("expand_dual_to_full: diagnostic only, interior dim too large");
  NormFactor b(problem.v_metric_interior, model.norm);
  model.dual_basis.resize(ni, ni);
  Vector e = Vector::Zero(ni);
  for (Index j = 0; j < ni; ++j) {
    e[j] = 1.0;
    model.dual_basis.col(j) = b.apply_inverse(e);  // columns of B^{-1} are X-orthonormal
    e[j] = 0.0;
  }
  project_dual_blocks(model);
}

}  // namespace hessrb
