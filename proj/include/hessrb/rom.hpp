#pragma once

#include "hessrb/problem.hpp"

namespace hessrb {

enum class NormKind { energy, l2 };

/// Homogenized high-fidelity solutions at the training parameters; columns are
/// lift-subtracted and restricted to interior dofs.
struct Snapshots {
  ProblemPtr problem;
  std::vector<Vector> parameters;  // successful solves only
  Matrix u;                        // n_interior x N_t
  std::vector<Index> failed;       // indices into the requested set that were skipped
};

Snapshots collect_snapshots(ProblemPtr problem, const std::vector<Vector>& training);

/// Galerkin reduced model. The primal basis is X-orthonormal on interior dofs;
/// affine problems carry projected operator/rhs blocks so online solves are
/// independent of the high-fidelity dimension. Greedy models also carry the
/// dual basis and the blocks of the dual-weighted residual indicator. Both
/// bases are nested, so truncation to the leading n vectors is a submatrix.
struct ReducedModel {
  ProblemPtr problem;
  Matrix basis;       // n_interior x N
  Matrix dual_basis;  // n_interior x N_dual

  std::vector<Matrix> op_blocks;   // Z^T A^q Z
  std::vector<Vector> rhs_blocks;  // Z^T f^q
  Vector qoi_block;                // Z^T s
  double lift_qoi = 0;             // s_h . lift

  std::vector<Matrix> dual_op_blocks;   // W^T A^q W
  std::vector<Matrix> cross_blocks;     // W^T A^q Z
  std::vector<Vector> dual_rhs_blocks;  // W^T f^q
  Vector dual_qoi_block;                // W^T s

  Vector singular_values;       // POD spectrum (retained range)
  std::vector<Index> selected;  // greedy pick order (indices into training set)
  NormKind norm = NormKind::energy;
  double epsilon = 0;

  Index rank() const { return basis.cols(); }
  Index dual_rank() const { return dual_basis.cols(); }
  bool affine() const { return !op_blocks.empty(); }
  bool has_dual() const { return dual_basis.cols() > 0; }
};

/// POD model: SVD of the norm-weighted snapshot matrix, truncated at energy
/// loss epsilon (fraction of squared singular value mass), capped at n_max.
ReducedModel pod_construct(const Snapshots& snapshots, double epsilon, Index n_max, NormKind norm);

/// Goal-oriented greedy driven by the dual-weighted residual indicator;
/// requires an affine problem. Initializes with the first training sample,
/// stops at n_max or when the maximal indicator drops to tol.
ReducedModel greedy_construct(ProblemPtr problem, const std::vector<Vector>& training, Index n_max,
                              double tol);

/// RB coefficients at p, truncated to the leading n basis vectors
/// (n < 0 means the full rank). n = 0 returns an empty vector (lift only).
Vector rb_solve(const ReducedModel& model, const Vector& p, Index n = -1);

double rb_qoi(const ReducedModel& model, const Vector& u_n);

/// Full-length solution including the lift.
Vector reconstruct(const ReducedModel& model, const Vector& u_n);

/// Dual-weighted residual |f(psi_N;p) - a(u_N, psi_N;p)| from the stored blocks.
double error_indicator(const ReducedModel& model, const Vector& p, Index n = -1);

/// Replaces the dual space by the full interior space (dense; diagnostic for
/// small instances — makes the indicator equal |s_h - s_N| up to roundoff).
void expand_dual_to_full(ReducedModel& model);

}  // namespace hessrb
