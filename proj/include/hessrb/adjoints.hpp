#pragma once

#include "hessrb/problem.hpp"

namespace hessrb {

/// Matrix-free Hessian of the QoI with respect to the parameter, anchored at
/// one parameter value. State, adjoint, and the operator factorization are
/// computed once; each action costs two extra triangular-solve pairs
/// (incremental adjoint and incremental state).
class HessianOperator {
 public:
  HessianOperator(ProblemPtr problem, Vector anchor);

  Vector apply(const Vector& direction) const;

  const Vector& anchor() const { return p_; }
  const Vector& state() const { return u_; }
  const Vector& adjoint() const { return v_; }
  const ParametricProblem& problem() const { return *problem_; }

  long actions() const { return actions_; }
  long linear_solves() const { return solver_.solves(); }

 private:
  ProblemPtr problem_;
  Vector p_, u_, v_;
  Vector energy_uv_;  // per-cell T grad(u).grad(v), reused by every action
  InteriorSolver solver_;
  mutable long actions_ = 0;
};

Vector gradient(const ParametricProblem& problem, const Vector& p);

inline Vector hessian_action(const HessianOperator& op, const Vector& direction) { return op.apply(direction); }

/// Dense K x K Hessian from K unit-direction actions, symmetrized as
/// (H + H^T)/2. Refuses K > 4096; use the randomized eigensolver instead.
Matrix full_hessian(const HessianOperator& op);
Matrix full_hessian(const ParametricProblem& problem, const Vector& p);

/// (1/M) sum of per-sample Hessians; the per-sample operators are cached.
class AveragedHessian {
 public:
  AveragedHessian(ProblemPtr problem, const std::vector<Vector>& samples);

  Vector apply(const Vector& direction) const;
  long actions() const;
  long linear_solves() const;
  Index size() const { return static_cast<Index>(ops_.size()); }
  const HessianOperator& term(Index m) const { return *ops_[m]; }

 private:
  std::vector<std::unique_ptr<HessianOperator>> ops_;
};

Vector averaged_hessian_action(const AveragedHessian& avg, const Vector& direction);

}  // namespace hessrb
