#include "hessrb/adjoints.hpp"

namespace hessrb {

namespace {

Vector extend_with_lift(const ParametricProblem& problem, const Vector& interior_values) {
  Vector u = problem.lift;
  for (size_t i = 0; i < problem.dofs.interior.size(); ++i)
    u[problem.dofs.interior[i]] += interior_values[static_cast<Index>(i)];
  return u;
}

}  // namespace

HessianOperator::HessianOperator(ProblemPtr problem, Vector anchor)
    : problem_(std::move(problem)), p_(std::move(anchor)) {
  const AssembledSystem sys = assemble_at(*problem_, p_);
  solver_.compute(sys.op_interior);
  u_ = extend_with_lift(*problem_, solver_.solve(sys.rhs_interior));
  v_ = problem_->dofs.extend(solver_.solve(problem_->dofs.restrict_interior(problem_->qoi)),
                             problem_->mesh->n_vertices());
  energy_uv_ = cell_energies(*problem_->mesh, u_, v_);
}

Vector HessianOperator::apply(const Vector& direction) const {
  ++actions_;
  const auto& problem = *problem_;
  const auto& mesh = *problem.mesh;

  // dA(p)[direction]: stiffness with the directional coefficient derivative
  const Vector dkappa = problem.coeff->cell_directional(p_, direction);
  const SparseSymMatrix da = assemble_stiffness(mesh, dkappa);

  // incremental adjoint: A vhat = dA v ; incremental state: A uhat = dA u
  const Vector vhat = problem.dofs.extend(solver_.solve(problem.dofs.restrict_interior(da.apply(v_))),
                                          mesh.n_vertices());
  const Vector uhat = problem.dofs.extend(solver_.solve(problem.dofs.restrict_interior(da.apply(u_))),
                                          mesh.n_vertices());

  const Vector energy = cell_energies(mesh, u_, vhat) + cell_energies(mesh, uhat, v_);
  Vector out = problem.coeff->param_gradient(p_, energy);
  if (!problem.coeff->linear_in_parameter())
    out -= problem.coeff->param_hessian_contraction(p_, direction, energy_uv_);
  return out;
}

Vector gradient(const ParametricProblem& problem, const Vector& p) {
  const AssembledSystem sys = assemble_at(problem, p);
  InteriorSolver solver(sys.op_interior);
  const Vector u = extend_with_lift(problem, solver.solve(sys.rhs_interior));
  const Vector v = problem.dofs.extend(solver.solve(problem.dofs.restrict_interior(problem.qoi)),
                                       problem.mesh->n_vertices());
  // g_k = d_k f(v) - d_k a(u,v); the load is parameter independent here
  return -problem.coeff->param_gradient(p, cell_energies(*problem.mesh, u, v));
}

Matrix full_hessian(const HessianOperator& op) {
  const Index n = op.problem().n_params;
  if (n > 4096)
    throw std::invalid_argument(
        "full_hessian: K > 4096; forming the dense Hessian needs 2K solves, use the randomized eigensolver");
  Matrix h(n, n);
  Vector e = Vector::Zero(n);
  for (Index k = 0; k < n; ++k) {
    e[k] = 1.0;
    h.col(k) = op.apply(e);
    e[k] = 0.0;
  }
  return 0.5 * (h + h.transpose());
}

Matrix full_hessian(const ParametricProblem& problem, const Vector& p) {
  // Non-retaining alias: the operator only lives for the duration of the call.
  ProblemPtr alias(&problem, [](const ParametricProblem*) {});
  HessianOperator op(alias, p);
  return full_hessian(op);
}

AveragedHessian::AveragedHessian(ProblemPtr problem, const std::vector<Vector>& samples) {
  if (samples.empty()) throw std::invalid_argument("AveragedHessian: need at least one sample");
  ops_.reserve(samples.size());
  for (const Vector& p : samples) ops_.push_back(std::make_unique<HessianOperator>(problem, p));
}

Vector AveragedHessian::apply(const Vector& direction) const {
  Vector out = ops_[0]->apply(direction);
  for (size_t m = 1; m < ops_.size(); ++m) out += ops_[m]->apply(direction);
  return out / static_cast<double>(ops_.size());
}

long AveragedHessian::actions() const {
  long n = 0;
  for (const auto& op : ops_) n += op->actions();
  return n;
}

long AveragedHessian::linear_solves() const {
  long n = 0;
  for (const auto& op : ops_) n += op->linear_solves();
  return n;
}

Vector averaged_hessian_action(const AveragedHessian& avg, const Vector& direction) {
  return avg.apply(direction);
}

}  // namespace hessrb
