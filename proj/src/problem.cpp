#include "hessrb/problem.hpp"

#include <cmath>
#include <iostream>

namespace hessrb {

void InteriorSolver::compute(const SparseSymMatrix& a) {
  llt_ = std::make_shared<Eigen::SimplicialLLT<SparseMatrix, Eigen::Upper>>();
  llt_->compute(a.upper);
  if (llt_->info() != Eigen::Success)
    throw std::runtime_error("InteriorSolver: factorization failed (singular or indefinite system)");
}

Vector InteriorSolver::solve(const Vector& rhs) const {
  if (!llt_) throw std::logic_error("InteriorSolver: solve before compute");
  ++count_;
  return llt_->solve(rhs);
}

GaussianFieldPrecision::GaussianFieldPrecision(SparseSymMatrix a_prec, SparseSymMatrix mass,
                                               bool lumped_mass_factor)
    : a_prec_(std::move(a_prec)),
      mass_(std::move(mass)),
      lumped_(lumped_mass_factor),
      llt_a_(std::make_shared<Eigen::SimplicialLLT<SparseMatrix, Eigen::Upper>>()),
      llt_m_(std::make_shared<Eigen::SimplicialLLT<SparseMatrix, Eigen::Upper>>()) {
  llt_a_->compute(a_prec_.upper);
  llt_m_->compute(mass_.upper);
  if (llt_a_->info() != Eigen::Success || llt_m_->info() != Eigen::Success)
    throw std::runtime_error("GaussianFieldPrecision: precision factors are not SPD");
  lumped_sqrt_ = mass_.apply(Vector::Ones(mass_.dim)).cwiseSqrt();
}

Vector GaussianFieldPrecision::apply_cinv(const Vector& x) const {
  return a_prec_.apply(llt_m_->solve(a_prec_.apply(x)));
}

Vector GaussianFieldPrecision::apply_c(const Vector& x) const {
  return llt_a_->solve(mass_.apply(llt_a_->solve(x)));
}

Vector GaussianFieldPrecision::solve_precision_factor(const Vector& x) const { return llt_a_->solve(x); }

Vector GaussianFieldPrecision::apply_mass_factor(const Vector& xi) const {
  if (lumped_) return lumped_sqrt_.cwiseProduct(xi);
  // M = P^{-1} L L^T P, factor F = P^{-1} L
  Vector y = llt_m_->matrixL() * xi;
  return llt_m_->permutationPinv() * y;
}

Vector GaussianFieldPrecision::apply_whitening(const Vector& x) const {
  Vector y = a_prec_.apply(x);
  y = llt_m_->permutationP() * y;
  return llt_m_->matrixL().solve(y);
}

Vector sample_parameter(const ParameterDistribution& dist, std::mt19937_64& rng) {
  Vector p(dist.dimension);
  if (dist.kind == DistributionKind::uniform_box) {
    const double b = std::sqrt(3.0);
    std::uniform_real_distribution<double> unif(-b, b);
    for (Index k = 0; k < dist.dimension; ++k) p[k] = unif(rng);
    return p;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector xi(dist.dimension);
  for (Index k = 0; k < dist.dimension; ++k) xi[k] = normal(rng);
  // p = mean + A^{-1} F xi, so Cov(p) = A^{-1} M A^{-1} = C
  return dist.mean + dist.field->solve_precision_factor(dist.field->apply_mass_factor(xi));
}

Vector InteriorMap::restrict_interior(const Vector& full) const {
  Vector out(static_cast<Index>(interior.size()));
  for (size_t i = 0; i < interior.size(); ++i) out[static_cast<Index>(i)] = full[interior[i]];
  return out;
}

Vector InteriorMap::extend(const Vector& interior_values, Index full_dim) const {
  Vector out = Vector::Zero(full_dim);
  for (size_t i = 0; i < interior.size(); ++i) out[interior[i]] = interior_values[static_cast<Index>(i)];
  return out;
}

namespace {

InteriorMap build_interior_map(Index n, const std::vector<Index>& constrained) {
  InteriorMap map;
  map.full_to_interior = Eigen::VectorXi::Constant(n, -1);
  std::vector<bool> is_constrained(n, false);
  for (Index v : constrained) is_constrained[v] = true;
  for (Index v = 0; v < n; ++v) {
    if (!is_constrained[v]) {
      map.full_to_interior[v] = static_cast<int>(map.interior.size());
      map.interior.push_back(v);
    }
  }
  return map;
}

class UniformPiecewiseMap final : public CoefficientMap {
 public:
  UniformPiecewiseMap(Eigen::VectorXi cell_subdomain, Vector weights, double kappa0)
      : cell_subdomain_(std::move(cell_subdomain)), weights_(std::move(weights)), kappa0_(kappa0) {}

  Vector cell_values(const Vector& p) const override {
    Vector out(cell_subdomain_.size());
    for (Index c = 0; c < out.size(); ++c) {
      const Index k = cell_subdomain_[c];
      out[c] = kappa0_ + weights_[k] * p[k];
    }
    return out;
  }

  Vector cell_directional(const Vector&, const Vector& dir) const override {
    Vector out(cell_subdomain_.size());
    for (Index c = 0; c < out.size(); ++c) {
      const Index k = cell_subdomain_[c];
      out[c] = weights_[k] * dir[k];
    }
    return out;
  }

  Vector param_gradient(const Vector&, const Vector& cell_weights) const override {
    Vector out = Vector::Zero(weights_.size());
    for (Index c = 0; c < cell_subdomain_.size(); ++c) out[cell_subdomain_[c]] += cell_weights[c];
    return out.cwiseProduct(weights_);
  }

  Vector param_hessian_contraction(const Vector&, const Vector&, const Vector&) const override {
    return Vector::Zero(weights_.size());
  }

  bool linear_in_parameter() const override { return true; }

  std::unique_ptr<CoefficientMap> clone() const override {
    return std::make_unique<UniformPiecewiseMap>(cell_subdomain_, weights_, kappa0_);
  }

 private:
  Eigen::VectorXi cell_subdomain_;
  Vector weights_;  // k^{-beta}, 1-based k
  double kappa0_;
};

class LognormalNodalMap final : public CoefficientMap {
 public:
  explicit LognormalNodalMap(std::shared_ptr<const Mesh> mesh) : mesh_(std::move(mesh)) {}

  Vector cell_values(const Vector& p) const override {
    return cell_means(*mesh_, p).array().exp();
  }

  Vector cell_directional(const Vector& p, const Vector& dir) const override {
    return cell_values(p).cwiseProduct(cell_means(*mesh_, dir));
  }

  Vector param_gradient(const Vector& p, const Vector& cell_weights) const override {
    return scatter(cell_values(p).cwiseProduct(cell_weights));
  }

  Vector param_hessian_contraction(const Vector& p, const Vector& dir, const Vector& cell_weights) const override {
    return scatter(cell_directional(p, dir).cwiseProduct(cell_weights));
  }

  bool linear_in_parameter() const override { return false; }

  std::unique_ptr<CoefficientMap> clone() const override { return std::make_unique<LognormalNodalMap>(mesh_); }

 private:
  Vector scatter(const Vector& per_cell) const {
    Vector out = Vector::Zero(mesh_->n_vertices());
    for (Index c = 0; c < mesh_->n_cells(); ++c) {
      const double w = per_cell[c] / 3.0;
      for (int a = 0; a < 3; ++a) out[mesh_->cells(c, a)] += w;
    }
    return out;
  }

  std::shared_ptr<const Mesh> mesh_;
};

void finalize_metric(ParametricProblem& problem) {
  problem.v_metric = assemble_unit_stiffness(*problem.mesh);
  problem.v_metric_interior = extract_submatrix(problem.v_metric, problem.dofs.interior);
}

}  // namespace

ProblemPtr make_uniform_piecewise_problem(int n_per_side, Index K, double kappa0, double beta) {
  const auto root = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(K))));
  if (root * root != K || K < 1) throw std::invalid_argument("uniform problem: K must be a perfect square");
  if ((n_per_side - 1) % root != 0)
    throw std::invalid_argument("uniform problem: sqrt(K) must divide the cells into K equal squares");

  Vector weights(K);
  for (Index k = 0; k < K; ++k) weights[k] = std::pow(static_cast<double>(k + 1), -beta);
  const double bound = std::sqrt(3.0) * weights.maxCoeff();
  if (kappa0 <= bound)
    throw std::invalid_argument("uniform problem: kappa0 too small, coefficient can reach zero in the box");

  auto problem = std::make_shared<ParametricProblem>();
  auto mesh = std::make_shared<Mesh>(build_uniform_mesh(n_per_side));
  problem->mesh = mesh;
  problem->n_params = K;

  // subdomain of each cell; k walks the bottom row of squares first, so the
  // strongest weights k^{-beta} sit nearest the QoI corner
  const double width = 1.0 / static_cast<double>(root);
  Eigen::VectorXi cell_subdomain(mesh->n_cells());
  std::vector<std::vector<Index>> members(K);
  for (Index c = 0; c < mesh->n_cells(); ++c) {
    const Eigen::Vector2d x = mesh->centroid(c);
    const Index i = std::min<Index>(root - 1, static_cast<Index>(x.x() / width));
    const Index j = std::min<Index>(root - 1, static_cast<Index>(x.y() / width));
    cell_subdomain[c] = static_cast<int>(j * root + i);
    members[cell_subdomain[c]].push_back(c);
  }

  auto lift = dirichlet_lift(*mesh, {{BoundaryTag::bottom, 1.0}, {BoundaryTag::top, 0.0}});
  problem->lift = lift.values;
  problem->constrained = lift.constrained;
  problem->dofs = build_interior_map(mesh->n_vertices(), problem->constrained);
  problem->source = Vector::Zero(mesh->n_vertices());
  problem->qoi = assemble_qoi_vector(*mesh, Box{0.0, 0.0, 0.1, 0.1});

  AffineExpansion affine;
  affine.operator_terms.reserve(K + 1);
  affine.operator_terms.push_back(assemble_unit_stiffness(*mesh));
  for (Index k = 0; k < K; ++k) affine.operator_terms.push_back(assemble_subdomain_stiffness(*mesh, members[k]));

  for (const auto& term : affine.operator_terms) {
    Vector f = -term.apply(problem->lift);
    for (Index v : problem->constrained) f[v] = 0.0;
    affine.rhs_terms.push_back(std::move(f));
  }

  auto theta = [kappa0, weights, K](const Vector& p) {
    Vector t(K + 1);
    t[0] = kappa0;
    t.tail(K) = weights.cwiseProduct(p);
    return t;
  };
  affine.operator_coeffs = theta;
  affine.rhs_coeffs = theta;
  problem->affine = std::move(affine);
  problem->coeff = std::make_unique<UniformPiecewiseMap>(cell_subdomain, weights, kappa0);

  problem->distribution.kind = DistributionKind::uniform_box;
  problem->distribution.dimension = K;
  problem->distribution.mean = Vector::Zero(K);

  finalize_metric(*problem);
  return problem;
}

ProblemPtr make_lognormal_problem(int n_per_side, double gamma, double delta, int alpha,
                                  bool lumped_mass_factor) {
  if (alpha != 2) throw std::invalid_argument("lognormal problem: only alpha = 2 is supported");
  if (gamma <= 0 || delta <= 0) throw std::invalid_argument("lognormal problem: gamma, delta must be positive");

  auto problem = std::make_shared<ParametricProblem>();
  auto mesh = std::make_shared<Mesh>(build_uniform_mesh(n_per_side));
  problem->mesh = mesh;
  problem->n_params = mesh->n_vertices();

  SparseSymMatrix stiffness = assemble_unit_stiffness(*mesh);
  SparseSymMatrix mass = assemble_mass(*mesh);
  SparseSymMatrix a_prec = weighted_term_sum({stiffness, mass}, Eigen::Vector2d(delta, gamma));

  problem->distribution.kind = DistributionKind::gaussian_field;
  problem->distribution.dimension = problem->n_params;
  problem->distribution.mean = Vector::Zero(problem->n_params);
  problem->distribution.field =
      std::make_shared<GaussianFieldPrecision>(std::move(a_prec), mass, lumped_mass_factor);

  auto lift = dirichlet_lift(*mesh, {{BoundaryTag::bottom, 0.0},
                                     {BoundaryTag::top, 0.0},
                                     {BoundaryTag::left, 0.0},
                                     {BoundaryTag::right, 0.0}});
  problem->lift = lift.values;
  problem->constrained = lift.constrained;
  problem->dofs = build_interior_map(mesh->n_vertices(), problem->constrained);

  Vector load = mass.apply(Vector::Ones(mesh->n_vertices()));  // source g = 1
  for (Index v : problem->constrained) load[v] = 0.0;
  problem->source = std::move(load);
  problem->qoi = assemble_qoi_vector(*mesh, Box{0.0, 0.0, 0.1, 0.1});
  problem->coeff = std::make_unique<LognormalNodalMap>(mesh);

  finalize_metric(*problem);
  return problem;
}

ProblemPtr with_qoi_vector(const ParametricProblem& problem, Vector qoi) {
  if (qoi.size() != problem.mesh->n_vertices())
    throw std::invalid_argument("with_qoi_vector: dimension mismatch");
  auto out = std::make_shared<ParametricProblem>();
  out->mesh = problem.mesh;
  out->distribution = problem.distribution;
  out->n_params = problem.n_params;
  out->qoi = std::move(qoi);
  out->lift = problem.lift;
  out->constrained = problem.constrained;
  out->dofs = problem.dofs;
  out->source = problem.source;
  out->affine = problem.affine;
  out->coeff = problem.coeff->clone();
  out->v_metric = problem.v_metric;
  out->v_metric_interior = problem.v_metric_interior;
  return out;
}

SparseSymMatrix assemble_full_operator(const ParametricProblem& problem, const Vector& p) {
  if (p.size() != problem.n_params) throw std::invalid_argument("assemble: parameter dimension mismatch");
  if (problem.affine) return weighted_term_sum(problem.affine->operator_terms, problem.affine->operator_coeffs(p));
  return assemble_stiffness(*problem.mesh, problem.coeff->cell_values(p));
}

AssembledSystem assemble_at(const ParametricProblem& problem, const Vector& p) {
  if (p.size() != problem.n_params) throw std::invalid_argument("assemble_at: parameter dimension mismatch");

  if (problem.distribution.kind == DistributionKind::uniform_box) {
    const double b = std::sqrt(3.0) + 1e-12;
    if ((p.array().abs() > b).any())
      std::cerr << "assemble_at: parameter outside the distribution box (|p|max = "
                << p.array().abs().maxCoeff() << ")\n";
  }

  const Vector kappa = problem.coeff->cell_values(p);
  for (Index c = 0; c < kappa.size(); ++c) {
    if (!(kappa[c] > 0))
      throw std::runtime_error("assemble_at: nonpositive diffusion coefficient at cell " + std::to_string(c));
  }

  SparseSymMatrix full = assemble_full_operator(problem, p);

  Vector rhs_full = problem.source;
  if (problem.affine) {
    const Vector tf = problem.affine->rhs_coeffs(p);
    for (size_t q = 0; q < problem.affine->rhs_terms.size(); ++q)
      rhs_full += tf[static_cast<Index>(q)] * problem.affine->rhs_terms[q];
  } else {
    Vector au = full.apply(problem.lift);
    for (Index v : problem.constrained) au[v] = 0.0;
    rhs_full -= au;
  }

  AssembledSystem sys;
  sys.op_interior = extract_submatrix(full, problem.dofs.interior);
  sys.rhs_interior = problem.dofs.restrict_interior(rhs_full);
  return sys;
}

Vector solve_state(const ParametricProblem& problem, const Vector& p) {
  const AssembledSystem sys = assemble_at(problem, p);
  InteriorSolver solver(sys.op_interior);
  const Vector ui = solver.solve(sys.rhs_interior);
  Vector u = problem.lift;
  for (size_t i = 0; i < problem.dofs.interior.size(); ++i)
    u[problem.dofs.interior[i]] += ui[static_cast<Index>(i)];
  return u;
}

Vector solve_adjoint(const ParametricProblem& problem, const Vector& p) {
  const AssembledSystem sys = assemble_at(problem, p);
  InteriorSolver solver(sys.op_interior);
  const Vector vi = solver.solve(problem.dofs.restrict_interior(problem.qoi));
  return problem.dofs.extend(vi, problem.mesh->n_vertices());
}

uint64_t substream(uint64_t seed, std::string_view name) {
  uint64_t h = 1469598103934665603ull;
  for (const char ch : name) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  uint64_t z = seed ^ h;
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace hessrb
