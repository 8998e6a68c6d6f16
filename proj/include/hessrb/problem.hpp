#pragma once

#include "hessrb/assembly.hpp"

#include <Eigen/SparseCholesky>

#include <functional>
#include <memory>
#include <optional>
#include <random>

namespace hessrb {

/// Factorized SPD operator on a dof subset; counts triangular solves.
class InteriorSolver {
 public:
  InteriorSolver() = default;
  explicit InteriorSolver(const SparseSymMatrix& a) { compute(a); }
  void compute(const SparseSymMatrix& a);
  Vector solve(const Vector& rhs) const;
  long solves() const { return count_; }

 private:
  std::shared_ptr<Eigen::SimplicialLLT<SparseMatrix, Eigen::Upper>> llt_;
  mutable long count_ = 0;
};

enum class DistributionKind { uniform_box, gaussian_field };

/// Gaussian field with precision C^{-1} = A M^{-1} A, A = delta*stiffness + gamma*mass.
class GaussianFieldPrecision {
 public:
  GaussianFieldPrecision(SparseSymMatrix a_prec, SparseSymMatrix mass, bool lumped_mass_factor);

  const SparseSymMatrix& precision_factor() const { return a_prec_; }
  const SparseSymMatrix& mass() const { return mass_; }

  Vector apply_cinv(const Vector& x) const;  // A M^{-1} A x
  Vector apply_c(const Vector& x) const;     // A^{-1} M A^{-1} x
  Vector solve_precision_factor(const Vector& x) const;  // A^{-1} x
  /// F xi with F F^T = M (sparse Cholesky factor, or lumped diagonal).
  Vector apply_mass_factor(const Vector& xi) const;
  /// T x with T^T T = C^{-1}; used to orthonormalize vector collections in C^{-1}.
  Vector apply_whitening(const Vector& x) const;

 private:
  SparseSymMatrix a_prec_, mass_;
  bool lumped_;
  Vector lumped_sqrt_;
  std::shared_ptr<Eigen::SimplicialLLT<SparseMatrix, Eigen::Upper>> llt_a_, llt_m_;
};

struct ParameterDistribution {
  DistributionKind kind = DistributionKind::uniform_box;
  Index dimension = 0;
  Vector mean;
  std::shared_ptr<const GaussianFieldPrecision> field;  // gaussian only

  Vector apply_cinv(const Vector& x) const { return kind == DistributionKind::uniform_box ? x : field->apply_cinv(x); }
  Vector apply_c(const Vector& x) const { return kind == DistributionKind::uniform_box ? x : field->apply_c(x); }
};

/// One sample from the distribution; uniform coordinates are iid on
/// [-sqrt(3), sqrt(3)] (unit variance), gaussian samples are
/// mean + A^{-1} F xi with F F^T = M.
Vector sample_parameter(const ParameterDistribution& dist, std::mt19937_64& rng);

struct AffineExpansion {
  std::vector<SparseSymMatrix> operator_terms;           // shared pattern
  std::vector<Vector> rhs_terms;                         // full length, zero at constrained rows
  std::function<Vector(const Vector&)> operator_coeffs;  // theta_a(p)
  std::function<Vector(const Vector&)> rhs_coeffs;       // theta_f(p)
};

/// Parameter-to-cell-coefficient map with the derivative contractions the
/// adjoint machinery needs. kappa(p) is piecewise constant per cell.
class CoefficientMap {
 public:
  virtual ~CoefficientMap() = default;
  virtual Vector cell_values(const Vector& p) const = 0;
  /// d kappa / dp applied to a direction, per cell.
  virtual Vector cell_directional(const Vector& p, const Vector& dir) const = 0;
  /// sum_c w_c * d kappa_c / dp_k, for per-cell weights w.
  virtual Vector param_gradient(const Vector& p, const Vector& cell_weights) const = 0;
  /// sum_c w_c * (d^2 kappa_c dir)_k; zero when kappa is linear in p.
  virtual Vector param_hessian_contraction(const Vector& p, const Vector& dir, const Vector& cell_weights) const = 0;
  virtual bool linear_in_parameter() const = 0;
  virtual std::unique_ptr<CoefficientMap> clone() const = 0;
};

struct InteriorMap {
  std::vector<Index> interior;
  Eigen::VectorXi full_to_interior;  // -1 for constrained dofs

  Vector restrict_interior(const Vector& full) const;
  Vector extend(const Vector& interior_values, Index full_dim) const;  // zeros at constrained
};

struct ParametricProblem {
  std::shared_ptr<const Mesh> mesh;
  ParameterDistribution distribution;
  Index n_params = 0;

  Vector qoi;             // s_h, full length
  Vector lift;            // boundary data carrier, full length
  std::vector<Index> constrained;
  InteriorMap dofs;
  Vector source;          // p-independent load vector, full length

  std::optional<AffineExpansion> affine;
  std::unique_ptr<const CoefficientMap> coeff;

  SparseSymMatrix v_metric;           // unit-coefficient stiffness (full), V-seminorm
  SparseSymMatrix v_metric_interior;  // SPD on interior dofs

  double v_norm(const Vector& full) const { return v_metric.norm_of(full); }
};

using ProblemPtr = std::shared_ptr<const ParametricProblem>;

/// Piecewise-uniform diffusion on a sqrt(K) x sqrt(K) subdomain grid:
/// kappa = kappa0 + sum_k k^{-beta} chi_k p_k, p ~ U[-sqrt3, sqrt3]^K,
/// Dirichlet u=1 on the bottom edge and u=0 on the top edge.
ProblemPtr make_uniform_piecewise_problem(int n_per_side, Index K, double kappa0, double beta);

/// Log-normal diffusion kappa = exp(p) with p a Gaussian field whose
/// covariance is (-delta Lap + gamma I)^{-alpha}; source 1, homogeneous
/// Dirichlet boundary. Only alpha = 2 is supported.
ProblemPtr make_lognormal_problem(int n_per_side, double gamma, double delta, int alpha,
                                  bool lumped_mass_factor = false);

/// Same PDE and distribution, different QoI vector.
ProblemPtr with_qoi_vector(const ParametricProblem& problem, Vector qoi);

struct AssembledSystem {
  SparseSymMatrix op_interior;
  Vector rhs_interior;
};

/// Operator/rhs with Dirichlet elimination applied. The affine path sums the
/// theta-weighted terms; otherwise the coefficient map drives a cellwise build.
AssembledSystem assemble_at(const ParametricProblem& problem, const Vector& p);

/// Full-pattern operator without boundary conditions.
SparseSymMatrix assemble_full_operator(const ParametricProblem& problem, const Vector& p);

Vector solve_state(const ParametricProblem& problem, const Vector& p);
Vector solve_adjoint(const ParametricProblem& problem, const Vector& p);

inline double eval_qoi(const ParametricProblem& problem, const Vector& u) { return problem.qoi.dot(u); }

/// FNV-style mix for named, reproducible seed streams.
uint64_t substream(uint64_t seed, std::string_view name);

}  // namespace hessrb
