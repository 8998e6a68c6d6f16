#pragma once

#include "hessrb/adjoints.hpp"
#include "hessrb/gevp.hpp"

namespace hessrb {

enum class SamplingMode { project_full_sample, gaussian_direct };
enum class GevpMethod { randomized, dense };
enum class MultiQoiStrategy { averaged, concat_svd };

struct SubspaceBuildStats {
  long hessian_actions = 0;
  long state_solves = 0;
  long adjoint_solves = 0;
  long linear_solves = 0;
};

/// Training-sample generator restricted to the span of C^{-1}-orthonormal
/// basis columns. Uniform problems project full distribution draws; Gaussian
/// problems sample the subspace coordinates directly as iid standard normals.
struct SubspaceSampler {
  Matrix basis;  // K x L
  Vector eigenvalues;
  ParameterDistribution distribution;
  SamplingMode mode = SamplingMode::project_full_sample;
  bool rank_deficient = false;
  SubspaceBuildStats stats;

  Index rank() const { return basis.cols(); }
};

/// mean + Phi Phi^T C^{-1} (p - mean)
Vector project_to_subspace(const SubspaceSampler& sampler, const Vector& p);

std::vector<Vector> draw_training_set(const SubspaceSampler& sampler, Index n_train, uint64_t seed);

/// Plain distribution sampling (the random baseline scheme).
std::vector<Vector> draw_distribution_samples(const ParameterDistribution& dist, Index n, uint64_t seed);

SubspaceSampler build_local_subspace(ProblemPtr problem, Index l, Index c, uint64_t seed,
                                     GevpMethod method = GevpMethod::randomized);

SubspaceSampler build_averaged_subspace(ProblemPtr problem, Index m, Index l, Index c, uint64_t seed);
SubspaceSampler build_averaged_subspace(ProblemPtr problem, const std::vector<Vector>& samples, Index l,
                                        Index c, uint64_t seed);

SubspaceSampler build_combined_subspace(ProblemPtr problem, Index m, const std::vector<Index>& per_sample_l,
                                        Index l, Index c, uint64_t seed);
SubspaceSampler build_combined_subspace(ProblemPtr problem, const std::vector<Vector>& samples,
                                        const std::vector<Index>& per_sample_l, Index l, Index c,
                                        uint64_t seed);

/// Subspace for several quantities of interest sharing one state equation.
/// averaged: eigenpairs of the QoI-averaged Hessian (sample-averaged too when
/// m > 0); concat_svd: per-QoI eigenvectors weighted by sqrt|lambda|,
/// concatenated, then SVD-compressed in the C^{-1} metric. per_qoi_l controls
/// how many modes each QoI contributes to the concat route (default l).
SubspaceSampler build_multi_qoi_subspace(ProblemPtr problem, const std::vector<Vector>& qoi_vectors,
                                         MultiQoiStrategy strategy, Index l, Index c, uint64_t seed,
                                         Index m = 0, Index per_qoi_l = -1);

}  // namespace hessrb
