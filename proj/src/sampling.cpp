#include "hessrb/sampling.hpp"

namespace hessrb {

namespace {

VectorAction<double> cinv_action_of(const ParameterDistribution& dist) {
  return [&dist](const Vector& x) { return dist.apply_cinv(x); };
}

VectorAction<double> c_action_of(const ParameterDistribution& dist) {
  return [&dist](const Vector& x) { return dist.apply_c(x); };
}

Matrix dense_cinv(const ParameterDistribution& dist) {
  const Index k = dist.dimension;
  if (dist.kind == DistributionKind::uniform_box) return Matrix::Identity(k, k);
  Matrix cinv(k, k);
  Vector e = Vector::Zero(k);
  for (Index j = 0; j < k; ++j) {
    e[j] = 1.0;
    cinv.col(j) = dist.apply_cinv(e);
    e[j] = 0.0;
  }
  return 0.5 * (cinv + cinv.transpose());
}

SamplingMode default_mode(const ParameterDistribution& dist) {
  return dist.kind == DistributionKind::gaussian_field ? SamplingMode::gaussian_direct
                                                       : SamplingMode::project_full_sample;
}

SubspaceSampler wrap_pairs(const ParametricProblem& problem, GeneralizedEigenPairs<double> pairs,
                           SubspaceBuildStats stats) {
  SubspaceSampler sampler;
  sampler.basis = std::move(pairs.eigenvectors);
  sampler.eigenvalues = std::move(pairs.eigenvalues);
  sampler.distribution = problem.distribution;
  sampler.mode = default_mode(problem.distribution);
  sampler.rank_deficient = pairs.rank_deficient;
  sampler.stats = stats;
  return sampler;
}

/// Eigenpairs of an action-defined Hessian against the problem's distribution.
GeneralizedEigenPairs<double> solve_gevp(const ParametricProblem& problem,
                                         const VectorAction<double>& h_action, Index l, Index c,
                                         uint64_t seed, GevpMethod method) {
  if (l < 1) throw std::invalid_argument("subspace build: need L >= 1");
  if (method == GevpMethod::dense) {
    const Index k = problem.n_params;
    Matrix h(k, k);
    Vector e = Vector::Zero(k);
    for (Index j = 0; j < k; ++j) {
      e[j] = 1.0;
      h.col(j) = h_action(e);
      e[j] = 0.0;
    }
    h = 0.5 * (h + h.transpose());
    return dense_gevp<double>(h, dense_cinv(problem.distribution), l);
  }
  return randomized_gevp<double>(h_action, c_action_of(problem.distribution),
                                 cinv_action_of(problem.distribution), problem.n_params, l, c, seed);
}

std::vector<Vector> draw_hessian_anchor_samples(const ParametricProblem& problem, Index m, uint64_t seed) {
  return draw_distribution_samples(problem.distribution, m, substream(seed, "hessian-samples"));
}

}  // namespace

Vector project_to_subspace(const SubspaceSampler& sampler, const Vector& p) {
  if (p.size() != sampler.distribution.dimension)
    throw std::invalid_argument("project_to_subspace: dimension mismatch");
  const Vector centered = p - sampler.distribution.mean;
  const Vector coords = sampler.basis.transpose() * sampler.distribution.apply_cinv(centered);
  return sampler.distribution.mean + sampler.basis * coords;
}

std::vector<Vector> draw_training_set(const SubspaceSampler& sampler, Index n_train, uint64_t seed) {
  if (n_train < 1) throw std::invalid_argument("draw_training_set: need at least one sample");
  std::mt19937_64 rng(seed);
  std::vector<Vector> out;
  out.reserve(n_train);
  if (sampler.mode == SamplingMode::gaussian_direct) {
    if (sampler.distribution.kind != DistributionKind::gaussian_field)
      throw std::logic_error("draw_training_set: gaussian-direct mode requires a gaussian distribution");
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index i = 0; i < n_train; ++i) {
      Vector omega(sampler.rank());
      for (Index l = 0; l < sampler.rank(); ++l) omega[l] = normal(rng);
      out.push_back(sampler.distribution.mean + sampler.basis * omega);
    }
    return out;
  }
  for (Index i = 0; i < n_train; ++i)
    out.push_back(project_to_subspace(sampler, sample_parameter(sampler.distribution, rng)));
  return out;
}

std::vector<Vector> draw_distribution_samples(const ParameterDistribution& dist, Index n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vector> out;
  out.reserve(n);
  for (Index i = 0; i < n; ++i) out.push_back(sample_parameter(dist, rng));
  return out;
}

SubspaceSampler build_local_subspace(ProblemPtr problem, Index l, Index c, uint64_t seed,
                                     GevpMethod method) {
  HessianOperator op(problem, problem->distribution.mean);
  auto pairs = solve_gevp(*problem, [&op](const Vector& d) { return op.apply(d); }, l, c,
                          substream(seed, "gevp"), method);
  SubspaceBuildStats stats;
  stats.hessian_actions = op.actions();
  stats.state_solves = 1;
  stats.adjoint_solves = 1;
  stats.linear_solves = op.linear_solves();
  return wrap_pairs(*problem, std::move(pairs), stats);
}

SubspaceSampler build_averaged_subspace(ProblemPtr problem, Index m, Index l, Index c, uint64_t seed) {
  if (m < 1) throw std::invalid_argument("build_averaged_subspace: need M >= 1");
  return build_averaged_subspace(problem, draw_hessian_anchor_samples(*problem, m, seed), l, c, seed);
}

SubspaceSampler build_averaged_subspace(ProblemPtr problem, const std::vector<Vector>& samples, Index l,
                                        Index c, uint64_t seed) {
  AveragedHessian avg(problem, samples);
  auto pairs = solve_gevp(*problem, [&avg](const Vector& d) { return avg.apply(d); }, l, c,
                          substream(seed, "gevp"), GevpMethod::randomized);
  SubspaceBuildStats stats;
  stats.hessian_actions = avg.actions();
  stats.state_solves = avg.size();
  stats.adjoint_solves = avg.size();
  stats.linear_solves = avg.linear_solves();
  return wrap_pairs(*problem, std::move(pairs), stats);
}

namespace {

/// Compress weighted eigenvector collections: SVD of the whitened collection
/// T Phi (T^T T = C^{-1}), output columns Phi q_k / sigma_k.
SubspaceSampler compress_collection(const ParametricProblem& problem, const Matrix& collection, Index l,
                                    SubspaceBuildStats stats, bool deficient_in) {
  Matrix whitened(collection.rows(), collection.cols());
  if (problem.distribution.kind == DistributionKind::uniform_box) {
    whitened = collection;
  } else {
    for (Index j = 0; j < collection.cols(); ++j)
      whitened.col(j) = problem.distribution.field->apply_whitening(collection.col(j));
  }
  Eigen::BDCSVD<Matrix> svd(whitened, Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  Index usable = 0;
  for (Index i = 0; i < sigma.size(); ++i)
    if (sigma[i] > sigma[0] * 1e-12) ++usable;
  const Index keep = std::min(l, usable);

  SubspaceSampler sampler;
  sampler.basis.resize(collection.rows(), keep);
  for (Index k = 0; k < keep; ++k) sampler.basis.col(k) = collection * svd.matrixV().col(k) / sigma[k];
  detail::fix_column_signs(sampler.basis);
  sampler.eigenvalues = sigma.head(keep);
  sampler.distribution = problem.distribution;
  sampler.mode = default_mode(problem.distribution);
  sampler.rank_deficient = deficient_in || keep < l;
  sampler.stats = stats;
  return sampler;
}

}  // namespace

SubspaceSampler build_combined_subspace(ProblemPtr problem, Index m, const std::vector<Index>& per_sample_l,
                                        Index l, Index c, uint64_t seed) {
  if (m < 1) throw std::invalid_argument("build_combined_subspace: need M >= 1");
  return build_combined_subspace(problem, draw_hessian_anchor_samples(*problem, m, seed), per_sample_l, l,
                                 c, seed);
}

SubspaceSampler build_combined_subspace(ProblemPtr problem, const std::vector<Vector>& samples,
                                        const std::vector<Index>& per_sample_l, Index l, Index c,
                                        uint64_t seed) {
  const Index m = static_cast<Index>(samples.size());
  std::vector<Index> ls = per_sample_l;
  if (ls.empty()) ls.assign(m, l);  // default L_m = L
  if (static_cast<Index>(ls.size()) != m)
    throw std::invalid_argument("build_combined_subspace: per_sample_L size must match M");
  Index total = 0;
  for (Index lm : ls) total += lm;
  if (total < l) throw std::invalid_argument("build_combined_subspace: sum of per-sample L below target L");

  SubspaceBuildStats stats;
  Matrix collection(problem->n_params, total);
  bool deficient = false;
  Index col = 0;
  for (Index i = 0; i < m; ++i) {
    HessianOperator op(problem, samples[i]);
    auto pairs = solve_gevp(*problem, [&op](const Vector& d) { return op.apply(d); }, ls[i], c,
                            substream(seed, "gevp"), GevpMethod::randomized);
    deficient = deficient || pairs.rank_deficient;
    // weights sqrt(|lambda|); spectra carry negative eigenvalues
    for (Index k = 0; k < pairs.count(); ++k)
      collection.col(col++) = std::sqrt(std::abs(pairs.eigenvalues[k])) * pairs.eigenvectors.col(k);
    stats.hessian_actions += op.actions();
    stats.state_solves += 1;
    stats.adjoint_solves += 1;
    stats.linear_solves += op.linear_solves();
  }
  return compress_collection(*problem, collection, l, stats, deficient);
}

SubspaceSampler build_multi_qoi_subspace(ProblemPtr problem, const std::vector<Vector>& qoi_vectors,
                                         MultiQoiStrategy strategy, Index l, Index c, uint64_t seed,
                                         Index m, Index per_qoi_l) {
  if (qoi_vectors.empty()) throw std::invalid_argument("build_multi_qoi_subspace: need J >= 1");
  if (per_qoi_l < 0) per_qoi_l = l;
  std::vector<ProblemPtr> variants;
  variants.reserve(qoi_vectors.size());
  for (const Vector& s : qoi_vectors) variants.push_back(with_qoi_vector(*problem, s));

  std::vector<Vector> anchors;
  if (m > 0)
    anchors = draw_hessian_anchor_samples(*problem, m, seed);
  else
    anchors.push_back(problem->distribution.mean);

  SubspaceBuildStats stats;
  if (strategy == MultiQoiStrategy::averaged) {
    std::vector<std::unique_ptr<HessianOperator>> ops;
    for (const auto& variant : variants)
      for (const Vector& anchor : anchors) ops.push_back(std::make_unique<HessianOperator>(variant, anchor));
    auto action = [&ops](const Vector& d) {
      Vector out = ops[0]->apply(d);
      for (size_t i = 1; i < ops.size(); ++i) out += ops[i]->apply(d);
      return Vector(out / static_cast<double>(ops.size()));
    };
    auto pairs = solve_gevp(*problem, action, l, c, substream(seed, "gevp"), GevpMethod::randomized);
    for (const auto& op : ops) {
      stats.hessian_actions += op->actions();
      stats.state_solves += 1;
      stats.adjoint_solves += 1;
      stats.linear_solves += op->linear_solves();
    }
    return wrap_pairs(*problem, std::move(pairs), stats);
  }

  // concat_svd: per-QoI eigenvectors weighted by sqrt|lambda|, then compressed
  Matrix collection(problem->n_params,
                    per_qoi_l * static_cast<Index>(variants.size()) * static_cast<Index>(anchors.size()));
  bool deficient = false;
  Index col = 0;
  for (const auto& variant : variants) {
    for (const Vector& anchor : anchors) {
      HessianOperator op(variant, anchor);
      auto pairs = solve_gevp(*variant, [&op](const Vector& d) { return op.apply(d); }, per_qoi_l, c,
                              substream(seed, "gevp"), GevpMethod::randomized);
      deficient = deficient || pairs.rank_deficient;
      for (Index k = 0; k < pairs.count(); ++k)
        collection.col(col++) = std::sqrt(std::abs(pairs.eigenvalues[k])) * pairs.eigenvectors.col(k);
      stats.hessian_actions += op.actions();
      stats.state_solves += 1;
      stats.adjoint_solves += 1;
      stats.linear_solves += op.linear_solves();
    }
  }
  collection.conservativeResize(Eigen::NoChange, col);
  return compress_collection(*problem, collection, l, stats, deficient);
}

}  // namespace hessrb
