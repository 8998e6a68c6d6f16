#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_support.hpp"

#include "hessrb/io.hpp"
#include "hessrb/sampling.hpp"

using namespace hessrb;
using namespace hessrb::testing;

namespace {

const double kKappa0 = std::sqrt(3.0) + 0.01;

ProblemPtr small_uniform() { return make_uniform_piecewise_problem(9, 16, kKappa0, 1.0); }

}  // namespace

TEST_CASE("projection with a complete basis is the identity") {
  const auto problem = small_uniform();
  const auto sampler = build_local_subspace(problem, 16, 0, 3, GevpMethod::dense);
  REQUIRE(sampler.rank() == 16);
  std::mt19937_64 rng(1);
  const Vector p = random_vector(16, rng, -1.5, 1.5);
  CHECK((project_to_subspace(sampler, p) - p).norm() < 1e-8);
}

TEST_CASE("projector algebra") {
  const auto problem = small_uniform();
  const auto sampler = build_local_subspace(problem, 5, 5, 7);
  CHECK(project_to_subspace(sampler, problem->distribution.mean) == problem->distribution.mean);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector p = random_vector(16, rng, -1.5, 1.5);
    const Vector once = project_to_subspace(sampler, p);
    const Vector twice = project_to_subspace(sampler, once);
    CHECK((twice - once).norm() < 1e-10);
  }
  // (I - P) kills nothing inside the span
  for (Index l = 0; l < sampler.rank(); ++l) {
    const Vector phi = sampler.basis.col(l);
    CHECK((project_to_subspace(sampler, Vector(phi)) - phi).norm() < 1e-10);
  }
}

TEST_CASE("basis columns are C^{-1}-orthonormal") {
  SUBCASE("uniform") {
    const auto sampler = build_local_subspace(small_uniform(), 6, 8, 11);
    const Matrix gram = sampler.basis.transpose() * sampler.basis;
    CHECK((gram - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("gaussian") {
    const auto problem = make_lognormal_problem(9, 0.5, 1.0, 2);
    const auto sampler = build_local_subspace(problem, 5, 10, 11);
    Matrix gram(5, 5);
    for (Index j = 0; j < 5; ++j)
      gram.col(j) = sampler.basis.transpose() * problem->distribution.apply_cinv(sampler.basis.col(j));
    CHECK((gram - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("gaussian-direct sampling reproduces unit subspace covariance") {
  const auto problem = make_lognormal_problem(9, 0.5, 1.0, 2);
  const auto sampler = build_local_subspace(problem, 3, 10, 5);
  REQUIRE(sampler.mode == SamplingMode::gaussian_direct);

  const Index n = 10000;
  const auto samples = draw_training_set(sampler, n, substream(5, "train"));
  Matrix coords(3, n);
  for (Index i = 0; i < n; ++i)
    coords.col(i) = sampler.basis.transpose() * problem->distribution.apply_cinv(samples[i]);
  const Vector mean = coords.rowwise().mean();
  const Matrix centered = coords.colwise() - mean;
  const Matrix cov = centered * centered.transpose() / static_cast<double>(n - 1);
  const double stderr3 = 3.0 * std::sqrt(2.0 / (n - 1));
  for (Index a = 0; a < 3; ++a) {
    CHECK(std::abs(mean[a]) < 3.0 / std::sqrt(static_cast<double>(n)));
    for (Index b = 0; b < 3; ++b) {
      const double expected = a == b ? 1.0 : 0.0;
      CHECK(std::abs(cov(a, b) - expected) < stderr3);
    }
  }
}

TEST_CASE("uniform sampler with a complete basis matches plain sampling") {
  const auto problem = small_uniform();
  const auto sampler = build_local_subspace(problem, 16, 0, 3, GevpMethod::dense);
  const auto projected = draw_training_set(sampler, 50, 99);
  const auto plain = draw_distribution_samples(problem->distribution, 50, 99);
  for (size_t i = 0; i < 50; ++i) CHECK((projected[i] - plain[i]).norm() < 1e-8);
}

TEST_CASE("degenerate requests are rejected") {
  const auto problem = small_uniform();
  CHECK_THROWS_AS(static_cast<void>(build_local_subspace(problem, 0, 4, 1)), std::invalid_argument);
  const auto sampler = build_local_subspace(problem, 3, 3, 1);
  CHECK_THROWS_AS(static_cast<void>(draw_training_set(sampler, 0, 1)), std::invalid_argument);
}

TEST_CASE("local build records its solve budget") {
  const auto problem = small_uniform();
  const auto sampler = build_local_subspace(problem, 4, 6, 17);
  CHECK(sampler.stats.hessian_actions == 2 * (4 + 6));
  CHECK(sampler.stats.state_solves == 1);
  CHECK(sampler.stats.adjoint_solves == 1);
  CHECK(sampler.stats.linear_solves == 2 + 2 * sampler.stats.hessian_actions);
}

TEST_CASE("averaged subspace") {
  const auto problem = small_uniform();

  SUBCASE("single sample at the mean reproduces the local subspace") {
    const auto local = build_local_subspace(problem, 4, 6, 23);
    const auto averaged = build_averaged_subspace(problem, {Vector::Zero(16)}, 4, 6, 23);
    CHECK((local.basis - averaged.basis).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((local.eigenvalues - averaged.eigenvalues).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("M=10 eigenvalues stay within a factor-2 band of the local ones") {
    const auto local = build_local_subspace(problem, 4, 8, 29);
    const auto averaged = build_averaged_subspace(problem, 10, 4, 8, 29);
    for (Index i = 0; i < 3; ++i) {
      const double ratio = std::abs(averaged.eigenvalues[i] / local.eigenvalues[i]);
      CHECK(ratio > 0.5);
      CHECK(ratio < 2.0);
    }
  }
}

TEST_CASE("combined subspace") {
  const auto problem = small_uniform();

  SUBCASE("M=1 spans the local eigenspace") {
    const auto local = build_local_subspace(problem, 4, 12, 31);
    const auto combined = build_combined_subspace(problem, {Vector::Zero(16)}, {4}, 4, 12, 31);
    REQUIRE(combined.rank() == 4);
    CHECK(max_principal_angle(local.basis, combined.basis) < 1e-8);
    // singular values sorted
    for (Index i = 1; i < combined.eigenvalues.size(); ++i)
      CHECK(combined.eigenvalues[i] <= combined.eigenvalues[i - 1] + 1e-14);
  }
  SUBCASE("gaussian case output is C^{-1}-orthonormal") {
    const auto lognormal = make_lognormal_problem(9, 0.5, 1.0, 2);
    const auto combined = build_combined_subspace(lognormal, 2, {}, 4, 10, 37);
    REQUIRE(combined.rank() == 4);
    Matrix gram(4, 4);
    for (Index j = 0; j < 4; ++j)
      gram.col(j) = combined.basis.transpose() * lognormal->distribution.apply_cinv(combined.basis.col(j));
    CHECK((gram - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("rank-deficient collections return fewer modes with a flag") {
    const Vector pbar = Vector::Zero(16);
    const auto degenerate = build_combined_subspace(problem, {pbar, pbar}, {2, 2}, 4, 12, 41);
    CHECK(degenerate.rank() == 2);  // duplicated blocks only span the top-2 space
    CHECK(degenerate.rank_deficient);
  }
  SUBCASE("per-sample mode counts must cover the target") {
    CHECK_THROWS_AS(
        static_cast<void>(build_combined_subspace(problem, {Vector::Zero(16)}, {2}, 4, 12, 43)),
        std::invalid_argument);
  }
}

TEST_CASE("multi-QoI subspaces") {
  const auto problem = small_uniform();
  const Index nv = problem->mesh->n_vertices();

  SUBCASE("J=1 averaged reduces to the local subspace") {
    const auto local = build_local_subspace(problem, 4, 6, 47);
    const auto multi = build_multi_qoi_subspace(problem, {problem->qoi}, MultiQoiStrategy::averaged, 4, 6, 47);
    CHECK((local.basis - multi.basis).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("two identical QoIs average to the single-QoI Hessian") {
    const auto single = build_local_subspace(problem, 4, 6, 53);
    const auto doubled = build_multi_qoi_subspace(problem, {problem->qoi, problem->qoi},
                                                  MultiQoiStrategy::averaged, 4, 6, 53);
    CHECK((single.basis - doubled.basis).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("disjoint-region QoIs: the combined basis contains both top eigenspaces") {
    const Vector qoi_a = problem->qoi;
    const Vector qoi_b = assemble_qoi_vector(*problem->mesh, Box{0.9, 0.0, 1.0, 0.1});
    const Index l = 4;
    // per-QoI probe spans the whole K=16 space, so each block is exact; the
    // rank-2L output keeps the entire collection span
    const auto multi = build_multi_qoi_subspace(problem, {qoi_a, qoi_b}, MultiQoiStrategy::concat_svd,
                                                2 * l, 16 - l, 59, 0, l);
    REQUIRE(multi.rank() == 2 * l);
    for (const Vector& qoi : {qoi_a, qoi_b}) {
      const auto variant = with_qoi_vector(*problem, qoi);
      const Matrix h = full_hessian(*variant, Vector::Zero(16));
      const auto oracle = dense_gevp<double>(h, Matrix::Identity(16, 16), l);
      CHECK(max_principal_angle(multi.basis, oracle.eigenvectors) < 1e-6);
    }
    static_cast<void>(nv);
  }
}

TEST_CASE("training sets are bit-reproducible and serialize losslessly") {
  const auto problem = small_uniform();
  const auto sampler = build_local_subspace(problem, 4, 6, 61);
  const auto a = draw_training_set(sampler, 20, 71);
  const auto b = draw_training_set(sampler, 20, 71);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  const auto path = std::filesystem::temp_directory_path() / "hessrb_test_train.txt";
  write_parameter_set(path, a);
  const auto loaded = read_parameter_set(path);
  REQUIRE(loaded.size() == a.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(loaded[i] == a[i]);
  std::filesystem::remove(path);
}
