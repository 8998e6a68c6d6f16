#pragma once

#include "hessrb/rom.hpp"
#include "hessrb/sampling.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace hessrb {

struct ProblemConfig {
  enum class Kind { uniform, lognormal };
  Kind kind = Kind::uniform;
  int n_per_side = 33;
  Index k = 64;                              // uniform
  double kappa0 = std::sqrt(3.0) + 0.01;     // uniform
  double beta = 1.0;                         // uniform
  double gamma = 0.5, delta = 1.0;           // lognormal
  int alpha = 2;                             // lognormal
};

struct SamplerConfig {
  enum class Kind { random, hessian_local, hessian_averaged, hessian_combined };
  Kind kind = Kind::random;
  Index l = 10;
  Index c = 10;
  Index m = 10;                    // averaged / combined sample count
  std::vector<Index> per_sample_l; // combined; empty means L each
  GevpMethod gevp = GevpMethod::randomized;
};

struct RomConfig {
  enum class Kind { pod, greedy };
  Kind kind = Kind::pod;
  double epsilon = 1e-14;
  Index n_max = 100;
  NormKind norm = NormKind::energy;
  double tol = 1e-12;  // greedy stop
};

struct ExperimentConfig {
  ProblemConfig problem;
  SamplerConfig sampler;
  RomConfig rom;
  Index n_train = 300;
  Index test_size = 10;
  uint64_t seed = 0;
  std::vector<Index> sweep;  // evaluation ranks; empty means 1..rank
  std::string out_dir;
  bool test_on_training = false;
  std::string scheme_name;  // CSV label; derived from the config when empty
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::filesystem::path& path);

std::string scheme_label(const ExperimentConfig& config);

struct ErrorRow {
  Index n;
  double err_u;
  double err_s;
};

struct ErrorReport {
  std::vector<ErrorRow> rows;
  std::string scheme;
  Index l = 0;  // subspace rank (0 for random sampling)
  uint64_t seed = 0;
  std::map<std::string, std::string> metadata;  // solve counts, timings, flags
};

struct ErrorPair {
  double err_u = 0;
  double err_s = 0;
  int qoi_abs_fallbacks = 0;  // test points where |s_h| ~ 0 forced an absolute ratio
};

/// Mean relative V-norm and QoI errors of the n-truncated model over the test set.
ErrorPair compute_errors(const ParametricProblem& problem, const ReducedModel& model,
                         const std::vector<Vector>& test_set, Index n);

ErrorReport run_experiment(const ExperimentConfig& config);

/// Builds the problem and training set per the config (shared by the CLI).
ProblemPtr build_problem(const ProblemConfig& config);
std::vector<Vector> build_training_set(const ExperimentConfig& config, ProblemPtr problem,
                                       SubspaceBuildStats* stats = nullptr);
ReducedModel build_rom(const ExperimentConfig& config, ProblemPtr problem,
                       const std::vector<Vector>& training);

struct SpectrumRow {
  Index index;  // 1-based
  double lambda;
  int sign;
};

std::vector<SpectrumRow> spectrum_report(ProblemPtr problem, Index l, Index c, uint64_t seed,
                                         GevpMethod method);

std::string error_csv(const std::vector<ErrorReport>& reports);  // N,err_u,err_s,scheme,L,seed
std::string spectrum_csv(const std::vector<SpectrumRow>& rows);  // index,lambda,sign

/// The reference experiment matrices, desk-scale by default.
std::vector<ErrorReport> reproduce_uniform(uint64_t seed, bool paper_scale,
                                           const std::filesystem::path& out_dir);
std::vector<ErrorReport> reproduce_lognormal(uint64_t seed, bool paper_scale,
                                             const std::filesystem::path& out_dir);

}  // namespace hessrb
