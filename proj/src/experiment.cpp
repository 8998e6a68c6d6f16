#include "hessrb/experiment.hpp"

#include "hessrb/io.hpp"

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

namespace hessrb {

namespace fs = std::filesystem;

namespace {

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::vector<Index> parse_index_list(const std::string& text) {
  std::vector<Index> out;
  const auto colon = text.find(':');
  if (colon != std::string::npos) {  // first:last:step
    std::istringstream in(text);
    char sep;
    Index first, last, step = 1;
    in >> first >> sep >> last;
    if (in.peek() == ':') in >> sep >> step;
    if (step < 1 || last < first) throw std::invalid_argument("bad sweep range: " + text);
    for (Index n = first; n <= last; n += step) out.push_back(n);
    return out;
  }
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(std::stoll(item));
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  const auto kv = parse_key_values(text);
  ExperimentConfig config;

  static const std::set<std::string> known = {
      "problem", "n_per_side", "K",     "kappa0", "beta",  "gamma",     "delta",
      "alpha",   "sampler",    "L",     "c",      "M",     "per_sample_L", "gevp",
      "rom",     "epsilon",    "N_max", "tol",    "norm",  "N_t",       "test_size",
      "seed",    "sweep",      "out",   "test_mode", "scheme"};
  for (const auto& [key, value] : kv)
    if (!known.count(key)) throw std::invalid_argument("config: unknown key '" + key + "'");

  const auto get = [&](const std::string& key) -> const std::string* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };

  if (const auto* v = get("problem")) {
    if (*v == "uniform")
      config.problem.kind = ProblemConfig::Kind::uniform;
    else if (*v == "lognormal")
      config.problem.kind = ProblemConfig::Kind::lognormal;
    else
      throw std::invalid_argument("config: unknown problem '" + *v + "'");
  }
  if (const auto* v = get("n_per_side")) config.problem.n_per_side = std::stoi(*v);
  if (const auto* v = get("K")) config.problem.k = std::stoll(*v);
  if (const auto* v = get("kappa0")) config.problem.kappa0 = std::stod(*v);
  if (const auto* v = get("beta")) config.problem.beta = std::stod(*v);
  if (const auto* v = get("gamma")) config.problem.gamma = std::stod(*v);
  if (const auto* v = get("delta")) config.problem.delta = std::stod(*v);
  if (const auto* v = get("alpha")) config.problem.alpha = std::stoi(*v);

  if (const auto* v = get("sampler")) {
    if (*v == "random")
      config.sampler.kind = SamplerConfig::Kind::random;
    else if (*v == "hessian-local")
      config.sampler.kind = SamplerConfig::Kind::hessian_local;
    else if (*v == "hessian-averaged")
      config.sampler.kind = SamplerConfig::Kind::hessian_averaged;
    else if (*v == "hessian-combined")
      config.sampler.kind = SamplerConfig::Kind::hessian_combined;
    else
      throw std::invalid_argument("config: unknown sampler '" + *v + "'");
  }
  if (const auto* v = get("L")) config.sampler.l = std::stoll(*v);
  if (const auto* v = get("c")) config.sampler.c = std::stoll(*v);
  if (const auto* v = get("M")) config.sampler.m = std::stoll(*v);
  if (const auto* v = get("per_sample_L")) config.sampler.per_sample_l = parse_index_list(*v);
  if (const auto* v = get("gevp")) {
    if (*v == "randomized")
      config.sampler.gevp = GevpMethod::randomized;
    else if (*v == "dense")
      config.sampler.gevp = GevpMethod::dense;
    else
      throw std::invalid_argument("config: unknown gevp method '" + *v + "'");
  }

  if (const auto* v = get("rom")) {
    if (*v == "pod")
      config.rom.kind = RomConfig::Kind::pod;
    else if (*v == "greedy")
      config.rom.kind = RomConfig::Kind::greedy;
    else
      throw std::invalid_argument("config: unknown rom '" + *v + "'");
  }
  if (const auto* v = get("epsilon")) config.rom.epsilon = std::stod(*v);
  if (const auto* v = get("N_max")) config.rom.n_max = std::stoll(*v);
  if (const auto* v = get("tol")) config.rom.tol = std::stod(*v);
  if (const auto* v = get("norm")) {
    if (*v == "V")
      config.rom.norm = NormKind::energy;
    else if (*v == "l2")
      config.rom.norm = NormKind::l2;
    else
      throw std::invalid_argument("config: unknown norm '" + *v + "'");
  }

  if (const auto* v = get("N_t")) config.n_train = std::stoll(*v);
  if (const auto* v = get("test_size")) config.test_size = std::stoll(*v);
  if (const auto* v = get("seed")) config.seed = std::stoull(*v);
  if (const auto* v = get("sweep")) config.sweep = parse_index_list(*v);
  if (const auto* v = get("out")) config.out_dir = *v;
  if (const auto* v = get("test_mode")) {
    if (*v == "training")
      config.test_on_training = true;
    else if (*v != "random")
      throw std::invalid_argument("config: unknown test_mode '" + *v + "'");
  }
  if (const auto* v = get("scheme")) config.scheme_name = *v;

  // structural consistency, checked before any solve
  if (config.rom.kind == RomConfig::Kind::greedy && config.problem.kind == ProblemConfig::Kind::lognormal)
    throw std::invalid_argument("config: greedy needs the affine problem; the lognormal case is nonaffine");
  if (config.n_train < 1) throw std::invalid_argument("config: N_t must be positive");
  if (config.test_size < 1) throw std::invalid_argument("config: test_size must be positive");
  return config;
}

ExperimentConfig parse_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::string scheme_label(const ExperimentConfig& config) {
  if (!config.scheme_name.empty()) return config.scheme_name;
  std::string rom = config.rom.kind == RomConfig::Kind::pod ? "pod" : "greedy";
  switch (config.sampler.kind) {
    case SamplerConfig::Kind::random: return rom + "-random";
    case SamplerConfig::Kind::hessian_local: return rom + "-hessian";
    case SamplerConfig::Kind::hessian_averaged: return rom + "-hessian-averaged";
    case SamplerConfig::Kind::hessian_combined: return rom + "-hessian-combined";
  }
  return rom;
}

ProblemPtr build_problem(const ProblemConfig& config) {
  if (config.kind == ProblemConfig::Kind::uniform)
    return make_uniform_piecewise_problem(config.n_per_side, config.k, config.kappa0, config.beta);
  return make_lognormal_problem(config.n_per_side, config.gamma, config.delta, config.alpha);
}

std::vector<Vector> build_training_set(const ExperimentConfig& config, ProblemPtr problem,
                                       SubspaceBuildStats* stats) {
  const uint64_t train_seed = substream(config.seed, "train");
  if (config.sampler.kind == SamplerConfig::Kind::random)
    return draw_distribution_samples(problem->distribution, config.n_train, train_seed);

  const uint64_t build_seed = substream(config.seed, "subspace");
  SubspaceSampler sampler;
  switch (config.sampler.kind) {
    case SamplerConfig::Kind::hessian_local:
      sampler = build_local_subspace(problem, config.sampler.l, config.sampler.c, build_seed,
                                     config.sampler.gevp);
      break;
    case SamplerConfig::Kind::hessian_averaged:
      sampler = build_averaged_subspace(problem, config.sampler.m, config.sampler.l, config.sampler.c,
                                        build_seed);
      break;
    case SamplerConfig::Kind::hessian_combined:
      sampler = build_combined_subspace(problem, config.sampler.m, config.sampler.per_sample_l,
                                        config.sampler.l, config.sampler.c, build_seed);
      break;
    default: throw std::logic_error("build_training_set: unexpected sampler");
  }
  if (stats) *stats = sampler.stats;
  return draw_training_set(sampler, config.n_train, train_seed);
}

ReducedModel build_rom(const ExperimentConfig& config, ProblemPtr problem,
                       const std::vector<Vector>& training) {
  if (config.rom.kind == RomConfig::Kind::greedy)
    return greedy_construct(problem, training, config.rom.n_max, config.rom.tol);
  const Snapshots snaps = collect_snapshots(problem, training);
  return pod_construct(snaps, config.rom.epsilon, config.rom.n_max, config.rom.norm);
}

namespace {

/// Caches per-test-point data so an N-sweep reuses the high-fidelity solves
/// and (for nonaffine models) one full-rank projection per point.
class TestSetEvaluator {
 public:
  TestSetEvaluator(const ParametricProblem& problem, const ReducedModel& model,
                   const std::vector<Vector>& test_set)
      : problem_(problem), model_(model), test_set_(test_set) {
    for (const Vector& p : test_set) {
      Point pt;
      pt.u_full = solve_state(problem, p);
      pt.s = eval_qoi(problem, pt.u_full);
      pt.u_vnorm = problem.v_norm(pt.u_full);
      if (!model.affine()) {
        const AssembledSystem sys = assemble_at(problem, p);
        pt.a_proj = model.basis.transpose() *
                    (sys.op_interior.upper.selfadjointView<Eigen::Upper>() * model.basis);
        pt.rhs_proj = model.basis.transpose() * sys.rhs_interior;
      }
      points_.push_back(std::move(pt));
    }
  }

  ErrorPair evaluate(Index n) const {
    ErrorPair errors;
    for (size_t i = 0; i < points_.size(); ++i) {
      const Point& pt = points_[i];
      Vector u_n;
      if (model_.affine() || n == 0) {
        u_n = rb_solve(model_, test_set_[i], n);
      } else {
        const Vector rb = Eigen::LDLT<Matrix>(pt.a_proj.topLeftCorner(n, n)).solve(pt.rhs_proj.head(n));
        u_n = rb;
      }
      const Vector diff = pt.u_full - reconstruct(model_, u_n);
      errors.err_u += problem_.v_norm(diff) / pt.u_vnorm;
      const double ds = std::abs(pt.s - rb_qoi(model_, u_n));
      if (std::abs(pt.s) < 1e-12) {
        ++errors.qoi_abs_fallbacks;
        errors.err_s += ds;
      } else {
        errors.err_s += ds / std::abs(pt.s);
      }
    }
    errors.err_u /= static_cast<double>(points_.size());
    errors.err_s /= static_cast<double>(points_.size());
    return errors;
  }

 private:
  struct Point {
    Vector u_full;
    double s = 0;
    double u_vnorm = 0;
    Matrix a_proj;
    Vector rhs_proj;
  };
  const ParametricProblem& problem_;
  const ReducedModel& model_;
  std::vector<Vector> test_set_;
  std::vector<Point> points_;
};

}  // namespace

ErrorPair compute_errors(const ParametricProblem& problem, const ReducedModel& model,
                         const std::vector<Vector>& test_set, Index n) {
  if (n > model.rank()) throw std::invalid_argument("compute_errors: N above model rank");
  if (test_set.empty()) throw std::invalid_argument("compute_errors: empty test set");
  return TestSetEvaluator(problem, model, test_set).evaluate(n);
}

ErrorReport run_experiment(const ExperimentConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  ErrorReport report;
  report.scheme = scheme_label(config);
  report.seed = config.seed;
  report.l = config.sampler.kind == SamplerConfig::Kind::random ? 0 : config.sampler.l;

  ProblemPtr problem = build_problem(config.problem);

  SubspaceBuildStats stats;
  const std::vector<Vector> training = build_training_set(config, problem, &stats);
  const auto t_train = std::chrono::steady_clock::now();

  const ReducedModel model = build_rom(config, problem, training);
  const auto t_rom = std::chrono::steady_clock::now();

  std::vector<Vector> test_set;
  if (config.test_on_training) {
    for (Index i = 0; i < std::min<Index>(config.test_size, static_cast<Index>(training.size())); ++i)
      test_set.push_back(training[i]);
  } else {
    // shared across schemes: seeded independently of sampler and training
    test_set = draw_distribution_samples(problem->distribution, config.test_size,
                                         substream(config.seed, "test"));
  }

  std::vector<Index> sweep = config.sweep;
  if (sweep.empty())
    for (Index n = 1; n <= model.rank(); ++n) sweep.push_back(n);
  std::sort(sweep.begin(), sweep.end());
  sweep.erase(std::unique(sweep.begin(), sweep.end()), sweep.end());

  TestSetEvaluator evaluator(*problem, model, test_set);
  int fallbacks = 0;
  for (Index n : sweep) {
    if (n > model.rank()) continue;
    const ErrorPair err = evaluator.evaluate(n);
    report.rows.push_back({n, err.err_u, err.err_s});
    fallbacks += err.qoi_abs_fallbacks;
  }
  const auto t_end = std::chrono::steady_clock::now();

  const auto seconds = [](auto a, auto b) {
    return format_double(std::chrono::duration<double>(b - a).count());
  };
  report.metadata["seed"] = std::to_string(config.seed);
  report.metadata["train_seed"] = std::to_string(substream(config.seed, "train"));
  report.metadata["test_seed"] = std::to_string(substream(config.seed, "test"));
  report.metadata["rom_rank"] = std::to_string(model.rank());
  report.metadata["n_train"] = std::to_string(training.size());
  report.metadata["hessian_actions"] = std::to_string(stats.hessian_actions);
  report.metadata["subspace_state_solves"] = std::to_string(stats.state_solves);
  report.metadata["subspace_adjoint_solves"] = std::to_string(stats.adjoint_solves);
  report.metadata["qoi_abs_fallbacks"] = std::to_string(fallbacks);
  report.metadata["time_training_s"] = seconds(t_start, t_train);
  report.metadata["time_rom_s"] = seconds(t_train, t_rom);
  report.metadata["time_evaluate_s"] = seconds(t_rom, t_end);

  if (!config.out_dir.empty()) {
    fs::create_directories(config.out_dir);
    std::ofstream out(fs::path(config.out_dir) / "errors.csv");
    if (!out) throw std::runtime_error("cannot write errors.csv under " + config.out_dir);
    out << error_csv({report});
  }
  return report;
}

std::vector<SpectrumRow> spectrum_report(ProblemPtr problem, Index l, Index c, uint64_t seed,
                                         GevpMethod method) {
  const SubspaceSampler sampler = build_local_subspace(problem, l, c, seed, method);
  std::vector<SpectrumRow> rows;
  for (Index k = 0; k < sampler.eigenvalues.size(); ++k)
    rows.push_back({k + 1, sampler.eigenvalues[k], sampler.eigenvalues[k] >= 0 ? 1 : -1});
  return rows;
}

std::string error_csv(const std::vector<ErrorReport>& reports) {
  std::ostringstream out;
  out << "N,err_u,err_s,scheme,L,seed\n";
  for (const ErrorReport& report : reports)
    for (const ErrorRow& row : report.rows)
      out << row.n << ',' << format_double(row.err_u) << ',' << format_double(row.err_s) << ','
          << report.scheme << ',' << report.l << ',' << report.seed << '\n';
  return out.str();
}

std::string spectrum_csv(const std::vector<SpectrumRow>& rows) {
  std::ostringstream out;
  out << "index,lambda,sign\n";
  for (const SpectrumRow& row : rows)
    out << row.index << ',' << format_double(row.lambda) << ',' << row.sign << '\n';
  return out.str();
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

ExperimentConfig uniform_base(uint64_t seed, bool paper_scale) {
  ExperimentConfig config;
  config.problem.kind = ProblemConfig::Kind::uniform;
  config.seed = seed;
  if (paper_scale) {
    config.problem.n_per_side = 65;
    config.problem.k = 256;
    config.n_train = 1000;
    config.rom.n_max = 200;
  } else {
    config.problem.n_per_side = 33;
    config.problem.k = 64;
    config.n_train = 300;
    config.rom.n_max = 100;
  }
  config.rom.epsilon = 1e-14;
  for (Index n = 1; n <= config.rom.n_max; ++n) config.sweep.push_back(n);
  return config;
}

}  // namespace

std::vector<ErrorReport> reproduce_uniform(uint64_t seed, bool paper_scale, const fs::path& out_dir) {
  std::vector<ErrorReport> reports;

  {
    ExperimentConfig config = uniform_base(seed, paper_scale);
    config.sampler.kind = SamplerConfig::Kind::random;
    config.rom.kind = RomConfig::Kind::pod;
    reports.push_back(run_experiment(config));
  }
  {
    ExperimentConfig config = uniform_base(seed, paper_scale);
    config.sampler.kind = SamplerConfig::Kind::random;
    config.rom.kind = RomConfig::Kind::greedy;
    reports.push_back(run_experiment(config));
  }
  const std::vector<Index> mode_counts = paper_scale ? std::vector<Index>{5, 10, 20}
                                                     : std::vector<Index>{5, 12, 20};
  for (Index l : mode_counts) {
    ExperimentConfig config = uniform_base(seed, paper_scale);
    config.sampler.kind = SamplerConfig::Kind::hessian_local;
    config.sampler.l = l;
    config.rom.kind = RomConfig::Kind::pod;
    reports.push_back(run_experiment(config));
  }

  ProblemPtr problem = build_problem(uniform_base(seed, paper_scale).problem);
  const Index spectrum_l = std::min<Index>(problem->n_params, 40);
  const auto spectrum = spectrum_report(problem, spectrum_l, 10, substream(seed, "spectrum"),
                                        GevpMethod::dense);

  write_text(out_dir / "errors.csv", error_csv(reports));
  write_text(out_dir / "spectrum.csv", spectrum_csv(spectrum));
  return reports;
}

std::vector<ErrorReport> reproduce_lognormal(uint64_t seed, bool paper_scale, const fs::path& out_dir) {
  std::vector<ErrorReport> reports;

  ExperimentConfig base;
  base.problem.kind = ProblemConfig::Kind::lognormal;
  base.seed = seed;
  base.rom.kind = RomConfig::Kind::pod;
  base.rom.epsilon = 1e-14;
  if (paper_scale) {
    base.problem.n_per_side = 129;
    base.n_train = 1000;
    base.rom.n_max = 200;
  } else {
    base.problem.n_per_side = 33;
    base.n_train = 300;
    base.rom.n_max = 100;
  }
  for (Index n = 1; n <= base.rom.n_max; ++n) base.sweep.push_back(n);

  {
    ExperimentConfig config = base;
    config.sampler.kind = SamplerConfig::Kind::random;
    reports.push_back(run_experiment(config));
  }
  for (Index l : {1, 3, 7, 15}) {
    ExperimentConfig config = base;
    config.sampler.kind = SamplerConfig::Kind::hessian_local;
    config.sampler.l = l;
    reports.push_back(run_experiment(config));
  }

  ProblemPtr problem = build_problem(base.problem);
  const Index spectrum_l = paper_scale ? 100 : 30;
  const auto spectrum = spectrum_report(problem, spectrum_l, 10, substream(seed, "spectrum"),
                                        GevpMethod::randomized);

  write_text(out_dir / "errors.csv", error_csv(reports));
  write_text(out_dir / "spectrum.csv", spectrum_csv(spectrum));
  return reports;
}

}  // namespace hessrb
