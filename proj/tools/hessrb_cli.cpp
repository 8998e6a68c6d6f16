// Command-line driver: spectra, training sets, reduced models, error sweeps,
// and the two reference experiments.

#include "hessrb/experiment.hpp"
#include "hessrb/io.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace fs = std::filesystem;
using namespace hessrb;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir = "out";
  uint64_t seed = 0;
  bool seed_set = false;
  bool paper_scale = false;
};

ExperimentConfig load_config(const CommonOptions& opts) {
  ExperimentConfig config = parse_config_file(opts.config_path);
  if (opts.seed_set) config.seed = opts.seed;
  if (!config.out_dir.empty() && opts.out_dir == "out") return config;
  config.out_dir = opts.out_dir;
  return config;
}

void add_common(CLI::App* cmd, CommonOptions& opts, bool needs_config) {
  if (needs_config)
    cmd->add_option("--config", opts.config_path, "experiment config file (key = value lines)")
        ->required()
        ->check(CLI::ExistingFile);
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "override the config seed")->each([&](const std::string&) {
    opts.seed_set = true;
  });
  cmd->add_flag("--paper-scale", opts.paper_scale, "full-size meshes and sample counts");
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-oriented model reduction with Hessian-based training-sample selection"};
  app.require_subcommand(1);

  CommonOptions spectrum_opts, sample_opts, build_opts, eval_opts, repro_opts;

  auto* spectrum_cmd = app.add_subcommand("spectrum", "dominant Hessian eigenvalues at the mean");
  add_common(spectrum_cmd, spectrum_opts, true);

  auto* sample_cmd = app.add_subcommand("sample", "draw and store a training set");
  add_common(sample_cmd, sample_opts, true);

  auto* build_cmd = app.add_subcommand("build-rom", "build and serialize a reduced model");
  add_common(build_cmd, build_opts, true);

  auto* eval_cmd = app.add_subcommand("evaluate", "error sweep of a stored reduced model");
  std::string model_dir;
  add_common(eval_cmd, eval_opts, true);
  eval_cmd->add_option("--model", model_dir, "model directory from build-rom")
      ->required()
      ->check(CLI::ExistingDirectory);

  auto* repro_cmd = app.add_subcommand("reproduce", "run a full experiment matrix");
  std::string which;
  repro_cmd->add_option("experiment", which, "uniform | lognormal")
      ->required()
      ->check(CLI::IsMember({"uniform", "lognormal"}));
  add_common(repro_cmd, repro_opts, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*spectrum_cmd) {
      const ExperimentConfig config = load_config(spectrum_opts);
      ProblemPtr problem = build_problem(config.problem);
      const auto rows = spectrum_report(problem, config.sampler.l, config.sampler.c,
                                        substream(config.seed, "spectrum"), config.sampler.gevp);
      const fs::path out = fs::path(config.out_dir) / "spectrum.csv";
      write_file(out, spectrum_csv(rows));
      std::cout << "wrote " << out.string() << " (" << rows.size() << " eigenvalues)\n";
    } else if (*sample_cmd) {
      const ExperimentConfig config = load_config(sample_opts);
      ProblemPtr problem = build_problem(config.problem);
      const auto training = build_training_set(config, problem);
      const fs::path out = fs::path(config.out_dir) / ("train_" + scheme_label(config) + ".txt");
      fs::create_directories(config.out_dir);
      write_parameter_set(out, training);
      std::cout << "wrote " << out.string() << " (" << training.size() << " samples)\n";
    } else if (*build_cmd) {
      const ExperimentConfig config = load_config(build_opts);
      ProblemPtr problem = build_problem(config.problem);
      const auto training = build_training_set(config, problem);
      const ReducedModel model = build_rom(config, problem, training);
      const fs::path dir = fs::path(config.out_dir) / ("rom_" + scheme_label(config));
      save_model(dir, model);
      fs::create_directories(config.out_dir);
      write_parameter_set(fs::path(config.out_dir) / ("train_" + scheme_label(config) + ".txt"), training);
      std::cout << "wrote " << dir.string() << " (rank " << model.rank() << ")\n";
    } else if (*eval_cmd) {
      const ExperimentConfig config = load_config(eval_opts);
      ProblemPtr problem = build_problem(config.problem);
      const ReducedModel model = load_model(model_dir, problem);
      const auto test_set = draw_distribution_samples(problem->distribution, config.test_size,
                                                      substream(config.seed, "test"));
      ErrorReport report;
      report.scheme = scheme_label(config);
      report.l = config.sampler.kind == SamplerConfig::Kind::random ? 0 : config.sampler.l;
      report.seed = config.seed;
      std::vector<Index> sweep = config.sweep;
      if (sweep.empty())
        for (Index n = 1; n <= model.rank(); ++n) sweep.push_back(n);
      for (Index n : sweep) {
        if (n > model.rank()) continue;
        const ErrorPair err = compute_errors(*problem, model, test_set, n);
        report.rows.push_back({n, err.err_u, err.err_s});
      }
      const fs::path out = fs::path(config.out_dir) / "errors.csv";
      write_file(out, error_csv({report}));
      std::cout << "wrote " << out.string() << " (" << report.rows.size() << " rows)\n";
    } else if (*repro_cmd) {
      const uint64_t seed = repro_opts.seed_set ? repro_opts.seed : 0;
      const fs::path out_dir(repro_opts.out_dir);
      const auto reports = which == "uniform"
                               ? reproduce_uniform(seed, repro_opts.paper_scale, out_dir)
                               : reproduce_lognormal(seed, repro_opts.paper_scale, out_dir);
      std::cout << "wrote " << (out_dir / "errors.csv").string() << " and "
                << (out_dir / "spectrum.csv").string() << '\n';
      for (const auto& report : reports)
        std::cout << "  " << report.scheme << " (L=" << report.l << "): rank "
                  << report.metadata.at("rom_rank") << ", " << report.rows.size() << " sweep points\n";
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
