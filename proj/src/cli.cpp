#include "bansac/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

namespace bansac {

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

double parse_double(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + text + "'");
  }
  if (used != text.size()) throw std::invalid_argument("not a number: '" + text + "'");
  return v;
}

// Flags shared by bench and estimate. Values are only applied when the flag
// was given, so per-problem defaults survive.
struct EngineFlags {
  std::size_t max_iters = 0;
  double threshold = 0.0;
  double confidence = 0.0;
  double tau = 0.0;
  int markov_order = 1;
  std::string gamma;
  std::string rho;
  std::string stopping;
  std::string cpt;
  std::string kernels;
  bool no_refine = false;
};

void add_engine_flags(CLI::App& app, EngineFlags& f) {
  app.add_option("--max-iters", f.max_iters, "Maximum iterations");
  app.add_option("--threshold", f.threshold, "Inlier residual threshold");
  app.add_option("--confidence", f.confidence, "Confidence of the standard stopping bound");
  app.add_option("--tau", f.tau, "Belief threshold of the BANSAC stopping criterion");
  app.add_option("--markov-order", f.markov_order, "Order of the per-point belief chain (1..3)");
  app.add_option("--gamma", f.gamma, "Evidence reliability function: gamma1, gamma2, gamma3");
  app.add_option("--rho", f.rho, "Belief-to-weight activation: rho1..rho4");
  app.add_option("--stopping", f.stopping,
                 "Stopping criteria joined by '+': standard, prosac, bansac (default: per sampler)");
  app.add_option("--cpt", f.cpt, "Transition table override file");
  app.add_option("--kernels", f.kernels, "Residual and belief kernels: serial or parallel");
  app.add_flag("--no-refine", f.no_refine, "Skip the final least-squares refit");
}

bool given(const CLI::App& app, const std::string& name) { return app.get_option(name)->count() > 0; }

void apply_engine_flags(const CLI::App& app, const EngineFlags& f, RunConfig& c,
                        std::optional<StoppingSet>& stopping, std::optional<double>& tau) {
  if (given(app, "--max-iters")) c.max_iterations = f.max_iters;
  if (given(app, "--threshold")) c.inlier_threshold = f.threshold;
  if (given(app, "--confidence")) c.confidence = f.confidence;
  if (given(app, "--tau")) tau = f.tau;
  if (given(app, "--markov-order")) c.markov_order = f.markov_order;
  if (given(app, "--gamma")) c.gamma = parse_gamma_kind(f.gamma);
  if (given(app, "--rho")) c.rho = parse_rho_kind(f.rho);
  if (given(app, "--stopping") && f.stopping != "default") stopping = parse_stopping_set(f.stopping);
  if (given(app, "--kernels")) {
    if (f.kernels == "serial") c.kernels = Execution::serial;
    else if (f.kernels == "parallel") c.kernels = Execution::parallel;
    else throw std::invalid_argument("kernels must be serial or parallel");
  }
  if (f.no_refine) c.refine = false;
  if (!(tau.value_or(0.5) > 0.0 && tau.value_or(0.5) < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
}

struct BenchFlags {
  EngineFlags engine;
  std::string problem = "curve";
  std::string samplers;
  std::string rates;
  std::size_t trials = 0;
  std::uint64_t seed = 42;
  std::string out;
  std::string format = "csv";
  bool dump_trials = false;
  bool no_timing = false;
  std::size_t n_points = 0;
  double noise_std = 0.0;
  double noise_variance = 0.0;
  int degree = 3;
  int threads = 0;
};

void add_bench_flags(CLI::App& app, BenchFlags& f) {
  app.add_option("--problem", f.problem, "curve, circle or homography");
  app.add_option("--samplers", f.samplers, "Comma-separated: ransac, napsac, prosac, baysac, bansac, p_bansac");
  app.add_option("--rates", f.rates, "Comma-separated inlier rates");
  app.add_option("--trials", f.trials, "Trials per (sampler, rate) cell");
  app.add_option("--seed", f.seed, "Matrix seed");
  app.add_option("--out", f.out, "Report path (default: stdout)");
  app.add_option("--format", f.format, "csv or json");
  app.add_flag("--dump-trials", f.dump_trials, "Also write one row per trial");
  app.add_flag("--no-timing", f.no_timing, "Omit wall-time columns");
  app.add_option("--n-points", f.n_points, "Points per synthetic dataset");
  auto* std_opt = app.add_option("--noise-std", f.noise_std, "Inlier noise standard deviation");
  auto* var_opt = app.add_option("--noise-variance", f.noise_variance, "Inlier noise variance");
  std_opt->excludes(var_opt);
  app.add_option("--degree", f.degree, "Curve polynomial degree");
  app.add_option("--threads", f.threads, "Worker threads for trials (0: OpenMP default)");
  add_engine_flags(app, f.engine);
}

TrialMatrix matrix_from_flags(const CLI::App& app, const BenchFlags& f) {
  TrialMatrix m = TrialMatrix::defaults(parse_problem_kind(f.problem));
  if (given(app, "--samplers")) {
    m.samplers.clear();
    for (const auto& s : split_list(f.samplers)) m.samplers.push_back(parse_sampler_kind(s));
  }
  if (given(app, "--rates")) {
    m.rates.clear();
    for (const auto& r : split_list(f.rates)) m.rates.push_back(parse_double(r));
  }
  if (given(app, "--trials")) m.trials = f.trials;
  m.seed = f.seed;
  m.output = f.out;
  if (f.format == "csv") m.format = OutputFormat::csv;
  else if (f.format == "json") m.format = OutputFormat::json;
  else throw std::invalid_argument("format must be csv or json");
  m.dump_trials = f.dump_trials;
  m.timing = !f.no_timing;
  if (given(app, "--n-points")) m.data.n_points = f.n_points;
  if (given(app, "--noise-std")) m.data.noise_std = f.noise_std;
  if (given(app, "--noise-variance")) {
    if (!(f.noise_variance >= 0.0)) throw std::invalid_argument("noise variance must be >= 0");
    m.data.noise_std = std::sqrt(f.noise_variance);
  }
  m.data.curve_degree = f.degree;
  m.threads = f.threads;
  apply_engine_flags(app, f.engine, m.engine, m.stopping, m.tau);
  m.cpt_path = f.engine.cpt;
  m.validate();
  return m;
}

// CLI11 consumes arguments from the back.
void parse_forward(CLI::App& app, const std::vector<std::string>& args) {
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  app.parse(reversed);
}

int bench_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  TrialMatrix matrix;
  try {
    matrix = parse_cli(args);
  } catch (const CliError& e) {
    err << "error: " << e.what() << "\n\n" << e.usage();
    return kExitConfig;
  }
  if (!matrix.output.empty()) {
    std::ofstream probe(matrix.output);
    if (!probe) {
      err << "error: cannot write '" << matrix.output << "'\n";
      return kExitConfig;
    }
  }
  try {
    const MatrixReport report = run_matrix(matrix);
    write_report(report, out);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int generate_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Write a synthetic dataset as CSV", "bansac_cli generate"};
  std::string problem = "curve";
  double rate = 0.5;
  std::size_t n_points = 0;
  double noise_std = 0.0;
  int degree = 3;
  std::uint64_t seed = 0;
  std::string path;
  app.add_option("--problem", problem, "curve, circle or homography");
  app.add_option("--rate", rate, "Inlier rate");
  app.add_option("--n-points", n_points, "Number of points");
  app.add_option("--noise-std", noise_std, "Inlier noise standard deviation");
  app.add_option("--degree", degree, "Curve polynomial degree");
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--out", path, "Output path (default: stdout)");
  SyntheticConfig config;
  try {
    parse_forward(app, args);
    config = SyntheticConfig::defaults(parse_problem_kind(problem));
    if (given(app, "--rate")) config.inlier_rate = rate;
    if (given(app, "--n-points")) config.n_points = n_points;
    if (given(app, "--noise-std")) config.noise_std = noise_std;
    config.curve_degree = degree;
    config.rng_seed = seed;
    config.validate();
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }
  const Dataset data = generate(config);
  if (path.empty()) {
    write_dataset_csv(out, data);
    return kExitOk;
  }
  std::ofstream file(path);
  if (!file) {
    err << "error: cannot write '" << path << "'\n";
    return kExitConfig;
  }
  write_dataset_csv(file, data);
  return file ? kExitOk : kExitRuntime;
}

int estimate_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Estimate a model on a dataset CSV", "bansac_cli estimate"};
  std::string input;
  std::string sampler = "bansac";
  std::uint64_t seed = 0;
  EngineFlags flags;
  app.add_option("--input", input, "Dataset CSV")->required();
  app.add_option("--sampler", sampler, "ransac, napsac, prosac, baysac, bansac, p_bansac");
  app.add_option("--seed", seed, "Random seed");
  add_engine_flags(app, flags);

  Dataset data;
  RunConfig config;
  try {
    parse_forward(app, args);
    std::ifstream in(input);
    if (!in) throw std::invalid_argument("cannot open '" + input + "'");
    data = read_dataset_csv(in);
    const TrialMatrix defaults = TrialMatrix::defaults(data.problem);
    config = defaults.engine;
    config.sampler = parse_sampler_kind(sampler);
    config.rng_seed = seed;
    std::optional<StoppingSet> stopping;
    std::optional<double> tau;
    apply_engine_flags(app, flags, config, stopping, tau);
    config.stopping = stopping ? *stopping : default_stopping(config.sampler);
    config.tau = tau ? *tau : default_tau(config.sampler);
    if (!flags.cpt.empty()) config.transitions = TransitionModel::load(flags.cpt, config.markov_order);
    config.validate();
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    const auto problem = make_problem(data);
    const RunReport report = run_estimation(*problem, config, data.scores);
    nlohmann::json doc{{"problem", to_string(data.problem)},
                       {"sampler", to_string(config.sampler)},
                       {"stopping", to_string(config.stopping)},
                       {"iterations", report.iterations_used},
                       {"stop_reason", to_string(report.stop_reason)},
                       {"inliers", report.best_inlier_count},
                       {"points", problem->size()},
                       {"refined", report.refined},
                       {"model", report.best_model}};
    if (!data.gt_model.empty() && !data.gt_mask.empty()) {
      TrialRecord scored;
      SyntheticConfig geometry = SyntheticConfig::defaults(data.problem);
      score_against_truth(data, geometry, report.best_model, scored);
      doc["rmse"] = scored.rmse;
      if (data.problem == ProblemKind::homography) doc["error_px"] = scored.error_px;
    }
    out << doc.dump(2) << '\n';
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

std::string top_usage() {
  return "usage: bansac_cli [bench] [flags]   run a sampler x inlier-rate benchmark (default)\n"
         "       bansac_cli generate [flags]  write a synthetic dataset\n"
         "       bansac_cli estimate [flags]  estimate a model on a dataset CSV\n"
         "Run a command with --help for its flags.\n";
}

}  // namespace

TrialMatrix parse_cli(const std::vector<std::string>& args) {
  CLI::App app{"Sweep samplers and inlier rates over seeded synthetic trials", "bansac_cli bench"};
  BenchFlags flags;
  add_bench_flags(app, flags);
  try {
    parse_forward(app, args);
    return matrix_from_flags(app, flags);
  } catch (const CLI::ParseError& e) {
    throw CliError(e.what(), app.help());
  } catch (const std::invalid_argument& e) {
    throw CliError(e.what(), app.help());
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::string command = "bench";
  std::vector<std::string> rest = args;
  if (!rest.empty() && !rest.front().starts_with("--")) {
    command = rest.front();
    rest.erase(rest.begin());
  }
  if (command == "help" || (command == "bench" && rest.size() == 1 && (rest[0] == "--help" || rest[0] == "-h"))) {
    CLI::App app{"Sweep samplers and inlier rates over seeded synthetic trials", "bansac_cli bench"};
    BenchFlags flags;
    add_bench_flags(app, flags);
    out << top_usage() << '\n' << app.help();
    return kExitOk;
  }
  if (command == "bench") return bench_command(rest, out, err);
  if (command == "generate") return generate_command(rest, out, err);
  if (command == "estimate") return estimate_command(rest, out, err);
  err << "error: unknown command '" << command << "'\n\n" << top_usage();
  return kExitConfig;
}

}  // namespace bansac
