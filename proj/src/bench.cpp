#include "bansac/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <ostream>

#include <omp.h>

#include "bansac/models.hpp"

namespace bansac {

TrialMatrix TrialMatrix::defaults(ProblemKind kind) {
  TrialMatrix m;
  m.problem = kind;
  m.data = SyntheticConfig::defaults(kind);
  if (kind == ProblemKind::homography) {
    m.samplers = {SamplerKind::uniform, SamplerKind::bansac};
    m.rates = {0.6};
    m.trials = 100;
    m.engine.inlier_threshold = 1.0;
    m.engine.max_iterations = 1000;
    m.engine.confidence = 0.999;
  } else {
    m.samplers = {SamplerKind::uniform, SamplerKind::baysac, SamplerKind::bansac};
    m.rates = {0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50};
    m.trials = 1000;
    m.engine.inlier_threshold = 0.02;
    m.engine.max_iterations = 3000;
    m.engine.confidence = 0.99;
  }
  return m;
}

void TrialMatrix::validate() const {
  if (samplers.empty()) throw std::invalid_argument("sampler list must not be empty");
  if (rates.empty()) throw std::invalid_argument("inlier rate list must not be empty");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  for (const double r : rates) {
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("inlier rates must lie in (0, 1]");
  }
  if (tau && !(*tau > 0.0 && *tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
  if (stopping && stopping->empty()) throw std::invalid_argument("stopping set must not be empty");
  SyntheticConfig d = data;
  d.problem = problem;
  d.validate();
  for (const auto s : samplers) config_for(s).validate();
}

RunConfig TrialMatrix::config_for(SamplerKind sampler) const {
  RunConfig c = engine;
  c.sampler = sampler;
  c.stopping = stopping ? *stopping : default_stopping(sampler);
  c.tau = tau ? *tau : default_tau(sampler);
  return c;
}

std::uint64_t trial_seed(std::uint64_t matrix_seed, std::size_t cell, std::size_t trial) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(matrix_seed);
  h = mix(h ^ static_cast<std::uint64_t>(cell));
  h = mix(h ^ static_cast<std::uint64_t>(trial));
  return h;
}

double compute_mAA(std::span<const double> errors, double threshold) {
  if (errors.empty()) return 0.0;
  double sum = 0.0;
  for (const double e : errors) {
    if (std::isfinite(e)) sum += std::max(0.0, 1.0 - e / threshold);
  }
  return sum / static_cast<double>(errors.size());
}

void score_against_truth(const Dataset& data, const SyntheticConfig& config, const Model& model,
                         TrialRecord& out) {
  const auto problem = make_problem(data);
  double sq = 0.0, sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data.gt_mask[i]) continue;
    const double r = problem->residual(i, model);
    sq += r * r;
    sum += r;
    ++count;
  }
  out.rmse = count ? std::sqrt(sq / static_cast<double>(count)) : 0.0;
  out.mean_gt_residual = count ? sum / static_cast<double>(count) : 0.0;

  out.error_px = 0.0;
  if (data.problem == ProblemKind::homography) {
    const Eigen::Matrix3d est = HomographyModel::from_params(model).matrix();
    const Eigen::Matrix3d gt = HomographyModel::from_params(data.gt_model).matrix();
    const Point2 corners[4] = {
        {0.0, 0.0}, {config.image_width, 0.0}, {config.image_width, config.image_height}, {0.0, config.image_height}};
    double err = 0.0;
    for (const auto& c : corners) {
      const Point2 a = apply_homography(est, c);
      const Point2 b = apply_homography(gt, c);
      err += std::hypot(a.x - b.x, a.y - b.y);
    }
    err /= 4.0;
    out.error_px = std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
  }
}

TrialRecord run_trial(const TrialMatrix& matrix, SamplerKind sampler, std::size_t rate_index,
                      std::size_t trial) {
  TrialRecord rec;
  rec.sampler = sampler;
  rec.rate_index = rate_index;
  rec.inlier_rate = matrix.rates[rate_index];
  rec.trial = trial;
  rec.seed = trial_seed(matrix.seed, rate_index, trial);

  SyntheticConfig dc = matrix.data;
  dc.problem = matrix.problem;
  dc.inlier_rate = rec.inlier_rate;
  dc.rng_seed = rec.seed;
  const Dataset data = generate(dc);
  const auto problem = make_problem(data);

  RunConfig config = matrix.config_for(sampler);
  config.rng_seed = rec.seed;
  if (!matrix.cpt_path.empty()) {
    TransitionModel t = TransitionModel::load(matrix.cpt_path, config.markov_order);
    config.transitions = t;
  }

  try {
    const RunReport report = run_estimation(*problem, config, data.scores);
    rec.iterations = report.iterations_used;
    rec.stop_reason = report.stop_reason;
    rec.inliers = report.best_inlier_count;
    rec.time_ms = std::chrono::duration<double, std::milli>(report.elapsed).count();
    rec.model = report.best_model;
    if (report.stop_reason == StopReason::bansac) {
      const auto below = static_cast<std::size_t>(std::count_if(
          report.final_beliefs.begin(), report.final_beliefs.end(), [&](double p) { return p < config.tau; }));
      rec.bansac_exit_consistent = !report.final_beliefs.empty() && below >= report.best_outliers;
    }
    score_against_truth(data, dc, rec.model, rec);
  } catch (const NoValidHypothesis&) {
    rec.failed = true;
    rec.iterations = config.max_iterations;
    rec.rmse = std::numeric_limits<double>::quiet_NaN();
    rec.mean_gt_residual = std::numeric_limits<double>::quiet_NaN();
    rec.error_px = std::numeric_limits<double>::infinity();
  }
  return rec;
}

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

CellSummary summarize(const TrialMatrix& matrix, SamplerKind sampler, double rate,
                      std::span<const TrialRecord> trials) {
  CellSummary c;
  const RunConfig config = matrix.config_for(sampler);
  c.sampler = sampler;
  c.stopping = config.stopping;
  c.tau = config.tau;
  c.inlier_rate = rate;
  c.trials = trials.size();

  std::vector<double> iterations, rmse, gt_residual, times, errors;
  std::size_t below_2 = 0;
  for (const auto& t : trials) {
    iterations.push_back(static_cast<double>(t.iterations));
    times.push_back(t.time_ms);
    errors.push_back(t.failed ? std::numeric_limits<double>::infinity() : t.error_px);
    if (t.failed) {
      ++c.failures;
      continue;
    }
    rmse.push_back(t.rmse);
    gt_residual.push_back(t.mean_gt_residual);
    if (t.mean_gt_residual < 2.0) ++below_2;
    if (t.stop_reason == StopReason::bansac) {
      ++c.bansac_stops;
      if (!t.bansac_exit_consistent) ++c.bansac_violations;
    }
  }
  c.mean_iterations = mean_of(iterations);
  c.median_iterations = median_of(iterations);
  c.mean_rmse = mean_of(rmse);
  c.mean_gt_residual = mean_of(gt_residual);
  c.frac_gt_residual_below_2 = static_cast<double>(below_2) / static_cast<double>(trials.size());
  if (matrix.problem == ProblemKind::homography) {
    c.maa5 = compute_mAA(errors, 5.0);
    c.maa10 = compute_mAA(errors, 10.0);
  }
  c.mean_time_ms = mean_of(times);
  c.median_time_ms = median_of(times);
  return c;
}

}  // namespace

MatrixReport run_matrix(const TrialMatrix& matrix) {
  matrix.validate();
  if (!matrix.cpt_path.empty()) {
    (void)TransitionModel::load(matrix.cpt_path, matrix.engine.markov_order);
  }
  MatrixReport report;
  report.matrix = matrix;

  const std::size_t n_samplers = matrix.samplers.size();
  const std::size_t n_trials = matrix.trials;
  const std::size_t total = matrix.rates.size() * n_samplers * n_trials;
  report.trials.resize(total);

  std::exception_ptr failure;
  const int threads = matrix.threads > 0 ? matrix.threads : omp_get_max_threads();
  const long long jobs = static_cast<long long>(total);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long long j = 0; j < jobs; ++j) {
    const auto job = static_cast<std::size_t>(j);
    const std::size_t trial = job % n_trials;
    const std::size_t sampler = (job / n_trials) % n_samplers;
    const std::size_t rate = job / (n_trials * n_samplers);
    try {
      report.trials[job] = run_trial(matrix, matrix.samplers[sampler], rate, trial);
    } catch (...) {
#pragma omp critical(bansac_bench_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t r = 0; r < matrix.rates.size(); ++r) {
    for (std::size_t s = 0; s < n_samplers; ++s) {
      const std::size_t offset = (r * n_samplers + s) * n_trials;
      report.cells.push_back(summarize(matrix, matrix.samplers[s], matrix.rates[r],
                                       std::span<const TrialRecord>(report.trials).subspan(offset, n_trials)));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string full(double v) {
  if (!std::isfinite(v)) return num(v);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& values, const char* sep, auto&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    out += fmt(values[i]);
  }
  return out;
}

constexpr const char* kMaaDefinition =
    "mean over trials of max(0,1-e/T); e = mean image-corner transfer error vs GT homography (px); failures score 0";
constexpr const char* kRmseDefinition = "RMS residual of ground-truth inliers under the final model";

}  // namespace

std::vector<std::pair<std::string, std::string>> report_metadata(const TrialMatrix& m) {
  std::vector<std::pair<std::string, std::string>> meta;
  meta.emplace_back("problem", to_string(m.problem));
  meta.emplace_back("samplers", join(m.samplers, ",", [](SamplerKind s) { return to_string(s); }));
  meta.emplace_back("stopping", m.stopping ? to_string(*m.stopping) : "per-sampler");
  meta.emplace_back("rates", join(m.rates, ",", [](double r) { return num(r); }));
  meta.emplace_back("trials", std::to_string(m.trials));
  meta.emplace_back("max_iters", std::to_string(m.engine.max_iterations));
  meta.emplace_back("threshold", num(m.engine.inlier_threshold));
  meta.emplace_back("confidence", num(m.engine.confidence));
  meta.emplace_back("tau", m.tau ? num(*m.tau) : "per-sampler");
  meta.emplace_back("markov_order", std::to_string(m.engine.markov_order));
  meta.emplace_back("gamma", to_string(m.engine.gamma));
  meta.emplace_back("rho", to_string(m.engine.rho));
  meta.emplace_back("cpt", m.cpt_path.empty() ? "default" : m.cpt_path);
  meta.emplace_back("seed", std::to_string(m.seed));
  meta.emplace_back("n_points", std::to_string(m.data.n_points));
  meta.emplace_back("noise_std", num(m.data.noise_std));
  if (m.problem == ProblemKind::curve) meta.emplace_back("curve_degree", std::to_string(m.data.curve_degree));
  meta.emplace_back("refine", m.engine.refine ? "true" : "false");
  meta.emplace_back("rmse", kRmseDefinition);
  if (m.problem == ProblemKind::homography) meta.emplace_back("maa", kMaaDefinition);
  return meta;
}

void write_cells_csv(std::ostream& out, const MatrixReport& report) {
  const bool homography = report.matrix.problem == ProblemKind::homography;
  for (const auto& [k, v] : report_metadata(report.matrix)) out << "# " << k << '=' << v << '\n';
  out << "problem,sampler,stopping,tau,inlier_rate,trials,mean_iterations,median_iterations,mean_rmse,"
         "mean_gt_residual,frac_gt_residual_below_2,failures,bansac_stops,bansac_violations";
  if (homography) out << ",maa5,maa10";
  if (report.matrix.timing) out << ",mean_time_ms,median_time_ms";
  out << '\n';
  for (const auto& c : report.cells) {
    out << to_string(report.matrix.problem) << ',' << to_string(c.sampler) << ',' << to_string(c.stopping) << ','
        << num(c.tau) << ',' << num(c.inlier_rate) << ',' << c.trials << ',' << num(c.mean_iterations) << ','
        << num(c.median_iterations) << ',' << num(c.mean_rmse) << ',' << num(c.mean_gt_residual) << ','
        << num(c.frac_gt_residual_below_2) << ',' << c.failures << ',' << c.bansac_stops << ','
        << c.bansac_violations;
    if (homography) out << ',' << num(c.maa5) << ',' << num(c.maa10);
    if (report.matrix.timing) out << ',' << num(c.mean_time_ms) << ',' << num(c.median_time_ms);
    out << '\n';
  }
}

void write_trials_csv(std::ostream& out, const MatrixReport& report) {
  for (const auto& [k, v] : report_metadata(report.matrix)) out << "# " << k << '=' << v << '\n';
  out << "sampler,inlier_rate,trial,seed,failed,iterations,stop_reason,inliers,rmse,mean_gt_residual,error_px,model";
  if (report.matrix.timing) out << ",time_ms";
  out << '\n';
  for (const auto& t : report.trials) {
    out << to_string(t.sampler) << ',' << num(t.inlier_rate) << ',' << t.trial << ',' << t.seed << ','
        << (t.failed ? 1 : 0) << ',' << t.iterations << ',' << to_string(t.stop_reason) << ',' << t.inliers << ','
        << full(t.rmse) << ',' << full(t.mean_gt_residual) << ',' << full(t.error_px) << ','
        << join(t.model, ";", [](double v) { return full(v); });
    if (report.matrix.timing) out << ',' << num(t.time_ms);
    out << '\n';
  }
}

namespace {

nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

nlohmann::json report_json(const MatrixReport& report) {
  nlohmann::json doc;
  nlohmann::json meta = nlohmann::json::object();
  for (const auto& [k, v] : report_metadata(report.matrix)) meta[k] = v;
  doc["meta"] = meta;
  const bool homography = report.matrix.problem == ProblemKind::homography;
  doc["cells"] = nlohmann::json::array();
  for (const auto& c : report.cells) {
    nlohmann::json j{{"sampler", to_string(c.sampler)},
                     {"stopping", to_string(c.stopping)},
                     {"tau", c.tau},
                     {"inlier_rate", c.inlier_rate},
                     {"trials", c.trials},
                     {"mean_iterations", json_number(c.mean_iterations)},
                     {"median_iterations", json_number(c.median_iterations)},
                     {"mean_rmse", json_number(c.mean_rmse)},
                     {"mean_gt_residual", json_number(c.mean_gt_residual)},
                     {"frac_gt_residual_below_2", c.frac_gt_residual_below_2},
                     {"failures", c.failures},
                     {"bansac_stops", c.bansac_stops},
                     {"bansac_violations", c.bansac_violations}};
    if (homography) {
      j["maa5"] = c.maa5;
      j["maa10"] = c.maa10;
    }
    if (report.matrix.timing) {
      j["mean_time_ms"] = json_number(c.mean_time_ms);
      j["median_time_ms"] = json_number(c.median_time_ms);
    }
    doc["cells"].push_back(std::move(j));
  }
  if (report.matrix.dump_trials) {
    doc["trials"] = nlohmann::json::array();
    for (const auto& t : report.trials) {
      nlohmann::json j{{"sampler", to_string(t.sampler)},
                       {"inlier_rate", t.inlier_rate},
                       {"trial", t.trial},
                       {"seed", t.seed},
                       {"failed", t.failed},
                       {"iterations", t.iterations},
                       {"stop_reason", to_string(t.stop_reason)},
                       {"inliers", t.inliers},
                       {"rmse", json_number(t.rmse)},
                       {"mean_gt_residual", json_number(t.mean_gt_residual)},
                       {"error_px", json_number(t.error_px)},
                       {"model", t.model}};
      if (report.matrix.timing) j["time_ms"] = t.time_ms;
      doc["trials"].push_back(std::move(j));
    }
  }
  return doc;
}

void write_report(const MatrixReport& report, std::ostream& stdout_stream) {
  const TrialMatrix& m = report.matrix;
  std::ofstream file;
  std::ostream* out = &stdout_stream;
  if (!m.output.empty()) {
    file.open(m.output);
    if (!file) throw std::runtime_error("cannot write '" + m.output + "'");
    out = &file;
  }
  if (m.format == OutputFormat::json) {
    *out << report_json(report).dump(2) << '\n';
  } else {
    write_cells_csv(*out, report);
    if (m.dump_trials) {
      if (m.output.empty()) {
        *out << '\n';
        write_trials_csv(*out, report);
      } else {
        std::ofstream trials(m.output + ".trials.csv");
        if (!trials) throw std::runtime_error("cannot write '" + m.output + ".trials.csv'");
        write_trials_csv(trials, report);
      }
    }
  }
  if (!*out) throw std::runtime_error("failed writing report");
}

}  // namespace bansac
