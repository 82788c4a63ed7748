#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bansac/engine.hpp"
#include "bansac/synth.hpp"

namespace bansac {

enum class OutputFormat { csv, json };

/// Sweep of samplers x inlier rates, each cell run for `trials` seeded
/// synthetic datasets.
struct TrialMatrix {
  ProblemKind problem = ProblemKind::curve;
  std::vector<SamplerKind> samplers;
  std::vector<double> rates;
  std::size_t trials = 1000;

  /// Engine template. Sampler, stopping, tau and seed are set per trial.
  RunConfig engine;
  /// Applied to every sampler when set; otherwise default_stopping/default_tau.
  std::optional<StoppingSet> stopping;
  std::optional<double> tau;
  std::string cpt_path;

  /// Data template. Rate and seed are set per trial.
  SyntheticConfig data;

  std::uint64_t seed = 42;
  std::string output;
  OutputFormat format = OutputFormat::csv;
  bool dump_trials = false;
  bool timing = true;
  int threads = 0;  // <= 0: OpenMP default

  /// Settings for the kind: curve/circle use threshold 0.02, 3000
  /// iterations, confidence 0.99, 1000 trials over rates 0.15..0.50;
  /// homography uses 1 px, 1000 iterations, confidence 0.999, 100 scenes
  /// at rate 0.6.
  static TrialMatrix defaults(ProblemKind kind);

  void validate() const;

  RunConfig config_for(SamplerKind sampler) const;
};

struct TrialRecord {
  SamplerKind sampler = SamplerKind::uniform;
  std::size_t rate_index = 0;
  double inlier_rate = 0.0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::size_t iterations = 0;
  StopReason stop_reason = StopReason::max_iterations;
  std::size_t inliers = 0;
  /// RMS residual of the ground-truth inliers under the estimated model.
  double rmse = 0.0;
  double mean_gt_residual = 0.0;
  /// Homography only: mean image-corner transfer distance to the GT
  /// homography, px. Infinite on failure.
  double error_px = 0.0;
  /// Whether the low-belief count reached O* at exit, recomputed from the
  /// exit beliefs. Only meaningful when stop_reason == bansac.
  bool bansac_exit_consistent = true;
  double time_ms = 0.0;
  Model model;
};

struct CellSummary {
  SamplerKind sampler = SamplerKind::uniform;
  StoppingSet stopping;
  double tau = 0.0;
  double inlier_rate = 0.0;
  std::size_t trials = 0;
  double mean_iterations = 0.0;
  double median_iterations = 0.0;
  double mean_rmse = 0.0;
  double mean_gt_residual = 0.0;
  std::size_t failures = 0;
  std::size_t bansac_stops = 0;
  std::size_t bansac_violations = 0;
  /// Homography only.
  double maa5 = 0.0;
  double maa10 = 0.0;
  /// Fraction of trials whose mean GT-inlier residual is below 2 (px for
  /// homography).
  double frac_gt_residual_below_2 = 0.0;
  double mean_time_ms = 0.0;
  double median_time_ms = 0.0;
};

struct MatrixReport {
  TrialMatrix matrix;
  std::vector<CellSummary> cells;   // rate-major, samplers in matrix order
  std::vector<TrialRecord> trials;  // same order, trials innermost
};

/// splitmix64 mix of the matrix seed, cell index and trial index.
std::uint64_t trial_seed(std::uint64_t matrix_seed, std::size_t cell, std::size_t trial);

/// Mean over trials of max(0, 1 - error / threshold): the normalised area
/// under the per-trial accuracy step function on [0, threshold]. Non-finite
/// errors count as 0.
double compute_mAA(std::span<const double> errors, double threshold);

/// Runs one trial: generates the dataset for (rate, seed), estimates and
/// scores it against the ground truth.
TrialRecord run_trial(const TrialMatrix& matrix, SamplerKind sampler, std::size_t rate_index,
                      std::size_t trial);

/// Scores an estimated model against ground truth (rmse, mean residual and,
/// for homography, corner error).
void score_against_truth(const Dataset& data, const SyntheticConfig& config, const Model& model,
                         TrialRecord& out);

MatrixReport run_matrix(const TrialMatrix& matrix);

std::vector<std::pair<std::string, std::string>> report_metadata(const TrialMatrix& matrix);

void write_cells_csv(std::ostream& out, const MatrixReport& report);
void write_trials_csv(std::ostream& out, const MatrixReport& report);
nlohmann::json report_json(const MatrixReport& report);

/// Writes the report in the matrix' format to matrix.output (stdout when
/// empty) plus the trial dump when requested.
void write_report(const MatrixReport& report, std::ostream& stdout_stream);

}  // namespace bansac
