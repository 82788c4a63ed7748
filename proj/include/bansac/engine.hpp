#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bansac/belief_filter.hpp"
#include "bansac/common.hpp"
#include "bansac/samplers.hpp"
#include "bansac/stopping.hpp"

namespace bansac {

struct RunConfig {
  std::size_t max_iterations = 3000;
  double inlier_threshold = 0.02;
  double confidence = 0.99;
  SamplerKind sampler = SamplerKind::uniform;
  StoppingSet stopping{.standard = true};
  double tau = 0.01;
  int markov_order = 1;
  std::uint64_t rng_seed = 0;

  GammaKind gamma = GammaKind::gamma1;
  RhoKind rho = RhoKind::rho1;
  /// Replaces the default tables when set; its order must match markov_order.
  std::optional<TransitionModel> transitions;

  double napsac_radius = 0.0;      // <= 0: 10% of the bounding-box diagonal
  double prosac_growth_max = 0.0;  // <= 0: max_iterations
  double baysac_beta = 0.1;

  bool refine = true;
  Execution kernels = Execution::serial;
  bool record_trace = false;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// Default stopping set and tau per sampler: BANSAC
/// uses bansac + standard, P-BANSAC bansac + prosac, PROSAC its own
/// criterion and everything else the standard bound.
StoppingSet default_stopping(SamplerKind sampler);
double default_tau(SamplerKind sampler);

struct Hypothesis {
  Model model;
  std::size_t iteration = 0;
  Mask inlier_mask;
  std::size_t inlier_count = 0;
  double inlier_ratio = 0.0;
};

struct RunReport {
  Model best_model;
  Mask best_mask;
  std::size_t best_inlier_count = 0;
  std::size_t best_iteration = 0;
  std::size_t iterations_used = 0;
  StopReason stop_reason = StopReason::max_iterations;
  std::chrono::nanoseconds elapsed{0};

  /// Filter posterior at exit; empty unless the belief filter ran.
  std::vector<double> final_beliefs;

  // Stopping state at exit.
  std::size_t best_outliers = 0;
  std::size_t below_tau_count = 0;

  std::size_t degenerate_samples = 0;
  std::size_t sampler_fallbacks = 0;
  std::size_t degenerate_belief_points = 0;

  bool refined = false;
  bool refit_failed = false;

  /// Best inlier count after every iteration (record_trace only).
  std::vector<std::size_t> best_count_trace;
};

/// Classifies every point against `model` with the strict test
/// residual < threshold.
Hypothesis evaluate_model(const Problem& problem, const Model& model, double inlier_threshold,
                          Execution exec = Execution::serial);

/// Same, reusing caller-owned buffers.
void evaluate_model(const Problem& problem, const Model& model, double inlier_threshold,
                    Hypothesis& out, std::vector<double>& residual_scratch,
                    Execution exec = Execution::serial);

/// Keeps the earlier hypothesis on ties. Returns true when `candidate`
/// replaced the best.
bool update_best(std::optional<Hypothesis>& best, const Hypothesis& candidate);

/// O* = N - best inlier count, N when there is no best yet.
std::size_t best_outliers(const std::optional<Hypothesis>& best, std::size_t n);

/// Sample -> hypothesise -> score -> keep best -> update beliefs -> check
/// stop, until a criterion fires or max_iterations is reached. `priors`
/// seeds P-BANSAC beliefs and the PROSAC score order.
RunReport run_estimation(const Problem& problem, const RunConfig& config,
                         std::span<const double> priors = {});

/// Least-squares refit over the best inliers, followed by one re-evaluation.
/// On rank deficiency the original model is kept and refit_failed is set.
RunReport final_refit(const Problem& problem, RunReport report, double inlier_threshold,
                      Execution exec = Execution::serial);

}  // namespace bansac
