#include "bansac/engine.hpp"

#include <algorithm>
#include <cmath>

namespace bansac {

void RunConfig::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(inlier_threshold >= 0.0)) throw std::invalid_argument("inlier_threshold must be >= 0");
  if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("confidence must lie in (0, 1)");
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
  if (markov_order < 1 || markov_order > 3) throw std::invalid_argument("markov_order must be 1, 2 or 3");
  if (stopping.empty()) throw std::invalid_argument("stopping set must not be empty");
  if (transitions && transitions->order() != markov_order) {
    throw std::invalid_argument("transition model order differs from markov_order");
  }
  if (!(baysac_beta >= 0.0 && baysac_beta < 1.0)) throw std::invalid_argument("baysac_beta must lie in [0, 1)");
}

StoppingSet default_stopping(SamplerKind sampler) {
  switch (sampler) {
    case SamplerKind::bansac: return {.standard = true, .bansac = true};
    case SamplerKind::p_bansac: return {.prosac = true, .bansac = true};
    case SamplerKind::prosac: return {.prosac = true};
    default: return {.standard = true};
  }
}

double default_tau(SamplerKind sampler) { return sampler == SamplerKind::p_bansac ? 0.1 : 0.01; }

void evaluate_model(const Problem& problem, const Model& model, double inlier_threshold,
                    Hypothesis& out, std::vector<double>& residual_scratch, Execution exec) {
  const std::size_t n = problem.size();
  residual_scratch.resize(n);
  problem.residuals(model, residual_scratch, exec);
  out.model = model;
  out.inlier_mask.resize(n);
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool inlier = residual_scratch[i] < inlier_threshold;
    out.inlier_mask[i] = inlier ? 1 : 0;
    count += inlier ? 1 : 0;
  }
  out.inlier_count = count;
  out.inlier_ratio = n > 0 ? static_cast<double>(count) / static_cast<double>(n) : 0.0;
}

Hypothesis evaluate_model(const Problem& problem, const Model& model, double inlier_threshold,
                          Execution exec) {
  Hypothesis h;
  std::vector<double> scratch;
  evaluate_model(problem, model, inlier_threshold, h, scratch, exec);
  return h;
}

bool update_best(std::optional<Hypothesis>& best, const Hypothesis& candidate) {
  if (!best || candidate.inlier_count > best->inlier_count) {
    best = candidate;
    return true;
  }
  return false;
}

std::size_t best_outliers(const std::optional<Hypothesis>& best, std::size_t n) {
  return best ? n - best->inlier_count : n;
}

namespace {

std::size_t count_in_prefix(const Mask& mask, std::span<const std::size_t> order, std::size_t pool) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < pool; ++i) count += mask[order[i]];
  return count;
}

}  // namespace

RunReport run_estimation(const Problem& problem, const RunConfig& config,
                         std::span<const double> priors) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();

  const std::size_t n = problem.size();
  const std::size_t m = problem.minimal_sample_size();
  if (n < m) {
    throw InsufficientData("need at least " + std::to_string(m) + " points, got " + std::to_string(n));
  }
  if (!priors.empty()) {
    if (priors.size() != n) throw std::invalid_argument("prior vector length differs from number of points");
    for (const double p : priors) {
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("priors must lie in [0, 1]");
    }
  }
  if (needs_scores(config.sampler) && priors.empty()) {
    throw std::invalid_argument(to_string(config.sampler) + " sampling needs prior scores");
  }

  const bool filtering = is_belief_driven(config.sampler) || config.stopping.bansac;
  const TransitionModel transitions =
      config.transitions ? *config.transitions : TransitionModel::defaults(config.markov_order, config.gamma);
  BeliefState beliefs;
  if (filtering) {
    beliefs = config.sampler == SamplerKind::p_bansac ? BeliefState::from_priors(config.markov_order, priors)
                                                      : BeliefState::uniform(config.markov_order, n, 0.5);
  }

  const double growth_max = config.prosac_growth_max > 0.0 ? config.prosac_growth_max
                                                           : static_cast<double>(config.max_iterations);
  SamplerOptions options{.kind = config.sampler,
                         .rho = config.rho,
                         .napsac_radius = config.napsac_radius,
                         .prosac_growth_max = growth_max,
                         .baysac_beta = config.baysac_beta};
  Sampler sampler(problem, options, config.rng_seed, priors);

  // The PROSAC criterion looks at the best model's support inside the
  // current pool of top-scored points; without scores the pool is all N.
  std::vector<std::size_t> score_order;
  ProsacSchedule prosac_schedule;
  const bool prosac_pool = config.stopping.prosac && !priors.empty();
  if (prosac_pool) {
    score_order = order_by_score(priors);
    prosac_schedule = ProsacSchedule(n, m, growth_max);
  }

  RunReport report;
  std::optional<Hypothesis> best;
  Hypothesis current;
  std::vector<double> residual_scratch;
  std::vector<std::size_t> sample;
  sample.reserve(m);

  std::size_t k = 1;
  for (;; ++k) {
    sampler.draw(k, beliefs.posterior, sample);
    const std::optional<Model> model = problem.fit_minimal(sample);
    if (!model) {
      ++report.degenerate_samples;
      sampler.after_hypothesis(sample, false);
    } else {
      evaluate_model(problem, *model, config.inlier_threshold, current, residual_scratch, config.kernels);
      current.iteration = k;
      const bool improved = update_best(best, current);
      sampler.after_hypothesis(sample, improved);
      if (filtering) {
        report.degenerate_belief_points +=
            update_beliefs(beliefs, current.inlier_mask, current.inlier_ratio, transitions, config.kernels);
      }
    }
    if (config.record_trace) report.best_count_trace.push_back(best ? best->inlier_count : 0);

    StopSignals signals;
    StoppingState stop_state{.best_outliers = best_outliers(best, n), .tau = config.tau};
    if (best) {
      if (config.stopping.standard) {
        signals.standard = standard_should_stop(k, best->inlier_ratio, m, config.confidence);
      }
      if (config.stopping.prosac) {
        double ratio = best->inlier_ratio;
        if (prosac_pool) {
          const std::size_t pool = prosac_schedule.pool_size(k);
          ratio = static_cast<double>(count_in_prefix(best->inlier_mask, score_order, pool)) /
                  static_cast<double>(pool);
        }
        signals.prosac = standard_should_stop(k, ratio, m, config.confidence);
      }
    }
    if (config.stopping.bansac) {
      stop_state.below_tau_count = beliefs.count_below(config.tau);
      signals.bansac = bansac_should_stop(stop_state);
    }
    report.best_outliers = stop_state.best_outliers;
    report.below_tau_count = stop_state.below_tau_count;

    if (const auto reason = combine(config.stopping, signals)) {
      report.stop_reason = *reason;
      break;
    }
    if (k >= config.max_iterations) {
      report.stop_reason = StopReason::max_iterations;
      break;
    }
  }

  report.iterations_used = k;
  report.sampler_fallbacks = sampler.fallback_count();
  if (!best) {
    throw NoValidHypothesis("every minimal sample was degenerate in " + std::to_string(k) + " iterations");
  }
  report.best_model = std::move(best->model);
  report.best_mask = std::move(best->inlier_mask);
  report.best_inlier_count = best->inlier_count;
  report.best_iteration = best->iteration;
  if (filtering) report.final_beliefs = beliefs.posterior;

  if (config.refine) report = final_refit(problem, std::move(report), config.inlier_threshold, config.kernels);
  report.elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start);
  return report;
}

RunReport final_refit(const Problem& problem, RunReport report, double inlier_threshold, Execution exec) {
  if (report.best_inlier_count < problem.minimal_sample_size()) {
    report.refit_failed = true;
    return report;
  }
  std::vector<std::size_t> inliers;
  inliers.reserve(report.best_inlier_count);
  for (std::size_t i = 0; i < report.best_mask.size(); ++i) {
    if (report.best_mask[i]) inliers.push_back(i);
  }
  const auto refit = problem.fit_nonminimal(inliers);
  if (!refit) {
    report.refit_failed = true;
    return report;
  }
  Hypothesis h = evaluate_model(problem, *refit, inlier_threshold, exec);
  report.best_model = std::move(h.model);
  report.best_mask = std::move(h.inlier_mask);
  report.best_inlier_count = h.inlier_count;
  report.refined = true;
  return report;
}

}  // namespace bansac
