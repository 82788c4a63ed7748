#include <doctest.h>

#include <algorithm>

#include "bansac/engine.hpp"
#include "bansac/models.hpp"
#include "bansac/synth.hpp"

using namespace bansac;

namespace {

Dataset curve_data(double rate, double noise, std::uint64_t seed) {
  SyntheticConfig c = SyntheticConfig::defaults(ProblemKind::curve);
  c.inlier_rate = rate;
  c.noise_std = noise;
  c.rng_seed = seed;
  return generate(c);
}

}  // namespace

TEST_CASE("too few points") {
  const CurveProblem problem({{0, 0}, {1, 1}}, 3);
  CHECK_THROWS_AS(run_estimation(problem, RunConfig{}), InsufficientData);
}

TEST_CASE("config validation") {
  const Dataset d = curve_data(0.5, 0.01, 1);
  const auto problem = make_problem(d);
  RunConfig c;
  c.tau = 1.5;
  CHECK_THROWS_AS(run_estimation(*problem, c), std::invalid_argument);
  c = RunConfig{};
  c.markov_order = 4;
  CHECK_THROWS_AS(run_estimation(*problem, c), std::invalid_argument);
  c = RunConfig{};
  c.sampler = SamplerKind::prosac;
  CHECK_THROWS_AS(run_estimation(*problem, c), std::invalid_argument);
  c = RunConfig{};
  c.transitions = TransitionModel::defaults(2);
  CHECK_THROWS_AS(run_estimation(*problem, c), std::invalid_argument);
}

TEST_CASE("every sampler stops at once on noiseless all-inlier data") {
  const Dataset d = curve_data(1.0, 0.0, 2);
  const auto problem = make_problem(d);
  for (const auto kind : {SamplerKind::uniform, SamplerKind::napsac, SamplerKind::prosac, SamplerKind::baysac,
                          SamplerKind::bansac, SamplerKind::p_bansac}) {
    RunConfig c;
    c.sampler = kind;
    c.stopping = default_stopping(kind);
    c.tau = default_tau(kind);
    const RunReport r = run_estimation(*problem, c, d.scores);
    CHECK(r.iterations_used == 1);
    CHECK(r.best_inlier_count == d.size());
    CHECK((r.stop_reason == StopReason::standard || r.stop_reason == StopReason::prosac));
  }
}

TEST_CASE("estimation recovers a clean curve") {
  const Dataset d = curve_data(0.5, 0.005, 3);
  const auto problem = make_problem(d);
  RunConfig c;
  c.sampler = SamplerKind::bansac;
  c.stopping = StoppingSet{.standard = true};
  c.rng_seed = 4;
  const RunReport r = run_estimation(*problem, c);
  CHECK(r.refined);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < d.size(); ++i) agree += r.best_mask[i] == d.gt_mask[i];
  CHECK(agree >= d.size() * 95 / 100);
  CHECK(r.iterations_used < c.max_iterations);
  CHECK(r.final_beliefs.size() == d.size());
}

TEST_CASE("the belief criterion only fires with enough low beliefs") {
  const Dataset d = curve_data(0.5, 0.005, 3);
  const auto problem = make_problem(d);
  RunConfig c;
  c.sampler = SamplerKind::bansac;
  c.stopping = default_stopping(c.sampler);
  c.rng_seed = 4;
  const RunReport r = run_estimation(*problem, c);
  REQUIRE(r.stop_reason == StopReason::bansac);
  CHECK(r.below_tau_count >= r.best_outliers);
  const auto low = std::count_if(r.final_beliefs.begin(), r.final_beliefs.end(), [&](double b) { return b < c.tau; });
  CHECK(static_cast<std::size_t>(low) == r.below_tau_count);
  CHECK(r.iterations_used < c.max_iterations);
}

TEST_CASE("runs are deterministic per seed") {
  const Dataset d = curve_data(0.3, 0.02, 5);
  const auto problem = make_problem(d);
  for (const auto kind : {SamplerKind::uniform, SamplerKind::baysac, SamplerKind::bansac, SamplerKind::p_bansac}) {
    RunConfig c;
    c.sampler = kind;
    c.stopping = default_stopping(kind);
    c.tau = default_tau(kind);
    c.rng_seed = 77;
    const RunReport a = run_estimation(*problem, c, d.scores);
    c.kernels = Execution::parallel;
    const RunReport b = run_estimation(*problem, c, d.scores);
    CHECK(a.iterations_used == b.iterations_used);
    CHECK(a.best_model == b.best_model);
    CHECK(a.final_beliefs == b.final_beliefs);
  }
}

TEST_CASE("best inlier count never decreases") {
  const Dataset d = curve_data(0.25, 0.02, 6);
  const auto problem = make_problem(d);
  RunConfig c;
  c.sampler = SamplerKind::bansac;
  c.stopping = default_stopping(c.sampler);
  c.record_trace = true;
  c.refine = false;
  const RunReport r = run_estimation(*problem, c);
  REQUIRE(r.best_count_trace.size() == r.iterations_used);
  CHECK(std::is_sorted(r.best_count_trace.begin(), r.best_count_trace.end()));
  CHECK(r.best_count_trace.back() == r.best_inlier_count);
}

TEST_CASE("BANSAC exit holds the low-belief condition") {
  std::size_t bansac_exits = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Dataset d = curve_data(0.5, 0.005, 100 + seed);
    const auto problem = make_problem(d);
    RunConfig c;
    c.sampler = SamplerKind::bansac;
    c.stopping = {.bansac = true};
    c.rng_seed = seed;
    const RunReport r = run_estimation(*problem, c);
    if (r.stop_reason != StopReason::bansac) continue;
    ++bansac_exits;
    const auto below = static_cast<std::size_t>(
        std::count_if(r.final_beliefs.begin(), r.final_beliefs.end(), [&](double p) { return p < c.tau; }));
    CHECK(below >= r.best_outliers);
    CHECK(r.below_tau_count == below);
  }
  CHECK(bansac_exits > 0);
}

TEST_CASE("stopping criteria combine as an OR") {
  const Dataset d = curve_data(0.5, 0.005, 7);
  const auto problem = make_problem(d);
  RunConfig c;
  c.sampler = SamplerKind::bansac;
  c.rng_seed = 8;
  c.stopping = {.standard = true};
  const auto standard = run_estimation(*problem, c);
  c.stopping = {.bansac = true};
  const auto bansac_only = run_estimation(*problem, c);
  c.stopping = {.standard = true, .bansac = true};
  const auto both = run_estimation(*problem, c);
  CHECK(both.iterations_used == std::min(standard.iterations_used, bansac_only.iterations_used));
}

TEST_CASE("max iterations bounds the run") {
  const Dataset d = curve_data(0.15, std::sqrt(0.02), 9);
  const auto problem = make_problem(d);
  RunConfig c;
  c.max_iterations = 25;
  const auto r = run_estimation(*problem, c);
  CHECK(r.iterations_used == 25);
  CHECK(r.stop_reason == StopReason::max_iterations);
}

TEST_CASE("no valid hypothesis") {
  std::vector<Point2> pts(10, Point2{0.5, 0.5});
  const CurveProblem problem(pts, 3);
  RunConfig c;
  c.max_iterations = 5;
  CHECK_THROWS_AS(run_estimation(problem, c), NoValidHypothesis);
}

TEST_CASE("final refit falls back on rank deficiency") {
  std::vector<Point2> pts = {{0.1, 0.0}, {0.1, 1.0}, {0.1, 0.2}, {0.1, 0.3}, {0.1, 0.9}};
  const CurveProblem problem(pts, 3);
  RunReport r;
  r.best_model = {0.0, 0.0, 0.0, 0.0};
  r.best_mask = Mask(5, 1);
  r.best_inlier_count = 5;
  const RunReport out = final_refit(problem, r, 0.02);
  CHECK(out.refit_failed);
  CHECK(out.best_model == r.best_model);
}

TEST_CASE("evaluate_model uses a strict threshold") {
  const CurveProblem problem({{0, 0.02}, {0, 0.01}, {1, 0.0}, {2, 0.5}}, 1);
  const Hypothesis h = evaluate_model(problem, {0.0, 0.0}, 0.02);
  CHECK(h.inlier_mask == Mask{0, 1, 1, 0});
  CHECK(h.inlier_count == 2);
  CHECK(h.inlier_ratio == 0.5);
}
