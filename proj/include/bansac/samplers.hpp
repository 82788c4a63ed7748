#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bansac/common.hpp"

namespace bansac {

enum class SamplerKind { uniform, napsac, prosac, baysac, bansac, p_bansac };

SamplerKind parse_sampler_kind(const std::string& name);
std::string to_string(SamplerKind kind);

/// Samplers driven by the belief filter.
constexpr bool is_belief_driven(SamplerKind kind) {
  return kind == SamplerKind::bansac || kind == SamplerKind::p_bansac;
}

/// Samplers that need per-point prior scores.
constexpr bool needs_scores(SamplerKind kind) {
  return kind == SamplerKind::prosac || kind == SamplerKind::p_bansac;
}

/// Activation mapping a belief to a sampling weight.
enum class RhoKind { rho1, rho2, rho3, rho4 };

double rho_eval(RhoKind kind, double psi);
RhoKind parse_rho_kind(const std::string& name);
std::string to_string(RhoKind kind);

using Rng = std::mt19937_64;

/// m distinct indices drawn uniformly from [0, n).
void sample_uniform(Rng& rng, std::size_t n, std::size_t m, std::vector<std::size_t>& out);

/// m distinct indices drawn without replacement with probability
/// proportional to weight, by cumulative inversion with repeats redrawn.
/// Falls back to sample_uniform and returns false when fewer than m weights
/// are positive.
bool sample_weighted(Rng& rng, std::span<const double> weights, std::size_t m,
                     std::vector<std::size_t>& out);

/// Progressive pool growth of PROSAC as a pure function of the iteration.
///
/// T_n is the expected number of samples drawn from the top-n points among
/// growth_max samples in total; T'_n accumulates the ceil'd increments, and
/// the pool at iteration k is the smallest n with T'_n >= k.
class ProsacSchedule {
 public:
  ProsacSchedule() = default;
  ProsacSchedule(std::size_t n, std::size_t m, double growth_max);

  /// k is 1-based. Returns a value in [m, n].
  std::size_t pool_size(std::size_t k) const;

 private:
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::vector<double> cumulative_;  // T'_n for n = m..N
};

/// Uniform m-subset of the first `pool` entries of score_order.
void sample_prosac(Rng& rng, std::span<const std::size_t> score_order, std::size_t pool,
                   std::size_t m, std::vector<std::size_t>& out);

/// Indices sorted by descending score, ties by index.
std::vector<std::size_t> order_by_score(std::span<const double> scores);

/// NAPSAC: first index uniform, the rest uniform within `radius` of it.
/// A first point without m-1 neighbours is redrawn up to `retries` times,
/// then the whole sample falls back to uniform and false is returned.
bool sample_napsac(Rng& rng, std::span<const Point2> points, double radius, std::size_t m,
                   std::vector<std::size_t>& out, int retries = 10);

/// Default NAPSAC radius: 10% of the bounding-box diagonal.
double default_napsac_radius(std::span<const Point2> points);

/// BaySAC-style deterministic selection: the m highest beliefs, ties by
/// lower index.
void select_top_beliefs(std::span<const double> beliefs, std::size_t m,
                        std::vector<std::size_t>& out);

/// Shrinks the sampled points' beliefs by (1 - beta). Only the sampled
/// points are touched.
void baysac_penalize(std::span<double> beliefs, std::span<const std::size_t> sample, double beta);

struct SamplerOptions {
  SamplerKind kind = SamplerKind::uniform;
  RhoKind rho = RhoKind::rho1;
  double napsac_radius = 0.0;     // <= 0: default_napsac_radius
  double prosac_growth_max = 0.0; // T_N of the growth schedule
  double baysac_beta = 0.1;
};

/// Per-run sampling state. Owns the RNG stream, the weight scratch buffer,
/// the PROSAC schedule and the BaySAC beliefs.
class Sampler {
 public:
  /// `scores` feeds the PROSAC ordering; BaySAC beliefs start at 0.5. May be empty
  /// for samplers that do not need it.
  Sampler(const Problem& problem, const SamplerOptions& options, std::uint64_t seed,
          std::span<const double> scores);

  /// Draws the minimal set for iteration k (1-based). `beliefs` is the
  /// filter posterior P^{k-1}; only belief-driven samplers read it.
  void draw(std::size_t k, std::span<const double> beliefs, std::vector<std::size_t>& out);

  /// Called after the hypothesis of the last draw was scored.
  void after_hypothesis(std::span<const std::size_t> sample, bool improved_best);

  SamplerKind kind() const { return options_.kind; }
  std::size_t fallback_count() const { return fallbacks_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> baysac_beliefs() const { return baysac_beliefs_; }
  std::size_t prosac_pool_size(std::size_t k) const { return schedule_.pool_size(k); }
  double napsac_radius() const { return radius_; }

 private:
  const Problem& problem_;
  SamplerOptions options_;
  Rng rng_;
  std::size_t m_;
  std::vector<double> weights_;
  std::vector<std::size_t> score_order_;
  ProsacSchedule schedule_;
  std::vector<Point2> locations_;
  double radius_ = 0.0;
  std::vector<double> baysac_beliefs_;
  std::size_t fallbacks_ = 0;
};

}  // namespace bansac
