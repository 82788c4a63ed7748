#include "bansac/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bansac {

SamplerKind parse_sampler_kind(const std::string& name) {
  if (name == "uniform" || name == "ransac") return SamplerKind::uniform;
  if (name == "napsac") return SamplerKind::napsac;
  if (name == "prosac") return SamplerKind::prosac;
  if (name == "baysac") return SamplerKind::baysac;
  if (name == "bansac") return SamplerKind::bansac;
  if (name == "p_bansac" || name == "p-bansac" || name == "pbansac") return SamplerKind::p_bansac;
  throw std::invalid_argument("unknown sampler '" + name + "'");
}

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::uniform: return "ransac";
    case SamplerKind::napsac: return "napsac";
    case SamplerKind::prosac: return "prosac";
    case SamplerKind::baysac: return "baysac";
    case SamplerKind::bansac: return "bansac";
    case SamplerKind::p_bansac: return "p_bansac";
  }
  return "?";
}

double rho_eval(RhoKind kind, double psi) {
  switch (kind) {
    case RhoKind::rho1: return psi * 100.0;
    case RhoKind::rho2: return psi > 0.3 ? 100.0 * psi : 10.0 * psi;
    case RhoKind::rho3: return 100.0 / (1.0 + std::exp(-10.0 * (psi - 0.5)));
    case RhoKind::rho4: return 130.0 * std::tanh(psi);
  }
  return 0.0;
}

RhoKind parse_rho_kind(const std::string& name) {
  if (name == "rho1" || name == "1") return RhoKind::rho1;
  if (name == "rho2" || name == "2") return RhoKind::rho2;
  if (name == "rho3" || name == "3") return RhoKind::rho3;
  if (name == "rho4" || name == "4") return RhoKind::rho4;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

std::string to_string(RhoKind kind) {
  switch (kind) {
    case RhoKind::rho1: return "rho1";
    case RhoKind::rho2: return "rho2";
    case RhoKind::rho3: return "rho3";
    case RhoKind::rho4: return "rho4";
  }
  return "?";
}

void sample_uniform(Rng& rng, std::size_t n, std::size_t m, std::vector<std::size_t>& out) {
  if (m > n) throw std::invalid_argument("sample size exceeds number of points");
  out.clear();
  if (m == n) {
    out.resize(n);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return;
  }
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  while (out.size() < m) {
    const std::size_t i = pick(rng);
    if (std::find(out.begin(), out.end(), i) == out.end()) out.push_back(i);
  }
}

bool sample_weighted(Rng& rng, std::span<const double> weights, std::size_t m,
                     std::vector<std::size_t>& out) {
  const std::size_t n = weights.size();
  if (m > n) throw std::invalid_argument("sample size exceeds number of points");
  thread_local std::vector<double> cumulative;
  cumulative.resize(n);
  std::size_t positive = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] > 0.0) {
      total += weights[i];
      ++positive;
    }
    cumulative[i] = total;
  }
  if (positive < m) {
    sample_uniform(rng, n, m, out);
    return false;
  }

  // Drawing from the full distribution and redrawing repeats is the same as
  // drawing from the weights left after removing the chosen points.
  out.clear();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr int kMaxRedraws = 64;
  while (out.size() < m) {
    std::size_t chosen = n;
    for (int attempt = 0; attempt < kMaxRedraws && chosen == n; ++attempt) {
      const double target = unit(rng) * total;
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
      if (it == cumulative.end()) it = std::lower_bound(cumulative.begin(), cumulative.end(), total);
      const auto i = static_cast<std::size_t>(it - cumulative.begin());
      if (std::find(out.begin(), out.end(), i) == out.end()) chosen = i;
    }
    if (chosen == n) {
      // A few points hold almost all the mass: scan the remainder directly.
      double remaining = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (weights[i] > 0.0 && std::find(out.begin(), out.end(), i) == out.end()) remaining += weights[i];
      }
      const double target = unit(rng) * remaining;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!(weights[i] > 0.0) || std::find(out.begin(), out.end(), i) != out.end()) continue;
        acc += weights[i];
        chosen = i;
        if (target < acc) break;
      }
    }
    out.push_back(chosen);
  }
  return true;
}

ProsacSchedule::ProsacSchedule(std::size_t n, std::size_t m, double growth_max) : n_(n), m_(m) {
  if (m == 0 || m > n) throw std::invalid_argument("PROSAC needs 0 < m <= N");
  if (!(growth_max >= 1.0)) throw std::invalid_argument("PROSAC growth_max must be >= 1");
  // T_m = T_N * prod_{i<m} (m - i) / (N - i)
  double t_n = growth_max;
  for (std::size_t i = 0; i < m; ++i) {
    t_n *= static_cast<double>(m - i) / static_cast<double>(n - i);
  }
  cumulative_.reserve(n - m + 1);
  double t_prime = 1.0;
  cumulative_.push_back(t_prime);
  for (std::size_t size = m; size < n; ++size) {
    const double t_next = t_n * static_cast<double>(size + 1) / static_cast<double>(size + 1 - m);
    t_prime += std::ceil(t_next - t_n);
    cumulative_.push_back(t_prime);
    t_n = t_next;
  }
}

std::size_t ProsacSchedule::pool_size(std::size_t k) const {
  if (cumulative_.empty()) return n_;
  const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), static_cast<double>(k));
  if (it == cumulative_.end()) return n_;
  return m_ + static_cast<std::size_t>(it - cumulative_.begin());
}

void sample_prosac(Rng& rng, std::span<const std::size_t> score_order, std::size_t pool,
                   std::size_t m, std::vector<std::size_t>& out) {
  pool = std::min(pool, score_order.size());
  sample_uniform(rng, pool, m, out);
  for (auto& i : out) i = score_order[i];
}

std::vector<std::size_t> order_by_score(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

bool sample_napsac(Rng& rng, std::span<const Point2> points, double radius, std::size_t m,
                   std::vector<std::size_t>& out, int retries) {
  const std::size_t n = points.size();
  if (m > n) throw std::invalid_argument("sample size exceeds number of points");
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const double r2 = radius * radius;
  std::vector<std::size_t> neighbours;
  for (int attempt = 0; attempt <= retries; ++attempt) {
    const std::size_t first = pick(rng);
    neighbours.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (i == first) continue;
      const double dx = points[i].x - points[first].x;
      const double dy = points[i].y - points[first].y;
      if (dx * dx + dy * dy <= r2) neighbours.push_back(i);
    }
    if (neighbours.size() + 1 < m) continue;
    sample_uniform(rng, neighbours.size(), m - 1, out);
    for (auto& i : out) i = neighbours[i];
    out.insert(out.begin(), first);
    return true;
  }
  sample_uniform(rng, n, m, out);
  return false;
}

double default_napsac_radius(std::span<const Point2> points) {
  if (points.empty()) return 0.0;
  double min_x = points[0].x, max_x = points[0].x, min_y = points[0].y, max_y = points[0].y;
  for (const auto& p : points) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  return 0.1 * std::hypot(max_x - min_x, max_y - min_y);
}

void select_top_beliefs(std::span<const double> beliefs, std::size_t m, std::vector<std::size_t>& out) {
  if (m > beliefs.size()) throw std::invalid_argument("sample size exceeds number of points");
  std::vector<std::size_t> order(beliefs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return beliefs[a] > beliefs[b] || (beliefs[a] == beliefs[b] && a < b);
                    });
  out.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
}

void baysac_penalize(std::span<double> beliefs, std::span<const std::size_t> sample, double beta) {
  for (const std::size_t i : sample) beliefs[i] *= (1.0 - beta);
}

// ---------------------------------------------------------------------------

Sampler::Sampler(const Problem& problem, const SamplerOptions& options, std::uint64_t seed,
                 std::span<const double> scores)
    : problem_(problem), options_(options), rng_(seed), m_(problem.minimal_sample_size()) {
  const std::size_t n = problem.size();
  if (!scores.empty() && scores.size() != n) {
    throw std::invalid_argument("prior score count differs from number of points");
  }
  switch (options_.kind) {
    case SamplerKind::prosac: {
      if (scores.empty()) throw std::invalid_argument("PROSAC sampling needs prior scores");
      score_order_ = order_by_score(scores);
      const double growth = options_.prosac_growth_max > 0.0 ? options_.prosac_growth_max : 1.0;
      schedule_ = ProsacSchedule(n, m_, std::max(growth, 1.0));
      break;
    }
    case SamplerKind::napsac: {
      locations_.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto p = problem.location(i);
        if (!p) throw std::invalid_argument("NAPSAC needs point locations");
        locations_.push_back(*p);
      }
      radius_ = options_.napsac_radius > 0.0 ? options_.napsac_radius : default_napsac_radius(locations_);
      break;
    }
    case SamplerKind::baysac:
      baysac_beliefs_.assign(n, 0.5);
      break;
    case SamplerKind::bansac:
    case SamplerKind::p_bansac:
      weights_.resize(n);
      break;
    case SamplerKind::uniform:
      break;
  }
}

void Sampler::draw(std::size_t k, std::span<const double> beliefs, std::vector<std::size_t>& out) {
  const std::size_t n = problem_.size();
  switch (options_.kind) {
    case SamplerKind::uniform:
      sample_uniform(rng_, n, m_, out);
      break;
    case SamplerKind::napsac:
      if (!sample_napsac(rng_, locations_, radius_, m_, out)) ++fallbacks_;
      break;
    case SamplerKind::prosac:
      sample_prosac(rng_, score_order_, schedule_.pool_size(k), m_, out);
      break;
    case SamplerKind::baysac:
      select_top_beliefs(baysac_beliefs_, m_, out);
      break;
    case SamplerKind::bansac:
    case SamplerKind::p_bansac:
      if (beliefs.size() != n) throw std::invalid_argument("belief vector length differs from N");
      for (std::size_t i = 0; i < n; ++i) weights_[i] = rho_eval(options_.rho, beliefs[i]);
      if (!sample_weighted(rng_, weights_, m_, out)) ++fallbacks_;
      break;
  }
}

void Sampler::after_hypothesis(std::span<const std::size_t> sample, bool improved_best) {
  if (options_.kind == SamplerKind::baysac && !improved_best) {
    baysac_penalize(baysac_beliefs_, sample, options_.baysac_beta);
  }
}

}  // namespace bansac
