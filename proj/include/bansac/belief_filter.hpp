#pragma once

// Per-point dynamic Bayesian network over inlier/outlier states.
//
// Each data point carries its own two-state chain x^0, x^1, ... where x^k is
// the best guess at iteration k. The evidence c^k is the point's inlier or
// outlier label under the hypothesis of iteration k, and the label's
// reliability comes from gamma(inlier ratio of that hypothesis). Filtering is
// exact: the state keeps the unnormalised joint over the retained history
// variables, and each iteration multiplies by the transition factor and sums
// out the variable that drops off the Markov window.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bansac/common.hpp"

namespace bansac {

enum class GammaKind { gamma1, gamma2, gamma3 };

/// Reliability of a hypothesis' labels as a function of its inlier ratio,
/// clamped to [0, 1].
double gamma_eval(GammaKind kind, double inlier_ratio);

GammaKind parse_gamma_kind(const std::string& name);
std::string to_string(GammaKind kind);

/// Transition tables P(x^k = inlier | c^k, x^{k-1}, ..., x^{k-e}) for
/// e = 1..order, plus the gamma used for P(c^k | x^{k-1}).
///
/// History is packed with bit 0 = x^{k-1}, bit 1 = x^{k-2}, bit 2 = x^{k-3};
/// a set bit means inlier. The outlier row is always the complement.
class TransitionModel {
 public:
  /// Compiled-in defaults: the empirical order-1/2/3 tables.
  static TransitionModel defaults(int order = 1, GammaKind gamma = GammaKind::gamma1);

  /// Loads overrides from "key = value" text on top of defaults(order).
  ///
  ///   gamma = gamma1|gamma2|gamma3
  ///   A1:<x1>,<c>              = p
  ///   A2:<x1>,<x2>,<c>         = p
  ///   A3:<x1>,<x2>,<x3>,<c>    = p
  ///
  /// where each label is I or O, x1 = x^{k-1}, x2 = x^{k-2}, x3 = x^{k-3},
  /// in table column order. '#' starts a comment.
  static TransitionModel parse(std::istream& in, int order);
  static TransitionModel load(const std::string& path, int order);

  int order() const { return order_; }
  GammaKind gamma_kind() const { return gamma_; }
  void set_gamma_kind(GammaKind kind) { gamma_ = kind; }

  /// table_order in 1..3, history < 2^table_order.
  double inlier_given(int table_order, unsigned history, bool evidence_inlier) const;
  void set(int table_order, unsigned history, bool evidence_inlier, double p);

  /// Table used for the step that produces x^step (step >= 1): the history
  /// window is min(step, order) long.
  int table_for_step(int step) const { return step < order_ ? step : order_; }

 private:
  TransitionModel(int order, GammaKind gamma);

  int order_;
  GammaKind gamma_;
  std::array<double, 4> table1_{};
  std::array<double, 8> table2_{};
  std::array<double, 16> table3_{};
};

/// Filter state for N points.
///
/// phi holds, per point, the unnormalised joint over the retained variables
/// x^k, x^{k-1}, ..., x^{k-r+1} with r = min(step + 1, order). Index bit 0 is
/// x^k. The stride is 2^order regardless of r; unused slots stay zero.
struct BeliefState {
  int order = 1;
  int step = 0;
  std::size_t stride = 2;
  std::vector<double> phi;
  std::vector<double> posterior;

  /// P(x^0 = inlier) per point; each entry must lie in [0, 1].
  static BeliefState from_priors(int order, std::span<const double> priors);
  static BeliefState uniform(int order, std::size_t n, double prior = 0.5);

  std::size_t size() const { return posterior.size(); }
  int retained() const { return step + 1 < order ? step + 1 : order; }

  /// Phi summed over the retained history with x^k fixed.
  double phi_inlier(std::size_t n) const;
  double phi_outlier(std::size_t n) const;

  /// Number of posteriors strictly below tau.
  std::size_t count_below(double tau) const;
};

/// Sums below this are rescaled by their own total after an update. The
/// posterior is a ratio, so this is the normalisation freedom and never
/// changes it.
inline constexpr double kRescaleBelow = 1e-300;

/// One filtering step for every point, for any order. `mask[n]` is the
/// label c^k of point n, `inlier_ratio` the hypothesis' inlier ratio.
///
/// Points whose evidence has zero likelihood under the model get a plain
/// prediction step with the evidence marginalised out; their count is
/// returned.
std::size_t update_beliefs(BeliefState& state, std::span<const std::uint8_t> mask,
                           double inlier_ratio, const TransitionModel& model,
                           Execution exec = Execution::serial);

/// Order-specific entry points. They check the state/model order and throw
/// DegenerateBelief instead of skipping zero-likelihood points.
void update_beliefs_order1(BeliefState& state, std::span<const std::uint8_t> mask,
                           double inlier_ratio, const TransitionModel& model);
void update_beliefs_order2(BeliefState& state, std::span<const std::uint8_t> mask,
                           double inlier_ratio, const TransitionModel& model);
void update_beliefs_order3(BeliefState& state, std::span<const std::uint8_t> mask,
                           double inlier_ratio, const TransitionModel& model);

namespace reference {

/// Straight-line serial update used to check the optimised kernels. Same
/// semantics as bansac::update_beliefs.
std::size_t update_beliefs(BeliefState& state, std::span<const std::uint8_t> mask,
                           double inlier_ratio, const TransitionModel& model);

}  // namespace reference

/// One observation in an evidence chain.
struct Evidence {
  bool inlier = false;
  double inlier_ratio = 0.0;
};

inline constexpr std::size_t kMaxBruteForceChain = 20;

/// Filtered P(x^k = inlier | c^{1:k}) by enumerating every assignment of
/// x^0..x^k and summing the joint. Throws ChainTooLong above
/// kMaxBruteForceChain observations and DegenerateBelief if the evidence
/// has zero probability.
double brute_force_posterior(double prior, std::span<const Evidence> evidence,
                             const TransitionModel& model);

}  // namespace bansac
