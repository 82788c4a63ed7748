#pragma once

#include <cstddef>
#include <optional>
#include <string>

namespace bansac {

enum class StopReason { max_iterations, standard, prosac, bansac };

std::string to_string(StopReason reason);

/// Enabled stopping criteria; at least one must be set.
struct StoppingSet {
  bool standard = false;
  bool prosac = false;
  bool bansac = false;

  bool empty() const { return !standard && !prosac && !bansac; }
  bool operator==(const StoppingSet&) const = default;
};

/// Parses "standard+bansac", "standard,prosac", ... Names: standard (alias
/// ransac), prosac, bansac.
StoppingSet parse_stopping_set(const std::string& text);
std::string to_string(const StoppingSet& set);

struct StoppingState {
  std::size_t best_outliers = 0;     // O* = N - best inlier count
  std::size_t below_tau_count = 0;   // number of posteriors < tau
  double standard_bound = 0.0;
  double tau = 0.01;
};

/// Number of iterations after which an all-inlier minimal sample has been
/// drawn with the given confidence: ceil(log(1 - confidence) / log(1 - ratio^m)).
/// 1 when ratio == 1, +inf when ratio^m underflows or ratio == 0.
double standard_iteration_bound(double inlier_ratio, std::size_t m, double confidence);

bool standard_should_stop(std::size_t k, double best_ratio, std::size_t m, double confidence);

/// Fires when the number of low-belief points reaches the best model's
/// outlier count.
bool bansac_should_stop(const StoppingState& state);

struct StopSignals {
  bool standard = false;
  bool prosac = false;
  bool bansac = false;
};

/// OR over the enabled criteria. When several fire at once the reason is
/// taken in the order standard, prosac, bansac.
std::optional<StopReason> combine(const StoppingSet& enabled, const StopSignals& signals);

}  // namespace bansac
