#include "bansac/stopping.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace bansac {

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::standard: return "standard";
    case StopReason::prosac: return "prosac";
    case StopReason::bansac: return "bansac";
  }
  return "?";
}

StoppingSet parse_stopping_set(const std::string& text) {
  StoppingSet set;
  std::string token;
  std::stringstream ss(text);
  while (std::getline(ss, token, '+')) {
    std::stringstream inner(token);
    std::string name;
    while (std::getline(inner, name, ',')) {
      if (name.empty()) continue;
      if (name == "standard" || name == "ransac") {
        set.standard = true;
      } else if (name == "prosac") {
        set.prosac = true;
      } else if (name == "bansac") {
        set.bansac = true;
      } else {
        throw std::invalid_argument("unknown stopping criterion '" + name + "'");
      }
    }
  }
  if (set.empty()) throw std::invalid_argument("stopping set must not be empty");
  return set;
}

std::string to_string(const StoppingSet& set) {
  std::string out;
  auto add = [&out](const char* name) {
    if (!out.empty()) out += '+';
    out += name;
  };
  if (set.standard) add("standard");
  if (set.prosac) add("prosac");
  if (set.bansac) add("bansac");
  return out;
}

double standard_iteration_bound(double inlier_ratio, std::size_t m, double confidence) {
  if (inlier_ratio >= 1.0) return 1.0;
  if (inlier_ratio <= 0.0) return std::numeric_limits<double>::infinity();
  const double all_inlier = std::pow(inlier_ratio, static_cast<double>(m));
  const double denom = std::log1p(-all_inlier);
  if (!(denom < 0.0)) return std::numeric_limits<double>::infinity();
  return std::max(1.0, std::ceil(std::log(1.0 - confidence) / denom));
}

bool standard_should_stop(std::size_t k, double best_ratio, std::size_t m, double confidence) {
  return static_cast<double>(k) >= standard_iteration_bound(best_ratio, m, confidence);
}

bool bansac_should_stop(const StoppingState& state) {
  return state.below_tau_count >= state.best_outliers;
}

std::optional<StopReason> combine(const StoppingSet& enabled, const StopSignals& signals) {
  if (enabled.standard && signals.standard) return StopReason::standard;
  if (enabled.prosac && signals.prosac) return StopReason::prosac;
  if (enabled.bansac && signals.bansac) return StopReason::bansac;
  return std::nullopt;
}

}  // namespace bansac
