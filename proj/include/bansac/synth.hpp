#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "bansac/common.hpp"

namespace bansac {

enum class ProblemKind { curve, circle, homography };

ProblemKind parse_problem_kind(const std::string& name);
std::string to_string(ProblemKind kind);

/// Noise level 0.02 read as a variance (sigma = sqrt(0.02)).
inline constexpr double kDefaultNoiseVariance = 0.02;

struct SyntheticConfig {
  ProblemKind problem = ProblemKind::curve;
  std::size_t n_points = 300;
  double inlier_rate = 0.5;
  /// Standard deviation of the inlier perturbation. For homography scenes
  /// this is in pixels on the target point.
  double noise_std = 0.14142135623730951;
  double outlier_bound = 1.0;
  int curve_degree = 3;
  double image_width = 640.0;
  double image_height = 480.0;
  std::uint64_t rng_seed = 0;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;

  /// Defaults for the kind: 300 points and sqrt(0.02) noise for curve and
  /// circle, 500 correspondences and 0.5 px for homography.
  static SyntheticConfig defaults(ProblemKind kind);
};

/// Generated or loaded data.
///
/// Point rows are (x, y) for curve/circle and (x1, y1, x2, y2) for
/// homography. `scores` is empty when the data has none. `gt_model` and
/// `gt_mask` are empty for loaded data without ground truth.
struct Dataset {
  ProblemKind problem = ProblemKind::curve;
  int curve_degree = 3;
  std::vector<double> coords;
  std::vector<double> scores;
  Model gt_model;
  Mask gt_mask;

  std::size_t stride() const { return problem == ProblemKind::homography ? 4 : 2; }
  std::size_t size() const { return coords.size() / stride(); }
};

/// floor(rate * n) inliers on a random model plus uniform outliers, shuffled.
/// Deterministic per seed. Every point also gets a prior score that is
/// informative but noisy: inliers draw from U(0.3, 1), outliers from
/// U(0, 0.7).
Dataset generate(const SyntheticConfig& config);

std::size_t inlier_count_for(std::size_t n_points, double inlier_rate);

/// CSV with a '#'-prefixed metadata line carrying the problem kind and the
/// ground-truth model, then a column header, then one row per point.
void write_dataset_csv(std::ostream& out, const Dataset& data);
Dataset read_dataset_csv(std::istream& in);

std::unique_ptr<Problem> make_problem(const Dataset& data);

}  // namespace bansac
