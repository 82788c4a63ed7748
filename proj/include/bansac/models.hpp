#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bansac/common.hpp"

namespace bansac {

// ---------------------------------------------------------------------------
// Polynomial curve y = c[0] x^d + ... + c[d], highest power first.

/// Exact interpolating polynomial of degree points.size() - 1. nullopt if
/// two x values coincide.
std::optional<Model> fit_curve_minimal(std::span<const Point2> points);

/// Least squares via the normal equations. nullopt when rank deficient.
std::optional<Model> fit_curve_least_squares(std::span<const Point2> points, int degree);

double curve_value(std::span<const double> coefficients, double x);

/// Vertical distance |y - f(x)|.
double curve_residual(const Point2& p, std::span<const double> coefficients);

// ---------------------------------------------------------------------------
// Circle, params (cx, cy, r).

struct CircleModel {
  Point2 center;
  double radius = 0.0;

  Model params() const { return {center.x, center.y, radius}; }
  static CircleModel from_params(std::span<const double> p) { return {{p[0], p[1]}, p[2]}; }
};

/// Circumcircle; nullopt if the points are collinear.
std::optional<CircleModel> fit_circle_minimal(const Point2& a, const Point2& b, const Point2& c);

/// Kasa algebraic fit. nullopt when rank deficient or the radius is not real.
std::optional<CircleModel> fit_circle_kasa(std::span<const Point2> points);

/// |‖p - center‖ - radius|.
double circle_residual(const Point2& p, const CircleModel& circle);

// ---------------------------------------------------------------------------
// Planar homography, params are the row-major 3x3 matrix.

struct Correspondence {
  Point2 source;
  Point2 target;
};

/// Row-major 3x3 scaled to unit Frobenius norm with h[8] >= 0.
struct HomographyModel {
  std::array<double, 9> h{};

  Eigen::Matrix3d matrix() const;
  Model params() const { return {h.begin(), h.end()}; }

  static HomographyModel from_matrix(const Eigen::Matrix3d& m);
  static HomographyModel from_params(std::span<const double> p);
};

/// Normalised DLT over 4 or more correspondences. With exactly 4, any three
/// collinear source or target points make the sample degenerate. nullopt on
/// degeneracy or a rank-deficient system.
std::optional<HomographyModel> fit_homography_dlt(std::span<const Correspondence> pairs);

/// Symmetric transfer error, half the sum of the forward and backward
/// distances. Throws DegenerateModel when H is not invertible.
double homography_residual(const Correspondence& pair, const HomographyModel& model);

/// Same, with the inverse already computed.
double homography_residual(const Correspondence& pair, const Eigen::Matrix3d& h,
                           const Eigen::Matrix3d& h_inv);

/// Image of p under H; infinite coordinates when p maps to the line at
/// infinity.
Point2 apply_homography(const Eigen::Matrix3d& h, const Point2& p);

// ---------------------------------------------------------------------------
// Problem adapters

class CurveProblem final : public Problem {
 public:
  CurveProblem(std::vector<Point2> points, int degree = 3);

  std::size_t size() const override { return points_.size(); }
  std::size_t minimal_sample_size() const override { return static_cast<std::size_t>(degree_) + 1; }
  std::optional<Model> fit_minimal(std::span<const std::size_t> sample) const override;
  std::optional<Model> fit_nonminimal(std::span<const std::size_t> inliers) const override;
  double residual(std::size_t index, const Model& model) const override;
  void residuals(const Model& model, std::span<double> out, Execution exec) const override;
  std::optional<Point2> location(std::size_t i) const override { return points_[i]; }

  int degree() const { return degree_; }
  const std::vector<Point2>& points() const { return points_; }

 private:
  std::vector<Point2> points_;
  int degree_;
};

class CircleProblem final : public Problem {
 public:
  explicit CircleProblem(std::vector<Point2> points);

  std::size_t size() const override { return points_.size(); }
  std::size_t minimal_sample_size() const override { return 3; }
  std::optional<Model> fit_minimal(std::span<const std::size_t> sample) const override;
  std::optional<Model> fit_nonminimal(std::span<const std::size_t> inliers) const override;
  double residual(std::size_t index, const Model& model) const override;
  void residuals(const Model& model, std::span<double> out, Execution exec) const override;
  std::optional<Point2> location(std::size_t i) const override { return points_[i]; }

  const std::vector<Point2>& points() const { return points_; }

 private:
  std::vector<Point2> points_;
};

class HomographyProblem final : public Problem {
 public:
  explicit HomographyProblem(std::vector<Correspondence> pairs);

  std::size_t size() const override { return pairs_.size(); }
  std::size_t minimal_sample_size() const override { return 4; }
  std::optional<Model> fit_minimal(std::span<const std::size_t> sample) const override;
  std::optional<Model> fit_nonminimal(std::span<const std::size_t> inliers) const override;
  double residual(std::size_t index, const Model& model) const override;
  void residuals(const Model& model, std::span<double> out, Execution exec) const override;
  std::optional<Point2> location(std::size_t i) const override { return pairs_[i].source; }

  const std::vector<Correspondence>& pairs() const { return pairs_; }

 private:
  std::vector<Correspondence> pairs_;
};

/// Non-minimal refit through the problem's solver; throws RankDeficient.
Model refit_least_squares(const Problem& problem, std::span<const std::size_t> inliers);

}  // namespace bansac
