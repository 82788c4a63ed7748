#include "bansac/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace bansac {

void Problem::residuals(const Model& model, std::span<double> out, Execution exec) const {
  const long long n = static_cast<long long>(size());
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
  for (long long i = 0; i < n; ++i) out[i] = residual(static_cast<std::size_t>(i), model);
}

// ---------------------------------------------------------------------------
// Curve

namespace {

constexpr double kCoincidentX = 1e-12;

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

std::optional<Model> fit_curve_minimal(std::span<const Point2> points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n == 0) return std::nullopt;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(points[i].x - points[j].x) <= kCoincidentX) return std::nullopt;
    }
  }
  Eigen::MatrixXd v(n, n);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double power = 1.0;
    for (Eigen::Index j = n - 1; j >= 0; --j) {
      v(i, j) = power;
      power *= points[i].x;
    }
    y(i) = points[i].y;
  }
  const Eigen::VectorXd c = v.partialPivLu().solve(y);
  if (!finite(c)) return std::nullopt;
  return Model(c.data(), c.data() + n);
}

std::optional<Model> fit_curve_least_squares(std::span<const Point2> points, int degree) {
  const Eigen::Index cols = degree + 1;
  std::vector<double> xs;
  xs.reserve(points.size());
  for (const auto& p : points) xs.push_back(p.x);
  std::sort(xs.begin(), xs.end());
  const auto distinct = std::unique(xs.begin(), xs.end(), [](double a, double b) {
                          return std::abs(a - b) <= kCoincidentX;
                        }) - xs.begin();
  if (distinct < cols) return std::nullopt;

  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(cols, cols);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(cols);
  Eigen::VectorXd row(cols);
  for (const auto& p : points) {
    double power = 1.0;
    for (Eigen::Index j = cols - 1; j >= 0; --j) {
      row(j) = power;
      power *= p.x;
    }
    normal.noalias() += row * row.transpose();
    rhs.noalias() += row * p.y;
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd c = ldlt.solve(rhs);
  if (!finite(c)) return std::nullopt;
  return Model(c.data(), c.data() + cols);
}

double curve_value(std::span<const double> coefficients, double x) {
  double y = 0.0;
  for (const double c : coefficients) y = y * x + c;
  return y;
}

double curve_residual(const Point2& p, std::span<const double> coefficients) {
  return std::abs(p.y - curve_value(coefficients, p.x));
}

// ---------------------------------------------------------------------------
// Circle

std::optional<CircleModel> fit_circle_minimal(const Point2& a, const Point2& b, const Point2& c) {
  const double bx = b.x - a.x, by = b.y - a.y;
  const double cx = c.x - a.x, cy = c.y - a.y;
  const double d = 2.0 * (bx * cy - by * cx);
  if (std::abs(d) < 1e-12) return std::nullopt;
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  const double ux = (cy * b2 - by * c2) / d;
  const double uy = (bx * c2 - cx * b2) / d;
  CircleModel circle{{a.x + ux, a.y + uy}, std::hypot(ux, uy)};
  if (!std::isfinite(circle.radius) || !(circle.radius > 0.0)) return std::nullopt;
  return circle;
}

std::optional<CircleModel> fit_circle_kasa(std::span<const Point2> points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n < 3) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  // x^2 + y^2 + D x + E y + F = 0 in centred coordinates.
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = points[i].x - mx, y = points[i].y - my;
    a(i, 0) = x;
    a(i, 1) = y;
    a(i, 2) = 1.0;
    b(i) = -(x * x + y * y);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-12);
  if (qr.rank() < 3) return std::nullopt;
  const Eigen::Vector3d s = qr.solve(b);
  const double cx = -0.5 * s(0), cy = -0.5 * s(1);
  const double r2 = cx * cx + cy * cy - s(2);
  if (!(r2 > 0.0) || !std::isfinite(r2)) return std::nullopt;
  return CircleModel{{cx + mx, cy + my}, std::sqrt(r2)};
}

double circle_residual(const Point2& p, const CircleModel& circle) {
  const double dx = p.x - circle.center.x;
  const double dy = p.y - circle.center.y;
  return std::abs(std::sqrt(dx * dx + dy * dy) - circle.radius);
}

// ---------------------------------------------------------------------------
// Homography

Eigen::Matrix3d HomographyModel::matrix() const {
  Eigen::Matrix3d m;
  m << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
  return m;
}

HomographyModel HomographyModel::from_matrix(const Eigen::Matrix3d& m) {
  Eigen::Matrix3d s = m / m.norm();
  if (s(2, 2) < 0.0) s = -s;
  HomographyModel out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.h[static_cast<std::size_t>(r * 3 + c)] = s(r, c);
  }
  return out;
}

HomographyModel HomographyModel::from_params(std::span<const double> p) {
  HomographyModel out;
  std::copy_n(p.begin(), 9, out.h.begin());
  return out;
}

namespace {

constexpr double kCollinear = 1e-9;

// Similarity taking the centroid to the origin and the mean distance to
// sqrt(2). nullopt if all points coincide.
std::optional<Eigen::Matrix3d> normalizing_transform(std::span<const Point2> pts) {
  double mx = 0.0, my = 0.0;
  for (const auto& p : pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += std::hypot(p.x - mx, p.y - my);
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0)) return std::nullopt;
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0.0, -s * mx, 0.0, s, -s * my, 0.0, 0.0, 1.0;
  return t;
}

bool any_three_collinear(std::span<const Point2> pts) {
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        const double det = (pts[j].x - pts[i].x) * (pts[k].y - pts[i].y) -
                           (pts[j].y - pts[i].y) * (pts[k].x - pts[i].x);
        if (std::abs(det) < kCollinear) return true;
      }
    }
  }
  return false;
}

Point2 transform(const Eigen::Matrix3d& t, const Point2& p) {
  const double w = t(2, 0) * p.x + t(2, 1) * p.y + t(2, 2);
  return {(t(0, 0) * p.x + t(0, 1) * p.y + t(0, 2)) / w, (t(1, 0) * p.x + t(1, 1) * p.y + t(1, 2)) / w};
}

}  // namespace

std::optional<HomographyModel> fit_homography_dlt(std::span<const Correspondence> pairs) {
  const std::size_t n = pairs.size();
  if (n < 4) return std::nullopt;

  std::vector<Point2> src(n), dst(n);
  for (std::size_t i = 0; i < n; ++i) {
    src[i] = pairs[i].source;
    dst[i] = pairs[i].target;
  }
  const auto t_src = normalizing_transform(src);
  const auto t_dst = normalizing_transform(dst);
  if (!t_src || !t_dst) return std::nullopt;
  for (std::size_t i = 0; i < n; ++i) {
    src[i] = transform(*t_src, src[i]);
    dst[i] = transform(*t_dst, dst[i]);
  }
  if (n == 4 && (any_three_collinear(src) || any_three_collinear(dst))) return std::nullopt;

  Eigen::MatrixXd a(2 * static_cast<Eigen::Index>(n), 9);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = src[i].x, y = src[i].y, u = dst[i].x, v = dst[i].y;
    const auto r = 2 * static_cast<Eigen::Index>(i);
    a.row(r) << 0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v;
    a.row(r + 1) << x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, -u;
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  // The null space must be one-dimensional: the 8th singular value has to
  // stay clear of zero.
  if (sv.size() < 8 || !(sv(7) > 1e-9 * sv(0))) return std::nullopt;
  const Eigen::VectorXd h = svd.matrixV().col(8);

  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Eigen::Matrix3d full = t_dst->inverse() * hn * (*t_src);
  if (!full.allFinite()) return std::nullopt;
  const Eigen::Matrix3d unit = full / full.norm();
  if (std::abs(unit.determinant()) < 1e-12) return std::nullopt;
  return HomographyModel::from_matrix(unit);
}

Point2 apply_homography(const Eigen::Matrix3d& h, const Point2& p) {
  const double w = h(2, 0) * p.x + h(2, 1) * p.y + h(2, 2);
  if (std::abs(w) < 1e-15) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {inf, inf};
  }
  return {(h(0, 0) * p.x + h(0, 1) * p.y + h(0, 2)) / w, (h(1, 0) * p.x + h(1, 1) * p.y + h(1, 2)) / w};
}

double homography_residual(const Correspondence& pair, const Eigen::Matrix3d& h,
                           const Eigen::Matrix3d& h_inv) {
  const Point2 fwd = apply_homography(h, pair.source);
  const Point2 bwd = apply_homography(h_inv, pair.target);
  const double fx = pair.target.x - fwd.x, fy = pair.target.y - fwd.y;
  const double bx = pair.source.x - bwd.x, by = pair.source.y - bwd.y;
  const double e1 = std::sqrt(fx * fx + fy * fy);
  const double e2 = std::sqrt(bx * bx + by * by);
  const double e = 0.5 * (e1 + e2);
  return std::isfinite(e) ? e : std::numeric_limits<double>::infinity();
}

namespace {

std::optional<Eigen::Matrix3d> invert(const Eigen::Matrix3d& h) {
  const Eigen::Matrix3d unit = h / h.norm();
  if (!unit.allFinite() || std::abs(unit.determinant()) < 1e-12) return std::nullopt;
  return h.inverse();
}

}  // namespace

double homography_residual(const Correspondence& pair, const HomographyModel& model) {
  const Eigen::Matrix3d h = model.matrix();
  const auto h_inv = invert(h);
  if (!h_inv) throw DegenerateModel("homography is not invertible");
  return homography_residual(pair, h, *h_inv);
}

// ---------------------------------------------------------------------------
// Problem adapters

CurveProblem::CurveProblem(std::vector<Point2> points, int degree)
    : points_(std::move(points)), degree_(degree) {
  if (degree < 1 || degree > 5) throw std::invalid_argument("curve degree must be in 1..5");
}

std::optional<Model> CurveProblem::fit_minimal(std::span<const std::size_t> sample) const {
  std::array<Point2, 6> pts;
  for (std::size_t i = 0; i < sample.size(); ++i) pts[i] = points_[sample[i]];
  return fit_curve_minimal(std::span<const Point2>(pts.data(), sample.size()));
}

std::optional<Model> CurveProblem::fit_nonminimal(std::span<const std::size_t> inliers) const {
  std::vector<Point2> pts;
  pts.reserve(inliers.size());
  for (const auto i : inliers) pts.push_back(points_[i]);
  return fit_curve_least_squares(pts, degree_);
}

double CurveProblem::residual(std::size_t index, const Model& model) const {
  return curve_residual(points_[index], model);
}

void CurveProblem::residuals(const Model& model, std::span<double> out, Execution exec) const {
  const long long n = static_cast<long long>(points_.size());
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
  for (long long i = 0; i < n; ++i) out[i] = curve_residual(points_[static_cast<std::size_t>(i)], model);
}

CircleProblem::CircleProblem(std::vector<Point2> points) : points_(std::move(points)) {}

std::optional<Model> CircleProblem::fit_minimal(std::span<const std::size_t> sample) const {
  const auto c = fit_circle_minimal(points_[sample[0]], points_[sample[1]], points_[sample[2]]);
  if (!c) return std::nullopt;
  return c->params();
}

std::optional<Model> CircleProblem::fit_nonminimal(std::span<const std::size_t> inliers) const {
  std::vector<Point2> pts;
  pts.reserve(inliers.size());
  for (const auto i : inliers) pts.push_back(points_[i]);
  const auto c = fit_circle_kasa(pts);
  if (!c) return std::nullopt;
  return c->params();
}

double CircleProblem::residual(std::size_t index, const Model& model) const {
  return circle_residual(points_[index], CircleModel::from_params(model));
}

void CircleProblem::residuals(const Model& model, std::span<double> out, Execution exec) const {
  const CircleModel circle = CircleModel::from_params(model);
  const long long n = static_cast<long long>(points_.size());
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
  for (long long i = 0; i < n; ++i) out[i] = circle_residual(points_[static_cast<std::size_t>(i)], circle);
}

HomographyProblem::HomographyProblem(std::vector<Correspondence> pairs) : pairs_(std::move(pairs)) {}

std::optional<Model> HomographyProblem::fit_minimal(std::span<const std::size_t> sample) const {
  std::array<Correspondence, 4> pts;
  for (std::size_t i = 0; i < 4; ++i) pts[i] = pairs_[sample[i]];
  const auto h = fit_homography_dlt(pts);
  if (!h) return std::nullopt;
  return h->params();
}

std::optional<Model> HomographyProblem::fit_nonminimal(std::span<const std::size_t> inliers) const {
  std::vector<Correspondence> pts;
  pts.reserve(inliers.size());
  for (const auto i : inliers) pts.push_back(pairs_[i]);
  const auto h = fit_homography_dlt(pts);
  if (!h) return std::nullopt;
  return h->params();
}

double HomographyProblem::residual(std::size_t index, const Model& model) const {
  const Eigen::Matrix3d h = HomographyModel::from_params(model).matrix();
  const auto h_inv = invert(h);
  if (!h_inv) return std::numeric_limits<double>::infinity();
  return homography_residual(pairs_[index], h, *h_inv);
}

void HomographyProblem::residuals(const Model& model, std::span<double> out, Execution exec) const {
  const Eigen::Matrix3d h = HomographyModel::from_params(model).matrix();
  const auto h_inv = invert(h);
  const long long n = static_cast<long long>(pairs_.size());
  if (!h_inv) {
    std::fill(out.begin(), out.end(), std::numeric_limits<double>::infinity());
    return;
  }
  const Eigen::Matrix3d inv = *h_inv;
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
  for (long long i = 0; i < n; ++i) out[i] = homography_residual(pairs_[static_cast<std::size_t>(i)], h, inv);
}

Model refit_least_squares(const Problem& problem, std::span<const std::size_t> inliers) {
  if (inliers.size() < problem.minimal_sample_size()) {
    throw RankDeficient("refit needs at least the minimal sample size of inliers");
  }
  auto model = problem.fit_nonminimal(inliers);
  if (!model) throw RankDeficient("non-minimal system is rank deficient");
  return *model;
}

}  // namespace bansac
