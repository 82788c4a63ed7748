#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "bansac/models.hpp"

using namespace bansac;

namespace {

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

Eigen::Matrix3d example_h() {
  Eigen::Matrix3d h;
  h << 1.05, 0.08, 12.0, -0.06, 0.97, -7.5, 1e-4, -5e-5, 1.0;
  return h;
}

}  // namespace

TEST_CASE("cubic through four points") {
  const Model truth = {0.5, -0.2, 0.1, 0.3};
  std::vector<Point2> pts;
  for (const double x : {-0.9, -0.3, 0.2, 0.8}) pts.push_back({x, curve_value(truth, x)});
  const auto fit = fit_curve_minimal(pts);
  REQUIRE(fit);
  for (std::size_t i = 0; i < 4; ++i) CHECK((*fit)[i] == doctest::Approx(truth[i]).epsilon(1e-10));
  for (const auto& p : pts) CHECK(curve_residual(p, *fit) < 1e-12);
}

TEST_CASE("curve residual is the vertical distance") {
  const Model zero = {0.0, 0.0, 0.0, 0.0};
  CHECK(curve_residual({0.0, 0.5}, zero) == 0.5);
  CHECK(curve_residual({0.3, -0.25}, zero) == 0.25);
}

TEST_CASE("coincident abscissae are degenerate") {
  const std::vector<Point2> pts = {{0.1, 0.0}, {0.1, 1.0}, {0.4, 0.2}, {0.7, 0.3}};
  CHECK_FALSE(fit_curve_minimal(pts));
  const std::vector<Point2> two = {{0.1, 0.0}, {0.1, 1.0}, {0.1, 0.2}, {0.1, 0.3}, {0.1, 0.9}};
  CHECK_FALSE(fit_curve_least_squares(two, 3));
}

TEST_CASE("least-squares curve beats the minimal fit on its inliers") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, std::sqrt(0.02));
  std::uniform_real_distribution<double> xs(-1.0, 1.0);
  const Model truth = {0.4, 0.1, -0.5, 0.2};
  std::vector<Point2> pts;
  for (int i = 0; i < 200; ++i) {
    const double x = xs(rng);
    pts.push_back({x, curve_value(truth, x) + noise(rng)});
  }
  const CurveProblem problem(pts, 3);
  const auto all = iota(pts.size());
  const auto refit = problem.fit_nonminimal(all);
  const std::size_t sample[4] = {0, 1, 2, 3};
  const auto minimal = problem.fit_minimal(sample);
  REQUIRE(refit);
  REQUIRE(minimal);
  double ss_refit = 0.0, ss_minimal = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    ss_refit += std::pow(problem.residual(i, *refit), 2);
    ss_minimal += std::pow(problem.residual(i, *minimal), 2);
  }
  CHECK(ss_refit <= ss_minimal);
}

TEST_CASE("noiseless refit reproduces the minimal fit") {
  const Model truth = {-0.3, 0.2, 0.6, -0.1};
  std::vector<Point2> pts;
  for (const double x : {-0.8, -0.1, 0.35, 0.9}) pts.push_back({x, curve_value(truth, x)});
  const auto minimal = fit_curve_minimal(pts);
  auto doubled = pts;
  doubled.insert(doubled.end(), pts.begin(), pts.end());
  const auto refit = fit_curve_least_squares(doubled, 3);
  REQUIRE(minimal);
  REQUIRE(refit);
  for (std::size_t i = 0; i < 4; ++i) CHECK((*refit)[i] == doctest::Approx((*minimal)[i]).epsilon(1e-9));
}

TEST_CASE("circumcircle") {
  const auto c = fit_circle_minimal({1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0});
  REQUIRE(c);
  CHECK(c->center.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(c->center.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(c->radius == doctest::Approx(1.0));
  CHECK_FALSE(fit_circle_minimal({0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}));
  CHECK(circle_residual({0.0, 2.5}, *c) == doctest::Approx(1.5));
  CHECK(circle_residual({0.0, 0.0}, *c) == doctest::Approx(1.0));
}

TEST_CASE("Kasa fit") {
  std::vector<Point2> pts;
  for (int i = 0; i < 12; ++i) {
    const double t = 0.5 * i;
    pts.push_back({0.2 + 0.4 * std::cos(t), -0.1 + 0.4 * std::sin(t)});
  }
  const auto c = fit_circle_kasa(pts);
  REQUIRE(c);
  CHECK(c->center.x == doctest::Approx(0.2));
  CHECK(c->center.y == doctest::Approx(-0.1));
  CHECK(c->radius == doctest::Approx(0.4));
  const std::vector<Point2> line = {{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  CHECK_FALSE(fit_circle_kasa(line));
}

TEST_CASE("homography from four exact correspondences") {
  const Eigen::Matrix3d h = example_h();
  std::vector<Correspondence> pairs;
  for (const Point2 p : {Point2{10, 20}, Point2{600, 40}, Point2{580, 450}, Point2{30, 400}}) {
    pairs.push_back({p, apply_homography(h, p)});
  }
  const auto fit = fit_homography_dlt(pairs);
  REQUIRE(fit);
  const Eigen::Matrix3d expected = HomographyModel::from_matrix(h).matrix();
  CHECK((fit->matrix() - expected).norm() < 1e-9);
  for (const auto& pair : pairs) CHECK(homography_residual(pair, *fit) < 1e-8);

  const Point2 probe{320, 240};
  const Point2 a = apply_homography(fit->matrix(), probe), b = apply_homography(h, probe);
  CHECK(a.x == doctest::Approx(b.x));
  CHECK(a.y == doctest::Approx(b.y));
}

TEST_CASE("homography normal form") {
  const auto m = HomographyModel::from_matrix(-2.0 * example_h());
  CHECK(m.h[8] >= 0.0);
  double norm = 0.0;
  for (const double v : m.h) norm += v * v;
  CHECK(norm == doctest::Approx(1.0));
}

TEST_CASE("collinear homography samples are degenerate") {
  const Eigen::Matrix3d h = example_h();
  std::vector<Correspondence> pairs;
  for (const Point2 p : {Point2{0, 0}, Point2{100, 100}, Point2{200, 200}, Point2{30, 400}}) {
    pairs.push_back({p, apply_homography(h, p)});
  }
  CHECK_FALSE(fit_homography_dlt(pairs));
}

TEST_CASE("symmetric transfer error") {
  const HomographyModel identity = HomographyModel::from_matrix(Eigen::Matrix3d::Identity());
  CHECK(homography_residual({{0, 0}, {3, 4}}, identity) == doctest::Approx(5.0));
  Eigen::Matrix3d singular = Eigen::Matrix3d::Zero();
  singular(0, 0) = 1.0;
  singular(2, 2) = 1.0;
  CHECK_THROWS_AS(homography_residual({{0, 0}, {1, 1}}, HomographyModel::from_matrix(singular)), DegenerateModel);
  const HomographyProblem problem(std::vector<Correspondence>{{{0, 0}, {1, 1}}});
  std::vector<double> out(1);
  problem.residuals(HomographyModel::from_matrix(singular).params(), out, Execution::serial);
  CHECK(std::isinf(out[0]));
}

TEST_CASE("homography with 0.5 px noise mostly within 1 px") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ux(0.0, 640.0), uy(0.0, 480.0);
  std::normal_distribution<double> noise(0.0, 0.5);
  std::vector<Correspondence> pairs;
  for (int i = 0; i < 500; ++i) {
    const Point2 p{ux(rng), uy(rng)};
    pairs.push_back({p, {p.x + noise(rng), p.y + noise(rng)}});
  }
  const HomographyModel identity = HomographyModel::from_matrix(Eigen::Matrix3d::Identity());
  std::size_t within = 0;
  for (const auto& pair : pairs) within += homography_residual(pair, identity) < 1.0;
  // Half the sum of two equal Rayleigh(0.5) distances: P(d < 1) = 1 - exp(-2) = 0.865.
  CHECK(static_cast<double>(within) / 500.0 == doctest::Approx(0.865).epsilon(0.06));
}

TEST_CASE("residual batches match single residuals in both modes") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Point2> pts(300);
  for (auto& p : pts) p = {u(rng), u(rng)};
  const CurveProblem curve(pts, 3);
  const CircleProblem circle(pts);
  const Model cubic = {0.3, -0.1, 0.2, 0.05};
  const Model disc = {0.1, 0.0, 0.5};
  std::vector<double> serial(300), parallel(300);
  curve.residuals(cubic, serial, Execution::serial);
  curve.residuals(cubic, parallel, Execution::parallel);
  for (std::size_t i = 0; i < 300; ++i) {
    CHECK(serial[i] == curve.residual(i, cubic));
    CHECK(parallel[i] == serial[i]);
  }
  circle.residuals(disc, serial, Execution::serial);
  circle.residuals(disc, parallel, Execution::parallel);
  for (std::size_t i = 0; i < 300; ++i) {
    CHECK(serial[i] == circle.residual(i, disc));
    CHECK(parallel[i] == serial[i]);
  }
}

TEST_CASE("refit_least_squares reports rank deficiency") {
  const std::vector<Point2> pts = {{0.1, 0.0}, {0.1, 1.0}, {0.1, 0.2}, {0.1, 0.3}, {0.1, 0.9}};
  const CurveProblem problem(pts, 3);
  const auto all = iota(pts.size());
  CHECK_THROWS_AS(refit_least_squares(problem, all), RankDeficient);
  CHECK_THROWS_AS(CurveProblem(pts, 7), std::invalid_argument);
}
