#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>

#include "bansac/models.hpp"
#include "bansac/samplers.hpp"

using namespace bansac;

namespace {

// Upper 0.1% point: a correct sampler fails one seed in a thousand.
double chi2_critical(std::size_t dof) {
  return boost::math::quantile(boost::math::chi_squared(static_cast<double>(dof)), 0.999);
}

double chi2(const std::vector<double>& observed, const std::vector<double>& expected) {
  double s = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    s += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
  }
  return s;
}

}  // namespace

TEST_CASE("rho activations") {
  CHECK(rho_eval(RhoKind::rho1, 0.5) == doctest::Approx(50.0));
  CHECK(rho_eval(RhoKind::rho2, 0.2) == doctest::Approx(2.0));
  CHECK(rho_eval(RhoKind::rho2, 0.5) == doctest::Approx(50.0));
  CHECK(rho_eval(RhoKind::rho3, 0.5) == doctest::Approx(50.0));
  CHECK(rho_eval(RhoKind::rho4, 1.0) == doctest::Approx(130.0 * std::tanh(1.0)));
  CHECK(parse_rho_kind("rho3") == RhoKind::rho3);
  CHECK_THROWS_AS(parse_rho_kind("relu"), std::invalid_argument);
}

TEST_CASE("sampler names") {
  CHECK(parse_sampler_kind("ransac") == SamplerKind::uniform);
  CHECK(parse_sampler_kind("p-bansac") == SamplerKind::p_bansac);
  CHECK(to_string(SamplerKind::uniform) == "ransac");
  CHECK_THROWS_AS(parse_sampler_kind("magsac"), std::invalid_argument);
}

TEST_CASE("uniform sampling is distinct and unbiased") {
  Rng rng(1);
  std::vector<std::size_t> out;
  const std::size_t n = 20, m = 4, draws = 20000;
  std::vector<double> counts(n, 0.0);
  for (std::size_t d = 0; d < draws; ++d) {
    sample_uniform(rng, n, m, out);
    REQUIRE(out.size() == m);
    REQUIRE(std::set<std::size_t>(out.begin(), out.end()).size() == m);
    for (const auto i : out) counts[i] += 1.0;
  }
  const std::vector<double> expected(n, static_cast<double>(draws * m) / n);
  CHECK(chi2(counts, expected) < chi2_critical(n - 1));
  CHECK_THROWS_AS(sample_uniform(rng, 3, 4, out), std::invalid_argument);
}

TEST_CASE("weighted sampling follows the weights") {
  Rng rng(2);
  std::vector<std::size_t> out;
  const std::vector<double> w = {1.0, 2.0, 3.0, 4.0, 0.0, 10.0};
  const double total = 20.0;
  const std::size_t draws = 40000;
  std::vector<double> counts(w.size(), 0.0);
  for (std::size_t d = 0; d < draws; ++d) {
    REQUIRE(sample_weighted(rng, w, 1, out));
    counts[out[0]] += 1.0;
  }
  CHECK(counts[4] == 0.0);
  std::vector<double> obs, exp;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    obs.push_back(counts[i]);
    exp.push_back(draws * w[i] / total);
  }
  CHECK(chi2(obs, exp) < chi2_critical(obs.size() - 1));
}

TEST_CASE("weighted pairs match sequential removal") {
  Rng rng(3);
  std::vector<std::size_t> out;
  const std::vector<double> w = {5.0, 1.0, 2.0, 0.5, 1.5};
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  // Inclusion probability of i in an ordered pair drawn without replacement.
  std::vector<double> inclusion(w.size(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    inclusion[i] = w[i] / total;
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (j != i) inclusion[i] += (w[j] / total) * (w[i] / (total - w[j]));
    }
  }
  const std::size_t draws = 40000;
  std::vector<double> pairs(w.size() * w.size(), 0.0), expected(w.size() * w.size(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (i != j) expected[i * w.size() + j] = draws * (w[i] / total) * (w[j] / (total - w[i]));
    }
  }
  for (std::size_t d = 0; d < draws; ++d) {
    sample_weighted(rng, w, 2, out);
    REQUIRE(out[0] != out[1]);
    pairs[out[0] * w.size() + out[1]] += 1.0;
  }
  std::vector<double> obs, exp;
  for (std::size_t c = 0; c < pairs.size(); ++c) {
    if (expected[c] == 0.0) continue;
    obs.push_back(pairs[c]);
    exp.push_back(expected[c]);
  }
  CHECK(chi2(obs, exp) < chi2_critical(obs.size() - 1));
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    if (w[i] > w[i + 1]) CHECK(inclusion[i] > inclusion[i + 1]);
  }
}

TEST_CASE("weighted sampling with one dominant weight") {
  Rng rng(4);
  std::vector<std::size_t> out;
  std::vector<double> w(50, 1e-9);
  w[7] = 1e9;
  for (int d = 0; d < 200; ++d) {
    REQUIRE(sample_weighted(rng, w, 4, out));
    CHECK(std::set<std::size_t>(out.begin(), out.end()).size() == 4);
    CHECK(std::find(out.begin(), out.end(), 7) != out.end());
  }
}

TEST_CASE("weighted sampling falls back to uniform") {
  Rng rng(5);
  std::vector<std::size_t> out;
  const std::vector<double> w = {0.0, 1.0, 0.0, 2.0, 0.0};
  CHECK_FALSE(sample_weighted(rng, w, 3, out));
  CHECK(out.size() == 3);
  CHECK(std::set<std::size_t>(out.begin(), out.end()).size() == 3);
}

TEST_CASE("PROSAC pool grows from m to N") {
  const ProsacSchedule schedule(100, 4, 3000.0);
  CHECK(schedule.pool_size(1) == 4);
  std::size_t last = 4;
  for (std::size_t k = 1; k <= 20000; ++k) {
    const std::size_t pool = schedule.pool_size(k);
    REQUIRE(pool >= last);
    REQUIRE(pool <= 100);
    last = pool;
  }
  CHECK(last == 100);
  CHECK(schedule.pool_size(1000000) == 100);
  CHECK_THROWS_AS(ProsacSchedule(3, 4, 10.0), std::invalid_argument);
}

TEST_CASE("PROSAC samples come from the pool") {
  Rng rng(6);
  const std::vector<double> scores = {0.1, 0.9, 0.5, 0.9, 0.3, 0.7};
  const auto order = order_by_score(scores);
  CHECK(order == std::vector<std::size_t>{1, 3, 5, 2, 4, 0});
  std::vector<std::size_t> out;
  for (int d = 0; d < 100; ++d) {
    sample_prosac(rng, order, 4, 3, out);
    for (const auto i : out) CHECK((i == 1 || i == 3 || i == 5 || i == 2));
  }
}

TEST_CASE("NAPSAC draws local samples") {
  Rng rng(7);
  std::vector<Point2> pts;
  for (int i = 0; i < 20; ++i) pts.push_back({0.01 * i, 0.0});
  pts.push_back({5.0, 5.0});
  std::vector<std::size_t> out;
  for (int d = 0; d < 200; ++d) {
    const bool local = sample_napsac(rng, pts, 0.05, 3, out);
    REQUIRE(out.size() == 3);
    if (local) {
      for (const auto i : out) {
        CHECK(std::hypot(pts[i].x - pts[out[0]].x, pts[i].y - pts[out[0]].y) <= 0.05 + 1e-12);
      }
    }
  }
  std::vector<Point2> sparse = {{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  CHECK_FALSE(sample_napsac(rng, sparse, 0.1, 3, out));
  CHECK(std::set<std::size_t>(out.begin(), out.end()).size() == 3);
  CHECK(default_napsac_radius(sparse) == doctest::Approx(0.3));
}

TEST_CASE("BaySAC selection and penalty") {
  std::vector<double> beliefs = {0.5, 0.9, 0.9, 0.2, 0.7};
  std::vector<std::size_t> out;
  select_top_beliefs(beliefs, 3, out);
  CHECK(out == std::vector<std::size_t>{1, 2, 4});
  const std::size_t sample[2] = {1, 4};
  baysac_penalize(beliefs, sample, 0.1);
  CHECK(beliefs[1] == doctest::Approx(0.81));
  CHECK(beliefs[4] == doctest::Approx(0.63));
  CHECK(beliefs[0] == 0.5);
  CHECK(beliefs[2] == 0.9);
}

TEST_CASE("BANSAC sampler weights follow the beliefs") {
  std::vector<Point2> pts(10, Point2{0.0, 0.0});
  for (int i = 0; i < 10; ++i) pts[i].x = i;
  const CurveProblem problem(pts, 1);
  SamplerOptions options{.kind = SamplerKind::bansac, .rho = RhoKind::rho1};
  Sampler sampler(problem, options, 1, {});
  std::vector<double> beliefs(10, 0.0);
  beliefs[2] = 0.5;
  beliefs[6] = 0.25;
  std::vector<std::size_t> out;
  sampler.draw(1, beliefs, out);
  CHECK(sampler.weights()[2] == doctest::Approx(50.0));
  CHECK(sampler.weights()[6] == doctest::Approx(25.0));
  std::sort(out.begin(), out.end());
  CHECK(out == std::vector<std::size_t>{2, 6});
  CHECK(sampler.fallback_count() == 0);
}

TEST_CASE("samplers are deterministic per seed") {
  std::vector<Point2> pts;
  for (int i = 0; i < 50; ++i) pts.push_back({i * 0.02, 0.0});
  const CurveProblem problem(pts, 3);
  std::vector<double> scores(50);
  for (std::size_t i = 0; i < 50; ++i) scores[i] = static_cast<double>(i % 7) / 7.0;
  for (const auto kind : {SamplerKind::uniform, SamplerKind::napsac, SamplerKind::prosac, SamplerKind::baysac,
                          SamplerKind::bansac, SamplerKind::p_bansac}) {
    SamplerOptions options{.kind = kind, .prosac_growth_max = 1000.0};
    Sampler a(problem, options, 99, scores), b(problem, options, 99, scores);
    const std::vector<double> beliefs(50, 0.5);
    std::vector<std::size_t> sa, sb;
    for (std::size_t k = 1; k <= 30; ++k) {
      a.draw(k, beliefs, sa);
      b.draw(k, beliefs, sb);
      REQUIRE(sa == sb);
      REQUIRE(sa.size() == 4);
      a.after_hypothesis(sa, false);
      b.after_hypothesis(sb, false);
    }
  }
}
