#include "bansac/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "bansac/models.hpp"

namespace bansac {

ProblemKind parse_problem_kind(const std::string& name) {
  if (name == "curve") return ProblemKind::curve;
  if (name == "circle") return ProblemKind::circle;
  if (name == "homography") return ProblemKind::homography;
  throw std::invalid_argument("unknown problem '" + name + "'");
}

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::curve: return "curve";
    case ProblemKind::circle: return "circle";
    case ProblemKind::homography: return "homography";
  }
  return "?";
}

namespace {

std::size_t minimal_size(ProblemKind kind, int degree) {
  switch (kind) {
    case ProblemKind::curve: return static_cast<std::size_t>(degree) + 1;
    case ProblemKind::circle: return 3;
    case ProblemKind::homography: return 4;
  }
  return 0;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (problem == ProblemKind::curve && (curve_degree < 1 || curve_degree > 5)) {
    throw std::invalid_argument("curve degree must be in 1..5");
  }
  if (n_points < minimal_size(problem, curve_degree)) {
    throw std::invalid_argument("n_points is below the minimal sample size");
  }
  if (!(inlier_rate > 0.0 && inlier_rate <= 1.0)) throw std::invalid_argument("inlier_rate must lie in (0, 1]");
  if (!(noise_std >= 0.0)) throw std::invalid_argument("noise_std must be >= 0");
  if (!(outlier_bound > 0.0)) throw std::invalid_argument("outlier_bound must be > 0");
  if (!(image_width > 0.0 && image_height > 0.0)) throw std::invalid_argument("image size must be positive");
}

SyntheticConfig SyntheticConfig::defaults(ProblemKind kind) {
  SyntheticConfig c;
  c.problem = kind;
  if (kind == ProblemKind::homography) {
    c.n_points = 500;
    c.inlier_rate = 0.6;
    c.noise_std = 0.5;
  } else {
    c.noise_std = std::sqrt(kDefaultNoiseVariance);
  }
  return c;
}

std::size_t inlier_count_for(std::size_t n_points, double inlier_rate) {
  return static_cast<std::size_t>(std::floor(inlier_rate * static_cast<double>(n_points) + 1e-9));
}

namespace {

Model random_curve(std::mt19937_64& rng, int degree) {
  std::uniform_real_distribution<double> value(-0.7, 0.7);
  std::vector<Point2> nodes;
  for (int i = 0; i <= degree; ++i) {
    const double x = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(degree);
    nodes.push_back({x, value(rng)});
  }
  return *fit_curve_minimal(nodes);
}

Eigen::Matrix3d random_homography(std::mt19937_64& rng, double width, double height) {
  std::uniform_real_distribution<double> angle(-15.0, 15.0);
  std::uniform_real_distribution<double> scale(0.85, 1.15);
  std::uniform_real_distribution<double> shift(-40.0, 40.0);
  std::uniform_real_distribution<double> persp(-2e-4, 2e-4);
  const double a = angle(rng) * std::numbers::pi / 180.0;
  const double s = scale(rng);
  Eigen::Matrix3d core;
  core << s * std::cos(a), -s * std::sin(a), shift(rng), s * std::sin(a), s * std::cos(a), shift(rng),
      persp(rng), persp(rng), 1.0;
  Eigen::Matrix3d to_center = Eigen::Matrix3d::Identity();
  to_center(0, 2) = -0.5 * width;
  to_center(1, 2) = -0.5 * height;
  Eigen::Matrix3d from_center = Eigen::Matrix3d::Identity();
  from_center(0, 2) = 0.5 * width;
  from_center(1, 2) = 0.5 * height;
  return from_center * core * to_center;
}

}  // namespace

Dataset generate(const SyntheticConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.rng_seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t n = config.n_points;
  const std::size_t n_in = inlier_count_for(n, config.inlier_rate);
  const double b = config.outlier_bound;
  auto bounded = [&] { return -b + 2.0 * b * unit(rng); };

  Dataset data;
  data.problem = config.problem;
  data.curve_degree = config.curve_degree;
  const std::size_t stride = data.stride();
  std::vector<double> coords(n * stride);
  Mask mask(n, 0);

  switch (config.problem) {
    case ProblemKind::curve: {
      data.gt_model = random_curve(rng, config.curve_degree);
      for (std::size_t i = 0; i < n; ++i) {
        if (i < n_in) {
          const double x = -1.0 + 2.0 * unit(rng);
          coords[2 * i] = x;
          coords[2 * i + 1] = curve_value(data.gt_model, x) + config.noise_std * noise(rng);
          mask[i] = 1;
        } else {
          coords[2 * i] = bounded();
          coords[2 * i + 1] = bounded();
        }
      }
      break;
    }
    case ProblemKind::circle: {
      std::uniform_real_distribution<double> center(-0.3, 0.3);
      std::uniform_real_distribution<double> radius(0.3, 0.6);
      const CircleModel gt{{center(rng), center(rng)}, radius(rng)};
      data.gt_model = gt.params();
      for (std::size_t i = 0; i < n; ++i) {
        if (i < n_in) {
          const double theta = 2.0 * std::numbers::pi * unit(rng);
          const double r = gt.radius + config.noise_std * noise(rng);
          coords[2 * i] = gt.center.x + r * std::cos(theta);
          coords[2 * i + 1] = gt.center.y + r * std::sin(theta);
          mask[i] = 1;
        } else {
          coords[2 * i] = bounded();
          coords[2 * i + 1] = bounded();
        }
      }
      break;
    }
    case ProblemKind::homography: {
      const Eigen::Matrix3d h = random_homography(rng, config.image_width, config.image_height);
      data.gt_model = HomographyModel::from_matrix(h).params();
      for (std::size_t i = 0; i < n; ++i) {
        const Point2 src{config.image_width * unit(rng), config.image_height * unit(rng)};
        Point2 dst;
        if (i < n_in) {
          dst = apply_homography(h, src);
          dst.x += config.noise_std * noise(rng);
          dst.y += config.noise_std * noise(rng);
          mask[i] = 1;
        } else {
          dst = {config.image_width * unit(rng), config.image_height * unit(rng)};
        }
        coords[4 * i] = src.x;
        coords[4 * i + 1] = src.y;
        coords[4 * i + 2] = dst.x;
        coords[4 * i + 3] = dst.y;
      }
      break;
    }
  }

  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) scores[i] = mask[i] ? 0.3 + 0.7 * unit(rng) : 0.7 * unit(rng);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);

  data.coords.resize(n * stride);
  data.scores.resize(n);
  data.gt_mask.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = perm[i];
    std::copy_n(coords.begin() + static_cast<std::ptrdiff_t>(src * stride), stride,
                data.coords.begin() + static_cast<std::ptrdiff_t>(i * stride));
    data.scores[i] = scores[src];
    data.gt_mask[i] = mask[src];
  }
  return data;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_doubles(const std::string& text, char sep) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string tok; std::getline(ss, tok, sep);) {
    if (tok.empty()) continue;
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad number '" + tok + "'");
    }
  }
  return out;
}

}  // namespace

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "# problem=" << to_string(data.problem);
  if (data.problem == ProblemKind::curve) out << " degree=" << data.curve_degree;
  out << " n=" << data.size();
  if (!data.gt_model.empty()) {
    out << " gt_model=";
    for (std::size_t i = 0; i < data.gt_model.size(); ++i) {
      out << (i ? ";" : "") << format_double(data.gt_model[i]);
    }
  }
  if (!data.gt_mask.empty()) {
    out << " gt_inliers=";
    bool first = true;
    for (std::size_t i = 0; i < data.gt_mask.size(); ++i) {
      if (!data.gt_mask[i]) continue;
      out << (first ? "" : ";") << i;
      first = false;
    }
  }
  out << '\n';
  const bool scores = !data.scores.empty();
  out << (data.problem == ProblemKind::homography ? "x1,y1,x2,y2" : "x,y") << (scores ? ",score" : "") << '\n';
  const std::size_t stride = data.stride();
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < stride; ++j) {
      out << (j ? "," : "") << format_double(data.coords[i * stride + j]);
    }
    if (scores) out << ',' << format_double(data.scores[i]);
    out << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in) {
  Dataset data;
  bool have_problem = false;
  bool have_header = false;
  bool with_scores = false;
  std::vector<std::size_t> gt_inliers;
  bool have_gt_inliers = false;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::stringstream ss(line.substr(1));
      for (std::string tok; ss >> tok;) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
        if (key == "problem") {
          data.problem = parse_problem_kind(value);
          have_problem = true;
        } else if (key == "degree") {
          data.curve_degree = std::stoi(value);
        } else if (key == "gt_model") {
          data.gt_model = parse_doubles(value, ';');
        } else if (key == "gt_inliers") {
          for (const double v : parse_doubles(value, ';')) gt_inliers.push_back(static_cast<std::size_t>(v));
          have_gt_inliers = true;
        }
      }
      continue;
    }
    if (!have_header) {
      if (!have_problem) {
        // No metadata: infer from the column header.
        data.problem = line.rfind("x1", 0) == 0 ? ProblemKind::homography : ProblemKind::curve;
      }
      std::stringstream ss(line);
      std::size_t columns = 0;
      for (std::string tok; std::getline(ss, tok, ',');) {
        ++columns;
        if (tok == "score") with_scores = true;
      }
      if (columns != data.stride() + (with_scores ? 1 : 0)) {
        throw std::invalid_argument("dataset header has " + std::to_string(columns) + " columns, expected " +
                                    std::to_string(data.stride()) + " (+ optional score)");
      }
      have_header = true;
      continue;
    }
    const std::vector<double> row = parse_doubles(line, ',');
    if (row.size() != data.stride() + (with_scores ? 1 : 0)) {
      throw std::invalid_argument("dataset line " + std::to_string(line_no) + " has " +
                                  std::to_string(row.size()) + " values");
    }
    data.coords.insert(data.coords.end(), row.begin(), row.begin() + static_cast<std::ptrdiff_t>(data.stride()));
    if (with_scores) {
      const double s = row.back();
      if (!(s >= 0.0 && s <= 1.0)) {
        throw std::invalid_argument("dataset line " + std::to_string(line_no) + ": score outside [0, 1]");
      }
      data.scores.push_back(s);
    }
  }
  if (!have_header) throw std::invalid_argument("dataset has no column header");
  if (have_gt_inliers) {
    data.gt_mask.assign(data.size(), 0);
    for (const auto i : gt_inliers) {
      if (i >= data.size()) throw std::invalid_argument("gt_inliers index out of range");
      data.gt_mask[i] = 1;
    }
  }
  return data;
}

std::unique_ptr<Problem> make_problem(const Dataset& data) {
  const std::size_t n = data.size();
  switch (data.problem) {
    case ProblemKind::curve:
    case ProblemKind::circle: {
      std::vector<Point2> pts(n);
      for (std::size_t i = 0; i < n; ++i) pts[i] = {data.coords[2 * i], data.coords[2 * i + 1]};
      if (data.problem == ProblemKind::curve) return std::make_unique<CurveProblem>(std::move(pts), data.curve_degree);
      return std::make_unique<CircleProblem>(std::move(pts));
    }
    case ProblemKind::homography: {
      std::vector<Correspondence> pairs(n);
      for (std::size_t i = 0; i < n; ++i) {
        pairs[i] = {{data.coords[4 * i], data.coords[4 * i + 1]}, {data.coords[4 * i + 2], data.coords[4 * i + 3]}};
      }
      return std::make_unique<HomographyProblem>(std::move(pairs));
    }
  }
  throw std::invalid_argument("unknown problem kind");
}

}  // namespace bansac
