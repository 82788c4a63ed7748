#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bansac {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class NoValidHypothesis : public Error {
 public:
  using Error::Error;
};

class DegenerateBelief : public Error {
 public:
  using Error::Error;
};

class ChainTooLong : public Error {
 public:
  using Error::Error;
};

class RankDeficient : public Error {
 public:
  using Error::Error;
};

class DegenerateModel : public Error {
 public:
  using Error::Error;
};

/// Whether a data-parallel kernel runs on the calling thread or fans out
/// with OpenMP.
enum class Execution { serial, parallel };

/// Flat model parameter vector. Layout is problem specific.
using Model = std::vector<double>;

/// Boolean per data point. uint8_t rather than vector<bool> so kernels can
/// take a span over it.
using Mask = std::vector<std::uint8_t>;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Abstract robust-estimation problem: a fixed set of data points plus the
/// minimal and non-minimal solvers and a residual.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::size_t size() const = 0;
  virtual std::size_t minimal_sample_size() const = 0;

  /// nullopt when the sample is degenerate.
  virtual std::optional<Model> fit_minimal(std::span<const std::size_t> sample) const = 0;
  /// Least-squares refit. nullopt when the system is rank deficient.
  virtual std::optional<Model> fit_nonminimal(std::span<const std::size_t> inliers) const = 0;

  virtual double residual(std::size_t index, const Model& model) const = 0;

  /// Batch residuals. The default loops over residual(); adapters with
  /// per-model setup cost override it.
  virtual void residuals(const Model& model, std::span<double> out,
                         Execution exec = Execution::serial) const;

  /// 2-D location used by spatial samplers; nullopt if the problem has none.
  virtual std::optional<Point2> location(std::size_t) const { return std::nullopt; }
};

}  // namespace bansac
