#include "bansac/belief_filter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace bansac {

double gamma_eval(GammaKind kind, double inlier_ratio) {
  double g = 0.0;
  switch (kind) {
    case GammaKind::gamma1:
      g = inlier_ratio < 0.7143 ? 0.62 * inlier_ratio + 0.5 : 0.2 * inlier_ratio + 0.8;
      break;
    case GammaKind::gamma2:
      g = 0.5 / (0.5 + std::exp(-10.0 * (inlier_ratio - 0.3)));
      break;
    case GammaKind::gamma3:
      g = std::tanh(3.0 * inlier_ratio);
      break;
  }
  return std::clamp(g, 0.0, 1.0);
}

GammaKind parse_gamma_kind(const std::string& name) {
  if (name == "gamma1" || name == "1") return GammaKind::gamma1;
  if (name == "gamma2" || name == "2") return GammaKind::gamma2;
  if (name == "gamma3" || name == "3") return GammaKind::gamma3;
  throw std::invalid_argument("unknown gamma function '" + name + "'");
}

std::string to_string(GammaKind kind) {
  switch (kind) {
    case GammaKind::gamma1: return "gamma1";
    case GammaKind::gamma2: return "gamma2";
    case GammaKind::gamma3: return "gamma3";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// TransitionModel

namespace {

constexpr unsigned I = 1;
constexpr unsigned O = 0;

constexpr unsigned hist(unsigned x1) { return x1; }
constexpr unsigned hist(unsigned x1, unsigned x2) { return x1 | (x2 << 1); }
constexpr unsigned hist(unsigned x1, unsigned x2, unsigned x3) {
  return x1 | (x2 << 1) | (x3 << 2);
}

}  // namespace

TransitionModel::TransitionModel(int order, GammaKind gamma) : order_(order), gamma_(gamma) {
  if (order < 1 || order > 3) {
    throw std::invalid_argument("Markov order must be 1, 2 or 3");
  }
}

TransitionModel TransitionModel::defaults(int order, GammaKind gamma) {
  TransitionModel m(order, gamma);

  m.set(1, hist(I), true, 1.0);
  m.set(1, hist(I), false, 1.0);
  m.set(1, hist(O), true, 0.2);
  m.set(1, hist(O), false, 0.0);

  m.set(2, hist(I, I), true, 1.0);
  m.set(2, hist(I, I), false, 0.8);
  m.set(2, hist(I, O), true, 0.9);
  m.set(2, hist(I, O), false, 0.7);
  m.set(2, hist(O, I), true, 0.2);
  m.set(2, hist(O, I), false, 0.1);
  m.set(2, hist(O, O), true, 0.1);
  m.set(2, hist(O, O), false, 0.0);

  m.set(3, hist(I, I, I), true, 1.0);
  m.set(3, hist(I, I, I), false, 0.8);
  m.set(3, hist(I, I, O), true, 0.9);
  m.set(3, hist(I, I, O), false, 0.7);
  m.set(3, hist(I, O, I), true, 0.6);
  m.set(3, hist(I, O, I), false, 0.5);
  m.set(3, hist(I, O, O), true, 0.4);
  m.set(3, hist(I, O, O), false, 0.2);
  m.set(3, hist(O, I, I), true, 0.3);
  m.set(3, hist(O, I, I), false, 0.2);
  m.set(3, hist(O, I, O), true, 0.1);
  m.set(3, hist(O, I, O), false, 0.3);
  m.set(3, hist(O, O, I), true, 0.2);
  m.set(3, hist(O, O, I), false, 0.1);
  m.set(3, hist(O, O, O), true, 0.05);
  m.set(3, hist(O, O, O), false, 0.0);
  return m;
}

double TransitionModel::inlier_given(int table_order, unsigned history, bool evidence_inlier) const {
  const unsigned row = (history << 1) | (evidence_inlier ? 1u : 0u);
  switch (table_order) {
    case 1: return table1_.at(row);
    case 2: return table2_.at(row);
    case 3: return table3_.at(row);
    default: throw std::out_of_range("transition table order must be 1..3");
  }
}

void TransitionModel::set(int table_order, unsigned history, bool evidence_inlier, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("transition probability must lie in [0, 1]");
  }
  const unsigned row = (history << 1) | (evidence_inlier ? 1u : 0u);
  switch (table_order) {
    case 1: table1_.at(row) = p; break;
    case 2: table2_.at(row) = p; break;
    case 3: table3_.at(row) = p; break;
    default: throw std::out_of_range("transition table order must be 1..3");
  }
}

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_label(const std::string& label) {
  if (label == "I" || label == "Inlier" || label == "inlier") return true;
  if (label == "O" || label == "Outlier" || label == "outlier") return false;
  throw std::invalid_argument("CPT label must be I or O, got '" + label + "'");
}

}  // namespace

TransitionModel TransitionModel::parse(std::istream& in, int order) {
  TransitionModel model = defaults(order);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("CPT line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "gamma") {
      model.gamma_ = parse_gamma_kind(value);
      continue;
    }
    if (key.size() < 4 || key[0] != 'A' || key[2] != ':') {
      throw std::invalid_argument("CPT line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    const int table = key[1] - '0';
    if (table < 1 || table > 3) {
      throw std::invalid_argument("CPT line " + std::to_string(line_no) + ": table must be A1, A2 or A3");
    }
    if (table > order) {
      throw std::invalid_argument("CPT line " + std::to_string(line_no) + ": table A" + std::to_string(table) +
                                  " is unused at Markov order " + std::to_string(order));
    }
    std::vector<bool> labels;
    std::stringstream ss(key.substr(3));
    for (std::string tok; std::getline(ss, tok, ',');) labels.push_back(parse_label(trim(tok)));
    if (labels.size() != static_cast<std::size_t>(table) + 1) {
      throw std::invalid_argument("CPT line " + std::to_string(line_no) + ": table A" +
                                  std::to_string(table) + " needs " + std::to_string(table + 1) +
                                  " labels");
    }
    unsigned history = 0;
    for (int i = 0; i < table; ++i) history |= (labels[i] ? 1u : 0u) << i;

    double p = 0.0;
    try {
      std::size_t used = 0;
      p = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw std::invalid_argument("CPT line " + std::to_string(line_no) + ": bad probability '" + value + "'");
    }
    model.set(table, history, labels.back(), p);
  }
  return model;
}

TransitionModel TransitionModel::load(const std::string& path, int order) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open CPT file '" + path + "'");
  return parse(in, order);
}

// ---------------------------------------------------------------------------
// BeliefState

BeliefState BeliefState::from_priors(int order, std::span<const double> priors) {
  if (order < 1 || order > 3) throw std::invalid_argument("Markov order must be 1, 2 or 3");
  BeliefState s;
  s.order = order;
  s.step = 0;
  s.stride = std::size_t{1} << order;
  s.phi.assign(priors.size() * s.stride, 0.0);
  s.posterior.resize(priors.size());
  for (std::size_t n = 0; n < priors.size(); ++n) {
    const double p = priors[n];
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("prior must lie in [0, 1]");
    s.phi[n * s.stride + 0] = 1.0 - p;
    s.phi[n * s.stride + 1] = p;
    s.posterior[n] = p;
  }
  return s;
}

BeliefState BeliefState::uniform(int order, std::size_t n, double prior) {
  std::vector<double> priors(n, prior);
  return from_priors(order, priors);
}

double BeliefState::phi_inlier(std::size_t n) const {
  double sum = 0.0;
  for (std::size_t i = 1; i < stride; i += 2) sum += phi[n * stride + i];
  return sum;
}

double BeliefState::phi_outlier(std::size_t n) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < stride; i += 2) sum += phi[n * stride + i];
  return sum;
}

std::size_t BeliefState::count_below(double tau) const {
  return static_cast<std::size_t>(
      std::count_if(posterior.begin(), posterior.end(), [tau](double p) { return p < tau; }));
}

// ---------------------------------------------------------------------------
// Optimised kernels

namespace {

// Per-step factor table shared by all points: coef[c][h][x] is
// P(x^k = x | history h, c) * P(c | x^{k-1} = h & 1), and target[h][x] is the
// slot of the new state that receives the product.
template <int Order>
struct StepFactors {
  static constexpr int kStride = 1 << Order;
  int slots = 2;  // 2^r, r = retained variables before the step
  double coef[2][kStride][2] = {};
  double predict[kStride][2] = {};  // evidence marginalised out
  int target[kStride][2] = {};
};

template <int Order>
StepFactors<Order> make_factors(const BeliefState& state, double inlier_ratio,
                                const TransitionModel& model) {
  StepFactors<Order> f;
  const int r = state.retained();
  const int table = model.table_for_step(state.step + 1);
  const bool grows = r < Order;
  const double g = gamma_eval(model.gamma_kind(), inlier_ratio);
  f.slots = 1 << r;
  for (int h = 0; h < f.slots; ++h) {
    const bool prev_inlier = (h & 1) != 0;
    const double p_c_inlier = prev_inlier ? g : 1.0 - g;
    const unsigned keep = grows ? static_cast<unsigned>(h) : static_cast<unsigned>(h) & ((1u << (r - 1)) - 1u);
    for (int c = 0; c < 2; ++c) {
      const double p_c = c ? p_c_inlier : 1.0 - p_c_inlier;
      const double t = model.inlier_given(table, static_cast<unsigned>(h), c != 0);
      f.coef[c][h][1] = t * p_c;
      f.coef[c][h][0] = (1.0 - t) * p_c;
    }
    const double t_in = model.inlier_given(table, static_cast<unsigned>(h), true);
    const double t_out = model.inlier_given(table, static_cast<unsigned>(h), false);
    f.predict[h][1] = t_in * p_c_inlier + t_out * (1.0 - p_c_inlier);
    f.predict[h][0] = 1.0 - f.predict[h][1];
    f.target[h][0] = static_cast<int>(keep << 1);
    f.target[h][1] = static_cast<int>((keep << 1) | 1u);
  }
  return f;
}

template <int Order>
std::size_t update_kernel(BeliefState& state, std::span<const std::uint8_t> mask,
                          double inlier_ratio, const TransitionModel& model, Execution exec) {
  constexpr int kStride = 1 << Order;
  const StepFactors<Order> f = make_factors<Order>(state, inlier_ratio, model);
  const long long n_points = static_cast<long long>(state.size());
  double* phi = state.phi.data();
  double* posterior = state.posterior.data();
  const std::uint8_t* labels = mask.data();
  std::size_t degenerate = 0;

#pragma omp parallel for schedule(static) reduction(+ : degenerate) if (exec == Execution::parallel)
  for (long long n = 0; n < n_points; ++n) {
    double* cell = phi + n * kStride;
    const int c = labels[n] ? 1 : 0;
    double next[kStride] = {};
    for (int h = 0; h < f.slots; ++h) {
      next[f.target[h][0]] += f.coef[c][h][0] * cell[h];
      next[f.target[h][1]] += f.coef[c][h][1] * cell[h];
    }
    double inl = 0.0, total = 0.0;
    for (int i = 0; i < kStride; ++i) {
      total += next[i];
      if (i & 1) inl += next[i];
    }
    if (!(total > 0.0)) {
      ++degenerate;
      for (int i = 0; i < kStride; ++i) next[i] = 0.0;
      for (int h = 0; h < f.slots; ++h) {
        next[f.target[h][0]] += f.predict[h][0] * cell[h];
        next[f.target[h][1]] += f.predict[h][1] * cell[h];
      }
      inl = total = 0.0;
      for (int i = 0; i < kStride; ++i) {
        total += next[i];
        if (i & 1) inl += next[i];
      }
    }
    if (total < kRescaleBelow) {
      for (int i = 0; i < kStride; ++i) next[i] /= total;
      inl /= total;
      total = 1.0;
    }
    for (int i = 0; i < kStride; ++i) cell[i] = next[i];
    posterior[n] = inl / total;
  }
  state.step += 1;
  return degenerate;
}

// First order is the hot path; written out as the two-component recursion.
std::size_t update_kernel_order1(BeliefState& state, std::span<const std::uint8_t> mask,
                                 double inlier_ratio, const TransitionModel& model, Execution exec) {
  const double g = gamma_eval(model.gamma_kind(), inlier_ratio);
  // a[c][x'][x] = P(x | x', c) P(c | x')
  double a[2][2][2];
  for (int c = 0; c < 2; ++c) {
    for (int prev = 0; prev < 2; ++prev) {
      const double p_c_inlier = prev ? g : 1.0 - g;
      const double p_c = c ? p_c_inlier : 1.0 - p_c_inlier;
      const double t = model.inlier_given(1, static_cast<unsigned>(prev), c != 0);
      a[c][prev][1] = t * p_c;
      a[c][prev][0] = (1.0 - t) * p_c;
    }
  }
  double predict[2][2];
  for (int prev = 0; prev < 2; ++prev) {
    const double p_c_inlier = prev ? g : 1.0 - g;
    const double t_in = model.inlier_given(1, static_cast<unsigned>(prev), true);
    const double t_out = model.inlier_given(1, static_cast<unsigned>(prev), false);
    predict[prev][1] = t_in * p_c_inlier + t_out * (1.0 - p_c_inlier);
    predict[prev][0] = 1.0 - predict[prev][1];
  }

  const long long n_points = static_cast<long long>(state.size());
  const std::size_t stride = state.stride;
  double* phi = state.phi.data();
  double* posterior = state.posterior.data();
  const std::uint8_t* labels = mask.data();
  std::size_t degenerate = 0;

#pragma omp parallel for schedule(static) reduction(+ : degenerate) if (exec == Execution::parallel)
  for (long long n = 0; n < n_points; ++n) {
    double& neg = phi[n * stride + 0];
    double& pos = phi[n * stride + 1];
    const int c = labels[n] ? 1 : 0;
    double new_pos = a[c][1][1] * pos + a[c][0][1] * neg;
    double new_neg = a[c][1][0] * pos + a[c][0][0] * neg;
    double total = new_pos + new_neg;
    if (!(total > 0.0)) {
      ++degenerate;
      new_pos = predict[1][1] * pos + predict[0][1] * neg;
      new_neg = predict[1][0] * pos + predict[0][0] * neg;
      total = new_pos + new_neg;
    }
    if (total < kRescaleBelow) {
      new_pos /= total;
      new_neg /= total;
      total = 1.0;
    }
    pos = new_pos;
    neg = new_neg;
    posterior[n] = new_pos / total;
  }
  state.step += 1;
  return degenerate;
}

void check_inputs(const BeliefState& state, std::span<const std::uint8_t> mask,
                  const TransitionModel& model) {
  if (mask.size() != state.size()) {
    throw std::invalid_argument("evidence mask length differs from belief state size");
  }
  if (model.order() != state.order) {
    throw std::invalid_argument("transition model order differs from belief state order");
  }
}

void check_order(const BeliefState& state, int order) {
  if (state.order != order) {
    throw std::invalid_argument("belief state has order " + std::to_string(state.order) +
                                ", expected " + std::to_string(order));
  }
}

void throw_if_degenerate(std::size_t degenerate) {
  if (degenerate > 0) {
    throw DegenerateBelief(std::to_string(degenerate) +
                           " point(s) received evidence with zero likelihood");
  }
}

}  // namespace

std::size_t update_beliefs(BeliefState& state, std::span<const std::uint8_t> mask,
                           double inlier_ratio, const TransitionModel& model, Execution exec) {
  check_inputs(state, mask, model);
  switch (state.order) {
    case 1: return update_kernel_order1(state, mask, inlier_ratio, model, exec);
    case 2: return update_kernel<2>(state, mask, inlier_ratio, model, exec);
    case 3: return update_kernel<3>(state, mask, inlier_ratio, model, exec);
    default: throw std::invalid_argument("Markov order must be 1, 2 or 3");
  }
}

void update_beliefs_order1(BeliefState& state, std::span<const std::uint8_t> mask,
                           double inlier_ratio, const TransitionModel& model) {
  check_order(state, 1);
  BeliefState trial = state;
  throw_if_degenerate(update_beliefs(trial, mask, inlier_ratio, model));
  state = std::move(trial);
}

void update_beliefs_order2(BeliefState& state, std::span<const std::uint8_t> mask,
                           double inlier_ratio, const TransitionModel& model) {
  check_order(state, 2);
  BeliefState trial = state;
  throw_if_degenerate(update_beliefs(trial, mask, inlier_ratio, model));
  state = std::move(trial);
}

void update_beliefs_order3(BeliefState& state, std::span<const std::uint8_t> mask,
                           double inlier_ratio, const TransitionModel& model) {
  check_order(state, 3);
  BeliefState trial = state;
  throw_if_degenerate(update_beliefs(trial, mask, inlier_ratio, model));
  state = std::move(trial);
}

// ---------------------------------------------------------------------------
// Serial reference

namespace reference {

std::size_t update_beliefs(BeliefState& state, std::span<const std::uint8_t> mask,
                           double inlier_ratio, const TransitionModel& model) {
  check_inputs(state, mask, model);
  const int order = state.order;
  const int r = state.retained();
  const int step = state.step + 1;
  const int table = model.table_for_step(step);
  const double g = gamma_eval(model.gamma_kind(), inlier_ratio);
  std::size_t degenerate = 0;

  for (std::size_t n = 0; n < state.size(); ++n) {
    const bool c = mask[n] != 0;
    std::vector<double> old(state.phi.begin() + static_cast<std::ptrdiff_t>(n * state.stride),
                            state.phi.begin() + static_cast<std::ptrdiff_t>((n + 1) * state.stride));

    auto propagate = [&](bool use_evidence) {
      std::vector<double> next(state.stride, 0.0);
      for (unsigned h = 0; h < (1u << r); ++h) {
        const bool prev_inlier = (h & 1u) != 0;
        const double p_c_inlier = prev_inlier ? g : 1.0 - g;
        for (unsigned x = 0; x < 2; ++x) {
          double factor = 0.0;
          if (use_evidence) {
            const double t = model.inlier_given(table, h, c);
            factor = (x ? t : 1.0 - t) * (c ? p_c_inlier : 1.0 - p_c_inlier);
          } else {
            for (int cc = 0; cc < 2; ++cc) {
              const double t = model.inlier_given(table, h, cc != 0);
              factor += (x ? t : 1.0 - t) * (cc ? p_c_inlier : 1.0 - p_c_inlier);
            }
          }
          // Shift the history up by one slot; when the window is full the
          // oldest variable falls off and is summed out.
          unsigned kept = h;
          if (r == order) kept &= (1u << (order - 1)) - 1u;
          next[(kept << 1) | x] += factor * old[h];
        }
      }
      return next;
    };

    std::vector<double> next = propagate(true);
    double total = 0.0;
    for (double v : next) total += v;
    if (!(total > 0.0)) {
      ++degenerate;
      next = propagate(false);
      total = 0.0;
      for (double v : next) total += v;
    }
    if (total < kRescaleBelow) {
      for (double& v : next) v /= total;
      total = 1.0;
    }
    double inl = 0.0;
    for (std::size_t i = 1; i < next.size(); i += 2) inl += next[i];
    std::copy(next.begin(), next.end(), state.phi.begin() + static_cast<std::ptrdiff_t>(n * state.stride));
    state.posterior[n] = inl / total;
  }
  state.step = step;
  return degenerate;
}

}  // namespace reference

// ---------------------------------------------------------------------------
// Enumeration oracle

double brute_force_posterior(double prior, std::span<const Evidence> evidence,
                             const TransitionModel& model) {
  if (!(prior >= 0.0 && prior <= 1.0)) throw std::invalid_argument("prior must lie in [0, 1]");
  const std::size_t k = evidence.size();
  if (k > kMaxBruteForceChain) {
    throw ChainTooLong("brute-force enumeration supports at most " +
                       std::to_string(kMaxBruteForceChain) + " observations");
  }
  if (k == 0) return prior;

  std::vector<double> gammas(k);
  for (std::size_t j = 0; j < k; ++j) gammas[j] = gamma_eval(model.gamma_kind(), evidence[j].inlier_ratio);

  double joint_inlier = 0.0;
  double joint_total = 0.0;
  const std::uint64_t assignments = std::uint64_t{1} << (k + 1);
  for (std::uint64_t a = 0; a < assignments; ++a) {
    auto x = [a](std::size_t j) { return static_cast<unsigned>((a >> j) & 1u); };
    double w = x(0) ? prior : 1.0 - prior;
    for (std::size_t j = 1; j <= k && w != 0.0; ++j) {
      const int table = model.table_for_step(static_cast<int>(j));
      unsigned history = 0;
      for (int i = 1; i <= table; ++i) history |= x(j - static_cast<std::size_t>(i)) << (i - 1);
      const bool c = evidence[j - 1].inlier;
      const double t = model.inlier_given(table, history, c);
      const double p_x = x(j) ? t : 1.0 - t;
      const double g = gammas[j - 1];
      const double p_c_inlier = x(j - 1) ? g : 1.0 - g;
      const double p_c = c ? p_c_inlier : 1.0 - p_c_inlier;
      w *= p_x * p_c;
    }
    joint_total += w;
    if (x(k)) joint_inlier += w;
  }
  if (!(joint_total > 0.0)) throw DegenerateBelief("evidence chain has zero probability");
  return joint_inlier / joint_total;
}

}  // namespace bansac
