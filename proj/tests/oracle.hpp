#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the library's filter code.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

// Published transition tables, rows in table order: the labels
// x^{k-1}, ..., x^{k-t}, c^k with inlier listed first, c varying fastest.
inline constexpr double kTable1[4] = {1.0, 1.0, 0.2, 0.0};
inline constexpr double kTable2[8] = {1.0, 0.8, 0.9, 0.7, 0.2, 0.1, 0.1, 0.0};
inline constexpr double kTable3[16] = {1.0, 0.8, 0.9, 0.7, 0.6, 0.5, 0.4, 0.2,
                                       0.3, 0.2, 0.1, 0.3, 0.2, 0.1, 0.05, 0.0};

inline double gamma1(double eps) { return eps < 0.7143 ? 0.62 * eps + 0.5 : 0.2 * eps + 0.8; }

// history[0] = x^{k-1}, history[1] = x^{k-2}, ...; true means inlier.
inline double p_inlier(int t, const bool* history, bool c) {
  int row = 0;
  for (int i = 0; i < t; ++i) row = row * 2 + (history[i] ? 0 : 1);
  row = row * 2 + (c ? 0 : 1);
  switch (t) {
    case 1: return kTable1[row];
    case 2: return kTable2[row];
    default: return kTable3[row];
  }
}

struct Step {
  bool inlier;
  double ratio;
};

// P(x^k = inlier | c^{1:k}) by summing the joint over every assignment of
// x^0..x^k. Step j uses the table of order min(j, order).
inline double posterior(int order, double prior, const std::vector<Step>& chain) {
  const std::size_t k = chain.size();
  const std::size_t vars = k + 1;
  double on = 0.0, total = 0.0;
  std::vector<bool> x(vars);
  for (unsigned long assignment = 0; assignment < (1UL << vars); ++assignment) {
    for (std::size_t j = 0; j < vars; ++j) x[j] = (assignment >> j) & 1UL;
    double p = x[0] ? prior : 1.0 - prior;
    for (std::size_t j = 1; j <= k && p > 0.0; ++j) {
      const Step& s = chain[j - 1];
      const double g = gamma1(s.ratio);
      const double p_c_inlier = x[j - 1] ? g : 1.0 - g;
      p *= s.inlier ? p_c_inlier : 1.0 - p_c_inlier;
      const int t = static_cast<int>(j) < order ? static_cast<int>(j) : order;
      bool history[3];
      for (int i = 0; i < t; ++i) history[i] = x[j - 1 - static_cast<std::size_t>(i)];
      const double pi = p_inlier(t, history, s.inlier);
      p *= x[j] ? pi : 1.0 - pi;
    }
    total += p;
    if (x[k]) on += p;
  }
  return on / total;
}

}  // namespace oracle
