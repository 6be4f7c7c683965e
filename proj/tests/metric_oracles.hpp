#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "support.hpp"

// Exhaustive reference implementations of the detection metrics. They are
// quadratic or worse and share no code with the library.
namespace oracle {

struct Rates {
  double fr;  // genuine rejected
  double fa;  // deepfake accepted
};

// Every distinct decision "accept iff score >= s" for s a sample value, plus
// rejecting everything. Listed from accept-all to reject-all.
inline std::vector<Rates> sweep(const std::vector<double>& g, const std::vector<double>& f) {
  std::vector<double> cuts(g);
  cuts.insert(cuts.end(), f.begin(), f.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<Rates> out;
  for (double s : cuts) {
    double miss = 0.0, fa = 0.0;
    for (double x : g) miss += x < s ? 1.0 : 0.0;
    for (double x : f) fa += x >= s ? 1.0 : 0.0;
    out.push_back({miss / static_cast<double>(g.size()), fa / static_cast<double>(f.size())});
  }
  out.push_back({1.0, 0.0});
  return out;
}

// Where the piecewise-linear ROC path from (FR 0, FA 1) to (FR 1, FA 0) meets FR = FA.
inline double eer(const std::vector<double>& g, const std::vector<double>& f) {
  const auto pts = sweep(g, f);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Rates p = pts[i], q = pts[i + 1];
    if (p.fr == p.fa) return p.fr;
    const double dp = p.fa - p.fr, dq = q.fa - q.fr;
    if (dp > 0.0 && dq <= 0.0) {
      if (dq == 0.0) return q.fr;
      const double t = dp / (dp - dq);
      return p.fr + t * (q.fr - p.fr);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

inline double auc(const std::vector<double>& g, const std::vector<double>& f) {
  double wins = 0.0;
  for (double a : g)
    for (double b : f) wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  return wins / (static_cast<double>(g.size()) * static_cast<double>(f.size()));
}

// Normalized tandem cost with a perfect verification stage:
// C1 = P_target C_miss_cm, C2 = P_spoof C_fa_cm.
inline double min_tdcf(const std::vector<double>& g, const std::vector<double>& f, double p_target = 0.9405,
                       double p_spoof = 0.05, double c_miss = 1.0, double c_fa = 10.0) {
  const double c1 = p_target * c_miss, c2 = p_spoof * c_fa;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : sweep(g, f)) best = std::min(best, (c1 * r.fr + c2 * r.fa) / std::min(c1, c2));
  return best;
}

inline double ecdf(const std::vector<double>& xs, double v) {
  double n = 0.0;
  for (double x : xs) n += x <= v ? 1.0 : 0.0;
  return n / static_cast<double>(xs.size());
}

inline double ks(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (const auto* src : {&a, &b})
    for (double v : *src) d = std::max(d, std::abs(ecdf(a, v) - ecdf(b, v)));
  return d;
}

// Random scores; about a third of the sets live on a coarse grid so ties are common.
inline std::vector<double> scores(support::Gen& g, std::size_t n, double shift, bool grid) {
  std::vector<double> out(n);
  for (auto& x : out) {
    x = support::normal(g) + shift;
    if (grid) x = std::round(x * 2.0) / 2.0;
  }
  return out;
}

}  // namespace oracle
