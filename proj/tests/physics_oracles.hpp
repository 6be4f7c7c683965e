#pragma once

// Brute-force reference implementations for the physics features. They work
// on plain nested vectors and share no code with the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

using Rows = std::vector<std::vector<double>>;

inline Rows diff(const Rows& x, double dt) {
  Rows out;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    std::vector<double> r(x[i].size());
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = (x[i + 1][j] - x[i][j]) / dt;
    out.push_back(r);
  }
  return out;
}

inline double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double mean_norm(const Rows& x) {
  double s = 0.0;
  for (const auto& r : x) s += norm(r);
  return s / static_cast<double>(x.size());
}

inline double translational(const Rows& e, double dt) {
  const Rows v = diff(e, dt);
  return mean_norm(v) + 0.5 * mean_norm(diff(v, dt));
}

// O(T^2) DFT of the Hann-windowed column, argmax of |X_k|^2 for k = 1..T/2,
// first index wins ties.
inline std::size_t dominant_bin(const std::vector<double>& x) {
  const std::size_t t = x.size();
  double best = -1.0;
  std::size_t best_k = 1;
  for (std::size_t k = 1; k <= t / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t n = 0; n < t; ++n) {
      const double w = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * double(n) / double(t - 1)));
      acc += w * x[n] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * n % t) / double(t));
    }
    const double p = std::norm(acc);
    if (p > best) {
      best = p;
      best_k = k;
    }
  }
  return best_k;
}

inline double population_std(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= double(x.size());
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / double(x.size()));
}

inline double vibrational(const Rows& e, double alpha) {
  std::vector<double> bins;
  for (std::size_t j = 0; j < e[0].size(); ++j) {
    std::vector<double> col;
    for (const auto& r : e) col.push_back(r[j]);
    bins.push_back(double(dominant_bin(col)));
  }
  return alpha * population_std(bins);
}

inline std::vector<double> cross3(const std::vector<double>& a, const std::vector<double>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// Literal 3-D cross product magnitude, averaged over consecutive velocity pairs.
inline double rotational_3d(const Rows& e, double dt, double beta) {
  const Rows v = diff(e, dt);
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    std::vector<double> dv(3);
    for (int j = 0; j < 3; ++j) dv[j] = v[i + 1][j] - v[i][j];
    s += norm(cross3(v[i], dv));
  }
  return beta * s / double(v.size() - 1);
}

// Parallelogram area from the squared 2x2 minors a_j b_k - a_k b_j, valid in
// any D (Binet-Cauchy).
inline double rotational_minors(const Rows& e, double dt, double beta) {
  const Rows v = diff(e, dt);
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    const auto& a = v[i];
    double sum = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j)
      for (std::size_t k = j + 1; k < a.size(); ++k) {
        const double bj = v[i + 1][j] - a[j], bk = v[i + 1][k] - a[k];
        const double m = a[j] * bk - a[k] * bj;
        sum += m * m;
      }
    s += std::sqrt(sum);
  }
  return beta * s / double(v.size() - 1);
}

inline double percentile(std::vector<double> x, double q) {
  std::sort(x.begin(), x.end());
  const double pos = q * double(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - double(lo)) * (x[hi] - x[lo]);
}

inline double dynamic_range(const std::vector<float>& w) {
  std::vector<double> mags;
  for (float x : w) mags.push_back(std::abs(double(x)));
  const double peak = *std::max_element(mags.begin(), mags.end());
  if (peak == 0.0) return 0.0;
  return std::max(0.0, 20.0 * std::log10(peak / std::max(percentile(mags, 0.1), 1e-8)));
}

inline double step_cv(const Rows& e) {
  std::vector<double> steps;
  for (const auto& v : diff(e, 1.0)) steps.push_back(norm(v));
  double m = 0.0;
  for (double s : steps) m += s;
  m /= double(steps.size());
  return m == 0.0 ? 0.0 : population_std(steps) / m;
}

}  // namespace oracle
