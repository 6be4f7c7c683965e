#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "physguard/matrix.hpp"

namespace support {

using Gen = std::mt19937_64;

inline double normal(Gen& g, double sigma = 1.0) { return std::normal_distribution<double>(0.0, sigma)(g); }
inline double uniform(Gen& g, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); }
inline std::size_t pick(Gen& g, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(g);
}

inline physguard::Matrix random_matrix(Gen& g, std::size_t rows, std::size_t cols, double sigma = 1.0) {
  physguard::Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = normal(g, sigma);
  return m;
}

// |a - b| <= rel * max(|a|, |b|); two exact zeros compare equal.
inline bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

inline std::vector<std::vector<double>> to_rows(const physguard::Matrix& m) {
  std::vector<std::vector<double>> out(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  return out;
}

}  // namespace support
