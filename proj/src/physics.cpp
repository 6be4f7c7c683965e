#include "physguard/physics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <sstream>

#include <fftw3.h>

#include "physguard/errors.hpp"

namespace physguard {

namespace {

void require_length(const EmbeddingSequence& e, std::size_t min_t, const char* op) {
  if (e.length() < min_t)
    throw SequenceTooShort(std::string(op) + ": need T >= " + std::to_string(min_t) + ", got " +
                           std::to_string(e.length()));
}

double mean_row_norm(const Matrix& m) {
  double s = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) s += norm2(m.row(r));
  return s / static_cast<double>(m.rows());
}

// The FFTW planner is not reentrant; execution of an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::span<double> input() { return {in_, n_}; }
  void execute() { fftw_execute(plan_); }
  double power(std::size_t bin) const { return out_[bin][0] * out_[bin][0] + out_[bin][1] * out_[bin][1]; }

 private:
  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

}  // namespace

KinematicsDerivatives kinematics(const EmbeddingSequence& embedding) {
  require_length(embedding, 3, "kinematics");
  const Matrix& e = embedding.frames();
  const std::size_t t = e.rows(), d = e.cols();
  const double dt = embedding.delta_t();
  KinematicsDerivatives k{Matrix(t - 1, d), Matrix(t - 2, d)};
  for (std::size_t i = 0; i + 1 < t; ++i)
    for (std::size_t j = 0; j < d; ++j) k.velocities(i, j) = (e(i + 1, j) - e(i, j)) / dt;
  for (std::size_t i = 0; i + 2 < t; ++i)
    for (std::size_t j = 0; j < d; ++j)
      k.accelerations(i, j) = (k.velocities(i + 1, j) - k.velocities(i, j)) / dt;
  return k;
}

double translational_shift(const KinematicsDerivatives& k) {
  return mean_row_norm(k.velocities) + 0.5 * mean_row_norm(k.accelerations);
}

double vibrational_shift(const EmbeddingSequence& embedding, double alpha) {
  require_length(embedding, 4, "vibrational_shift");
  const Matrix& e = embedding.frames();
  const std::size_t t = e.rows(), d = e.cols();
  if (d == 0) return 0.0;

  std::vector<double> window(t);
  for (std::size_t n = 0; n < t; ++n)
    window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                     static_cast<double>(t - 1));

  RealFft fft(t);
  std::vector<double> peaks(d);
  const std::size_t last_bin = t / 2;
  for (std::size_t j = 0; j < d; ++j) {
    auto in = fft.input();
    for (std::size_t n = 0; n < t; ++n) in[n] = e(n, j) * window[n];
    fft.execute();
    std::size_t best = 1;
    double best_power = fft.power(1);
    for (std::size_t b = 2; b <= last_bin; ++b) {
      const double p = fft.power(b);
      if (p > best_power) {
        best_power = p;
        best = b;
      }
    }
    peaks[j] = static_cast<double>(best);
  }

  double mean = 0.0;
  for (double p : peaks) mean += p;
  mean /= static_cast<double>(d);
  double var = 0.0;
  for (double p : peaks) var += (p - mean) * (p - mean);
  return alpha * std::sqrt(var / static_cast<double>(d));
}

double rotational_shift(const KinematicsDerivatives& k, double beta) {
  const Matrix& v = k.velocities;
  if (v.rows() < 3)
    throw SequenceTooShort("rotational_shift: need T >= 4, got " + std::to_string(v.rows() + 1));
  const std::size_t d = v.cols();
  if (d < 2) return 0.0;
  // |v| times the height of dv above the line through v. Same value as
  // sqrt(|v|^2 |dv|^2 - (v.dv)^2) without its cancellation near collinearity.
  std::vector<double> dv(d);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < v.rows(); ++i) {
    auto vi = v.row(i);
    auto vn = v.row(i + 1);
    for (std::size_t j = 0; j < d; ++j) dv[j] = vn[j] - vi[j];
    const double vv = dot(vi, vi);
    if (vv == 0.0) continue;
    const double c = dot(vi, dv) / vv;
    double hh = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = dv[j] - c * vi[j];
      hh += h * h;
    }
    total += std::sqrt(vv) * std::sqrt(hh);
  }
  return beta * total / static_cast<double>(v.rows() - 1);
}

double percentile(std::span<const float> values, double q) {
  if (values.empty()) throw EmptySignal("percentile of empty sequence");
  std::vector<double> v(values.begin(), values.end());
  q = std::clamp(q, 0.0, 1.0);
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (hi == lo) return a;
  // The next order statistic is the minimum of the upper partition.
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(hi), v.end());
  return a + (pos - static_cast<double>(lo)) * (b - a);
}

double dynamic_range(const Waveform& wav, double floor) {
  if (wav.samples.empty()) throw EmptySignal("dynamic_range: empty waveform");
  std::vector<float> mags(wav.samples.size());
  float peak = 0.0f;
  for (std::size_t i = 0; i < mags.size(); ++i) {
    mags[i] = std::abs(wav.samples[i]);
    peak = std::max(peak, mags[i]);
  }
  if (peak == 0.0f) return 0.0;
  const double q10 = std::max(percentile(mags, 0.1), floor);
  return std::max(0.0, 20.0 * std::log10(static_cast<double>(peak) / q10));
}

double mean_velocity_magnitude(const KinematicsDerivatives& k) { return mean_row_norm(k.velocities); }

double temporal_frequency_variation(const EmbeddingSequence& embedding) {
  require_length(embedding, 2, "temporal_frequency_variation");
  const Matrix& e = embedding.frames();
  std::vector<double> steps(e.rows() - 1);
  std::vector<double> diff(e.cols());
  for (std::size_t i = 0; i + 1 < e.rows(); ++i) {
    for (std::size_t j = 0; j < e.cols(); ++j) diff[j] = e(i + 1, j) - e(i, j);
    steps[i] = norm2(diff);
  }
  double mean = 0.0;
  for (double s : steps) mean += s;
  mean /= static_cast<double>(steps.size());
  if (mean == 0.0) return 0.0;
  double var = 0.0;
  for (double s : steps) var += (s - mean) * (s - mean);
  return std::sqrt(var / static_cast<double>(steps.size())) / mean;
}

PhysicsVector physics_vector(const Segment& segment, const PhysicsConfig& config) {
  const auto k = kinematics(segment.embedding);
  PhysicsVector p;
  p.delta_f_t = translational_shift(k);
  p.delta_f_v = vibrational_shift(segment.embedding, config.alpha);
  p.delta_f_r = rotational_shift(k, config.beta);
  p.r_dyn = dynamic_range(segment.waveform, config.percentile_floor);
  p.mean_velocity_magnitude = mean_velocity_magnitude(k);
  p.temporal_frequency_variation = temporal_frequency_variation(segment.embedding);
  return p;
}

std::string feature_table_csv(std::span<const FeatureRow> rows) {
  std::string out = "source_id,label";
  for (const char* name : kPhysicsFeatureNames) (out += ',') += name;
  out += '\n';
  char buf[32];
  for (const auto& row : rows) {
    out += row.source_id;
    out += ',';
    out += to_string(row.label);
    for (double v : row.features.as_array()) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::vector<FeatureRow> parse_feature_table(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("feature table: missing header");
  std::vector<FeatureRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 8)
      throw FormatError("feature table line " + std::to_string(line_no) + ": expected 8 columns");
    FeatureRow row{cells[0], parse_label(cells[1]), {}};
    double vals[6];
    for (int i = 0; i < 6; ++i) {
      const std::string& c = cells[2 + i];
      auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), vals[i]);
      if (ec != std::errc() || p != c.data() + c.size())
        throw FormatError("feature table line " + std::to_string(line_no) + ": bad number '" + c + "'");
    }
    row.features = {vals[0], vals[1], vals[2], vals[3], vals[4], vals[5]};
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace physguard
