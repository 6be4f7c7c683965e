#include "physguard/signal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "physguard/errors.hpp"

namespace physguard {

EmbeddingSequence::EmbeddingSequence(Matrix frames, double frame_rate)
    : frames_(std::move(frames)), frame_rate_(frame_rate) {
  if (!(frame_rate_ > 0.0)) throw ShapeError("frame_rate must be positive");
  for (double v : frames_.data())
    if (!std::isfinite(v)) throw ShapeError("embedding contains non-finite values");
}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::genuine: return "genuine";
    case Label::deepfake: return "deepfake";
    case Label::unknown: return "unknown";
  }
  return "unknown";
}

Label parse_label(std::string_view text) {
  if (text == "genuine" || text == "bonafide") return Label::genuine;
  if (text == "deepfake" || text == "fake" || text == "spoof") return Label::deepfake;
  if (text == "unknown" || text.empty()) return Label::unknown;
  throw FormatError("unknown label '" + std::string(text) + "'");
}

Waveform resample_linear(const Waveform& in, double target_rate) {
  if (!(target_rate > 0.0) || !(in.sample_rate > 0.0))
    throw ShapeError("sample rates must be positive");
  if (in.sample_rate == target_rate) return in;
  const std::size_t n = in.samples.size();
  const auto out_len = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * target_rate / in.sample_rate + 1e-9));
  Waveform out{std::vector<float>(out_len), target_rate};
  const double step = in.sample_rate / target_rate;
  for (std::size_t j = 0; j < out_len; ++j) {
    const double pos = static_cast<double>(j) * step;
    const auto i0 = std::min(static_cast<std::size_t>(pos), n - 1);
    const std::size_t i1 = std::min(i0 + 1, n - 1);
    const double frac = pos - static_cast<double>(i0);
    out.samples[j] =
        static_cast<float>((1.0 - frac) * in.samples[i0] + frac * in.samples[i1]);
  }
  return out;
}

void peak_normalize(std::span<float> samples) {
  float peak = 0.0f;
  for (float s : samples) peak = std::max(peak, std::abs(s));
  if (peak == 0.0f || peak == 1.0f) return;
  for (float& s : samples) s /= peak;
}

std::vector<Waveform> preprocess(const Waveform& raw, double target_rate,
                                 const Resampler& resampler) {
  if (raw.samples.empty()) throw EmptySignal("preprocess: empty waveform");
  if (!(target_rate > 0.0)) throw ShapeError("preprocess: target rate must be positive");
  const Waveform resampled = resampler(raw, target_rate);
  const auto window = static_cast<std::size_t>(std::llround(kWindowSeconds * target_rate));
  const std::size_t count = resampled.samples.size() / window;
  std::vector<Waveform> out;
  out.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    const auto first = resampled.samples.begin() + static_cast<std::ptrdiff_t>(w * window);
    Waveform win{std::vector<float>(first, first + static_cast<std::ptrdiff_t>(window)),
                 target_rate};
    peak_normalize(win.samples);
    out.push_back(std::move(win));
  }
  return out;
}

std::vector<double> mean_pool(const EmbeddingSequence& embedding) {
  const Matrix& f = embedding.frames();
  std::vector<double> pooled(f.cols(), 0.0);
  if (f.rows() == 0) return pooled;
  for (std::size_t r = 0; r < f.rows(); ++r) {
    auto row = f.row(r);
    for (std::size_t c = 0; c < f.cols(); ++c) pooled[c] += row[c];
  }
  for (double& v : pooled) v /= static_cast<double>(f.rows());
  return pooled;
}

}  // namespace physguard
