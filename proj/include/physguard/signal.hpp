#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "physguard/matrix.hpp"

namespace physguard {

inline constexpr double kTargetSampleRate = 16000.0;
inline constexpr double kWindowSeconds = 3.0;
inline constexpr double kDefaultFrameRate = 50.0;

struct Waveform {
  std::vector<float> samples;
  double sample_rate = kTargetSampleRate;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

// T x D frame embeddings. delta_t is always derived from frame_rate.
class EmbeddingSequence {
 public:
  EmbeddingSequence() = default;
  EmbeddingSequence(Matrix frames, double frame_rate = kDefaultFrameRate);

  const Matrix& frames() const noexcept { return frames_; }
  std::size_t length() const noexcept { return frames_.rows(); }
  std::size_t dims() const noexcept { return frames_.cols(); }
  double frame_rate() const noexcept { return frame_rate_; }
  double delta_t() const noexcept { return 1.0 / frame_rate_; }

 private:
  Matrix frames_;
  double frame_rate_ = kDefaultFrameRate;
};

enum class Label { genuine, deepfake, unknown };

std::string_view to_string(Label label);
// Accepts "genuine"/"bonafide" and "deepfake"/"fake"/"spoof"; anything else throws FormatError.
Label parse_label(std::string_view text);

struct Segment {
  std::string source_id;
  Label label = Label::unknown;
  Waveform waveform;
  EmbeddingSequence embedding;
};

// Maps a waveform to a new sample rate. The default is linear interpolation.
using Resampler = std::function<Waveform(const Waveform&, double target_rate)>;

Waveform resample_linear(const Waveform& in, double target_rate);

// Scales the window so max |x| == 1. All-zero input is returned unchanged.
void peak_normalize(std::span<float> samples);

// Resample, cut into non-overlapping 3 s windows (remainder dropped), and
// peak-normalize each window. Throws EmptySignal on empty input.
std::vector<Waveform> preprocess(const Waveform& raw, double target_rate = kTargetSampleRate,
                                 const Resampler& resampler = resample_linear);

std::vector<double> mean_pool(const EmbeddingSequence& embedding);

}  // namespace physguard
