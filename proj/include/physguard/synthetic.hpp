#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "physguard/signal.hpp"

namespace physguard {

// Parameters of the desk-scale corpus. Genuine embeddings are random walks with
// low-pass filtered Gaussian increments; deepfakes reuse the construction with
// increments scaled by velocity_scale_fake and a compressed waveform envelope.
struct SyntheticCorpusSpec {
  std::size_t n_genuine = 500;
  std::size_t n_fake = 500;
  std::uint64_t seed = 7;
  std::size_t dims = 16;
  std::size_t length = 150;  // 3 s at 50 Hz
  double frame_rate = kDefaultFrameRate;
  double velocity_scale_fake = 247.31 / 288.04;
  double smoothness = 0.3;
  double step_sigma = 1.0;
  // Per-segment log-normal spread of the walk speed (speaker variability).
  double speaker_sigma = 0.2;
  // Waveform envelope: amplitudes are mapped through |x|^exponent with the
  // exponent drawn per segment from base +- jitter. Genuine recordings vary
  // widely around 1; deepfakes sit in a narrow compressed band.
  double envelope_depth = 0.9;
  double compression_genuine = 1.0;
  double jitter_genuine = 0.2;
  double compression_fake = 0.85;
  double jitter_fake = 0.05;
  double sample_rate = kTargetSampleRate;
  double seconds = kWindowSeconds;

  void validate() const;
};

// Segment `index` in [0, n_genuine + n_fake); the first n_genuine are genuine.
// Each segment owns its RNG substream, so any subset can be generated alone.
Segment generate_segment(const SyntheticCorpusSpec& spec, std::size_t index);

std::vector<Segment> generate_synthetic(const SyntheticCorpusSpec& spec);

}  // namespace physguard
