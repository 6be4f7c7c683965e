#include "physguard/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "physguard/errors.hpp"
#include "physguard/rng.hpp"

namespace physguard {

void SyntheticCorpusSpec::validate() const {
  if (n_genuine == 0 || n_fake == 0) throw ConfigError("corpus: n_genuine and n_fake must be > 0");
  if (!(velocity_scale_fake > 0.0 && velocity_scale_fake <= 1.0))
    throw ConfigError("corpus: velocity_scale_fake must lie in (0, 1]");
  if (!(smoothness > 0.0 && smoothness <= 1.0))
    throw ConfigError("corpus: smoothness must lie in (0, 1]");
  if (dims == 0) throw ConfigError("corpus: dims must be > 0");
  if (length < 4) throw ConfigError("corpus: length must be >= 4 frames");
  if (!(frame_rate > 0.0)) throw ConfigError("corpus: frame_rate must be > 0");
  if (!(step_sigma > 0.0)) throw ConfigError("corpus: step_sigma must be > 0");
  if (speaker_sigma < 0.0) throw ConfigError("corpus: speaker_sigma must be >= 0");
  if (!(envelope_depth >= 0.0 && envelope_depth < 1.0))
    throw ConfigError("corpus: envelope_depth must lie in [0, 1)");
  if (!(compression_genuine > 0.0) || !(compression_fake > 0.0))
    throw ConfigError("corpus: compression exponents must be > 0");
  if (!(jitter_genuine >= 0.0 && jitter_genuine < compression_genuine))
    throw ConfigError("corpus: jitter_genuine must lie in [0, compression_genuine)");
  if (!(jitter_fake >= 0.0 && jitter_fake < compression_fake))
    throw ConfigError("corpus: jitter_fake must lie in [0, compression_fake)");
  if (!(sample_rate > 0.0) || !(seconds > 0.0))
    throw ConfigError("corpus: sample_rate and seconds must be > 0");
}

namespace {

Matrix random_walk(const SyntheticCorpusSpec& spec, double speed, Rng& rng) {
  const double a = spec.smoothness;
  // Stationary std of the filtered increment equals step_sigma * speed.
  const double drive = spec.step_sigma * speed * std::sqrt((2.0 - a) / a);
  Matrix frames(spec.length, spec.dims);
  std::vector<double> pos(spec.dims), inc(spec.dims);
  for (std::size_t d = 0; d < spec.dims; ++d) {
    pos[d] = standard_normal(rng);
    inc[d] = spec.step_sigma * speed * standard_normal(rng);
  }
  for (std::size_t t = 0; t < spec.length; ++t) {
    for (std::size_t d = 0; d < spec.dims; ++d) {
      // Rounded through float so files written in 32-bit reproduce the corpus exactly.
      frames(t, d) = static_cast<float>(pos[d]);
      inc[d] = (1.0 - a) * inc[d] + a * drive * standard_normal(rng);
      pos[d] += inc[d];
    }
  }
  return frames;
}

std::vector<float> envelope_noise(const SyntheticCorpusSpec& spec, double exponent, Rng& rng) {
  const auto n = static_cast<std::size_t>(std::llround(spec.seconds * spec.sample_rate));
  const double rate_hz = 2.0 + 4.0 * uniform01(rng);
  const double phase = 2.0 * std::numbers::pi * uniform01(rng);
  // Envelope phase advanced by complex rotation instead of a sin() per sample.
  const double step = 2.0 * std::numbers::pi * rate_hz / spec.sample_rate;
  const double rot_c = std::cos(step), rot_s = std::sin(step);
  double c = std::cos(phase), s = std::sin(phase);
  const auto expo = static_cast<float>(exponent);
  std::vector<float> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double env = 1.0 - spec.envelope_depth * (0.5 + 0.5 * s);
    const auto v = static_cast<float>(env * standard_normal(rng));
    x[i] = std::copysign(std::pow(std::abs(v), expo), v);
    const double next_c = c * rot_c - s * rot_s;
    s = s * rot_c + c * rot_s;
    c = next_c;
  }
  peak_normalize(x);
  return x;
}

}  // namespace

Segment generate_segment(const SyntheticCorpusSpec& spec, std::size_t index) {
  const std::size_t total = spec.n_genuine + spec.n_fake;
  if (index >= total) throw ShapeError("generate_segment: index out of range");
  const bool fake = index >= spec.n_genuine;
  const std::size_t class_index = fake ? index - spec.n_genuine : index;

  Rng rng = make_rng(spec.seed, fake ? "synthetic/deepfake" : "synthetic/genuine", class_index);
  double speed = std::exp(spec.speaker_sigma * standard_normal(rng));
  if (fake) speed *= spec.velocity_scale_fake;
  const double base = fake ? spec.compression_fake : spec.compression_genuine;
  const double jitter = fake ? spec.jitter_fake : spec.jitter_genuine;
  const double exponent = base + jitter * (2.0 * uniform01(rng) - 1.0);

  Segment seg;
  char id[32];
  std::snprintf(id, sizeof id, "%s-%06zu", fake ? "deepfake" : "genuine", class_index);
  seg.source_id = id;
  seg.label = fake ? Label::deepfake : Label::genuine;
  seg.embedding = EmbeddingSequence(random_walk(spec, speed, rng), spec.frame_rate);
  seg.waveform = Waveform{envelope_noise(spec, exponent, rng), spec.sample_rate};
  return seg;
}

std::vector<Segment> generate_synthetic(const SyntheticCorpusSpec& spec) {
  spec.validate();
  std::vector<Segment> out;
  out.reserve(spec.n_genuine + spec.n_fake);
  for (std::size_t i = 0; i < spec.n_genuine + spec.n_fake; ++i)
    out.push_back(generate_segment(spec, i));
  return out;
}

}  // namespace physguard
