#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "physguard/matrix.hpp"
#include "physguard/signal.hpp"

namespace physguard {

// First and second finite differences of an embedding trajectory.
struct KinematicsDerivatives {
  Matrix velocities;     // (T-1) x D, units per second
  Matrix accelerations;  // (T-2) x D, units per second^2
};

struct PhysicsConfig {
  double alpha = 0.01;  // vibrational normalization
  double beta = 0.1;    // rotational scale
  double percentile_floor = 1e-8;
};

struct PhysicsVector {
  double delta_f_t = 0.0;
  double delta_f_v = 0.0;
  double delta_f_r = 0.0;
  double r_dyn = 0.0;
  double mean_velocity_magnitude = 0.0;
  double temporal_frequency_variation = 0.0;

  static constexpr std::size_t size() { return 6; }
  std::array<double, 6> as_array() const {
    return {delta_f_t, delta_f_v, delta_f_r, r_dyn, mean_velocity_magnitude,
            temporal_frequency_variation};
  }
  friend bool operator==(const PhysicsVector&, const PhysicsVector&) = default;
};

// Column names used by the feature table, in as_array() order.
inline constexpr std::array<const char*, 6> kPhysicsFeatureNames = {
    "delta_f_t", "delta_f_v", "delta_f_r", "r_dyn", "mean_vel_mag", "tf_variation"};

// Throws SequenceTooShort when T < 3.
KinematicsDerivatives kinematics(const EmbeddingSequence& embedding);

// Mean speed plus half the mean acceleration magnitude.
double translational_shift(const KinematicsDerivatives& k);

// alpha times the population std, across dimensions, of the dominant non-DC
// frequency bin of each Hann-windowed dimension. Requires T >= 4.
double vibrational_shift(const EmbeddingSequence& embedding, double alpha);

// beta times the mean parallelogram area spanned by consecutive velocity pairs
// (v_i, v_{i+1} - v_i); the Lagrange identity extends the cross product to any D.
double rotational_shift(const KinematicsDerivatives& k, double beta);

// Linear-interpolation percentile, q in [0, 1].
double percentile(std::span<const float> values, double q);

// 20 log10(max|x| / Q_0.1(|x|)) in dB; 0 for an all-zero waveform.
double dynamic_range(const Waveform& wav, double floor = 1e-8);

double mean_velocity_magnitude(const KinematicsDerivatives& k);

// Coefficient of variation of the frame-to-frame step length ||E_{i+1} - E_i||.
double temporal_frequency_variation(const EmbeddingSequence& embedding);

PhysicsVector physics_vector(const Segment& segment, const PhysicsConfig& config = {});

struct FeatureRow {
  std::string source_id;
  Label label = Label::unknown;
  PhysicsVector features;
};

std::string feature_table_csv(std::span<const FeatureRow> rows);
std::vector<FeatureRow> parse_feature_table(const std::string& csv);

}  // namespace physguard
