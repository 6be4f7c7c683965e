#include <doctest.h>

#include <cmath>
#include <numbers>

#include "physguard/errors.hpp"
#include "physguard/physics.hpp"
#include "physics_oracles.hpp"
#include "support.hpp"

using namespace physguard;
using support::close_rel;

namespace {

EmbeddingSequence seq(const Matrix& m, double rate = 50.0) { return EmbeddingSequence(m, rate); }

Waveform random_wave(support::Gen& g, std::size_t n) {
  Waveform w;
  for (std::size_t i = 0; i < n; ++i) w.samples.push_back(static_cast<float>(support::normal(g)));
  return w;
}

}  // namespace

TEST_CASE("kinematics of a three-frame scalar trajectory") {
  const auto k = kinematics(seq(Matrix{{0.0}, {1.0}, {3.0}}));
  CHECK(k.velocities.rows() == 2);
  CHECK(k.accelerations.rows() == 1);
  CHECK(k.velocities(0, 0) == doctest::Approx(50.0));
  CHECK(k.velocities(1, 0) == doctest::Approx(100.0));
  CHECK(k.accelerations(0, 0) == doctest::Approx(2500.0));
}

TEST_CASE("kinematics equals an elementwise difference loop exactly") {
  support::Gen g(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix e = support::random_matrix(g, 10, 4);
    const auto k = kinematics(seq(e));
    const auto rows = support::to_rows(e);
    const auto v = oracle::diff(rows, 0.02);
    const auto a = oracle::diff(v, 0.02);
    CHECK(support::to_rows(k.velocities) == v);
    CHECK(support::to_rows(k.accelerations) == a);
  }
}

TEST_CASE("short sequences are rejected") {
  CHECK_THROWS_AS(kinematics(seq(Matrix{{0.0}, {1.0}})), SequenceTooShort);
  CHECK_THROWS_AS(vibrational_shift(seq(Matrix{{0.0}, {1.0}, {2.0}}), 0.01), SequenceTooShort);
  CHECK_THROWS_AS(rotational_shift(kinematics(seq(Matrix{{0.0}, {1.0}, {2.0}})), 0.1), SequenceTooShort);
}

TEST_CASE("constant trajectory has no motion") {
  Matrix e(20, 5);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = 0; j < 5; ++j) e(i, j) = 0.25 * double(j) - 1.0;
  const auto k = kinematics(seq(e));
  CHECK(translational_shift(k) == 0.0);
  CHECK(rotational_shift(k, 0.1) == 0.0);
  CHECK(mean_velocity_magnitude(k) == 0.0);
  CHECK(vibrational_shift(seq(e), 0.01) == 0.0);
  CHECK(temporal_frequency_variation(seq(e)) == 0.0);
}

TEST_CASE("linear ramp moves at constant speed") {
  const std::vector<double> c{0.3, -0.4, 1.2};
  Matrix e(12, 3);
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 3; ++j) e(i, j) = double(i) * c[j];
  const double expected = oracle::norm(c) / 0.02;
  CHECK(translational_shift(kinematics(seq(e))) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("translational shift matches direct summation") {
  support::Gen g(12);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix e = support::random_matrix(g, 8, 3);
    CHECK(close_rel(translational_shift(kinematics(seq(e))), oracle::translational(support::to_rows(e), 0.02), 1e-9));
  }
}

TEST_CASE("vibrational shift: two sinusoids at bins 4 and 12") {
  const std::size_t t = 64;
  Matrix e(t, 2);
  std::vector<double> a(t), b(t);
  for (std::size_t n = 0; n < t; ++n) {
    a[n] = e(n, 0) = std::sin(2.0 * std::numbers::pi * 4.0 * double(n) / double(t));
    b[n] = e(n, 1) = std::sin(2.0 * std::numbers::pi * 12.0 * double(n) / double(t));
  }
  REQUIRE(oracle::dominant_bin(a) == 4);
  REQUIRE(oracle::dominant_bin(b) == 12);
  CHECK(vibrational_shift(seq(e), 0.01) == doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("vibrational shift: identical sinusoid in every dimension") {
  Matrix e(40, 6);
  for (std::size_t n = 0; n < 40; ++n)
    for (std::size_t j = 0; j < 6; ++j) e(n, j) = std::cos(2.0 * std::numbers::pi * 5.0 * double(n) / 40.0);
  CHECK(vibrational_shift(seq(e), 0.01) == 0.0);
}

TEST_CASE("vibrational shift matches a naive DFT argmax") {
  support::Gen g(13);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix e = support::random_matrix(g, support::pick(g, 4, 40), support::pick(g, 1, 6));
    CHECK(close_rel(vibrational_shift(seq(e), 0.01), oracle::vibrational(support::to_rows(e), 0.01), 1e-9));
  }
}

TEST_CASE("rotational shift: orthogonal increments") {
  KinematicsDerivatives k{Matrix(5, 2), Matrix(4, 2)};
  for (std::size_t i = 0; i < 5; ++i) {
    k.velocities(i, 0) = 1.0;
    k.velocities(i, 1) = 2.0 * double(i);
  }
  CHECK(rotational_shift(k, 0.1) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("rotational shift vanishes for collinear motion") {
  support::Gen g(14);
  const Matrix scalar = support::random_matrix(g, 15, 1);
  CHECK(rotational_shift(kinematics(seq(scalar)), 0.1) == 0.0);

  // Every frame on one line through the origin.
  Matrix line(15, 4);
  const std::vector<double> dir{1.0, -2.0, 0.5, 3.0};
  for (std::size_t i = 0; i < 15; ++i)
    for (std::size_t j = 0; j < 4; ++j) line(i, j) = scalar(i, 0) * dir[j];
  CHECK(rotational_shift(kinematics(seq(line)), 0.1) < 1e-9 * translational_shift(kinematics(seq(line))));
}

TEST_CASE("rotational shift equals the literal cross product in three dimensions") {
  support::Gen g(15);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix e = support::random_matrix(g, 12, 3);
    CHECK(close_rel(rotational_shift(kinematics(seq(e)), 0.1), oracle::rotational_3d(support::to_rows(e), 0.02, 0.1),
                    1e-9));
  }
}

TEST_CASE("rotational shift equals the 2x2 minor sum in any dimension") {
  support::Gen g(16);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix e = support::random_matrix(g, support::pick(g, 4, 20), support::pick(g, 2, 9));
    CHECK(close_rel(rotational_shift(kinematics(seq(e)), 0.1), oracle::rotational_minors(support::to_rows(e), 0.02, 0.1),
                    1e-9));
  }
}

TEST_CASE("percentile interpolates between order statistics") {
  const std::vector<float> x{4.0f, 1.0f, 3.0f, 2.0f, 5.0f};
  CHECK(percentile(x, 0.0) == 1.0);
  CHECK(percentile(x, 1.0) == 5.0);
  CHECK(percentile(x, 0.5) == 3.0);
  CHECK(percentile(x, 0.1) == doctest::Approx(1.4));
  support::Gen g(17);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<float> v(support::pick(g, 1, 200));
    std::vector<double> d;
    for (auto& s : v) d.push_back(s = static_cast<float>(support::normal(g)));
    const double q = support::uniform(g, 0.0, 1.0);
    CHECK(percentile(v, q) == doctest::Approx(oracle::percentile(d, q)).epsilon(1e-12));
  }
}

TEST_CASE("dynamic range examples") {
  Waveform w;
  w.samples = {1.0f, 0.1f, 0.1f, 0.2f, 0.3f, 0.4f, 0.5f, 0.6f, 0.7f, 0.8f, 0.9f};
  CHECK(dynamic_range(w) == doctest::Approx(20.0).epsilon(1e-6));
  w.samples.assign(100, 0.7f);
  for (std::size_t i = 0; i < 100; i += 2) w.samples[i] = -0.7f;
  CHECK(dynamic_range(w) == 0.0);
  w.samples.assign(100, 0.0f);
  CHECK(dynamic_range(w) == 0.0);
  w.samples.clear();
  CHECK_THROWS_AS(dynamic_range(w), EmptySignal);
}

TEST_CASE("dynamic range matches a full-sort oracle") {
  support::Gen g(18);
  for (int trial = 0; trial < 50; ++trial) {
    const Waveform w = random_wave(g, 1000);
    CHECK(std::abs(dynamic_range(w) - oracle::dynamic_range(w.samples)) < 1e-6);
  }
}

TEST_CASE("dynamic range is scale invariant") {
  support::Gen g(19);
  for (int trial = 0; trial < 20; ++trial) {
    const Waveform w = random_wave(g, 500);
    for (float s : {4.0f, 0.25f, 0.3f, 7.0f}) {
      Waveform scaled = w;
      for (float& x : scaled.samples) x *= s;
      CHECK(std::abs(dynamic_range(scaled) - dynamic_range(w)) < 1e-5);
    }
  }
}

TEST_CASE("temporal frequency variation is the coefficient of variation of step lengths") {
  support::Gen g(20);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix e = support::random_matrix(g, support::pick(g, 3, 30), support::pick(g, 1, 8));
    CHECK(close_rel(temporal_frequency_variation(seq(e)), oracle::step_cv(support::to_rows(e)), 1e-9));
  }
}

TEST_CASE("scale equivariance of the embedding features") {
  support::Gen g(21);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix e = support::random_matrix(g, support::pick(g, 4, 30), support::pick(g, 1, 8));
    const double s = support::uniform(g, 0.1, 10.0);
    Matrix scaled = e;
    for (std::size_t r = 0; r < e.rows(); ++r)
      for (std::size_t c = 0; c < e.cols(); ++c) scaled(r, c) *= s;
    const auto k = kinematics(seq(e)), ks = kinematics(seq(scaled));
    CHECK(close_rel(translational_shift(ks), s * translational_shift(k), 1e-9));
    CHECK(close_rel(mean_velocity_magnitude(ks), s * mean_velocity_magnitude(k), 1e-9));
    CHECK(close_rel(rotational_shift(ks, 0.1), s * s * rotational_shift(k, 0.1), 1e-8));
    CHECK(vibrational_shift(seq(scaled), 0.01) == vibrational_shift(seq(e), 0.01));
  }
}

TEST_CASE("time reversal preserves mean velocity magnitude") {
  support::Gen g(22);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix e = support::random_matrix(g, support::pick(g, 3, 30), support::pick(g, 1, 8));
    Matrix rev(e.rows(), e.cols());
    for (std::size_t r = 0; r < e.rows(); ++r)
      for (std::size_t c = 0; c < e.cols(); ++c) rev(r, c) = e(e.rows() - 1 - r, c);
    CHECK(close_rel(mean_velocity_magnitude(kinematics(seq(rev))), mean_velocity_magnitude(kinematics(seq(e))), 1e-12));
  }
}

TEST_CASE("invariant signs and finiteness on random segments") {
  support::Gen g(23);
  for (int trial = 0; trial < 50; ++trial) {
    Segment s{"x", Label::genuine, random_wave(g, 800),
              seq(support::random_matrix(g, support::pick(g, 4, 40), support::pick(g, 1, 8), 10.0))};
    const auto p = physics_vector(s);
    for (double v : p.as_array()) CHECK(std::isfinite(v));
    CHECK(p.r_dyn >= 0.0);
    CHECK(p.mean_velocity_magnitude >= 0.0);
    CHECK(p.delta_f_v >= 0.0);
    CHECK(p.delta_f_r >= 0.0);
    CHECK(physics_vector(s) == p);
  }
}

TEST_CASE("constant embedding and constant waveform give the zero vector") {
  Segment s{"c", Label::genuine, Waveform{std::vector<float>(48000, 0.5f), 16000.0}, seq(Matrix(150, 16))};
  CHECK(physics_vector(s) == PhysicsVector{});
  Matrix e(150, 16);
  for (std::size_t r = 0; r < 150; ++r)
    for (std::size_t c = 0; c < 16; ++c) e(r, c) = 0.1 * double(c) - 0.3;
  s.embedding = seq(e);
  CHECK(physics_vector(s) == PhysicsVector{});
}

TEST_CASE("feature table round trip") {
  std::vector<FeatureRow> rows{{"b", Label::deepfake, {1.5, 0.02, 3.25, 12.0, 0.1, 1.0 / 3.0}},
                               {"a", Label::genuine, {}}};
  const auto csv = feature_table_csv(rows);
  CHECK(csv.substr(0, csv.find('\n')) ==
        "source_id,label,delta_f_t,delta_f_v,delta_f_r,r_dyn,mean_vel_mag,tf_variation");
  const auto back = parse_feature_table(csv);
  REQUIRE(back.size() == 2);
  CHECK(back[0].source_id == "b");
  CHECK(back[0].label == Label::deepfake);
  CHECK(back[0].features == rows[0].features);
  CHECK(back[1].features == PhysicsVector{});
}
