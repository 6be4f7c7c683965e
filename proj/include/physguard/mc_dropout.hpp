#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "physguard/dropout_mlp.hpp"

namespace physguard {

inline constexpr std::size_t kDefaultMcPasses = 50;

// Monte-Carlo predictive distribution with its entropy decomposition (bits).
struct McPredictive {
  std::vector<std::array<double, 2>> samples;
  std::array<double, 2> mean_p{0.5, 0.5};
  double total_u = 0.0;      // H(mean_p)
  double aleatoric_u = 0.0;  // mean_i H(p_i)
  double epistemic_u = 0.0;  // total - aleatoric (mutual information)
};

double entropy_bits(const std::array<double, 2>& p);

// Averages the samples and splits the predictive entropy.
McPredictive decompose(std::vector<std::array<double, 2>> samples);

// N stochastic passes with dropout active; bit-reproducible for a given seed.
McPredictive mc_predict(const DropoutMlp& model, std::span<const double> x, std::size_t passes,
                        std::uint64_t seed);

// Row i uses substream (seed, i), so the result does not depend on `jobs`.
std::vector<McPredictive> mc_predict_batch(const DropoutMlp& model, const Matrix& x,
                                           std::size_t passes, std::uint64_t seed,
                                           std::size_t jobs = 1);

// Ten equal-width bins over max-probability confidence.
double expected_calibration_error(std::span<const McPredictive> preds, std::span<const int> labels,
                                  std::size_t bins = 10);

struct UncertaintySummary {
  double genuine_mean = 0.0;
  double fake_mean = 0.0;
  double relative_gap = 0.0;  // (fake - genuine) / genuine
  std::size_t n_genuine = 0;
  std::size_t n_fake = 0;
};

UncertaintySummary summarize_uncertainty(std::span<const double> genuine_total_u,
                                         std::span<const double> fake_total_u);
UncertaintySummary summarize_uncertainty(std::span<const McPredictive> preds,
                                         std::span<const int> labels);

struct PredictionRow {
  std::string source_id;
  std::string label;
  double p_genuine = 0.0;
  double total_u = 0.0;
  double aleatoric_u = 0.0;
  double epistemic_u = 0.0;
};

std::string predictions_jsonl(std::span<const PredictionRow> rows);
std::vector<PredictionRow> parse_predictions_jsonl(const std::string& text);

}  // namespace physguard
