#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "physguard/matrix.hpp"
#include "physguard/rng.hpp"

namespace physguard {

// Class indices of the two-way head; probabilities are ordered the same way.
inline constexpr int kGenuine = 0;
inline constexpr int kFake = 1;

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Per-sample dropout masks, one per hidden layer. Entries are 0 or 1/(1-p).
using DropoutMasks = std::vector<std::vector<double>>;

// Feed-forward classifier: standardized input -> [ReLU -> dropout]* -> 2 logits.
class DropoutMlp {
 public:
  DropoutMlp() = default;
  // He-uniform initialization from `rng`. widths = {input, hidden..., 2}.
  DropoutMlp(std::vector<std::size_t> widths, double dropout_rate, Rng& rng);
  // Zero-initialized, used when loading.
  DropoutMlp(std::vector<std::size_t> widths, double dropout_rate);

  const std::vector<std::size_t>& widths() const noexcept { return widths_; }
  std::size_t input_dims() const noexcept { return widths_.front(); }
  double dropout_rate() const noexcept { return dropout_rate_; }
  void set_dropout_rate(double p);

  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  // Standardization applied before the first layer: (x - shift) * scale.
  std::vector<double>& input_shift() noexcept { return shift_; }
  std::vector<double>& input_scale() noexcept { return scale_; }
  const std::vector<double>& input_shift() const noexcept { return shift_; }
  const std::vector<double>& input_scale() const noexcept { return scale_; }
  void fit_input_scaler(const Matrix& x);

  // Flattened trainable parameters: per layer, weights then bias.
  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);

  // masks == nullptr runs the deterministic network.
  std::array<double, 2> logits(std::span<const double> x, const DropoutMasks* masks = nullptr) const;
  std::array<double, 2> probabilities(std::span<const double> x,
                                      const DropoutMasks* masks = nullptr) const;

  DropoutMasks sample_masks(Rng& rng) const;

  friend bool operator==(const DropoutMlp&, const DropoutMlp&) = default;

 private:
  std::vector<std::size_t> widths_;
  double dropout_rate_ = 0.0;
  std::vector<DenseLayer> layers_;
  std::vector<double> shift_;
  std::vector<double> scale_;
};

std::array<double, 2> softmax2(const std::array<double, 2>& logits);

struct TrainConfig {
  std::size_t epochs = 200;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  double dropout_rate = 0.2;
  bool class_weighting = true;
  std::vector<std::size_t> hidden = {64, 32};

  void validate() const;
};

// n / (2 n_c) per class when weighting, else 1. Throws DegenerateLabels when a
// class is absent.
std::array<double, 2> class_weights(std::span<const int> labels, bool weighting);

// Mean class-weighted cross-entropy over the rows of x and its gradient with
// respect to parameters(). masks, when given, holds one entry per row.
double loss_and_gradient(const DropoutMlp& model, const Matrix& x, std::span<const int> labels,
                         const std::array<double, 2>& weights, const std::vector<DropoutMasks>* masks,
                         std::vector<double>& gradient);

struct TrainResult {
  DropoutMlp model;
  std::vector<double> epoch_loss;  // mean mini-batch loss per epoch
};

// Initializes, fits the input scaler, and trains. Deterministic given cfg.seed.
TrainResult train(const Matrix& x, std::span<const int> labels, const TrainConfig& cfg);

// Continues training an existing model in place (scaler untouched). Returns
// per-epoch losses.
std::vector<double> train_epochs(DropoutMlp& model, const Matrix& x, std::span<const int> labels,
                                 const TrainConfig& cfg, Rng& rng);

double accuracy(const DropoutMlp& model, const Matrix& x, std::span<const int> labels);

// "MLP1", u32 layer count, u32 widths, f32 dropout, f32 input shift and scale,
// then each layer's weights (row-major) and bias, all little-endian.
void save_model(const std::filesystem::path& path, const DropoutMlp& model);
DropoutMlp load_model(const std::filesystem::path& path);

}  // namespace physguard
