#include "physguard/dropout_mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "binary_io.hpp"
#include "physguard/audio_io.hpp"
#include "physguard/errors.hpp"

namespace physguard {

namespace {

void check_widths(const std::vector<std::size_t>& widths) {
  if (widths.size() < 2 || widths.back() != 2)
    throw ShapeError("DropoutMlp: widths must run input -> ... -> 2");
  for (std::size_t w : widths)
    if (w == 0) throw ShapeError("DropoutMlp: zero-width layer");
}

// Activations kept for backpropagation.
struct ForwardTrace {
  std::vector<std::vector<double>> pre;   // pre-activation per layer
  std::vector<std::vector<double>> post;  // input to each layer (post[0] = standardized x)
};

}  // namespace

DropoutMlp::DropoutMlp(std::vector<std::size_t> widths, double dropout_rate)
    : widths_(std::move(widths)) {
  check_widths(widths_);
  set_dropout_rate(dropout_rate);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    DenseLayer layer{widths_[l], widths_[l + 1], {}, {}};
    layer.weights.assign(layer.in * layer.out, 0.0);
    layer.bias.assign(layer.out, 0.0);
    layers_.push_back(std::move(layer));
  }
  shift_.assign(widths_.front(), 0.0);
  scale_.assign(widths_.front(), 1.0);
}

DropoutMlp::DropoutMlp(std::vector<std::size_t> widths, double dropout_rate, Rng& rng)
    : DropoutMlp(std::move(widths), dropout_rate) {
  for (auto& layer : layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in));
    for (double& w : layer.weights) w = limit * (2.0 * uniform01(rng) - 1.0);
  }
}

void DropoutMlp::set_dropout_rate(double p) {
  if (!(p >= 0.0 && p < 1.0)) throw ShapeError("dropout rate must lie in [0, 1)");
  dropout_rate_ = p;
}

void DropoutMlp::fit_input_scaler(const Matrix& x) {
  if (x.cols() != input_dims()) throw ShapeError("fit_input_scaler: feature count mismatch");
  const std::size_t n = x.rows();
  if (n == 0) return;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += x(r, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (x(r, j) - mean) * (x(r, j) - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    shift_[j] = mean;
    scale_[j] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
}

std::size_t DropoutMlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<double> DropoutMlp::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const auto& l : layers_) {
    p.insert(p.end(), l.weights.begin(), l.weights.end());
    p.insert(p.end(), l.bias.begin(), l.bias.end());
  }
  return p;
}

void DropoutMlp::set_parameters(std::span<const double> params) {
  if (params.size() != parameter_count())
    throw ShapeError("set_parameters: expected " + std::to_string(parameter_count()) + " values");
  auto it = params.begin();
  for (auto& l : layers_) {
    std::copy_n(it, l.weights.size(), l.weights.begin());
    it += static_cast<std::ptrdiff_t>(l.weights.size());
    std::copy_n(it, l.bias.size(), l.bias.begin());
    it += static_cast<std::ptrdiff_t>(l.bias.size());
  }
}

DropoutMasks DropoutMlp::sample_masks(Rng& rng) const {
  DropoutMasks masks(layers_.size() - 1);
  const double keep_scale = 1.0 / (1.0 - dropout_rate_);
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    masks[l].resize(layers_[l].out);
    for (double& m : masks[l]) m = uniform01(rng) < dropout_rate_ ? 0.0 : keep_scale;
  }
  return masks;
}

namespace {

ForwardTrace forward(const DropoutMlp& model, std::span<const double> x, const DropoutMasks* masks) {
  if (x.size() != model.input_dims())
    throw ShapeError("DropoutMlp: expected " + std::to_string(model.input_dims()) +
                     " inputs, got " + std::to_string(x.size()));
  const auto& layers = model.layers();
  ForwardTrace t;
  t.post.emplace_back(x.size());
  for (std::size_t j = 0; j < x.size(); ++j)
    t.post[0][j] = (x[j] - model.input_shift()[j]) * model.input_scale()[j];
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const auto& in = t.post.back();
    std::vector<double> z(layer.bias);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* w = layer.weights.data() + o * layer.in;
      double s = 0.0;
      for (std::size_t i = 0; i < layer.in; ++i) s += w[i] * in[i];
      z[o] += s;
    }
    t.pre.push_back(z);
    if (l + 1 < layers.size()) {
      std::vector<double> h(layer.out);
      for (std::size_t o = 0; o < layer.out; ++o) {
        h[o] = z[o] > 0.0 ? z[o] : 0.0;
        if (masks) h[o] *= (*masks)[l][o];
      }
      t.post.push_back(std::move(h));
    }
  }
  return t;
}

}  // namespace

std::array<double, 2> DropoutMlp::logits(std::span<const double> x, const DropoutMasks* masks) const {
  const auto t = forward(*this, x, masks);
  return {t.pre.back()[0], t.pre.back()[1]};
}

std::array<double, 2> DropoutMlp::probabilities(std::span<const double> x,
                                                const DropoutMasks* masks) const {
  return softmax2(logits(x, masks));
}

std::array<double, 2> softmax2(const std::array<double, 2>& z) {
  const double m = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - m), e1 = std::exp(z[1] - m);
  const double s = e0 + e1;
  return {e0 / s, e1 / s};
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train: momentum must lie in [0, 1)");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw ConfigError("train: dropout_rate must lie in [0, 1)");
  for (std::size_t h : hidden)
    if (h == 0) throw ConfigError("train: hidden widths must be > 0");
}

std::array<double, 2> class_weights(std::span<const int> labels, bool weighting) {
  std::array<std::size_t, 2> counts{0, 0};
  for (int y : labels) {
    if (y != kGenuine && y != kFake) throw DegenerateLabels("labels must be 0 (genuine) or 1 (deepfake)");
    ++counts[static_cast<std::size_t>(y)];
  }
  if (counts[0] == 0 || counts[1] == 0)
    throw DegenerateLabels("training data must contain both genuine and deepfake samples");
  if (!weighting) return {1.0, 1.0};
  const auto n = static_cast<double>(labels.size());
  return {n / (2.0 * static_cast<double>(counts[0])), n / (2.0 * static_cast<double>(counts[1]))};
}

double loss_and_gradient(const DropoutMlp& model, const Matrix& x, std::span<const int> labels,
                         const std::array<double, 2>& weights, const std::vector<DropoutMasks>* masks,
                         std::vector<double>& gradient) {
  if (x.rows() != labels.size()) throw ShapeError("loss_and_gradient: row/label count mismatch");
  if (masks && masks->size() != x.rows()) throw ShapeError("loss_and_gradient: one mask set per row");
  const auto& layers = model.layers();
  gradient.assign(model.parameter_count(), 0.0);
  std::vector<std::size_t> offset(layers.size());
  for (std::size_t l = 0, o = 0; l < layers.size(); ++l) {
    offset[l] = o;
    o += layers[l].weights.size() + layers[l].bias.size();
  }

  const double inv_n = 1.0 / static_cast<double>(x.rows());
  double loss = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const DropoutMasks* m = masks ? &(*masks)[r] : nullptr;
    const ForwardTrace t = forward(model, x.row(r), m);
    const auto y = static_cast<std::size_t>(labels[r]);
    const auto& z = t.pre.back();
    const double mx = std::max(z[0], z[1]);
    const double lse = mx + std::log(std::exp(z[0] - mx) + std::exp(z[1] - mx));
    const double w = weights[y] * inv_n;
    loss += w * (lse - z[y]);

    auto p = softmax2({z[0], z[1]});
    std::vector<double> delta = {w * p[0], w * p[1]};
    delta[y] -= w;
    for (std::size_t l = layers.size(); l-- > 0;) {
      const auto& layer = layers[l];
      const auto& in = t.post[l];
      double* gw = gradient.data() + offset[l];
      double* gb = gw + layer.weights.size();
      for (std::size_t o = 0; o < layer.out; ++o) {
        gb[o] += delta[o];
        if (delta[o] == 0.0) continue;
        double* row = gw + o * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) row[i] += delta[o] * in[i];
      }
      if (l == 0) break;
      std::vector<double> prev(layer.in, 0.0);
      for (std::size_t o = 0; o < layer.out; ++o) {
        if (delta[o] == 0.0) continue;
        const double* wrow = layer.weights.data() + o * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) prev[i] += wrow[i] * delta[o];
      }
      const auto& pre = t.pre[l - 1];
      for (std::size_t i = 0; i < layer.in; ++i) {
        double g = pre[i] > 0.0 ? prev[i] : 0.0;
        if (m) g *= (*m)[l - 1][i];
        prev[i] = g;
      }
      delta = std::move(prev);
    }
  }
  return loss;
}

std::vector<double> train_epochs(DropoutMlp& model, const Matrix& x, std::span<const int> labels,
                                 const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  if (x.rows() != labels.size()) throw ShapeError("train: row/label count mismatch");
  if (x.rows() == 0) throw DegenerateLabels("train: no samples");
  const auto weights = class_weights(labels, cfg.class_weighting);

  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> params = model.parameters();
  std::vector<double> velocity(params.size(), 0.0);
  std::vector<double> grad;
  std::vector<double> history;
  history.reserve(cfg.epochs);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with our own index draw keeps shuffles library-independent.
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
      std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      Matrix xb(end - start, x.cols());
      std::vector<int> yb(end - start);
      std::vector<DropoutMasks> masks(end - start);
      for (std::size_t i = start; i < end; ++i) {
        std::copy(x.row(order[i]).begin(), x.row(order[i]).end(), xb.row(i - start).begin());
        yb[i - start] = labels[order[i]];
        masks[i - start] = model.sample_masks(rng);
      }
      epoch_loss += loss_and_gradient(model, xb, yb, weights, &masks, grad);
      ++batches;
      for (std::size_t p = 0; p < params.size(); ++p) {
        velocity[p] = cfg.momentum * velocity[p] - cfg.learning_rate * grad[p];
        params[p] += velocity[p];
      }
      model.set_parameters(params);
    }
    history.push_back(epoch_loss / static_cast<double>(batches));
  }
  return history;
}

TrainResult train(const Matrix& x, std::span<const int> labels, const TrainConfig& cfg) {
  cfg.validate();
  class_weights(labels, cfg.class_weighting);
  std::vector<std::size_t> widths{x.cols()};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(2);
  Rng init = make_rng(cfg.seed, "mlp/init");
  TrainResult result{DropoutMlp(widths, cfg.dropout_rate, init), {}};
  result.model.fit_input_scaler(x);
  Rng rng = make_rng(cfg.seed, "mlp/sgd");
  result.epoch_loss = train_epochs(result.model, x, labels, cfg, rng);
  return result;
}

double accuracy(const DropoutMlp& model, const Matrix& x, std::span<const int> labels) {
  if (x.rows() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto p = model.probabilities(x.row(r));
    const int predicted = p[kGenuine] >= p[kFake] ? kGenuine : kFake;
    correct += predicted == labels[r];
  }
  return static_cast<double>(correct) / static_cast<double>(x.rows());
}

void save_model(const std::filesystem::path& path, const DropoutMlp& model) {
  std::ostringstream out(std::ios::binary);
  out.write("MLP1", 4);
  detail::put_u32(out, static_cast<std::uint32_t>(model.layers().size()));
  for (std::size_t w : model.widths()) detail::put_u32(out, static_cast<std::uint32_t>(w));
  detail::put_f32(out, static_cast<float>(model.dropout_rate()));
  for (double v : model.input_shift()) detail::put_f32(out, static_cast<float>(v));
  for (double v : model.input_scale()) detail::put_f32(out, static_cast<float>(v));
  for (const auto& l : model.layers()) {
    for (double v : l.weights) detail::put_f32(out, static_cast<float>(v));
    for (double v : l.bias) detail::put_f32(out, static_cast<float>(v));
  }
  write_file_atomic(path, out.str());
}

DropoutMlp load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  const std::string what = "model " + path.string();
  detail::expect_magic(in, "MLP1", what);
  const std::uint32_t layers = detail::get_u32(in, what);
  if (layers == 0 || layers > 64) throw FormatError(what + ": implausible layer count");
  std::vector<std::size_t> widths(layers + 1);
  for (auto& w : widths) w = detail::get_u32(in, what);
  const float dropout = detail::get_f32(in, what);
  DropoutMlp model;
  try {
    model = DropoutMlp(widths, dropout);
  } catch (const ShapeError& e) {
    throw FormatError(what + ": " + e.what());
  }
  for (double& v : model.input_shift()) v = detail::get_f32(in, what);
  for (double& v : model.input_scale()) v = detail::get_f32(in, what);
  for (auto& l : model.layers()) {
    for (double& v : l.weights) v = detail::get_f32(in, what);
    for (double& v : l.bias) v = detail::get_f32(in, what);
  }
  return model;
}

}  // namespace physguard
