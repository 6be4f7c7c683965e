#pragma once

#include <algorithm>
#include <cmath>

#include "physguard/dropout_mlp.hpp"
#include "support.hpp"

namespace oracle {

// Worst componentwise |analytic - central difference| / max(|analytic|, |fd|, 1e-4)
// for a random small network, batch, label set, class weights and (optionally)
// fixed dropout masks.
inline double gradient_check(support::Gen& g, bool with_masks) {
  using namespace physguard;
  std::vector<std::size_t> widths{support::pick(g, 2, 5)};
  const std::size_t hidden = support::pick(g, 1, 2);
  for (std::size_t h = 0; h < hidden; ++h) widths.push_back(support::pick(g, 2, 6));
  widths.push_back(2);
  Rng init(g());
  DropoutMlp model(widths, with_masks ? 0.3 : 0.0, init);
  for (auto& s : model.input_shift()) s = support::normal(g);
  for (auto& s : model.input_scale()) s = support::uniform(g, 0.5, 2.0);
  // Random biases keep pre-activations off the ReLU kink at exactly zero.
  auto random_params = model.parameters();
  for (double& p : random_params) p = support::normal(g, 0.7);
  model.set_parameters(random_params);

  const std::size_t n = support::pick(g, 1, 6);
  const Matrix x = support::random_matrix(g, n, widths.front());
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(support::pick(g, 0, 1));
  const std::array<double, 2> w{support::uniform(g, 0.5, 2.0), support::uniform(g, 0.5, 2.0)};
  std::vector<DropoutMasks> masks;
  Rng mask_rng(g());
  for (std::size_t r = 0; r < n; ++r) masks.push_back(model.sample_masks(mask_rng));
  const auto* m = with_masks ? &masks : nullptr;

  std::vector<double> analytic, scratch;
  loss_and_gradient(model, x, y, w, m, analytic);
  auto params = model.parameters();
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    model.set_parameters(params);
    const double up = loss_and_gradient(model, x, y, w, m, scratch);
    params[i] = keep - h;
    model.set_parameters(params);
    const double down = loss_and_gradient(model, x, y, w, m, scratch);
    params[i] = keep;
    model.set_parameters(params);
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(analytic[i] - fd) / std::max({std::abs(analytic[i]), std::abs(fd), 1e-4}));
  }
  return worst;
}

}  // namespace oracle
