#include "physguard/mc_dropout.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "physguard/errors.hpp"
#include "physguard/parallel.hpp"

namespace physguard {

double entropy_bits(const std::array<double, 2>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

McPredictive decompose(std::vector<std::array<double, 2>> samples) {
  McPredictive out;
  if (samples.empty()) throw ShapeError("decompose: no samples");
  // Running means leave identical samples bit-for-bit unchanged, so a
  // deterministic network reports exactly zero epistemic uncertainty.
  std::array<double, 2> mean = samples.front();
  double aleatoric = entropy_bits(samples.front());
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    mean[0] += (samples[i][0] - mean[0]) / k;
    mean[1] += (samples[i][1] - mean[1]) / k;
    aleatoric += (entropy_bits(samples[i]) - aleatoric) / k;
  }
  out.samples = std::move(samples);
  out.mean_p = mean;
  out.total_u = entropy_bits(mean);
  out.aleatoric_u = aleatoric;
  out.epistemic_u = out.total_u - out.aleatoric_u;
  return out;
}

McPredictive mc_predict(const DropoutMlp& model, std::span<const double> x, std::size_t passes,
                        std::uint64_t seed) {
  if (passes == 0) throw ShapeError("mc_predict: need at least one pass");
  Rng rng(seed);
  std::vector<std::array<double, 2>> samples;
  samples.reserve(passes);
  if (model.dropout_rate() == 0.0) {
    samples.assign(passes, model.probabilities(x));
  } else {
    for (std::size_t i = 0; i < passes; ++i) {
      const auto masks = model.sample_masks(rng);
      samples.push_back(model.probabilities(x, &masks));
    }
  }
  return decompose(std::move(samples));
}

std::vector<McPredictive> mc_predict_batch(const DropoutMlp& model, const Matrix& x,
                                           std::size_t passes, std::uint64_t seed, std::size_t jobs) {
  std::vector<McPredictive> out(x.rows());
  parallel_for(x.rows(), jobs, [&](std::size_t i) {
    out[i] = mc_predict(model, x.row(i), passes, substream(seed, "mc", i));
  });
  return out;
}

double expected_calibration_error(std::span<const McPredictive> preds, std::span<const int> labels,
                                  std::size_t bins) {
  if (preds.empty()) throw ShapeError("expected_calibration_error: no predictions");
  if (preds.size() != labels.size()) throw ShapeError("expected_calibration_error: label count mismatch");
  std::vector<double> conf_sum(bins, 0.0), hits(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i].mean_p;
    const int predicted = p[kGenuine] >= p[kFake] ? kGenuine : kFake;
    const double conf = std::max(p[0], p[1]);
    const auto b = std::min(bins - 1, static_cast<std::size_t>(conf * static_cast<double>(bins)));
    conf_sum[b] += conf;
    hits[b] += predicted == labels[i] ? 1.0 : 0.0;
    ++count[b];
  }
  double ece = 0.0;
  const auto n = static_cast<double>(preds.size());
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const auto nb = static_cast<double>(count[b]);
    ece += (nb / n) * std::abs(hits[b] / nb - conf_sum[b] / nb);
  }
  return ece;
}

UncertaintySummary summarize_uncertainty(std::span<const double> genuine, std::span<const double> fake) {
  if (genuine.empty() || fake.empty())
    throw EmptyClass("uncertainty summary needs both genuine and deepfake predictions");
  UncertaintySummary s;
  s.n_genuine = genuine.size();
  s.n_fake = fake.size();
  for (double u : genuine) s.genuine_mean += u;
  for (double u : fake) s.fake_mean += u;
  s.genuine_mean /= static_cast<double>(s.n_genuine);
  s.fake_mean /= static_cast<double>(s.n_fake);
  s.relative_gap = s.genuine_mean > 0.0 ? (s.fake_mean - s.genuine_mean) / s.genuine_mean : 0.0;
  return s;
}

UncertaintySummary summarize_uncertainty(std::span<const McPredictive> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) throw ShapeError("summarize_uncertainty: label count mismatch");
  std::vector<double> g, f;
  for (std::size_t i = 0; i < preds.size(); ++i)
    (labels[i] == kGenuine ? g : f).push_back(preds[i].total_u);
  return summarize_uncertainty(g, f);
}

std::string predictions_jsonl(std::span<const PredictionRow> rows) {
  std::string out;
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["source_id"] = r.source_id;
    j["label"] = r.label;
    j["p_genuine"] = r.p_genuine;
    j["total_u"] = r.total_u;
    j["aleatoric_u"] = r.aleatoric_u;
    j["epistemic_u"] = r.epistemic_u;
    out += j.dump() + '\n';
  }
  return out;
}

std::vector<PredictionRow> parse_predictions_jsonl(const std::string& text) {
  std::vector<PredictionRow> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      rows.push_back({j.at("source_id").get<std::string>(), j.at("label").get<std::string>(),
                      j.at("p_genuine").get<double>(), j.at("total_u").get<double>(),
                      j.at("aleatoric_u").get<double>(), j.at("epistemic_u").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("predictions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace physguard
