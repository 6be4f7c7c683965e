#include "physguard/federated.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "physguard/errors.hpp"
#include "physguard/fusion.hpp"
#include "physguard/mc_dropout.hpp"
#include "physguard/metrics.hpp"
#include "physguard/parallel.hpp"

namespace physguard {

std::string_view to_string(Behavior b) {
  switch (b) {
    case Behavior::honest: return "honest";
    case Behavior::gradient_poisoner: return "gradient_poisoner";
    case Behavior::calibration_attacker: return "calibration_attacker";
  }
  return "honest";
}

void ClientState::validate() const {
  if (x.rows() == 0) throw EmptyShard("client " + std::to_string(spec.id) + " has an empty shard");
  if (x.rows() != labels.size()) throw ShapeError("client shard: row/label count mismatch");
  if (spec.behavior == Behavior::gradient_poisoner && !(spec.strength >= 0.0))
    throw ConfigError("gradient poisoner strength (lambda) must be >= 0");
  if (spec.behavior == Behavior::calibration_attacker && !(spec.strength > 0.0))
    throw ConfigError("calibration attacker scale (gamma) must be > 0");
}

namespace {

std::vector<double> subtract(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

// Unit direction of `steps` full-batch descent steps on the target rows
// relabelled genuine, i.e. ascent on their log p_genuine.
std::vector<double> poison_direction(const ClientState& client, const DropoutMlp& global,
                                     const LocalConfig& cfg) {
  Matrix target(0, client.x.cols());
  for (std::size_t r = 0; r < client.x.rows(); ++r)
    if (client.labels[r] == kFake) target.append_row(client.x.row(r));
  if (target.rows() == 0) target = client.x;
  const std::vector<int> as_genuine(target.rows(), kGenuine);

  DropoutMlp model = global;
  std::vector<double> params = model.parameters();
  std::vector<double> grad;
  for (std::size_t s = 0; s < cfg.poison_steps; ++s) {
    loss_and_gradient(model, target, as_genuine, {1.0, 1.0}, nullptr, grad);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg.train.learning_rate * grad[i];
    model.set_parameters(params);
  }
  auto d = subtract(params, global.parameters());
  const double n = norm2(d);
  if (n > 0.0)
    for (double& v : d) v /= n;
  return d;
}

}  // namespace

std::vector<double> local_update(const ClientState& client, const DropoutMlp& global,
                                 const LocalConfig& cfg, std::uint64_t round_seed) {
  client.validate();
  DropoutMlp local = global;
  Rng rng = make_rng(round_seed, "client/train", client.spec.seed);
  train_epochs(local, client.x, client.labels, cfg.train, rng);

  switch (client.spec.behavior) {
    case Behavior::honest: break;
    case Behavior::gradient_poisoner: {
      if (client.spec.strength == 0.0) break;
      auto params = local.parameters();
      const auto d = poison_direction(client, global, cfg);
      for (std::size_t i = 0; i < params.size(); ++i) params[i] += client.spec.strength * d[i];
      local.set_parameters(params);
      break;
    }
    case Behavior::calibration_attacker: {
      auto& out = local.layers().back();
      for (double& w : out.weights) w *= client.spec.strength;
      for (double& b : out.bias) b *= client.spec.strength;
      break;
    }
  }
  return subtract(local.parameters(), global.parameters());
}

ProbeReport probe_client(std::size_t client_id, const DropoutMlp& local_model, const Matrix& probes,
                         std::size_t passes, std::uint64_t seed) {
  if (probes.rows() == 0) throw ShapeError("probe set must be non-empty");
  ProbeReport report{client_id, std::vector<double>(probes.rows()), 0.0, 0.0};
  for (std::size_t j = 0; j < probes.rows(); ++j)
    report.total_u[j] = mc_predict(local_model, probes.row(j), passes, substream(seed, "probe", j)).total_u;
  const auto n = static_cast<double>(probes.rows());
  report.mean_total_u = std::accumulate(report.total_u.begin(), report.total_u.end(), 0.0) / n;
  double var = 0.0;
  for (double u : report.total_u) var += (u - report.mean_total_u) * (u - report.mean_total_u);
  report.std_total_u = std::sqrt(var / n);
  return report;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<bool> mad_screen(std::span<const double> values, double tau) {
  if (values.size() < 3)
    throw TooFewClients("MAD screening needs at least 3 clients, got " + std::to_string(values.size()));
  if (!(tau > 0.0)) throw ConfigError("screen.tau must be > 0");
  const double m = median({values.begin(), values.end()});
  std::vector<double> dev(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) dev[i] = std::abs(values[i] - m);
  const double mad = median(dev);
  const double limit = mad < 1e-12 ? 1e-6 : tau * 1.4826 * mad;
  std::vector<bool> flagged(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) flagged[i] = dev[i] > limit;
  return flagged;
}

std::vector<bool> mad_screen(std::span<const ProbeReport> reports, const ScreenConfig& cfg) {
  std::vector<double> means, spreads;
  for (const auto& r : reports) {
    means.push_back(r.mean_total_u);
    spreads.push_back(r.std_total_u);
  }
  auto flagged = mad_screen(means, cfg.tau);
  if (cfg.screen_dispersion) {
    const auto by_spread = mad_screen(spreads, cfg.tau);
    for (std::size_t i = 0; i < flagged.size(); ++i) flagged[i] = flagged[i] || by_spread[i];
  }
  return flagged;
}

std::vector<double> aggregate(std::vector<WeightedDelta> accepted) {
  if (accepted.empty()) throw RoundAborted("no client update survived screening");
  std::sort(accepted.begin(), accepted.end(),
            [](const WeightedDelta& a, const WeightedDelta& b) { return a.client_id < b.client_id; });
  const std::size_t n = accepted.front().delta.size();
  double total = 0.0;
  for (const auto& a : accepted) {
    if (a.delta.size() != n) throw ShapeError("aggregate: delta length mismatch");
    if (!(a.weight > 0.0)) throw ShapeError("aggregate: weights must be positive");
    total += a.weight;
  }
  // Averaging offsets from the first delta keeps identical deltas exact.
  std::vector<double> out = accepted.front().delta;
  for (const auto& a : accepted) {
    const double w = a.weight / total;
    for (std::size_t i = 0; i < n; ++i) out[i] += w * (a.delta[i] - accepted.front().delta[i]);
  }
  return out;
}

void Scenario::validate() const {
  if (clients < 3) throw ConfigError("flsim.clients: MAD screening needs at least 3 clients");
  if (!shard_sizes.empty() && shard_sizes.size() != clients)
    throw ConfigError("flsim.shard_sizes: expected one entry per client");
  for (std::size_t c = 0; c < clients; ++c)
    if (shard_of(c) == 0) throw ConfigError("flsim.shard_size: shards must be non-empty");
  const std::size_t attackers = gradient_attackers + calibration_attackers;
  if (2 * attackers >= clients)
    throw ConfigError("flsim.attackers: attacker fraction must stay below 0.5 (" +
                      std::to_string(attackers) + " of " + std::to_string(clients) + ")");
  if (!(lambda >= 0.0)) throw ConfigError("flsim.lambda must be >= 0");
  if (!(gamma > 0.0)) throw ConfigError("flsim.gamma must be > 0");
  if (!(screen.tau > 0.0)) throw ConfigError("flsim.tau must be > 0");
  if (rounds == 0) throw ConfigError("flsim.rounds must be >= 1");
  if (probe_size == 0) throw ConfigError("flsim.probe_size must be >= 1");
  if (heldout_size < 2) throw ConfigError("flsim.heldout_size must be >= 2");
  if (mc_passes == 0) throw ConfigError("flsim.mc_passes must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("flsim.dropout must lie in [0, 1)");
  local.train.validate();
}

std::size_t Scenario::shard_of(std::size_t client) const {
  return shard_sizes.empty() ? shard_size : shard_sizes.at(client);
}

std::size_t Scenario::corpus_size() const {
  std::size_t n = probe_size + heldout_size;
  for (std::size_t c = 0; c < clients; ++c) n += shard_of(c);
  return n;
}

namespace {

SyntheticCorpusSpec sized_corpus(const Scenario& s) {
  SyntheticCorpusSpec spec = s.corpus;
  const std::size_t n = s.corpus_size();
  spec.n_genuine = (n + 1) / 2;
  spec.n_fake = n - spec.n_genuine;
  return spec;
}

}  // namespace

FeatureSet scenario_features(const Scenario& scenario) {
  scenario.validate();
  return synthetic_features(sized_corpus(scenario), {}, scenario.jobs);
}

SimulationResult run_simulation(const Scenario& scenario) {
  return run_simulation(scenario, scenario_features(scenario));
}

SimulationResult run_simulation(const Scenario& s, const FeatureSet& corpus) {
  s.validate();
  if (corpus.size() < s.corpus_size())
    throw ConfigError("flsim: corpus has " + std::to_string(corpus.size()) + " rows, scenario needs " +
                      std::to_string(s.corpus_size()));

  // Seeded assignment of corpus rows to probes, held-out set and shards.
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng perm = make_rng(s.seed, "flsim/partition");
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = std::min(i - 1, static_cast<std::size_t>(uniform01(perm) * static_cast<double>(i)));
    std::swap(order[i - 1], order[j]);
  }
  auto take = [&](std::size_t& cursor, std::size_t n) {
    std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                                  order.begin() + static_cast<std::ptrdiff_t>(cursor + n));
    cursor += n;
    return corpus.subset(rows);
  };
  std::size_t cursor = 0;
  const FeatureSet probes_raw = take(cursor, s.probe_size);
  const FeatureSet heldout_raw = take(cursor, s.heldout_size);

  // The aggregator fits the frozen fusion transform on the data it owns.
  Matrix public_rows = probes_raw.features;
  for (std::size_t r = 0; r < heldout_raw.size(); ++r) public_rows.append_row(heldout_raw.features.row(r));
  const FusionTransform fusion = fuse(public_rows).transform;
  const Matrix probes = fusion.apply(probes_raw.features);
  const Matrix heldout = fusion.apply(heldout_raw.features);

  std::vector<ClientState> clients(s.clients);
  const std::size_t first_attacker = s.clients - s.gradient_attackers - s.calibration_attackers;
  for (std::size_t c = 0; c < s.clients; ++c) {
    const FeatureSet shard = take(cursor, s.shard_of(c));
    ClientSpec spec{c, Behavior::honest, 0.0, c};
    if (c >= first_attacker) {
      const bool poisoner = c < first_attacker + s.gradient_attackers;
      spec.behavior = poisoner ? Behavior::gradient_poisoner : Behavior::calibration_attacker;
      spec.strength = poisoner ? s.lambda : s.gamma;
    }
    clients[c] = ClientState{spec, fusion.apply(shard.features), shard.labels};
  }

  std::vector<std::size_t> widths{fusion.dims()};
  widths.insert(widths.end(), s.hidden.begin(), s.hidden.end());
  widths.push_back(2);
  Rng init = make_rng(s.seed, "flsim/global-init");
  SimulationResult result{{}, DropoutMlp(widths, s.dropout_rate, init)};
  DropoutMlp& global = result.global;
  Matrix scaler_rows = probes;
  for (std::size_t r = 0; r < heldout.rows(); ++r) scaler_rows.append_row(heldout.row(r));
  global.fit_input_scaler(scaler_rows);

  for (std::size_t round = 0; round < s.rounds; ++round) {
    const std::uint64_t round_seed = substream(s.seed, "flsim/round", round);
    std::vector<std::vector<double>> deltas(s.clients);
    std::vector<ProbeReport> reports(s.clients);
    parallel_for(s.clients, s.jobs, [&](std::size_t c) {
      deltas[c] = local_update(clients[c], global, s.local, round_seed);
      DropoutMlp local = global;
      auto params = local.parameters();
      for (std::size_t i = 0; i < params.size(); ++i) params[i] += deltas[c][i];
      local.set_parameters(params);
      reports[c] = probe_client(c, local, probes, s.mc_passes, substream(round_seed, "probes"));
    });

    const std::vector<bool> flagged =
        s.screening ? mad_screen(reports, s.screen) : std::vector<bool>(s.clients, false);

    RoundOutcome outcome;
    outcome.round = round;
    std::vector<WeightedDelta> accepted;
    for (std::size_t c = 0; c < s.clients; ++c) {
      outcome.verdicts.push_back({c, clients[c].spec.behavior, flagged[c], reports[c].mean_total_u,
                                  reports[c].std_total_u});
      if (!flagged[c])
        accepted.push_back({c, static_cast<double>(clients[c].x.rows()), std::move(deltas[c])});
    }
    outcome.accepted = accepted.size();
    const auto update = aggregate(std::move(accepted));
    auto params = global.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) params[i] += update[i];
    global.set_parameters(params);

    const auto preds = mc_predict_batch(global, heldout, s.mc_passes, substream(round_seed, "heldout"), s.jobs);
    ScoreSet scores;
    for (std::size_t r = 0; r < preds.size(); ++r)
      (heldout_raw.labels[r] == kGenuine ? scores.genuine : scores.fake).push_back(preds[r].mean_p[kGenuine]);
    outcome.eer = eer(scores).eer;
    outcome.roc_auc = roc_auc(scores);
    outcome.ece = expected_calibration_error(preds, heldout_raw.labels);
    result.rounds.push_back(std::move(outcome));
  }
  return result;
}

FlagSummary summarize_flags(std::span<const RoundOutcome> rounds) {
  FlagSummary s;
  std::size_t positives = 0;
  for (const auto& r : rounds) {
    for (const auto& v : r.verdicts) {
      const bool attacker = v.behavior != Behavior::honest;
      positives += attacker;
      if (v.flagged) {
        ++s.total_flags;
        (attacker ? s.true_flags : s.false_flags) += 1;
      } else if (attacker) {
        ++s.missed;
      }
    }
  }
  if (s.total_flags > 0) s.precision = static_cast<double>(s.true_flags) / static_cast<double>(s.total_flags);
  if (positives > 0) s.recall = static_cast<double>(s.true_flags) / static_cast<double>(positives);
  return s;
}

std::string round_log_jsonl(std::span<const RoundOutcome> rounds) {
  std::string out;
  for (const auto& r : rounds) {
    nlohmann::ordered_json j;
    j["round"] = r.round;
    j["accepted"] = r.accepted;
    j["eer"] = r.eer;
    j["roc_auc"] = r.roc_auc;
    j["ece"] = r.ece;
    auto& clients = j["clients"] = nlohmann::ordered_json::array();
    for (const auto& v : r.verdicts) {
      nlohmann::ordered_json c;
      c["client_id"] = v.client_id;
      c["behavior"] = to_string(v.behavior);
      c["verdict"] = v.flagged ? "flagged" : "accepted";
      c["mean_total_u"] = v.mean_total_u;
      c["std_total_u"] = v.std_total_u;
      clients.push_back(std::move(c));
    }
    out += j.dump() + '\n';
  }
  return out;
}

}  // namespace physguard
