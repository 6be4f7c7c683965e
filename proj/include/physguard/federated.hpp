#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "physguard/dataset.hpp"
#include "physguard/dropout_mlp.hpp"
#include "physguard/synthetic.hpp"

namespace physguard {

enum class Behavior { honest, gradient_poisoner, calibration_attacker };

std::string_view to_string(Behavior b);

struct ClientSpec {
  std::size_t id = 0;
  Behavior behavior = Behavior::honest;
  // lambda for gradient poisoners, gamma for calibration attackers.
  double strength = 0.0;
  // Drives local training randomness; clients sharing a seed and shard train identically.
  std::uint64_t seed = 0;
};

struct ClientState {
  ClientSpec spec;
  Matrix x;
  std::vector<int> labels;

  void validate() const;
};

struct LocalConfig {
  TrainConfig train{.epochs = 2, .learning_rate = 0.02, .momentum = 0.0, .batch_size = 16,
                    .class_weighting = false};
  // Gradient-ascent steps used by a poisoner to find its perturbation direction.
  std::size_t poison_steps = 10;
};

// Parameter delta a client submits for one round. Honest: local SGD from the
// global weights. Poisoner: honest delta + lambda * d, d the unit direction of a
// few full-batch steps that raise p_genuine on the client's deepfake samples.
// Calibration attacker: honest update with the output layer scaled by gamma.
std::vector<double> local_update(const ClientState& client, const DropoutMlp& global,
                                 const LocalConfig& cfg, std::uint64_t round_seed);

struct ProbeReport {
  std::size_t client_id = 0;
  std::vector<double> total_u;
  double mean_total_u = 0.0;
  double std_total_u = 0.0;
};

// MC-dropout uncertainty of one client model on the shared probe features.
// Probe j uses substream (seed, j) for every client so reports differ only
// through the models.
ProbeReport probe_client(std::size_t client_id, const DropoutMlp& local_model, const Matrix& probes,
                         std::size_t passes, std::uint64_t seed);

struct ScreenConfig {
  double tau = 3.0;
  bool screen_dispersion = false;
};

// Flags c iff |u_c - median| > tau * 1.4826 * MAD; with MAD < 1e-12, iff the
// deviation exceeds 1e-6. Throws TooFewClients below three values.
std::vector<bool> mad_screen(std::span<const double> values, double tau = 3.0);
std::vector<bool> mad_screen(std::span<const ProbeReport> reports, const ScreenConfig& cfg);

struct WeightedDelta {
  std::size_t client_id = 0;
  double weight = 0.0;  // shard size
  std::vector<double> delta;
};

// Weighted mean of the deltas, summed in client-id order. Throws RoundAborted
// when nothing is accepted.
std::vector<double> aggregate(std::vector<WeightedDelta> accepted);

struct Scenario {
  std::size_t clients = 10;
  std::vector<std::size_t> shard_sizes;  // empty: shard_size for everyone
  std::size_t shard_size = 100;
  std::size_t gradient_attackers = 0;
  double lambda = 5.0;
  std::size_t calibration_attackers = 0;
  double gamma = 10.0;
  ScreenConfig screen;
  bool screening = true;
  std::size_t rounds = 10;
  std::uint64_t seed = 1;
  std::size_t probe_size = 100;
  std::size_t heldout_size = 400;
  std::size_t mc_passes = 30;
  std::vector<std::size_t> hidden = {32, 16};
  double dropout_rate = 0.2;
  LocalConfig local;
  SyntheticCorpusSpec corpus;
  std::size_t jobs = 1;

  void validate() const;
  std::size_t shard_of(std::size_t client) const;
  std::size_t corpus_size() const;
};

struct ClientVerdict {
  std::size_t client_id = 0;
  Behavior behavior = Behavior::honest;
  bool flagged = false;
  double mean_total_u = 0.0;
  double std_total_u = 0.0;

  friend bool operator==(const ClientVerdict&, const ClientVerdict&) = default;
};

struct RoundOutcome {
  std::size_t round = 0;
  std::vector<ClientVerdict> verdicts;
  std::size_t accepted = 0;
  double eer = 0.0;
  double ece = 0.0;
  double roc_auc = 0.0;

  friend bool operator==(const RoundOutcome&, const RoundOutcome&) = default;
};

struct SimulationResult {
  std::vector<RoundOutcome> rounds;
  DropoutMlp global;
};

// Features for every participant, probe and held-out row of the scenario's
// synthetic corpus. Reusable across simulations that share the corpus spec.
FeatureSet scenario_features(const Scenario& scenario);

SimulationResult run_simulation(const Scenario& scenario);
SimulationResult run_simulation(const Scenario& scenario, const FeatureSet& corpus);

struct FlagSummary {
  std::size_t true_flags = 0;
  std::size_t false_flags = 0;
  std::size_t missed = 0;
  std::size_t total_flags = 0;
  std::optional<double> precision;  // undefined without flags
  std::optional<double> recall;     // undefined without attackers
};

FlagSummary summarize_flags(std::span<const RoundOutcome> rounds);

std::string round_log_jsonl(std::span<const RoundOutcome> rounds);

}  // namespace physguard
