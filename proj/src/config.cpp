#include "physguard/config.hpp"

#include <charconv>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

#include "physguard/errors.hpp"
#include "physguard/rng.hpp"

namespace physguard {

namespace pt = boost::property_tree;

Config Config::load(const std::filesystem::path& path) {
  Config c;
  try {
    pt::read_ini(path.string(), c.tree_);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }
  return c;
}

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream in(text);
  try {
    pt::read_ini(in, c.tree_);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config: " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  return c;
}

bool Config::has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return tree_.get<std::string>(key, fallback);
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text, const char* kind) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  auto [p, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || p != last)
    throw ConfigError(key + ": expected " + kind + ", got '" + text + "'");
  return value;
}

}  // namespace

double Config::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  return parse_number<double>(key, get_string(key, ""), "a number");
}

std::size_t Config::get_size(const std::string& key, std::size_t fallback) const {
  if (!has(key)) return fallback;
  return parse_number<std::size_t>(key, get_string(key, ""), "a non-negative integer");
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  return parse_number<std::uint64_t>(key, get_string(key, ""), "an unsigned 64-bit integer");
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get_string(key, "");
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::vector<std::size_t> Config::get_size_list(const std::string& key,
                                               const std::vector<std::size_t>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<std::size_t> out;
  std::stringstream ss(get_string(key, ""));
  for (std::string item; std::getline(ss, item, ',');) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError(key + ": empty list element");
    out.push_back(parse_number<std::size_t>(key, item.substr(b, e - b + 1), "a list of integers"));
  }
  return out;
}

void Config::check_known(const std::map<std::string, std::set<std::string>>& schema) const {
  for (const auto& [section, body] : tree_) {
    const auto it = schema.find(section);
    if (it == schema.end() || body.empty())
      throw ConfigError(section + ": unknown section");
    for (const auto& [key, value] : body)
      if (!it->second.contains(key)) throw ConfigError(section + "." + key + ": unknown key");
  }
}

const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema = {
      {"run", {"seed"}},
      {"input", {"manifest"}},
      {"corpus",
       {"n_genuine", "n_fake", "dims", "length", "frame_rate", "velocity_scale_fake", "smoothness",
        "step_sigma", "speaker_sigma", "envelope_depth", "compression_genuine", "jitter_genuine",
        "compression_fake", "jitter_fake"}},
      {"physics", {"alpha", "beta"}},
      {"pipeline", {"train_fraction"}},
      {"train",
       {"epochs", "learning_rate", "momentum", "batch_size", "dropout", "class_weighting", "hidden"}},
      {"mc", {"passes"}},
      {"flsim",
       {"clients", "shard_size", "shard_sizes", "gradient_attackers", "lambda", "calibration_attackers",
        "gamma", "tau", "screen_dispersion", "screening", "rounds", "probe_size", "heldout_size",
        "mc_passes", "hidden", "dropout", "local_epochs", "local_learning_rate", "local_batch_size",
        "poison_steps", "corpus_seed", "arms"}},
  };
  return schema;
}

std::uint64_t run_seed(const Config& config) { return config.get_u64("run.seed", 1); }

PhysicsConfig physics_config(const Config& c) {
  PhysicsConfig p;
  p.alpha = c.get_double("physics.alpha", p.alpha);
  p.beta = c.get_double("physics.beta", p.beta);
  if (!(p.alpha > 0.0)) throw ConfigError("physics.alpha must be > 0");
  if (!(p.beta > 0.0)) throw ConfigError("physics.beta must be > 0");
  return p;
}

SyntheticCorpusSpec corpus_spec(const Config& c, std::uint64_t seed) {
  SyntheticCorpusSpec s;
  s.seed = substream(seed, "corpus");
  s.n_genuine = c.get_size("corpus.n_genuine", s.n_genuine);
  s.n_fake = c.get_size("corpus.n_fake", s.n_fake);
  s.dims = c.get_size("corpus.dims", s.dims);
  s.length = c.get_size("corpus.length", s.length);
  s.frame_rate = c.get_double("corpus.frame_rate", s.frame_rate);
  s.velocity_scale_fake = c.get_double("corpus.velocity_scale_fake", s.velocity_scale_fake);
  s.smoothness = c.get_double("corpus.smoothness", s.smoothness);
  s.step_sigma = c.get_double("corpus.step_sigma", s.step_sigma);
  s.speaker_sigma = c.get_double("corpus.speaker_sigma", s.speaker_sigma);
  s.envelope_depth = c.get_double("corpus.envelope_depth", s.envelope_depth);
  s.compression_genuine = c.get_double("corpus.compression_genuine", s.compression_genuine);
  s.jitter_genuine = c.get_double("corpus.jitter_genuine", s.jitter_genuine);
  s.compression_fake = c.get_double("corpus.compression_fake", s.compression_fake);
  s.jitter_fake = c.get_double("corpus.jitter_fake", s.jitter_fake);
  s.validate();
  return s;
}

TrainConfig train_config(const Config& c, std::uint64_t seed) {
  TrainConfig t;
  t.seed = substream(seed, "train");
  t.epochs = c.get_size("train.epochs", 100);
  t.learning_rate = c.get_double("train.learning_rate", t.learning_rate);
  t.momentum = c.get_double("train.momentum", t.momentum);
  t.batch_size = c.get_size("train.batch_size", t.batch_size);
  t.dropout_rate = c.get_double("train.dropout", t.dropout_rate);
  t.class_weighting = c.get_bool("train.class_weighting", t.class_weighting);
  t.hidden = c.get_size_list("train.hidden", t.hidden);
  t.validate();
  return t;
}

Scenario scenario_config(const Config& c, std::uint64_t seed) {
  Scenario s;
  s.seed = substream(seed, "flsim");
  s.clients = c.get_size("flsim.clients", s.clients);
  s.shard_size = c.get_size("flsim.shard_size", s.shard_size);
  s.shard_sizes = c.get_size_list("flsim.shard_sizes", {});
  s.gradient_attackers = c.get_size("flsim.gradient_attackers", s.gradient_attackers);
  s.lambda = c.get_double("flsim.lambda", s.lambda);
  s.calibration_attackers = c.get_size("flsim.calibration_attackers", s.calibration_attackers);
  s.gamma = c.get_double("flsim.gamma", s.gamma);
  s.screen.tau = c.get_double("flsim.tau", s.screen.tau);
  s.screen.screen_dispersion = c.get_bool("flsim.screen_dispersion", s.screen.screen_dispersion);
  s.screening = c.get_bool("flsim.screening", s.screening);
  s.rounds = c.get_size("flsim.rounds", s.rounds);
  s.probe_size = c.get_size("flsim.probe_size", s.probe_size);
  s.heldout_size = c.get_size("flsim.heldout_size", s.heldout_size);
  s.mc_passes = c.get_size("flsim.mc_passes", s.mc_passes);
  s.hidden = c.get_size_list("flsim.hidden", s.hidden);
  s.dropout_rate = c.get_double("flsim.dropout", s.dropout_rate);
  s.local.train.epochs = c.get_size("flsim.local_epochs", s.local.train.epochs);
  s.local.train.learning_rate = c.get_double("flsim.local_learning_rate", s.local.train.learning_rate);
  s.local.train.batch_size = c.get_size("flsim.local_batch_size", s.local.train.batch_size);
  s.local.poison_steps = c.get_size("flsim.poison_steps", s.local.poison_steps);
  s.corpus = corpus_spec(c, seed);
  s.corpus.seed = c.get_u64("flsim.corpus_seed", s.corpus.seed);
  s.validate();
  return s;
}

}  // namespace physguard
