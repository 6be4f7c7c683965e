#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "physguard/dropout_mlp.hpp"
#include "physguard/federated.hpp"
#include "physguard/physics.hpp"
#include "physguard/synthetic.hpp"

namespace physguard {

// INI-style key-value configuration:
//
//   [corpus]
//   n_genuine = 500
//
// Getters take "section.key" and throw ConfigError naming the field when a
// value does not parse.
class Config {
 public:
  Config() = default;
  static Config load(const std::filesystem::path& path);
  static Config parse(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::size_t> get_size_list(const std::string& key,
                                         const std::vector<std::size_t>& fallback) const;

  // Rejects sections or keys outside `schema` (section -> allowed keys).
  void check_known(const std::map<std::string, std::set<std::string>>& schema) const;

 private:
  boost::property_tree::ptree tree_;
};

// Every section and key the tools understand.
const std::map<std::string, std::set<std::string>>& config_schema();

// The single run seed; module seeds are derived from it by name.
std::uint64_t run_seed(const Config& config);

PhysicsConfig physics_config(const Config& config);
SyntheticCorpusSpec corpus_spec(const Config& config, std::uint64_t seed);
TrainConfig train_config(const Config& config, std::uint64_t seed);
Scenario scenario_config(const Config& config, std::uint64_t seed);

}  // namespace physguard
