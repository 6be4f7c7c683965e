#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace physguard {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit statuses shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDataErrors = 1;
inline constexpr int kExitUsage = 2;

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = ".";
  std::size_t jobs = 1;
  bool verbose = false;

  // Inputs; which ones a command needs is listed in its description.
  std::filesystem::path manifest;
  std::filesystem::path features;
  std::filesystem::path fused;
  std::filesystem::path fusion;
  std::filesystem::path model;
  std::filesystem::path predictions;
};

// synth:    corpus config -> wav/, emb/, manifest.jsonl
// extract:  --manifest -> features.csv
// fuse:     --manifest --features [--fusion] -> fused.csv (+ fusion.qrf when fitting)
// train:    --fused -> model.mlp, train_loss.csv
// predict:  --model --fused -> predictions.jsonl
// metrics:  --predictions [--features] -> metrics.json, uncertainty.json (+ ecdf_*.csv, ks.json)
// pipeline: config -> every artifact above for one train/test split
// flsim:    scenario config -> rounds.jsonl, summary.json
// Each run also writes run_manifest.json. Returns the process exit status.
int run_command(const std::string& name, const CommandOptions& options);

}  // namespace physguard
