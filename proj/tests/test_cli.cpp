#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "physguard/audio_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& scratch() {
  static const fs::path root = [] {
    auto p = fs::temp_directory_path() / ("physguard_cli_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

struct Result {
  int status = -1;
  std::string output;
};

// Runs the tool with `args`, capturing stdout and stderr together.
Result cli(const std::string& args) {
  static int counter = 0;
  const fs::path log = scratch() / ("log_" + std::to_string(counter++) + ".txt");
  const std::string cmd = std::string("\"") + PHYSGUARD_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  Result r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// Every regular file below `dir` except run manifests, keyed by relative path.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "run_manifest.json")
      out[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
  return out;
}

json run_manifest(const fs::path& dir) { return json::parse(slurp(dir / "run_manifest.json")); }

const char* kSmallCorpus =
    "[run]\nseed = 3\n"
    "[corpus]\nn_genuine = 50\nn_fake = 50\n";

const char* kSmallPipeline =
    "[run]\nseed = 4\n"
    "[corpus]\nn_genuine = 100\nn_fake = 100\n"
    "[train]\nepochs = 20\n"
    "[mc]\npasses = 10\n";

const char* kSmallFlsim =
    "[run]\nseed = 5\n"
    "[flsim]\nclients = 4\nshard_size = 30\nrounds = 2\nprobe_size = 16\nheldout_size = 40\n"
    "mc_passes = 6\nhidden = 8\n";

// A synthetic corpus of 100 segments, written once and shared read-only.
const fs::path& corpus_dir() {
  static const fs::path dir = [] {
    const auto cfg = write_text(scratch() / "corpus.ini", kSmallCorpus);
    const auto out = scratch() / "corpus";
    const auto r = cli("--config " + q(cfg) + " --out " + q(out) + " synth");
    REQUIRE(r.status == 0);
    return out;
  }();
  return dir;
}

}  // namespace

TEST_CASE("version, usage errors and unknown subcommands") {
  const auto v = cli("--version");
  CHECK(v.status == 0);
  CHECK(v.output.find("0.1.0") != std::string::npos);
  CHECK(cli("").status == 2);
  CHECK(cli("frobnicate").status == 2);
  CHECK(cli("extract").status == 2);
  CHECK(cli("--config /nonexistent/x.ini pipeline").status == 2);
  CHECK(cli("--jobs 0 --out " + q(scratch() / "jobs0") + " synth").status == 2);
  const auto help = cli("--help");
  CHECK(help.status == 0);
  for (const char* sub : {"synth", "extract", "fuse", "train", "predict", "metrics", "pipeline", "flsim"})
    CHECK(help.output.find(sub) != std::string::npos);
}

TEST_CASE("malformed configs exit 2 with the field named") {
  const auto bad_value = write_text(scratch() / "bad_value.ini", "[train]\nepochs = many\n");
  auto r = cli("--config " + q(bad_value) + " --out " + q(scratch() / "bad1") + " pipeline");
  CHECK(r.status == 2);
  CHECK(r.output.find("train.epochs") != std::string::npos);

  const auto bad_key = write_text(scratch() / "bad_key.ini", "[flsim]\nclient = 4\n");
  r = cli("--config " + q(bad_key) + " --out " + q(scratch() / "bad2") + " flsim");
  CHECK(r.status == 2);
  CHECK(r.output.find("flsim.client") != std::string::npos);

  const auto majority = write_text(scratch() / "majority.ini", "[flsim]\nclients = 4\ngradient_attackers = 2\n");
  r = cli("--config " + q(majority) + " --out " + q(scratch() / "bad3") + " flsim");
  CHECK(r.status == 2);
  CHECK(r.output.find("flsim.attackers") != std::string::npos);

  const auto arms = write_text(scratch() / "arms.ini", "[flsim]\narms = all\n");
  r = cli("--config " + q(arms) + " --out " + q(scratch() / "bad4") + " flsim");
  CHECK(r.status == 2);
  CHECK(r.output.find("flsim.arms") != std::string::npos);
}

TEST_CASE("extract on an empty manifest writes only the header") {
  const auto manifest = write_text(scratch() / "empty" / "manifest.jsonl", "");
  const auto out = scratch() / "empty_out";
  const auto r = cli("--out " + q(out) + " extract --manifest " + q(manifest));
  CHECK(r.status == 0);
  const auto csv = slurp(out / "features.csv");
  CHECK(line_count(csv) == 1);
  CHECK(csv.starts_with("source_id,label,"));
  CHECK(run_manifest(out).at("exit_status") == 0);
}

TEST_CASE("synth and extract on 100 segments are reproducible") {
  const auto manifest = corpus_dir() / "manifest.jsonl";
  CHECK(line_count(slurp(manifest)) == 100);
  const auto a = scratch() / "extract_a", b = scratch() / "extract_b";
  CHECK(cli("--out " + q(a) + " extract --manifest " + q(manifest)).status == 0);
  CHECK(cli("--out " + q(b) + " --jobs 3 extract --manifest " + q(manifest)).status == 0);
  const auto csv = slurp(a / "features.csv");
  CHECK(line_count(csv) == 101);
  CHECK(csv == slurp(b / "features.csv"));

  const auto m = run_manifest(a);
  CHECK(m.at("command") == "extract");
  CHECK(m.at("exit_status") == 0);
  CHECK(m.at("errors").empty());
  for (const char* key : {"tool_version", "seed", "config_path", "resolved_config", "inputs", "outputs",
                          "wall_clock_seconds"})
    CHECK(m.contains(key));
}

TEST_CASE("extract keeps going past an unreadable file") {
  const auto src = corpus_dir() / "manifest.jsonl";
  auto records = physguard::read_manifest(src);
  REQUIRE(records.size() == 100);
  records[17].wav_path = scratch() / "missing" / "nothing.wav";
  const auto manifest = scratch() / "partial" / "manifest.jsonl";
  fs::create_directories(manifest.parent_path());
  physguard::write_manifest(manifest, records);

  const auto out = scratch() / "partial_out";
  const auto r = cli("--out " + q(out) + " extract --manifest " + q(manifest));
  CHECK(r.status == 1);
  CHECK(line_count(slurp(out / "features.csv")) == 100);
  CHECK(slurp(out / "features.csv").find(records[17].source_id) == std::string::npos);
  const auto m = run_manifest(out);
  CHECK(m.at("exit_status") == 1);
  REQUIRE(m.at("errors").size() == 1);
  CHECK(m.at("errors")[0].get<std::string>().find(records[17].source_id) != std::string::npos);
}

TEST_CASE("the staged commands chain from synth to metrics without touching their inputs") {
  const auto manifest = corpus_dir() / "manifest.jsonl";
  const auto before = tree(corpus_dir());
  const auto dir = scratch() / "chain";
  REQUIRE(cli("--out " + q(dir) + " extract --manifest " + q(manifest)).status == 0);
  REQUIRE(cli("--out " + q(dir) + " fuse --manifest " + q(manifest) + " --features " + q(dir / "features.csv")).status == 0);
  const auto cfg = write_text(scratch() / "chain.ini", "[train]\nepochs = 15\n[mc]\npasses = 8\n");
  REQUIRE(cli("--config " + q(cfg) + " --out " + q(dir) + " train --fused " + q(dir / "fused.csv")).status == 0);
  REQUIRE(cli("--config " + q(cfg) + " --out " + q(dir) + " predict --model " + q(dir / "model.mlp") +
              " --fused " + q(dir / "fused.csv")).status == 0);
  REQUIRE(cli("--out " + q(dir) + " metrics --predictions " + q(dir / "predictions.jsonl") + " --features " +
              q(dir / "features.csv")).status == 0);
  CHECK(tree(corpus_dir()) == before);

  for (const char* f : {"features.csv", "fused.csv", "fusion.qrf", "model.mlp", "train_loss.csv",
                        "predictions.jsonl", "metrics.json", "uncertainty.json", "ks.json",
                        "ecdf_mean_vel_mag.csv", "ecdf_tf_variation.csv"})
    CHECK_MESSAGE(fs::exists(dir / f), f);
  CHECK(line_count(slurp(dir / "fused.csv")) == 101);
  CHECK(line_count(slurp(dir / "predictions.jsonl")) == 100);
  CHECK(line_count(slurp(dir / "train_loss.csv")) == 16);
  const auto metrics = json::parse(slurp(dir / "metrics.json"));
  CHECK(metrics.at("n_genuine") == 50);
  CHECK(metrics.at("n_fake") == 50);
  const auto ks = json::parse(slurp(dir / "ks.json"));
  CHECK(ks.size() == 6);

  // Applying the saved transform reproduces the fitted output.
  const auto again = scratch() / "chain_apply";
  REQUIRE(cli("--out " + q(again) + " fuse --manifest " + q(manifest) + " --features " + q(dir / "features.csv") +
              " --fusion " + q(dir / "fusion.qrf")).status == 0);
  CHECK(slurp(again / "fused.csv") == slurp(dir / "fused.csv"));
  CHECK_FALSE(fs::exists(again / "fusion.qrf"));
}

TEST_CASE("pipeline produces every artifact and a parseable report") {
  const auto cfg = write_text(scratch() / "pipeline.ini", kSmallPipeline);
  const auto out = scratch() / "pipeline";
  const auto r = cli("--config " + q(cfg) + " --out " + q(out) + " pipeline");
  REQUIRE(r.status == 0);
  for (const char* f : {"features.csv", "fusion.qrf", "model.mlp", "predictions.jsonl", "metrics.json",
                        "uncertainty.json", "ks.json", "ecdf_mean_vel_mag.csv", "ecdf_tf_variation.csv",
                        "run_manifest.json"})
    CHECK_MESSAGE(fs::exists(out / f), f);
  const auto metrics = json::parse(slurp(out / "metrics.json"));
  for (const char* k : {"eer", "eer_threshold", "roc_auc", "min_tdcf", "n_genuine", "n_fake"})
    CHECK(metrics.contains(k));
  CHECK(metrics.at("n_genuine").get<int>() + metrics.at("n_fake").get<int>() == 60);
  const auto unc = json::parse(slurp(out / "uncertainty.json"));
  CHECK(unc.contains("ece"));
  CHECK(run_manifest(out).at("seed") == 4);
}

TEST_CASE("dropout 0 gives zero epistemic uncertainty in every prediction") {
  const auto cfg = write_text(scratch() / "nodrop.ini",
                              "[run]\nseed = 4\n[corpus]\nn_genuine = 60\nn_fake = 60\n"
                              "[train]\nepochs = 10\ndropout = 0\n[mc]\npasses = 10\n");
  const auto out = scratch() / "nodrop";
  REQUIRE(cli("--config " + q(cfg) + " --out " + q(out) + " pipeline").status == 0);
  std::istringstream in(slurp(out / "predictions.jsonl"));
  std::size_t n = 0;
  for (std::string line; std::getline(in, line); ++n) CHECK(json::parse(line).at("epistemic_u") == 0.0);
  CHECK(n == 36);
}

TEST_CASE("seed flag overrides the config seed") {
  const auto cfg = write_text(scratch() / "seeded.ini", kSmallCorpus);
  const auto a = scratch() / "seed_a", b = scratch() / "seed_b", c = scratch() / "seed_c";
  REQUIRE(cli("--config " + q(cfg) + " --out " + q(a) + " synth").status == 0);
  REQUIRE(cli("--config " + q(cfg) + " --seed 3 --out " + q(b) + " synth").status == 0);
  REQUIRE(cli("--config " + q(cfg) + " --seed 8 --out " + q(c) + " synth").status == 0);
  CHECK(tree(a) == tree(b));
  CHECK(tree(a) != tree(c));
  CHECK(run_manifest(c).at("seed") == 8);
}

TEST_CASE("flsim without attackers leaves recall undefined") {
  const auto cfg = write_text(scratch() / "fl_clean.ini", kSmallFlsim);
  const auto out = scratch() / "fl_clean";
  REQUIRE(cli("--config " + q(cfg) + " --out " + q(out) + " flsim").status == 0);
  const auto s = json::parse(slurp(out / "summary.json"));
  CHECK(s.at("flags").at("recall").is_null());
  CHECK(s.at("flags").contains("total_flags"));
  CHECK(s.contains("final_eer_screened"));
  CHECK_FALSE(s.contains("final_eer_unscreened"));
  CHECK(line_count(slurp(out / "rounds.jsonl")) == 2);
}

TEST_CASE("flsim with both arms reports screened and unscreened results") {
  const auto cfg = write_text(scratch() / "fl_attack.ini",
                              std::string(kSmallFlsim) + "gradient_attackers = 1\narms = both\n");
  const auto out = scratch() / "fl_attack";
  REQUIRE(cli("--config " + q(cfg) + " --out " + q(out) + " flsim").status == 0);
  const auto s = json::parse(slurp(out / "summary.json"));
  CHECK(s.at("final_eer_screened").is_number());
  CHECK(s.at("final_eer_unscreened").is_number());
  CHECK(s.at("flags").at("recall").is_number());
  CHECK(line_count(slurp(out / "rounds.jsonl")) == 2);
  CHECK(line_count(slurp(out / "rounds_unscreened.jsonl")) == 2);
}

TEST_CASE("every command reproduces its outputs byte for byte") {
  const auto manifest = corpus_dir() / "manifest.jsonl";
  const auto train_cfg = write_text(scratch() / "det_train.ini", "[train]\nepochs = 5\n[mc]\npasses = 5\n");
  const auto pipe_cfg = write_text(scratch() / "det_pipe.ini", kSmallPipeline);
  const auto fl_cfg = write_text(scratch() / "det_fl.ini", std::string(kSmallFlsim) + "calibration_attackers = 1\narms = both\n");
  const auto corpus_cfg = write_text(scratch() / "det_corpus.ini", kSmallCorpus);

  auto run_all = [&](const fs::path& root, const std::string& jobs) {
    const auto o = [&](const char* sub) { return " --jobs " + jobs + " --out " + q(root / sub) + " "; };
    const auto stage = root / "stages";
    REQUIRE(cli("--config " + q(corpus_cfg) + o("synth") + "synth").status == 0);
    REQUIRE(cli(o("stages") + "extract --manifest " + q(manifest)).status == 0);
    REQUIRE(cli(o("stages") + "fuse --manifest " + q(manifest) + " --features " + q(stage / "features.csv")).status == 0);
    REQUIRE(cli("--config " + q(train_cfg) + o("stages") + "train --fused " + q(stage / "fused.csv")).status == 0);
    REQUIRE(cli("--config " + q(train_cfg) + o("stages") + "predict --model " + q(stage / "model.mlp") +
                " --fused " + q(stage / "fused.csv")).status == 0);
    REQUIRE(cli(o("stages") + "metrics --predictions " + q(stage / "predictions.jsonl") + " --features " +
                q(stage / "features.csv")).status == 0);
    REQUIRE(cli("--config " + q(pipe_cfg) + o("pipeline") + "pipeline").status == 0);
    REQUIRE(cli("--config " + q(fl_cfg) + o("flsim") + "flsim").status == 0);
  };
  run_all(scratch() / "det_a", "1");
  run_all(scratch() / "det_b", "1");
  run_all(scratch() / "det_c", "3");
  const auto a = tree(scratch() / "det_a");
  CHECK(a.size() > 200);
  CHECK(a == tree(scratch() / "det_b"));
  CHECK(a == tree(scratch() / "det_c"));
}

TEST_CASE("scratch cleanup") {
  fs::remove_all(scratch());
  CHECK_FALSE(fs::exists(scratch()));
}
