#include "physguard/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "physguard/audio_io.hpp"
#include "physguard/config.hpp"
#include "physguard/dataset.hpp"
#include "physguard/errors.hpp"
#include "physguard/fusion.hpp"
#include "physguard/mc_dropout.hpp"
#include "physguard/metrics.hpp"
#include "physguard/parallel.hpp"

namespace physguard {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Run {
  std::string command;
  CommandOptions options;
  Config config;
  std::uint64_t seed = 0;
  json resolved = json::object();
  json inputs = json::object();
  std::vector<std::string> outputs;
  std::vector<std::string> errors;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void log(const std::string& message) const {
    if (options.verbose) std::cerr << "[" << command << "] " << message << '\n';
  }

  void write(const std::string& name, const std::string& contents) {
    write_file_atomic(options.out / name, contents);
    outputs.push_back(name);
  }

  void record_error(const std::string& message) {
    std::cerr << "error: " << message << '\n';
    errors.push_back(message);
  }
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path require(const fs::path& path, const char* flag) {
  if (path.empty()) throw ConfigError(std::string(flag) + " is required for this command");
  return path;
}

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json to_json(const SyntheticCorpusSpec& s) {
  return {{"n_genuine", s.n_genuine},
          {"n_fake", s.n_fake},
          {"seed", s.seed},
          {"dims", s.dims},
          {"length", s.length},
          {"frame_rate", s.frame_rate},
          {"velocity_scale_fake", s.velocity_scale_fake},
          {"smoothness", s.smoothness},
          {"step_sigma", s.step_sigma},
          {"speaker_sigma", s.speaker_sigma},
          {"envelope_depth", s.envelope_depth},
          {"compression_genuine", s.compression_genuine},
          {"jitter_genuine", s.jitter_genuine},
          {"compression_fake", s.compression_fake},
          {"jitter_fake", s.jitter_fake}};
}

json to_json(const PhysicsConfig& p) { return {{"alpha", p.alpha}, {"beta", p.beta}}; }

json to_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},   {"learning_rate", t.learning_rate},
          {"momentum", t.momentum}, {"batch_size", t.batch_size},
          {"seed", t.seed},       {"dropout", t.dropout_rate},
          {"class_weighting", t.class_weighting}, {"hidden", t.hidden}};
}

json to_json(const Scenario& s) {
  return {{"clients", s.clients},
          {"shard_size", s.shard_size},
          {"shard_sizes", s.shard_sizes},
          {"gradient_attackers", s.gradient_attackers},
          {"lambda", s.lambda},
          {"calibration_attackers", s.calibration_attackers},
          {"gamma", s.gamma},
          {"tau", s.screen.tau},
          {"screen_dispersion", s.screen.screen_dispersion},
          {"rounds", s.rounds},
          {"seed", s.seed},
          {"probe_size", s.probe_size},
          {"heldout_size", s.heldout_size},
          {"mc_passes", s.mc_passes},
          {"hidden", s.hidden},
          {"dropout", s.dropout_rate},
          {"local_epochs", s.local.train.epochs},
          {"local_learning_rate", s.local.train.learning_rate},
          {"local_batch_size", s.local.train.batch_size},
          {"poison_steps", s.local.poison_steps},
          {"corpus", to_json(s.corpus)}};
}

std::size_t mc_passes(const Config& c) {
  const std::size_t n = c.get_size("mc.passes", kDefaultMcPasses);
  if (n == 0) throw ConfigError("mc.passes must be >= 1");
  return n;
}

Segment load_segment(const ManifestRecord& record) {
  const auto windows = preprocess(read_wav(record.wav_path));
  if (windows.empty()) throw FormatError("audio is shorter than one 3 s window");
  return Segment{record.source_id, record.label, windows.front(), read_embedding(record.emb_path)};
}

struct Extracted {
  FeatureSet set;
  std::vector<Label> labels;  // keeps "unknown" distinguishable
};

// Rows come back sorted by source_id; failures are recorded on the run.
Extracted extract_records(Run& run, const std::vector<ManifestRecord>& records,
                          const PhysicsConfig& physics) {
  struct Slot {
    std::optional<Segment> segment;
    PhysicsVector physics;
    std::string error;
  };
  std::vector<Slot> slots(records.size());
  parallel_for(records.size(), run.options.jobs, [&](std::size_t i) {
    try {
      Segment seg = load_segment(records[i]);
      slots[i].physics = physics_vector(seg, physics);
      seg.waveform = {};
      slots[i].segment = std::move(seg);
    } catch (const std::exception& e) {
      slots[i].error = records[i].source_id + ": " + e.what();
    }
  });

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].source_id < records[b].source_id;
  });
  Extracted out;
  for (std::size_t i : order) {
    if (!slots[i].segment) {
      run.record_error(slots[i].error);
      continue;
    }
    if (out.set.size() > 0 && out.set.features.cols() != slots[i].segment->embedding.dims() + 6) {
      run.record_error(records[i].source_id + ": embedding dimensionality differs from earlier records");
      continue;
    }
    append_segment(out.set, *slots[i].segment, slots[i].physics);
    out.labels.push_back(records[i].label);
  }
  run.log("extracted " + std::to_string(out.set.size()) + " of " + std::to_string(records.size()) +
          " segments");
  return out;
}

std::vector<FeatureRow> feature_rows(const FeatureSet& set, std::span<const Label> labels) {
  std::vector<FeatureRow> rows;
  for (std::size_t i = 0; i < set.size(); ++i) rows.push_back({set.ids[i], labels[i], set.physics[i]});
  return rows;
}

struct FusedTable {
  std::vector<std::string> ids;
  std::vector<Label> labels;
  Matrix x;
};

std::string fused_csv(const FusedTable& t) {
  std::string out = "source_id,label";
  for (std::size_t c = 0; c < t.x.cols(); ++c) out += ",x" + std::to_string(c);
  out += '\n';
  for (std::size_t r = 0; r < t.x.rows(); ++r) {
    out += t.ids[r] + ',' + std::string(to_string(t.labels[r]));
    for (double v : t.x.row(r)) out += ',' + g17(v);
    out += '\n';
  }
  return out;
}

FusedTable parse_fused_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("source_id,label", 0) != 0)
    throw FormatError("fused table: missing header");
  const auto cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) - 1;
  FusedTable t;
  t.x = Matrix(0, cols);
  std::vector<double> row(cols);
  for (std::size_t n = 2; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string id, label, cell;
    std::getline(fields, id, ',');
    std::getline(fields, label, ',');
    for (std::size_t c = 0; c < cols; ++c) {
      if (!std::getline(fields, cell, ','))
        throw FormatError("fused table line " + std::to_string(n) + ": too few columns");
      try {
        row[c] = std::stod(cell);
      } catch (const std::exception&) {
        throw FormatError("fused table line " + std::to_string(n) + ": bad number '" + cell + "'");
      }
    }
    t.ids.push_back(id);
    t.labels.push_back(parse_label(label));
    t.x.append_row(row);
  }
  return t;
}

// Rows with a known class, as training/evaluation inputs.
std::pair<Matrix, std::vector<int>> labelled_rows(const FusedTable& t) {
  Matrix x(0, t.x.cols());
  std::vector<int> y;
  for (std::size_t r = 0; r < t.x.rows(); ++r) {
    if (t.labels[r] == Label::unknown) continue;
    x.append_row(t.x.row(r));
    y.push_back(class_index(t.labels[r]));
  }
  return {x, y};
}

std::vector<PredictionRow> predict_rows(const DropoutMlp& model, const FusedTable& t, std::size_t passes,
                                        std::uint64_t seed, std::size_t jobs,
                                        std::vector<McPredictive>* keep = nullptr) {
  auto preds = mc_predict_batch(model, t.x, passes, seed, jobs);
  std::vector<PredictionRow> rows;
  for (std::size_t r = 0; r < preds.size(); ++r)
    rows.push_back({t.ids[r], std::string(to_string(t.labels[r])), preds[r].mean_p[kGenuine],
                    preds[r].total_u, preds[r].aleatoric_u, preds[r].epistemic_u});
  if (keep) *keep = std::move(preds);
  return rows;
}

std::string uncertainty_json(std::span<const PredictionRow> rows, std::optional<double> ece) {
  std::vector<double> g, f;
  for (const auto& r : rows) {
    if (r.label == "unknown") continue;
    (parse_label(r.label) == Label::genuine ? g : f).push_back(r.total_u);
  }
  const auto s = summarize_uncertainty(g, f);
  json j{{"genuine_mean_total_u", s.genuine_mean},
         {"fake_mean_total_u", s.fake_mean},
         {"relative_gap", s.relative_gap},
         {"n_genuine", s.n_genuine},
         {"n_fake", s.n_fake}};
  if (ece) j["ece"] = *ece;
  return j.dump(2) + '\n';
}

ScoreSet score_set(std::span<const PredictionRow> rows) {
  ScoreSet s;
  for (const auto& r : rows) {
    if (r.label == "unknown") continue;
    (parse_label(r.label) == Label::genuine ? s.genuine : s.fake).push_back(r.p_genuine);
  }
  return s;
}

// One ECDF table per requested physics feature (genuine vs deepfake) plus the
// KS distances.
void write_ecdfs(Run& run, std::span<const FeatureRow> rows, std::span<const std::size_t> which) {
  json ks = json::object();
  for (std::size_t k : which) {
    std::vector<double> g, f;
    for (const auto& r : rows) {
      if (r.label == Label::unknown) continue;
      (r.label == Label::genuine ? g : f).push_back(r.features.as_array()[k]);
    }
    if (g.empty() || f.empty()) throw EmptyClass("ECDF tables need both genuine and deepfake rows");
    const auto table = ecdf_table(g, f);
    run.write(std::string("ecdf_") + kPhysicsFeatureNames[k] + ".csv", ecdf_csv(table, "genuine", "deepfake"));
    ks[kPhysicsFeatureNames[k]] = ks_distance(g, f);
  }
  run.write("ks.json", ks.dump(2) + '\n');
}

int cmd_synth(Run& run) {
  const auto spec = corpus_spec(run.config, run.seed);
  run.resolved["corpus"] = to_json(spec);
  const std::size_t n = spec.n_genuine + spec.n_fake;
  std::vector<ManifestRecord> records(n);
  const fs::path out = run.options.out;
  parallel_for(n, run.options.jobs, [&](std::size_t i) {
    const Segment seg = generate_segment(spec, i);
    records[i] = {seg.source_id, seg.label, out / "wav" / (seg.source_id + ".wav"),
                  out / "emb" / (seg.source_id + ".emb")};
    write_wav(records[i].wav_path, seg.waveform);
    write_embedding_binary(records[i].emb_path, seg.embedding);
  });
  std::sort(records.begin(), records.end(),
            [](const ManifestRecord& a, const ManifestRecord& b) { return a.source_id < b.source_id; });
  write_manifest(out / "manifest.jsonl", records);
  run.outputs.push_back("manifest.jsonl");
  run.outputs.push_back("wav/");
  run.outputs.push_back("emb/");
  run.log("wrote " + std::to_string(n) + " segments");
  return kExitOk;
}

int cmd_extract(Run& run) {
  const fs::path manifest = require(run.options.manifest, "--manifest");
  run.inputs["manifest"] = manifest.string();
  const auto physics = physics_config(run.config);
  run.resolved["physics"] = to_json(physics);
  const auto records = read_manifest(manifest);
  const auto ex = extract_records(run, records, physics);
  run.write("features.csv", feature_table_csv(feature_rows(ex.set, ex.labels)));
  return run.errors.empty() ? kExitOk : kExitDataErrors;
}

int cmd_fuse(Run& run) {
  const fs::path manifest = require(run.options.manifest, "--manifest");
  const fs::path features = require(run.options.features, "--features");
  run.inputs["manifest"] = manifest.string();
  run.inputs["features"] = features.string();

  std::map<std::string, FeatureRow> physics_by_id;
  for (auto& row : parse_feature_table(read_text(features))) physics_by_id[row.source_id] = row;

  auto records = read_manifest(manifest);
  std::sort(records.begin(), records.end(),
            [](const ManifestRecord& a, const ManifestRecord& b) { return a.source_id < b.source_id; });
  FusedTable raw;
  for (const auto& rec : records) {
    const auto it = physics_by_id.find(rec.source_id);
    if (it == physics_by_id.end()) {
      run.record_error(rec.source_id + ": no row in the feature table");
      continue;
    }
    try {
      std::vector<double> row = mean_pool(read_embedding(rec.emb_path));
      const auto p = it->second.features.as_array();
      row.insert(row.end(), p.begin(), p.end());
      if (raw.x.rows() == 0) raw.x = Matrix(0, row.size());
      if (row.size() != raw.x.cols()) throw ShapeError("embedding dimensionality differs from earlier records");
      raw.x.append_row(row);
      raw.ids.push_back(rec.source_id);
      raw.labels.push_back(rec.label);
    } catch (const std::exception& e) {
      run.record_error(rec.source_id + ": " + e.what());
    }
  }

  FusionTransform transform;
  if (!run.options.fusion.empty()) {
    run.inputs["fusion"] = run.options.fusion.string();
    transform = load_fusion(run.options.fusion);
  } else {
    if (raw.x.rows() == 0) throw ShapeError("nothing to fit: no usable rows");
    save_fusion(run.options.out / "fusion.qrf", fuse(raw.x).transform);
    run.outputs.push_back("fusion.qrf");
    transform = load_fusion(run.options.out / "fusion.qrf");
  }
  FusedTable fused{raw.ids, raw.labels, raw.x.rows() ? transform.apply(raw.x) : Matrix(0, transform.dims())};
  run.write("fused.csv", fused_csv(fused));
  return run.errors.empty() ? kExitOk : kExitDataErrors;
}

int cmd_train(Run& run) {
  const fs::path fused = require(run.options.fused, "--fused");
  run.inputs["fused"] = fused.string();
  const auto cfg = train_config(run.config, run.seed);
  run.resolved["train"] = to_json(cfg);
  const auto [x, y] = labelled_rows(parse_fused_csv(read_text(fused)));
  const auto result = train(x, y, cfg);
  save_model(run.options.out / "model.mlp", result.model);
  run.outputs.push_back("model.mlp");
  std::string log = "epoch,loss\n";
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
    log += std::to_string(e + 1) + ',' + g17(result.epoch_loss[e]) + '\n';
  run.write("train_loss.csv", log);
  return kExitOk;
}

int cmd_predict(Run& run) {
  const fs::path model_path = require(run.options.model, "--model");
  const fs::path fused = require(run.options.fused, "--fused");
  run.inputs["model"] = model_path.string();
  run.inputs["fused"] = fused.string();
  const std::size_t passes = mc_passes(run.config);
  run.resolved["mc"] = {{"passes", passes}};
  const DropoutMlp model = load_model(model_path);
  const FusedTable table = parse_fused_csv(read_text(fused));
  if (table.x.cols() != model.input_dims())
    throw ShapeError("fused table has " + std::to_string(table.x.cols()) + " columns, model expects " +
                     std::to_string(model.input_dims()));
  run.write("predictions.jsonl",
            predictions_jsonl(predict_rows(model, table, passes, substream(run.seed, "mc"), run.options.jobs)));
  return kExitOk;
}

int cmd_metrics(Run& run) {
  const fs::path predictions = require(run.options.predictions, "--predictions");
  run.inputs["predictions"] = predictions.string();
  const auto rows = parse_predictions_jsonl(read_text(predictions));
  run.write("metrics.json", to_json(metric_report(score_set(rows))));
  run.write("uncertainty.json", uncertainty_json(rows, std::nullopt));
  if (!run.options.features.empty()) {
    run.inputs["features"] = run.options.features.string();
    const auto table = parse_feature_table(read_text(run.options.features));
    std::vector<std::size_t> all(PhysicsVector::size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    write_ecdfs(run, table, all);
  }
  return kExitOk;
}

// Seeded stratified split; returns (train rows, test rows), each ascending.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(std::span<const int> labels,
                                                                         double train_fraction,
                                                                         std::uint64_t seed) {
  std::vector<std::size_t> train_rows, test_rows;
  for (int cls : {kGenuine, kFake}) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) rows.push_back(i);
    Rng rng = make_rng(seed, "pipeline/split", static_cast<std::uint64_t>(cls));
    for (std::size_t i = rows.size(); i > 1; --i) {
      const auto j = std::min(i - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i)));
      std::swap(rows[i - 1], rows[j]);
    }
    const auto n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(rows.size()));
    if (n_train == 0 || n_train == rows.size())
      throw ConfigError("pipeline.train_fraction leaves a class without train or test rows");
    train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
    test_rows.insert(test_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {train_rows, test_rows};
}

int cmd_pipeline(Run& run) {
  // Everything the run needs is validated before any work starts.
  const auto physics = physics_config(run.config);
  const auto train_cfg = train_config(run.config, run.seed);
  const std::size_t passes = mc_passes(run.config);
  const double train_fraction = run.config.get_double("pipeline.train_fraction", 0.7);
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("pipeline.train_fraction must lie in (0, 1)");
  const std::string manifest = run.config.get_string("input.manifest", "");
  std::optional<SyntheticCorpusSpec> corpus;
  if (manifest.empty()) corpus = corpus_spec(run.config, run.seed);
  if (corpus) run.resolved["corpus"] = to_json(*corpus);
  else run.inputs["manifest"] = manifest;
  run.resolved["physics"] = to_json(physics);
  run.resolved["train"] = to_json(train_cfg);
  run.resolved["mc"] = {{"passes", passes}};
  run.resolved["pipeline"] = {{"train_fraction", train_fraction}};

  FeatureSet all;
  std::vector<Label> labels;
  if (corpus) {
    all = synthetic_features(*corpus, physics, run.options.jobs);
    for (int y : all.labels) labels.push_back(y == kGenuine ? Label::genuine : Label::deepfake);
  } else {
    fs::path path = manifest;
    if (path.is_relative() && run.options.config) path = run.options.config->parent_path() / path;
    auto ex = extract_records(run, read_manifest(path), physics);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < ex.set.size(); ++i) {
      if (ex.labels[i] == Label::unknown) run.record_error(ex.set.ids[i] + ": unlabelled record skipped");
      else keep.push_back(i);
    }
    all = ex.set.subset(keep);
    for (std::size_t i : keep) labels.push_back(ex.labels[i]);
  }
  run.log("features ready for " + std::to_string(all.size()) + " segments");

  std::vector<std::size_t> by_id(all.size());
  std::iota(by_id.begin(), by_id.end(), std::size_t{0});
  std::stable_sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) { return all.ids[a] < all.ids[b]; });
  {
    std::vector<FeatureRow> rows;
    for (std::size_t i : by_id) rows.push_back({all.ids[i], labels[i], all.physics[i]});
    run.write("features.csv", feature_table_csv(rows));
  }

  const auto [train_rows, test_rows] = split_rows(all.labels, train_fraction, run.seed);
  const FeatureSet train_set = all.subset(train_rows);
  const FeatureSet test_set = all.subset(test_rows);

  save_fusion(run.options.out / "fusion.qrf", fuse(train_set.features).transform);
  run.outputs.push_back("fusion.qrf");
  const FusionTransform fusion = load_fusion(run.options.out / "fusion.qrf");

  const auto trained = train(fusion.apply(train_set.features), train_set.labels, train_cfg);
  save_model(run.options.out / "model.mlp", trained.model);
  run.outputs.push_back("model.mlp");
  const DropoutMlp model = load_model(run.options.out / "model.mlp");
  run.log("head trained, final loss " + g17(trained.epoch_loss.back()));

  FusedTable test{test_set.ids, {}, fusion.apply(test_set.features)};
  for (int y : test_set.labels) test.labels.push_back(y == kGenuine ? Label::genuine : Label::deepfake);
  std::vector<std::size_t> order(test.ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return test.ids[a] < test.ids[b]; });
  FusedTable sorted{{}, {}, Matrix(0, test.x.cols())};
  for (std::size_t i : order) {
    sorted.ids.push_back(test.ids[i]);
    sorted.labels.push_back(test.labels[i]);
    sorted.x.append_row(test.x.row(i));
  }

  std::vector<McPredictive> preds;
  const auto rows = predict_rows(model, sorted, passes, substream(run.seed, "mc"), run.options.jobs, &preds);
  run.write("predictions.jsonl", predictions_jsonl(rows));
  std::vector<int> y;
  for (Label l : sorted.labels) y.push_back(class_index(l));
  run.write("metrics.json", to_json(metric_report(score_set(rows))));
  run.write("uncertainty.json", uncertainty_json(rows, expected_calibration_error(preds, y)));

  std::vector<FeatureRow> train_rows_table;
  for (std::size_t i = 0; i < train_set.size(); ++i)
    train_rows_table.push_back({train_set.ids[i], train_set.labels[i] == kGenuine ? Label::genuine : Label::deepfake,
                                train_set.physics[i]});
  const std::size_t figures[] = {4, 5};  // mean_vel_mag, tf_variation
  write_ecdfs(run, train_rows_table, figures);
  return run.errors.empty() ? kExitOk : kExitDataErrors;
}

json flags_json(const FlagSummary& f) {
  json j{{"total_flags", f.total_flags},
         {"true_flags", f.true_flags},
         {"false_flags", f.false_flags},
         {"missed", f.missed}};
  j["precision"] = f.precision ? json(*f.precision) : json(nullptr);
  j["recall"] = f.recall ? json(*f.recall) : json(nullptr);
  return j;
}

int cmd_flsim(Run& run) {
  Scenario scenario = scenario_config(run.config, run.seed);
  scenario.jobs = run.options.jobs;
  const std::string arms = run.config.get_string("flsim.arms", "screened");
  if (arms != "screened" && arms != "unscreened" && arms != "both")
    throw ConfigError("flsim.arms: expected screened, unscreened or both, got '" + arms + "'");
  run.resolved["flsim"] = to_json(scenario);
  run.resolved["flsim"]["arms"] = arms;

  const FeatureSet corpus = scenario_features(scenario);
  run.log("corpus of " + std::to_string(corpus.size()) + " segments ready");
  json summary{{"arms", arms}};

  auto run_arm = [&](bool screening, const std::string& file) {
    Scenario s = scenario;
    s.screening = screening;
    const auto result = run_simulation(s, corpus);
    run.write(file, round_log_jsonl(result.rounds));
    const auto& last = result.rounds.back();
    const std::string key = screening ? "screened" : "unscreened";
    summary["final_eer_" + key] = last.eer;
    summary["final_roc_auc_" + key] = last.roc_auc;
    summary["final_ece_" + key] = last.ece;
    if (screening) summary["flags"] = flags_json(summarize_flags(result.rounds));
    run.log(key + " arm done, final EER " + g17(last.eer));
  };
  if (arms != "unscreened") run_arm(true, "rounds.jsonl");
  if (arms == "unscreened") run_arm(false, "rounds.jsonl");
  if (arms == "both") run_arm(false, "rounds_unscreened.jsonl");
  run.write("summary.json", summary.dump(2) + '\n');
  return kExitOk;
}

void write_run_manifest(const Run& run, int status) {
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - run.start).count();
  json j{{"command", run.command},
         {"tool_version", kToolVersion},
         {"seed", run.seed},
         {"config_path", run.options.config ? json(run.options.config->string()) : json(nullptr)},
         {"resolved_config", run.resolved},
         {"inputs", run.inputs},
         {"outputs", run.outputs},
         {"errors", run.errors},
         {"exit_status", status},
         {"wall_clock_seconds", seconds}};
  write_file_atomic(run.options.out / "run_manifest.json", j.dump(2) + '\n');
}

}  // namespace

int run_command(const std::string& name, const CommandOptions& options) {
  static const std::map<std::string, std::function<int(Run&)>> commands = {
      {"synth", cmd_synth},     {"extract", cmd_extract}, {"fuse", cmd_fuse},
      {"train", cmd_train},     {"predict", cmd_predict}, {"metrics", cmd_metrics},
      {"pipeline", cmd_pipeline}, {"flsim", cmd_flsim},
  };
  const auto it = commands.find(name);
  if (it == commands.end()) {
    std::cerr << "error: unknown command '" << name << "'\n";
    return kExitUsage;
  }

  Run run;
  run.command = name;
  run.options = options;
  int status = kExitOk;
  try {
    if (options.jobs == 0) throw ConfigError("--jobs must be >= 1");
    if (options.config) {
      run.config = Config::load(*options.config);
      run.config.check_known(config_schema());
    }
    run.seed = options.seed.value_or(run_seed(run.config));
    fs::create_directories(options.out);
    status = it->second(run);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    run.record_error(e.what());
    status = kExitDataErrors;
  }
  try {
    write_run_manifest(run, status);
  } catch (const std::exception& e) {
    std::cerr << "error: cannot write run manifest: " << e.what() << '\n';
    status = kExitDataErrors;
  }
  return status;
}

}  // namespace physguard
