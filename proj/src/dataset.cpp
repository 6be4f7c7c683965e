#include "physguard/dataset.hpp"

#include "physguard/dropout_mlp.hpp"
#include "physguard/errors.hpp"
#include "physguard/parallel.hpp"

namespace physguard {

int class_index(Label label) {
  switch (label) {
    case Label::genuine: return kGenuine;
    case Label::deepfake: return kFake;
    case Label::unknown: break;
  }
  return -1;
}

FeatureSet FeatureSet::subset(std::span<const std::size_t> rows) const {
  FeatureSet out;
  out.features = Matrix(0, features.cols());
  for (std::size_t r : rows) {
    out.ids.push_back(ids.at(r));
    out.labels.push_back(labels.at(r));
    out.physics.push_back(physics.at(r));
    out.features.append_row(features.row(r));
  }
  return out;
}

void append_segment(FeatureSet& set, const Segment& segment, const PhysicsVector& physics) {
  std::vector<double> row = mean_pool(segment.embedding);
  const auto p = physics.as_array();
  row.insert(row.end(), p.begin(), p.end());
  if (set.features.rows() == 0) set.features = Matrix(0, row.size());
  set.features.append_row(row);
  set.ids.push_back(segment.source_id);
  set.labels.push_back(class_index(segment.label));
  set.physics.push_back(physics);
}

FeatureSet synthetic_features(const SyntheticCorpusSpec& spec, const PhysicsConfig& physics,
                              std::size_t jobs) {
  spec.validate();
  const std::size_t n = spec.n_genuine + spec.n_fake;
  std::vector<std::vector<double>> pooled(n);
  std::vector<PhysicsVector> vectors(n);
  std::vector<std::string> ids(n);
  std::vector<int> labels(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const Segment seg = generate_segment(spec, i);
    vectors[i] = physics_vector(seg, physics);
    pooled[i] = mean_pool(seg.embedding);
    ids[i] = seg.source_id;
    labels[i] = class_index(seg.label);
  });
  FeatureSet set;
  set.features = Matrix(0, spec.dims + PhysicsVector::size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = vectors[i].as_array();
    pooled[i].insert(pooled[i].end(), p.begin(), p.end());
    set.features.append_row(pooled[i]);
  }
  set.ids = std::move(ids);
  set.labels = std::move(labels);
  set.physics = std::move(vectors);
  return set;
}

}  // namespace physguard
