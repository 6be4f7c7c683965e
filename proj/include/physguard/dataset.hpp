#pragma once

#include <string>
#include <vector>

#include "physguard/matrix.hpp"
#include "physguard/physics.hpp"
#include "physguard/synthetic.hpp"

namespace physguard {

// Per-segment model inputs: mean-pooled embedding followed by the physics
// vector, plus class indices (kGenuine / kFake).
struct FeatureSet {
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<PhysicsVector> physics;
  Matrix features;  // n x (D + 6)

  std::size_t size() const { return ids.size(); }
  FeatureSet subset(std::span<const std::size_t> rows) const;
};

void append_segment(FeatureSet& set, const Segment& segment, const PhysicsVector& physics);

// Streams the synthetic corpus segment by segment; rows keep generation order.
FeatureSet synthetic_features(const SyntheticCorpusSpec& spec, const PhysicsConfig& physics = {},
                              std::size_t jobs = 1);

int class_index(Label label);

}  // namespace physguard
