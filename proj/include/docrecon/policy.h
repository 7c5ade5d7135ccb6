// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

// Toy sequential-selection policy. Slots are filled in order 1..k; at each
// slot a softmax over the remaining labels picks one (Plackett-Luce style),
// with scores linear in a 4-feature vector.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "docrecon/taskgen.h"

namespace docrecon {

inline constexpr std::size_t kNumFeatures = 4;
inline constexpr int kFeatureVersion = 1;

enum FeatureIndex : std::size_t {
  kOverlapPrev = 0,  // Jaccard(option words, preceding paragraph words)
  kOverlapNext = 1,  // Jaccard(option words, following paragraph words)
  kLengthSimilarity = 2,  // 1 / (1 + |log(len / mean option len)|)
  kBias = 3,
};

using FeatureVector = std::array<double, kNumFeatures>;

struct PolicyParams {
  FeatureVector weights{};

  bool operator==(const PolicyParams&) const = default;
};

// Sorted, de-duplicated lowercase words. A word is a maximal run of ASCII
// alphanumerics or non-ASCII bytes.
std::vector<std::string> word_set(std::string_view text);

// |a ∩ b| / |a ∪ b|; 0 when both are empty.
double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Features for placing `label` in placeholder `slot` (1-based). Neighbours
// are the nearest text segments around the placeholder.
FeatureVector featurize(const ReconstructionTask& task, int slot, Label label);

// All k x k feature vectors of a task, computed once.
class FeatureTable {
 public:
  explicit FeatureTable(const ReconstructionTask& task);

  int k() const { return k_; }
  // slot and label are 0-based here.
  const FeatureVector& at(int slot, int label) const {
    return table_[static_cast<std::size_t>(slot * k_ + label)];
  }

 private:
  int k_ = 0;
  std::vector<FeatureVector> table_;
};

double dot(const FeatureVector& weights, const FeatureVector& features);

struct Trajectory {
  std::string task_id;
  std::vector<Label> chosen;
  std::vector<double> step_logprobs;
  double total_logprob = 0.0;
  double reward = 0.0;
  double advantage = 0.0;
};

// Log-probability of filling slots 1..k with `labels`. Throws InvariantError
// unless labels is a permutation of the task's option labels.
double logprob(const PolicyParams& params, const FeatureTable& features,
               std::span<const Label> labels);
double logprob(const PolicyParams& params, const ReconstructionTask& task,
               std::span<const Label> labels);

// Gradient of logprob with respect to the weights:
//   sum_i [ phi(i, labels_i) - E_{softmax over remaining}[phi(i, .)] ].
FeatureVector grad_logprob(const PolicyParams& params, const FeatureTable& features,
                           std::span<const Label> labels);
FeatureVector grad_logprob(const PolicyParams& params, const ReconstructionTask& task,
                           std::span<const Label> labels);

// Samples a full ordering without replacement. reward and advantage are left
// at 0 for the caller to fill.
Trajectory sample_trajectory(const PolicyParams& params, const FeatureTable& features,
                             const std::string& task_id, std::uint64_t seed);
Trajectory sample_trajectory(const PolicyParams& params, const ReconstructionTask& task,
                             std::uint64_t seed);

// Argmax at each slot; ties go to the alphabetically first label.
std::vector<Label> greedy_decode(const PolicyParams& params, const FeatureTable& features);
std::vector<Label> greedy_decode(const PolicyParams& params, const ReconstructionTask& task);

// Checkpoint: {"weights": [...], "feature_version": 1}.
std::string checkpoint_to_json(const PolicyParams& params);
void write_checkpoint(const std::filesystem::path& path, const PolicyParams& params);
PolicyParams read_checkpoint(const std::filesystem::path& path);

}  // namespace docrecon
