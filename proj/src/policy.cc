// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

#include "docrecon/policy.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "docrecon/errors.h"
#include "docrecon/io.h"
#include "docrecon/random.h"

namespace docrecon {

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         c >= 0x80;
}

const std::string* neighbour_text(const ReconstructionTask& task, std::size_t pos,
                                  int direction) {
  for (auto i = static_cast<std::ptrdiff_t>(pos) + direction;
       i >= 0 && i < static_cast<std::ptrdiff_t>(task.segments.size()); i += direction) {
    if (const auto* t = std::get_if<TextSegment>(&task.segments[static_cast<std::size_t>(i)])) {
      return &t->text;
    }
  }
  return nullptr;
}

// Scores of the unused labels at `slot`, plus their log-sum-exp.
struct SlotScores {
  std::vector<int> labels;
  std::vector<double> scores;
  double log_normalizer = 0.0;
};

SlotScores slot_scores(const PolicyParams& params, const FeatureTable& features,
                       int slot, const std::vector<bool>& used) {
  SlotScores out;
  double max_score = -std::numeric_limits<double>::infinity();
  for (int l = 0; l < features.k(); ++l) {
    if (used[static_cast<std::size_t>(l)]) continue;
    const double s = dot(params.weights, features.at(slot, l));
    out.labels.push_back(l);
    out.scores.push_back(s);
    max_score = std::max(max_score, s);
  }
  double sum = 0.0;
  for (double s : out.scores) sum += std::exp(s - max_score);
  out.log_normalizer = max_score + std::log(sum);
  return out;
}

std::vector<int> checked_indices(const FeatureTable& features,
                                 std::span<const Label> labels) {
  const int k = features.k();
  if (static_cast<int>(labels.size()) != k) {
    throw InvariantError("label sequence length differs from k");
  }
  std::vector<int> indices;
  std::vector<bool> seen(static_cast<std::size_t>(k), false);
  for (Label l : labels) {
    const int idx = label_index(l);
    if (idx < 0 || idx >= k || seen[static_cast<std::size_t>(idx)]) {
      throw InvariantError("label sequence is not a permutation of the options");
    }
    seen[static_cast<std::size_t>(idx)] = true;
    indices.push_back(idx);
  }
  return indices;
}

}  // namespace

std::vector<std::string> word_set(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      current += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  return words;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  const std::size_t unioned = a.size() + b.size() - common;
  return unioned == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(unioned);
}

FeatureTable::FeatureTable(const ReconstructionTask& task) : k_(task.k) {
  const auto k = static_cast<std::size_t>(task.k);
  if (task.options.size() != k) throw InvariantError("task has k != |options|");

  std::vector<std::vector<std::string>> option_words;
  std::vector<double> lengths;
  for (int l = 0; l < k_; ++l) {
    const std::string& text = task.options.at(label_at(l));
    option_words.push_back(word_set(text));
    lengths.push_back(static_cast<double>(std::max<std::size_t>(1, text.size())));
  }
  double mean_length = 0.0;
  for (double len : lengths) mean_length += len;
  mean_length /= static_cast<double>(k);

  table_.resize(k * k);
  int slot = 0;
  for (std::size_t pos = 0; pos < task.segments.size(); ++pos) {
    if (!std::holds_alternative<Placeholder>(task.segments[pos])) continue;
    const std::string* prev = neighbour_text(task, pos, -1);
    const std::string* next = neighbour_text(task, pos, +1);
    const auto prev_words = prev ? word_set(*prev) : std::vector<std::string>{};
    const auto next_words = next ? word_set(*next) : std::vector<std::string>{};
    for (int l = 0; l < k_; ++l) {
      FeatureVector& f = table_[static_cast<std::size_t>(slot * k_ + l)];
      f[kOverlapPrev] = prev ? jaccard(option_words[static_cast<std::size_t>(l)], prev_words) : 0.0;
      f[kOverlapNext] = next ? jaccard(option_words[static_cast<std::size_t>(l)], next_words) : 0.0;
      f[kLengthSimilarity] =
          1.0 / (1.0 + std::abs(std::log(lengths[static_cast<std::size_t>(l)] / mean_length)));
      f[kBias] = 1.0;
    }
    ++slot;
  }
  if (slot != k_) throw InvariantError("task has k != number of placeholders");
}

FeatureVector featurize(const ReconstructionTask& task, int slot, Label label) {
  if (slot < 1 || slot > task.k || !task.options.contains(label)) {
    throw InvariantError("featurize: slot or label not in task");
  }
  return FeatureTable(task).at(slot - 1, label_index(label));
}

double dot(const FeatureVector& weights, const FeatureVector& features) {
  double s = 0.0;
  for (std::size_t i = 0; i < kNumFeatures; ++i) s += weights[i] * features[i];
  return s;
}

double logprob(const PolicyParams& params, const FeatureTable& features,
               std::span<const Label> labels) {
  const std::vector<int> indices = checked_indices(features, labels);
  std::vector<bool> used(indices.size(), false);
  double total = 0.0;
  for (int slot = 0; slot < features.k(); ++slot) {
    const SlotScores scores = slot_scores(params, features, slot, used);
    const int chosen = indices[static_cast<std::size_t>(slot)];
    total += dot(params.weights, features.at(slot, chosen)) - scores.log_normalizer;
    used[static_cast<std::size_t>(chosen)] = true;
  }
  return total;
}

double logprob(const PolicyParams& params, const ReconstructionTask& task,
               std::span<const Label> labels) {
  return logprob(params, FeatureTable(task), labels);
}

FeatureVector grad_logprob(const PolicyParams& params, const FeatureTable& features,
                           std::span<const Label> labels) {
  const std::vector<int> indices = checked_indices(features, labels);
  std::vector<bool> used(indices.size(), false);
  FeatureVector grad{};
  for (int slot = 0; slot < features.k(); ++slot) {
    const SlotScores scores = slot_scores(params, features, slot, used);
    const int chosen = indices[static_cast<std::size_t>(slot)];
    const FeatureVector& phi = features.at(slot, chosen);
    for (std::size_t f = 0; f < kNumFeatures; ++f) grad[f] += phi[f];
    for (std::size_t j = 0; j < scores.labels.size(); ++j) {
      const double p = std::exp(scores.scores[j] - scores.log_normalizer);
      const FeatureVector& other = features.at(slot, scores.labels[j]);
      for (std::size_t f = 0; f < kNumFeatures; ++f) grad[f] -= p * other[f];
    }
    used[static_cast<std::size_t>(chosen)] = true;
  }
  return grad;
}

FeatureVector grad_logprob(const PolicyParams& params, const ReconstructionTask& task,
                           std::span<const Label> labels) {
  return grad_logprob(params, FeatureTable(task), labels);
}

Trajectory sample_trajectory(const PolicyParams& params, const FeatureTable& features,
                             const std::string& task_id, std::uint64_t seed) {
  Rng rng(seed);
  Trajectory traj;
  traj.task_id = task_id;
  std::vector<bool> used(static_cast<std::size_t>(features.k()), false);
  for (int slot = 0; slot < features.k(); ++slot) {
    const SlotScores scores = slot_scores(params, features, slot, used);
    const double u = rng.uniform01();
    double cumulative = 0.0;
    std::size_t pick = scores.labels.size() - 1;
    for (std::size_t j = 0; j < scores.labels.size(); ++j) {
      cumulative += std::exp(scores.scores[j] - scores.log_normalizer);
      if (u < cumulative) {
        pick = j;
        break;
      }
    }
    const int chosen = scores.labels[pick];
    // Same expression as logprob() so the two agree bit for bit.
    const double step = dot(params.weights, features.at(slot, chosen)) - scores.log_normalizer;
    traj.chosen.push_back(label_at(chosen));
    traj.step_logprobs.push_back(step);
    traj.total_logprob += step;
    used[static_cast<std::size_t>(chosen)] = true;
  }
  return traj;
}

Trajectory sample_trajectory(const PolicyParams& params, const ReconstructionTask& task,
                             std::uint64_t seed) {
  return sample_trajectory(params, FeatureTable(task), task.task_id, seed);
}

std::vector<Label> greedy_decode(const PolicyParams& params, const FeatureTable& features) {
  std::vector<Label> out;
  std::vector<bool> used(static_cast<std::size_t>(features.k()), false);
  for (int slot = 0; slot < features.k(); ++slot) {
    int best = -1;
    double best_score = 0.0;
    for (int l = 0; l < features.k(); ++l) {
      if (used[static_cast<std::size_t>(l)]) continue;
      const double s = dot(params.weights, features.at(slot, l));
      if (best < 0 || s > best_score) {
        best = l;
        best_score = s;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    out.push_back(label_at(best));
  }
  return out;
}

std::vector<Label> greedy_decode(const PolicyParams& params, const ReconstructionTask& task) {
  return greedy_decode(params, FeatureTable(task));
}

std::string checkpoint_to_json(const PolicyParams& params) {
  nlohmann::ordered_json obj;
  obj["weights"] = params.weights;
  obj["feature_version"] = kFeatureVersion;
  return obj.dump() + "\n";
}

void write_checkpoint(const std::filesystem::path& path, const PolicyParams& params) {
  write_file_atomic(path, checkpoint_to_json(params));
}

PolicyParams read_checkpoint(const std::filesystem::path& path) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  if (!obj.is_object() || !obj.contains("feature_version") ||
      obj["feature_version"] != kFeatureVersion) {
    throw InputError(path.string() + ": unsupported or missing feature_version");
  }
  const auto& weights = obj["weights"];
  if (!weights.is_array() || weights.size() != kNumFeatures) {
    throw InputError(path.string() + ": \"weights\" must hold " +
                     std::to_string(kNumFeatures) + " numbers");
  }
  PolicyParams params;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (!weights[i].is_number() || !std::isfinite(weights[i].get<double>())) {
      throw InputError(path.string() + ": weights must be finite numbers");
    }
    params.weights[i] = weights[i].get<double>();
  }
  return params;
}

}  // namespace docrecon
