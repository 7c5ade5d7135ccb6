// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

#include "docrecon/reward.h"

#include <json.hpp>

#include "docrecon/errors.h"

namespace docrecon {

namespace {

int count_matches(const std::vector<Label>& labels, const std::vector<Label>& key) {
  int matches = 0;
  for (std::size_t i = 0; i < labels.size() && i < key.size(); ++i) {
    if (labels[i] == key[i]) ++matches;
  }
  return matches;
}

}  // namespace

RewardMode parse_reward_mode(std::string_view name) {
  if (name == "dense") return RewardMode::kDense;
  if (name == "sparse") return RewardMode::kSparse;
  throw InputError("unknown reward mode \"" + std::string(name) +
                   "\" (expected dense or sparse)");
}

std::string_view to_string(RewardMode mode) {
  return mode == RewardMode::kDense ? "dense" : "sparse";
}

double score(const ParsedAnswer& answer, const std::vector<Label>& answer_key,
             const std::set<Label>& option_labels, RewardMode mode) {
  if (answer_key.empty() || answer_key.size() != option_labels.size()) {
    throw InvariantError("answer key and option labels must both have K >= 1 entries");
  }
  if (!answer.extraction_ok) return 0.0;
  if (answer.labels == answer_key) return 1.0;
  if (mode == RewardMode::kSparse) return 0.0;
  if (!is_valid_permutation(answer, option_labels)) return 0.0;
  return static_cast<double>(count_matches(answer.labels, answer_key)) /
         static_cast<double>(answer_key.size());
}

ScoreResult score_answer(const ParsedAnswer& answer, const ReconstructionTask& task,
                         RewardMode mode) {
  const std::vector<Label> labels = option_labels(task);
  const std::set<Label> label_set(labels.begin(), labels.end());
  ScoreResult result;
  result.extraction_ok = answer.extraction_ok;
  result.valid_permutation = is_valid_permutation(answer, label_set);
  if (result.valid_permutation) {
    result.correct_positions = count_matches(answer.labels, task.answer_key);
  }
  result.reward = score(answer, task.answer_key, label_set, mode);
  return result;
}

ScoreResult score_response(std::string_view response,
                           const ReconstructionTask& task, RewardMode mode) {
  return score_answer(extract_answer(response, task.k), task, mode);
}

std::string score_to_json_line(const std::string& task_id, const ScoreResult& result,
                               int k, RewardMode mode) {
  nlohmann::ordered_json obj;
  obj["task_id"] = task_id;
  obj["reward"] = result.reward;
  obj["extraction_ok"] = result.extraction_ok;
  obj["valid_permutation"] = result.valid_permutation;
  obj["correct_positions"] = result.correct_positions;
  obj["k"] = k;
  obj["mode"] = to_string(mode);
  return obj.dump() + "\n";
}

}  // namespace docrecon
