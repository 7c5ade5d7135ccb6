// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

// Verifiable reconstruction reward.
//
// dense:  1 if the answer equals the key, the fraction of correctly placed
//         labels if the answer is a valid permutation, 0 otherwise.
// sparse: 1 if the answer equals the key, 0 otherwise.

#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "docrecon/protocol.h"
#include "docrecon/taskgen.h"

namespace docrecon {

enum class RewardMode { kDense, kSparse };

RewardMode parse_reward_mode(std::string_view name);
std::string_view to_string(RewardMode mode);

double score(const ParsedAnswer& answer, const std::vector<Label>& answer_key,
             const std::set<Label>& option_labels, RewardMode mode);

struct ScoreResult {
  double reward = 0.0;
  bool extraction_ok = false;
  bool valid_permutation = false;
  // Positions where the answer matches the key; 0 unless the answer is a
  // valid permutation, so that dense reward == correct_positions / k.
  int correct_positions = 0;
};

ScoreResult score_answer(const ParsedAnswer& answer, const ReconstructionTask& task,
                         RewardMode mode);

ScoreResult score_response(std::string_view response,
                           const ReconstructionTask& task, RewardMode mode);

// {task_id, reward, extraction_ok, valid_permutation, correct_positions, k, mode}
std::string score_to_json_line(const std::string& task_id, const ScoreResult& result,
                               int k, RewardMode mode);

}  // namespace docrecon
