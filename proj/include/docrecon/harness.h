// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

// Verification backbone: brute-force permutation oracles, policy evaluation
// and scoring of externally produced responses.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "docrecon/policy.h"
#include "docrecon/reward.h"
#include "docrecon/taskgen.h"

namespace docrecon {

// Non-negative fraction kept in lowest terms.
struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  static Rational make(std::uint64_t num, std::uint64_t den);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  Rational operator+(const Rational& other) const;
  bool operator==(const Rational&) const = default;
};

// Reward of `answer` against `key`, written without reference to the reward
// module so the two can be checked against each other.
Rational oracle_reward(std::span<const Label> answer, std::span<const Label> key,
                       RewardMode mode);

// Mean reward over all k! orderings against a fixed key. k in [1, 8].
Rational oracle_expected_reward(int k, RewardMode mode);

struct EvalStats {
  std::size_t n_tasks = 0;
  double extraction_rate = 0.0;
  double valid_permutation_rate = 0.0;
  double mean_dense = 0.0;
  double mean_sparse = 0.0;
  double exact_match_rate = 0.0;
};

struct EvalReport {
  RewardMode mode = RewardMode::kDense;
  EvalStats overall;
  std::map<int, EvalStats> per_k;  // only k values that occur
  std::size_t unanswered_tasks = 0;
};

// Integer tallies; merged and converted to rates only at the end so the
// result does not depend on accumulation order.
class EvalAccumulator {
 public:
  void add(int k, const ScoreResult& result);
  EvalReport report(RewardMode mode) const;

 private:
  struct Tally {
    std::size_t n = 0;
    std::size_t extracted = 0;
    std::size_t valid = 0;
    std::size_t exact = 0;
    std::size_t correct_positions = 0;
  };
  std::map<int, Tally> per_k_;
};

enum class DecodeMode { kGreedy, kSample };
DecodeMode parse_decode_mode(std::string_view name);

EvalReport evaluate_policy(const PolicyParams& params,
                           std::span<const ReconstructionTask> tasks, RewardMode mode,
                           DecodeMode decode, std::uint64_t seed);

// Same, with precomputed feature tables aligned with `tasks`.
EvalReport evaluate_policy(const PolicyParams& params,
                           std::span<const ReconstructionTask> tasks,
                           std::span<const FeatureTable> features, RewardMode mode,
                           DecodeMode decode, std::uint64_t seed);

struct ResponseScoring {
  EvalReport report;
  std::string scores_jsonl;  // one reward-module line per scored task
  std::vector<std::string> warnings;
};

// Joins responses to tasks on task_id. A later duplicate response replaces an
// earlier one with a warning; response ids missing from `tasks` raise an
// InputError listing them.
ResponseScoring score_responses(
    std::span<const ReconstructionTask> tasks,
    std::span<const std::pair<std::string, std::string>> responses, RewardMode mode);

// Reads {task_id, response} jsonl and a task jsonl, then score_responses.
ResponseScoring score_response_file(const std::filesystem::path& responses,
                                    const std::filesystem::path& tasks, RewardMode mode);

std::string report_to_json(const EvalReport& report);

}  // namespace docrecon
