// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

// Group Relative Policy Optimization for the toy policy.
//
// For each prompt, G trajectories are sampled from a frozen snapshot of the
// policy. Rewards are normalised within the group to give advantages, and the
// policy ascends the batch mean of the clipped surrogate
//
//   min(r * A, clip(r, 1 - eps, 1 + eps) * A),  r = pi(tau) / pi_old(tau).
//
// There is no value function and no KL term.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "docrecon/harness.h"
#include "docrecon/policy.h"
#include "docrecon/reward.h"
#include "docrecon/taskgen.h"

namespace docrecon {

struct GrpoConfig {
  int group_size = 8;
  double clip_epsilon = 0.2;
  double learning_rate = 1e-3;
  double std_floor = 1e-8;
  int prompts_per_batch = 32;
  int iterations = 0;  // 0: one pass over the dataset
  RewardMode reward_mode = RewardMode::kDense;
  int warmup_steps = 5;
  int eval_every = 10;
  int threads = 1;  // rollout workers; results do not depend on this
};

// Throws InputError on out-of-range fields.
void validate_config(const GrpoConfig& config);

// A_i = (R_i - mean) / max(population std, std_floor); all zeros when every
// reward is equal.
std::vector<double> compute_advantages(std::span<const double> rewards, double std_floor);

double clipped_surrogate(double ratio, double advantage, double epsilon);

// True when the clipped branch is the minimum, i.e. the surrogate is flat in
// the ratio and contributes no gradient.
bool clip_active(double ratio, double advantage, double epsilon);

struct RolloutGroup {
  std::size_t task = 0;  // index into the batch
  std::vector<Trajectory> trajectories;
  std::vector<double> old_logprobs;
};

// Samples config.group_size trajectories per task from `params`, scores them
// and fills in advantages. Seeds are keyed by (seed, task_id, trajectory
// index), so the result is the same for any thread count.
std::vector<RolloutGroup> collect_rollouts(const PolicyParams& params,
                                           std::span<const ReconstructionTask> tasks,
                                           std::span<const FeatureTable> features,
                                           const GrpoConfig& config, std::uint64_t seed);

// Batch mean of the clipped surrogate at `params`.
double surrogate_objective(const PolicyParams& params, std::span<const FeatureTable> features,
                           std::span<const RolloutGroup> groups, double epsilon);

// Gradient of surrogate_objective. clip_fraction, when given, receives the
// share of trajectories whose clip bound is active.
FeatureVector surrogate_gradient(const PolicyParams& params,
                                 std::span<const FeatureTable> features,
                                 std::span<const RolloutGroup> groups, double epsilon,
                                 double* clip_fraction = nullptr);

struct StepStats {
  int step = 0;
  double learning_rate = 0.0;  // after warmup scaling
  double mean_reward = 0.0;
  double mean_abs_advantage = 0.0;
  double clip_fraction = 0.0;
  double extraction_rate = 0.0;
};

struct StepResult {
  PolicyParams params;
  StepStats stats;
};

// One on-policy update. `step` is 1-based and drives the linear warmup
// lr * min(1, step / warmup_steps).
StepResult grpo_step(const PolicyParams& params, std::span<const ReconstructionTask> batch,
                     std::span<const FeatureTable> features, const GrpoConfig& config,
                     int step, std::uint64_t seed);
StepResult grpo_step(const PolicyParams& params, std::span<const ReconstructionTask> batch,
                     const GrpoConfig& config, int step, std::uint64_t seed);

struct LogRecord {
  int step = 0;
  std::optional<StepStats> train;        // absent for the step-0 baseline
  std::optional<EvalStats> validation;   // greedy decode on the validation set
};

struct TrainingLog {
  std::vector<LogRecord> records;

  std::string to_jsonl() const;
};

struct TrainResult {
  PolicyParams params;
  TrainingLog log;
};

// Runs grpo_step over consecutive batches in dataset order, wrapping around
// when iterations exceed one pass. Validation (if non-empty) runs before the
// first step, every eval_every steps and after the last step.
TrainResult train(std::span<const ReconstructionTask> dataset,
                  std::span<const ReconstructionTask> validation, const GrpoConfig& config,
                  std::uint64_t seed, const PolicyParams& initial = {});

}  // namespace docrecon
