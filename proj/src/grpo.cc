// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

#include "docrecon/grpo.h"

#include <algorithm>
#include <cmath>
#include <thread>

#include <json.hpp>

#include "docrecon/errors.h"
#include "docrecon/random.h"

namespace docrecon {

void validate_config(const GrpoConfig& config) {
  if (config.group_size < 2) throw InputError("group_size must be at least 2");
  if (!(config.clip_epsilon > 0.0 && config.clip_epsilon < 1.0)) {
    throw InputError("clip_epsilon must be in (0, 1)");
  }
  if (!(config.learning_rate > 0.0)) throw InputError("learning_rate must be positive");
  if (!(config.std_floor > 0.0)) throw InputError("std_floor must be positive");
  if (config.prompts_per_batch < 1) throw InputError("prompts_per_batch must be at least 1");
  if (config.iterations < 0) throw InputError("iterations must be non-negative");
  if (config.warmup_steps < 0) throw InputError("warmup_steps must be non-negative");
  if (config.eval_every < 1) throw InputError("eval_every must be at least 1");
  if (config.threads < 1) throw InputError("threads must be at least 1");
}

std::vector<double> compute_advantages(std::span<const double> rewards, double std_floor) {
  const std::size_t g = rewards.size();
  if (g < 2) throw InvariantError("a group needs at least two rewards");
  std::vector<double> adv(g, 0.0);
  if (std::all_of(rewards.begin(), rewards.end(),
                  [&](double r) { return r == rewards[0]; })) {
    return adv;
  }
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(g);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(g);
  const double scale = std::max(std::sqrt(var), std_floor);
  for (std::size_t i = 0; i < g; ++i) adv[i] = (rewards[i] - mean) / scale;
  return adv;
}

double clipped_surrogate(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

bool clip_active(double ratio, double advantage, double epsilon) {
  return (advantage > 0.0 && ratio > 1.0 + epsilon) ||
         (advantage < 0.0 && ratio < 1.0 - epsilon);
}

std::vector<RolloutGroup> collect_rollouts(const PolicyParams& params,
                                           std::span<const ReconstructionTask> tasks,
                                           std::span<const FeatureTable> features,
                                           const GrpoConfig& config, std::uint64_t seed) {
  if (features.size() != tasks.size()) {
    throw InvariantError("feature tables do not match tasks");
  }
  std::vector<RolloutGroup> groups(tasks.size());

  auto rollout = [&](std::size_t i) {
    const ReconstructionTask& task = tasks[i];
    RolloutGroup& group = groups[i];
    group.task = i;
    const std::uint64_t task_seed = derive_seed(seed, task.task_id);
    std::vector<double> rewards;
    for (int g = 0; g < config.group_size; ++g) {
      Trajectory traj = sample_trajectory(params, features[i], task.task_id,
                                          derive_seed(task_seed, static_cast<std::uint64_t>(g)));
      ParsedAnswer answer{traj.chosen, true};
      traj.reward = score_answer(answer, task, config.reward_mode).reward;
      rewards.push_back(traj.reward);
      group.old_logprobs.push_back(traj.total_logprob);
      group.trajectories.push_back(std::move(traj));
    }
    const std::vector<double> adv = compute_advantages(rewards, config.std_floor);
    for (std::size_t g = 0; g < adv.size(); ++g) group.trajectories[g].advantage = adv[g];
  };

  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config.threads),
                                             tasks.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) rollout(i);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < tasks.size(); i += workers) rollout(i);
      });
    }
  }
  return groups;
}

namespace {

std::size_t trajectory_count(std::span<const RolloutGroup> groups) {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.trajectories.size();
  return n;
}

}  // namespace

double surrogate_objective(const PolicyParams& params, std::span<const FeatureTable> features,
                           std::span<const RolloutGroup> groups, double epsilon) {
  double total = 0.0;
  for (const auto& group : groups) {
    const FeatureTable& table = features[group.task];
    for (std::size_t g = 0; g < group.trajectories.size(); ++g) {
      const Trajectory& traj = group.trajectories[g];
      const double ratio =
          std::exp(logprob(params, table, traj.chosen) - group.old_logprobs[g]);
      total += clipped_surrogate(ratio, traj.advantage, epsilon);
    }
  }
  const std::size_t n = trajectory_count(groups);
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

FeatureVector surrogate_gradient(const PolicyParams& params,
                                 std::span<const FeatureTable> features,
                                 std::span<const RolloutGroup> groups, double epsilon,
                                 double* clip_fraction) {
  FeatureVector grad{};
  std::size_t clipped = 0;
  for (const auto& group : groups) {
    const FeatureTable& table = features[group.task];
    for (std::size_t g = 0; g < group.trajectories.size(); ++g) {
      const Trajectory& traj = group.trajectories[g];
      if (traj.advantage == 0.0) continue;
      const double ratio =
          std::exp(logprob(params, table, traj.chosen) - group.old_logprobs[g]);
      if (clip_active(ratio, traj.advantage, epsilon)) {
        ++clipped;
        continue;
      }
      // d(r * A) = A * r * grad log pi.
      const FeatureVector g_log = grad_logprob(params, table, traj.chosen);
      for (std::size_t f = 0; f < kNumFeatures; ++f) {
        grad[f] += traj.advantage * ratio * g_log[f];
      }
    }
  }
  const std::size_t n = trajectory_count(groups);
  if (n > 0) {
    for (double& v : grad) v /= static_cast<double>(n);
  }
  if (clip_fraction != nullptr) {
    *clip_fraction = n == 0 ? 0.0 : static_cast<double>(clipped) / static_cast<double>(n);
  }
  return grad;
}

StepResult grpo_step(const PolicyParams& params, std::span<const ReconstructionTask> batch,
                     std::span<const FeatureTable> features, const GrpoConfig& config,
                     int step, std::uint64_t seed) {
  validate_config(config);
  if (batch.empty()) throw InputError("grpo_step needs a non-empty batch");
  if (step < 1) throw InvariantError("steps are 1-based");

  const PolicyParams old_params = params;
  const std::vector<RolloutGroup> groups =
      collect_rollouts(old_params, batch, features, config, seed);

  StepResult result;
  StepStats& stats = result.stats;
  stats.step = step;
  const double warmup =
      config.warmup_steps == 0
          ? 1.0
          : std::min(1.0, static_cast<double>(step) / static_cast<double>(config.warmup_steps));
  stats.learning_rate = config.learning_rate * warmup;

  const std::size_t n = trajectory_count(groups);
  double reward_sum = 0.0;
  double abs_adv_sum = 0.0;
  for (const auto& group : groups) {
    for (const auto& traj : group.trajectories) {
      reward_sum += traj.reward;
      abs_adv_sum += std::abs(traj.advantage);
    }
  }
  stats.mean_reward = reward_sum / static_cast<double>(n);
  stats.mean_abs_advantage = abs_adv_sum / static_cast<double>(n);
  // The toy policy only ever emits complete orderings.
  stats.extraction_rate = 1.0;

  const FeatureVector grad =
      surrogate_gradient(params, features, groups, config.clip_epsilon, &stats.clip_fraction);
  result.params = params;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    result.params.weights[f] += stats.learning_rate * grad[f];
  }
  return result;
}

StepResult grpo_step(const PolicyParams& params, std::span<const ReconstructionTask> batch,
                     const GrpoConfig& config, int step, std::uint64_t seed) {
  std::vector<FeatureTable> features;
  features.reserve(batch.size());
  for (const auto& t : batch) features.emplace_back(t);
  return grpo_step(params, batch, features, config, step, seed);
}

std::string TrainingLog::to_jsonl() const {
  std::string out;
  for (const auto& record : records) {
    nlohmann::ordered_json obj;
    obj["step"] = record.step;
    if (record.train) {
      obj["learning_rate"] = record.train->learning_rate;
      obj["mean_reward"] = record.train->mean_reward;
      obj["mean_abs_advantage"] = record.train->mean_abs_advantage;
      obj["clip_fraction"] = record.train->clip_fraction;
      obj["extraction_rate"] = record.train->extraction_rate;
    }
    if (record.validation) {
      obj["val_extraction_rate"] = record.validation->extraction_rate;
      obj["val_dense"] = record.validation->mean_dense;
      obj["val_sparse"] = record.validation->mean_sparse;
    }
    out += obj.dump();
    out += '\n';
  }
  return out;
}

TrainResult train(std::span<const ReconstructionTask> dataset,
                  std::span<const ReconstructionTask> validation, const GrpoConfig& config,
                  std::uint64_t seed, const PolicyParams& initial) {
  validate_config(config);
  if (dataset.empty()) throw InputError("training dataset is empty");

  std::vector<FeatureTable> features;
  features.reserve(dataset.size());
  for (const auto& t : dataset) features.emplace_back(t);
  std::vector<FeatureTable> val_features;
  val_features.reserve(validation.size());
  for (const auto& t : validation) val_features.emplace_back(t);

  const auto n = dataset.size();
  const auto per_batch = static_cast<std::size_t>(config.prompts_per_batch);
  const int iterations = config.iterations > 0
                             ? config.iterations
                             : static_cast<int>((n + per_batch - 1) / per_batch);

  auto evaluate = [&](const PolicyParams& params) -> std::optional<EvalStats> {
    if (validation.empty()) return std::nullopt;
    return evaluate_policy(params, validation, val_features, config.reward_mode,
                           DecodeMode::kGreedy, seed)
        .overall;
  };

  TrainResult result;
  result.params = initial;
  if (!validation.empty()) {
    result.log.records.push_back(LogRecord{0, std::nullopt, evaluate(result.params)});
  }

  std::vector<ReconstructionTask> batch;
  std::vector<FeatureTable> batch_features;
  for (int step = 1; step <= iterations; ++step) {
    batch.clear();
    batch_features.clear();
    const std::size_t start = (static_cast<std::size_t>(step - 1) * per_batch) % n;
    for (std::size_t j = 0; j < std::min(per_batch, n); ++j) {
      batch.push_back(dataset[(start + j) % n]);
      batch_features.push_back(features[(start + j) % n]);
    }
    StepResult stepped = grpo_step(result.params, batch, batch_features, config, step,
                                   derive_seed(seed, static_cast<std::uint64_t>(step)));
    result.params = stepped.params;

    LogRecord record;
    record.step = step;
    record.train = stepped.stats;
    if (step % config.eval_every == 0 || step == iterations) {
      record.validation = evaluate(result.params);
    }
    result.log.records.push_back(std::move(record));
  }
  return result;
}

}  // namespace docrecon
