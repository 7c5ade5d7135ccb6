// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "docrecon/errors.h"
#include "docrecon/grpo.h"
#include "docrecon/random.h"
#include "docrecon/synthetic.h"
#include "test_util.h"

using namespace docrecon;

namespace {

std::vector<ReconstructionTask> mirror_tasks(std::size_t n, int k, std::uint64_t seed) {
  TaskOptions opts;
  opts.forbid_adjacent = true;
  std::vector<ReconstructionTask> tasks;
  for (const auto& doc : make_mirror_corpus({.documents = n}, seed)) {
    tasks.push_back(make_task(doc, k, seed, opts));
  }
  return tasks;
}

std::vector<FeatureTable> tables(const std::vector<ReconstructionTask>& tasks) {
  return {tasks.begin(), tasks.end()};
}

}  // namespace

TEST_CASE("compute_advantages: examples") {
  const std::vector<double> pairs = {1.0, 0.0, 0.0, 1.0};
  CHECK(compute_advantages(pairs, 1e-8) == std::vector<double>{1.0, -1.0, -1.0, 1.0});
  const std::vector<double> two = {1.0, 0.0};
  CHECK(compute_advantages(two, 1e-8) == std::vector<double>{1.0, -1.0});

  // mean 0.25, population std sqrt(3)/4.
  const std::vector<double> four = {1.0, 0.0, 0.0, 0.0};
  const auto a = compute_advantages(four, 1e-8);
  CHECK(a[0] == doctest::Approx(std::sqrt(3.0)));
  CHECK(a[1] == doctest::Approx(-1.0 / std::sqrt(3.0)));

  // Dense rewards 0.5, 0.5, 0.25, 0: mean 5/16, std sqrt(11)/16.
  const std::vector<double> mixed = {0.5, 0.5, 0.25, 0.0};
  const auto m = compute_advantages(mixed, 1e-8);
  CHECK(m[0] == doctest::Approx(3.0 / std::sqrt(11.0)));
  CHECK(m[3] == doctest::Approx(-5.0 / std::sqrt(11.0)));

  // Two of three: +-sqrt(2) scaled.
  const std::vector<double> three = {1.0, 1.0, 0.0};
  const auto t = compute_advantages(three, 1e-8);
  CHECK(t[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(t[2] == doctest::Approx(-std::sqrt(2.0)));

  const std::vector<double> flat = {0.25, 0.25, 0.25};
  CHECK(compute_advantages(flat, 1e-8) == std::vector<double>{0.0, 0.0, 0.0});
  const std::vector<double> one = {1.0};
  CHECK_THROWS_AS((void)compute_advantages(one, 1e-8), InvariantError);

  // The floor bounds the scale from below.
  const std::vector<double> tiny = {1e-12, 0.0};
  const auto f = compute_advantages(tiny, 1e-8);
  CHECK(f[0] == doctest::Approx(0.5e-12 / 1e-8));
}

TEST_CASE("compute_advantages: zero mean and unit variance") {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const auto g = 2 + rng.uniform_below(15);
    std::vector<double> r;
    for (std::uint64_t i = 0; i < g; ++i) r.push_back(static_cast<double>(rng.uniform_below(5)) / 4.0);
    const auto a = compute_advantages(r, 1e-8);
    double mean = 0.0, sq = 0.0;
    for (double x : a) mean += x;
    for (double x : a) sq += x * x;
    mean /= static_cast<double>(g);
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
    const bool flat = std::all_of(r.begin(), r.end(), [&](double x) { return x == r[0]; });
    CHECK(sq / static_cast<double>(g) == doctest::Approx(flat ? 0.0 : 1.0).scale(1.0));
  }
}

TEST_CASE("clipped surrogate: examples") {
  CHECK(clipped_surrogate(1.5, 1.0, 0.2) == doctest::Approx(1.2));
  CHECK(clipped_surrogate(0.5, 1.0, 0.2) == doctest::Approx(0.5));
  CHECK(clipped_surrogate(1.5, -1.0, 0.2) == doctest::Approx(-1.5));
  CHECK(clipped_surrogate(0.5, -1.0, 0.2) == doctest::Approx(-0.8));
  CHECK(clipped_surrogate(1.0, 2.0, 0.2) == 2.0);
  CHECK(clip_active(1.5, 1.0, 0.2));
  CHECK_FALSE(clip_active(0.5, 1.0, 0.2));
  CHECK(clip_active(0.5, -1.0, 0.2));
  CHECK_FALSE(clip_active(1.5, -1.0, 0.2));
  CHECK_FALSE(clip_active(1.1, 1.0, 0.2));
}

TEST_CASE("clipped surrogate: pessimistic bound") {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const double r = 3.0 * rng.uniform01();
    const double a = 4.0 * rng.uniform01() - 2.0;
    const double s = clipped_surrogate(r, a, 0.2);
    CHECK(s <= r * a + 1e-15);
    if (r >= 0.8 && r <= 1.2) CHECK(s == doctest::Approx(r * a));
  }
}

TEST_CASE("validate_config") {
  GrpoConfig c;
  CHECK_NOTHROW(validate_config(c));
  c.group_size = 1;
  CHECK_THROWS_AS(validate_config(c), InputError);
  c = {};
  c.clip_epsilon = 0.0;
  CHECK_THROWS_AS(validate_config(c), InputError);
  c = {};
  c.learning_rate = -1.0;
  CHECK_THROWS_AS(validate_config(c), InputError);
  c = {};
  c.threads = 0;
  CHECK_THROWS_AS(validate_config(c), InputError);
}

TEST_CASE("collect_rollouts: group structure and thread invariance") {
  const auto tasks = mirror_tasks(12, 4, 5);
  const auto feats = tables(tasks);
  GrpoConfig config;
  config.group_size = 6;
  PolicyParams p;
  p.weights = {1.0, 0.5, 0.0, 0.0};
  const auto serial = collect_rollouts(p, tasks, feats, config, 77);
  config.threads = 4;
  const auto parallel = collect_rollouts(p, tasks, feats, config, 77);
  REQUIRE(serial.size() == tasks.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].task == i);
    REQUIRE(serial[i].trajectories.size() == 6);
    double adv_sum = 0.0;
    for (std::size_t g = 0; g < 6; ++g) {
      const auto& a = serial[i].trajectories[g];
      const auto& b = parallel[i].trajectories[g];
      CHECK(a.chosen == b.chosen);
      CHECK(a.reward == b.reward);
      CHECK(a.advantage == b.advantage);
      CHECK(serial[i].old_logprobs[g] == a.total_logprob);
      CHECK(a.reward == score_answer({a.chosen, true}, tasks[i], RewardMode::kDense).reward);
      adv_sum += a.advantage;
    }
    CHECK(adv_sum == doctest::Approx(0.0).scale(1.0));
  }
}

TEST_CASE("surrogate gradient at the sampling policy is the policy gradient") {
  const auto tasks = mirror_tasks(8, 5, 9);
  const auto feats = tables(tasks);
  GrpoConfig config;
  PolicyParams p;
  p.weights = {2.0, -0.5, 0.3, 0.1};
  const auto groups = collect_rollouts(p, tasks, feats, config, 1);

  FeatureVector expected{};
  std::size_t n = 0;
  for (const auto& group : groups) {
    for (const auto& traj : group.trajectories) {
      const auto g = grad_logprob(p, feats[group.task], traj.chosen);
      for (std::size_t f = 0; f < kNumFeatures; ++f) expected[f] += traj.advantage * g[f];
      ++n;
    }
  }
  double clip = -1.0;
  const FeatureVector got = surrogate_gradient(p, feats, groups, 0.2, &clip);
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    CHECK(std::abs(got[f] - expected[f] / static_cast<double>(n)) < 1e-10);
  }
  CHECK(clip == 0.0);
  CHECK(surrogate_objective(p, feats, groups, 0.2) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("surrogate gradient matches finite differences away from the clip boundary") {
  const auto tasks = mirror_tasks(6, 4, 13);
  const auto feats = tables(tasks);
  PolicyParams old;
  old.weights = {1.0, 1.0, 0.0, 0.0};
  const auto groups = collect_rollouts(old, tasks, feats, GrpoConfig{}, 2);
  PolicyParams p = old;
  p.weights[kOverlapPrev] += 0.05;  // small move: most ratios stay inside the clip range
  const FeatureVector g = surrogate_gradient(p, feats, groups, 0.2);
  const double h = 1e-6;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    PolicyParams up = p, down = p;
    up.weights[f] += h;
    down.weights[f] -= h;
    const double fd = (surrogate_objective(up, feats, groups, 0.2) -
                       surrogate_objective(down, feats, groups, 0.2)) / (2 * h);
    CHECK(std::abs(fd - g[f]) < 1e-8 + 1e-5 * std::abs(g[f]));
  }
}

TEST_CASE("surrogate gradient drops clipped trajectories") {
  const auto tasks = mirror_tasks(6, 4, 17);
  const auto feats = tables(tasks);
  const auto groups = collect_rollouts(PolicyParams{}, tasks, feats, GrpoConfig{}, 3);
  PolicyParams far;
  far.weights = {30.0, 30.0, 0.0, 0.0};
  double clip = 0.0;
  (void)surrogate_gradient(far, feats, groups, 0.2, &clip);
  CHECK(clip > 0.0);
  CHECK(clip <= 1.0);
}

TEST_CASE("grpo_step: positive-advantage trajectories become more likely") {
  const auto tasks = mirror_tasks(16, 4, 21);
  const auto feats = tables(tasks);
  GrpoConfig config;
  config.learning_rate = 0.05;
  config.warmup_steps = 0;
  const PolicyParams start;
  const auto groups = collect_rollouts(start, tasks, feats, config, 5);
  const StepResult stepped = grpo_step(start, tasks, feats, config, 1, 5);
  // Same seed: the step saw exactly these rollouts.
  double before = 0.0, after = 0.0;
  for (const auto& group : groups) {
    for (const auto& traj : group.trajectories) {
      before += traj.advantage * logprob(start, feats[group.task], traj.chosen);
      after += traj.advantage * logprob(stepped.params, feats[group.task], traj.chosen);
    }
  }
  CHECK(after > before);
  CHECK(stepped.stats.learning_rate == 0.05);
  CHECK(stepped.stats.clip_fraction == 0.0);
  CHECK(stepped.stats.extraction_rate == 1.0);
  CHECK(stepped.params.weights[kOverlapPrev] > 0.0);
}

TEST_CASE("grpo_step: zero advantages leave the policy unchanged") {
  // A near-deterministic policy samples one ordering per group, so every
  // advantage vanishes.
  const auto tasks = mirror_tasks(4, 3, 23);
  PolicyParams sharp;
  sharp.weights = {400.0, 400.0, 0.0, 0.0};
  GrpoConfig config;
  config.warmup_steps = 0;
  const StepResult r = grpo_step(sharp, tasks, config, 1, 9);
  CHECK(r.stats.mean_abs_advantage == 0.0);
  CHECK(r.params == sharp);
  CHECK(r.stats.mean_reward == 1.0);
}

TEST_CASE("grpo_step: warmup schedule and preconditions") {
  const auto tasks = mirror_tasks(2, 2, 1);
  GrpoConfig config;
  config.learning_rate = 0.1;
  config.warmup_steps = 4;
  CHECK(grpo_step({}, tasks, config, 1, 0).stats.learning_rate == doctest::Approx(0.025));
  CHECK(grpo_step({}, tasks, config, 4, 0).stats.learning_rate == doctest::Approx(0.1));
  CHECK(grpo_step({}, tasks, config, 9, 0).stats.learning_rate == doctest::Approx(0.1));
  CHECK_THROWS_AS((void)grpo_step({}, tasks, config, 0, 0), InvariantError);
  CHECK_THROWS_AS((void)grpo_step({}, std::span<const ReconstructionTask>{}, config, 1, 0),
                  InputError);
}

TEST_CASE("train: deterministic, thread-invariant, logs validation") {
  const auto data = mirror_tasks(40, 4, 31);
  const std::vector<ReconstructionTask> train_set(data.begin(), data.begin() + 30);
  const std::vector<ReconstructionTask> val(data.begin() + 30, data.end());
  GrpoConfig config;
  config.prompts_per_batch = 8;
  config.iterations = 6;
  config.eval_every = 3;
  config.learning_rate = 0.2;
  const TrainResult a = train(train_set, val, config, 42);
  const TrainResult b = train(train_set, val, config, 42);
  config.threads = 3;
  const TrainResult c = train(train_set, val, config, 42);
  CHECK(a.params == b.params);
  CHECK(a.params == c.params);
  CHECK(a.log.to_jsonl() == c.log.to_jsonl());

  REQUIRE(a.log.records.size() == 7);
  CHECK(a.log.records[0].step == 0);
  CHECK_FALSE(a.log.records[0].train.has_value());
  CHECK(a.log.records[0].validation.has_value());
  CHECK(a.log.records[3].validation.has_value());
  CHECK_FALSE(a.log.records[4].validation.has_value());
  CHECK(a.log.records[6].validation.has_value());
  CHECK(a.log.records[6].train->step == 6);
}

TEST_CASE("train: without validation and with default iterations") {
  const auto data = mirror_tasks(20, 3, 37);
  GrpoConfig config;
  config.prompts_per_batch = 8;
  const TrainResult r = train(data, {}, config, 1);
  REQUIRE(r.log.records.size() == 3);  // ceil(20 / 8)
  for (const auto& rec : r.log.records) CHECK_FALSE(rec.validation.has_value());
  CHECK(r.log.to_jsonl().find("val_dense") == std::string::npos);
  CHECK_THROWS_AS((void)train({}, {}, config, 1), InputError);
}
