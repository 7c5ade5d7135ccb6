// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "docrecon/errors.h"
#include "docrecon/harness.h"
#include "docrecon/random.h"
#include "docrecon/synthetic.h"
#include "test_util.h"

using namespace docrecon;
using docrecon::testing::labels_of;

namespace {

std::uint64_t factorial(int k) {
  std::uint64_t f = 1;
  for (int i = 2; i <= k; ++i) f *= static_cast<std::uint64_t>(i);
  return f;
}

std::vector<ReconstructionTask> tasks_with_k(std::initializer_list<int> ks) {
  std::vector<ReconstructionTask> out;
  int i = 0;
  for (int k : ks) {
    out.push_back(make_task(testing::make_document("h" + std::to_string(i++), 10), k, 3));
  }
  return out;
}

}  // namespace

TEST_CASE("Rational") {
  CHECK(Rational::make(6, 8) == Rational{3, 4});
  CHECK(Rational::make(0, 5) == Rational{0, 1});
  CHECK(Rational{1, 6} + Rational{1, 3} == Rational{1, 2});
  CHECK_THROWS_AS((void)Rational::make(1, 0), InvariantError);
}

TEST_CASE("oracle_expected_reward: exact values") {
  CHECK(oracle_expected_reward(1, RewardMode::kDense) == Rational{1, 1});
  CHECK(oracle_expected_reward(2, RewardMode::kDense) == Rational{1, 2});
  CHECK(oracle_expected_reward(3, RewardMode::kSparse) == Rational{1, 6});
  for (int k = 1; k <= 8; ++k) {
    CHECK(oracle_expected_reward(k, RewardMode::kDense) == Rational::make(1, static_cast<std::uint64_t>(k)));
    CHECK(oracle_expected_reward(k, RewardMode::kSparse) == Rational{1, factorial(k)});
  }
  CHECK_THROWS_AS((void)oracle_expected_reward(0, RewardMode::kDense), InputError);
  CHECK_THROWS_AS((void)oracle_expected_reward(9, RewardMode::kDense), InputError);
}

TEST_CASE("oracle_reward: examples") {
  const auto key = labels_of("BADC");
  CHECK(oracle_reward(labels_of("BACD"), key, RewardMode::kDense) == Rational{1, 2});
  CHECK(oracle_reward(labels_of("BADC"), key, RewardMode::kSparse) == Rational{1, 1});
  CHECK(oracle_reward(labels_of("BBDC"), key, RewardMode::kDense) == Rational{0, 1});
  CHECK(oracle_reward(labels_of("BAD"), key, RewardMode::kDense) == Rational{0, 1});
}

TEST_CASE("uniform random orderings average 1/k dense reward") {
  // Monte-Carlo mean of uniformly shuffled answers lies within 4 standard
  // errors of the exact expectation.
  Rng rng(17);
  for (int k : {2, 4, 6, 8}) {
    const auto task = tasks_with_k({k})[0];
    const int n = 20000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      auto answer = option_labels(task);
      rng.shuffle(std::span<Label>(answer));
      const double r = score_answer({answer, true}, task, RewardMode::kDense).reward;
      sum += r;
      sq += r * r;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    CHECK(std::abs(mean - 1.0 / k) < 4 * se);
  }
}

TEST_CASE("evaluate_policy: zero weights decode alphabetically") {
  auto tasks = tasks_with_k({2, 3});
  // Scoring only reads the key, so pin it.
  tasks[0].answer_key = labels_of("AB");
  tasks[1].answer_key = labels_of("BAC");
  const EvalReport r = evaluate_policy(PolicyParams{}, tasks, RewardMode::kDense,
                                       DecodeMode::kGreedy, 0);
  CHECK(r.overall.n_tasks == 2);
  CHECK(r.overall.extraction_rate == 1.0);
  CHECK(r.overall.valid_permutation_rate == 1.0);
  // ABC against BAC: one fixed point of three.
  CHECK(r.per_k.at(2).mean_dense == 1.0);
  CHECK(r.per_k.at(3).mean_dense == doctest::Approx(1.0 / 3.0));
  CHECK(r.overall.mean_dense == doctest::Approx((1.0 + 1.0 / 3.0) / 2.0));
  CHECK(r.overall.mean_sparse == 0.5);
  CHECK(r.overall.exact_match_rate == 0.5);
}

TEST_CASE("evaluate_policy: sampling is seeded per task") {
  const auto tasks = tasks_with_k({4, 4, 6, 8});
  const auto a = evaluate_policy(PolicyParams{}, tasks, RewardMode::kDense, DecodeMode::kSample, 5);
  const auto b = evaluate_policy(PolicyParams{}, tasks, RewardMode::kDense, DecodeMode::kSample, 5);
  CHECK(report_to_json(a) == report_to_json(b));
  CHECK_THROWS_AS((void)evaluate_policy(PolicyParams{}, std::span<const ReconstructionTask>{},
                                        RewardMode::kDense, DecodeMode::kGreedy, 0),
                  InputError);
  CHECK(parse_decode_mode("sample") == DecodeMode::kSample);
  CHECK_THROWS_AS((void)parse_decode_mode("beam"), InputError);
}

TEST_CASE("EvalAccumulator is order independent") {
  Rng rng(4);
  std::vector<std::pair<int, ScoreResult>> items;
  for (int i = 0; i < 300; ++i) {
    const int k = 2 + 2 * static_cast<int>(rng.uniform_below(4));
    ScoreResult s;
    s.extraction_ok = rng.uniform_below(10) != 0;
    s.valid_permutation = s.extraction_ok && rng.uniform_below(3) != 0;
    s.correct_positions = s.valid_permutation ? static_cast<int>(rng.uniform_below(k + 1)) : 0;
    s.reward = static_cast<double>(s.correct_positions) / k;
    items.emplace_back(k, s);
  }
  EvalAccumulator fwd, rev;
  for (const auto& [k, s] : items) fwd.add(k, s);
  for (auto it = items.rbegin(); it != items.rend(); ++it) rev.add(it->first, it->second);
  CHECK(report_to_json(fwd.report(RewardMode::kDense)) == report_to_json(rev.report(RewardMode::kDense)));
}

TEST_CASE("score_responses: examples") {
  const auto tasks = tasks_with_k({2, 4});
  const std::vector<std::pair<std::string, std::string>> responses = {
      {tasks[0].task_id, "I think " + format_boxed(tasks[0].answer_key)},
      {tasks[1].task_id, "\\boxed{A, A, B, C}"},
  };
  const ResponseScoring s = score_responses(tasks, responses, RewardMode::kDense);
  CHECK(s.report.overall.n_tasks == 2);
  CHECK(s.report.overall.mean_dense == 0.5);
  CHECK(s.report.overall.valid_permutation_rate == 0.5);
  CHECK(s.report.overall.extraction_rate == 1.0);
  CHECK(s.report.unanswered_tasks == 0);
  CHECK(s.warnings.empty());
  std::size_t lines = 0;
  for (char c : s.scores_jsonl) lines += c == '\n';
  CHECK(lines == 2);
}

TEST_CASE("score_responses: orphans, duplicates, missing") {
  const auto tasks = tasks_with_k({2, 2, 2});
  const std::vector<std::pair<std::string, std::string>> orphaned = {
      {tasks[0].task_id, "\\boxed{A, B}"}, {"nope#k2", "\\boxed{A, B}"}, {"zzz", "x"}};
  CHECK_THROWS_WITH_AS((void)score_responses(tasks, orphaned, RewardMode::kDense),
                       "responses reference unknown task ids: nope#k2, zzz", InputError);

  const std::vector<std::pair<std::string, std::string>> dup = {
      {tasks[0].task_id, "garbage"}, {tasks[0].task_id, format_boxed(tasks[0].answer_key)}};
  const ResponseScoring s = score_responses(tasks, dup, RewardMode::kSparse);
  CHECK(s.report.overall.n_tasks == 1);
  CHECK(s.report.overall.mean_sparse == 1.0);
  CHECK(s.report.unanswered_tasks == 2);
  CHECK(s.warnings.size() == 2);
}

TEST_CASE("score_response_file and report json") {
  const auto dir = testing::scratch_dir("harness_files");
  const auto tasks = tasks_with_k({2, 4});
  write_dataset(dir / "tasks.jsonl", tasks);
  {
    std::ofstream out(dir / "responses.jsonl");
    nlohmann::json a{{"task_id", tasks[0].task_id}, {"response", format_boxed(tasks[0].answer_key)}};
    out << a.dump() << "\n\n";
    out << nlohmann::json{{"task_id", tasks[1].task_id}, {"response", "none"}}.dump() << "\n";
  }
  const ResponseScoring s = score_response_file(dir / "responses.jsonl", dir / "tasks.jsonl",
                                                RewardMode::kDense);
  const auto report = nlohmann::json::parse(report_to_json(s.report));
  CHECK(report["n_tasks"] == 2);
  CHECK(report["mean_reward"] == 0.5);
  CHECK(report["extraction_rate"] == 0.5);
  CHECK(report["per_k"]["4"]["mean_dense"] == 0.0);
  CHECK(report["mode"] == "dense");

  std::ofstream(dir / "bad.jsonl") << "{\"task_id\": \"x\"}\n";
  CHECK_THROWS_WITH_AS((void)score_response_file(dir / "bad.jsonl", dir / "tasks.jsonl",
                                                 RewardMode::kDense),
                       doctest::Contains(":1: missing string field \"response\""), InputError);
}
