// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

#include "docrecon/harness.h"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "docrecon/errors.h"
#include "docrecon/io.h"
#include "docrecon/random.h"

namespace docrecon {

using json = nlohmann::ordered_json;

Rational Rational::make(std::uint64_t num, std::uint64_t den) {
  if (den == 0) throw InvariantError("zero denominator");
  const std::uint64_t g = std::gcd(num, den);
  return g == 0 ? Rational{0, 1} : Rational{num / g, den / g};
}

Rational Rational::operator+(const Rational& other) const {
  const std::uint64_t l = std::lcm(den, other.den);
  return make(num * (l / den) + other.num * (l / other.den), l);
}

Rational oracle_reward(std::span<const Label> answer, std::span<const Label> key,
                       RewardMode mode) {
  const std::size_t k = key.size();
  if (k == 0) throw InvariantError("empty key");
  if (std::equal(answer.begin(), answer.end(), key.begin(), key.end())) {
    return {1, 1};
  }
  if (mode == RewardMode::kSparse) return {0, 1};

  std::vector<Label> sorted_answer(answer.begin(), answer.end());
  std::vector<Label> sorted_key(key.begin(), key.end());
  std::sort(sorted_answer.begin(), sorted_answer.end());
  std::sort(sorted_key.begin(), sorted_key.end());
  const bool has_duplicate =
      std::adjacent_find(sorted_answer.begin(), sorted_answer.end()) != sorted_answer.end();
  if (has_duplicate || sorted_answer != sorted_key) return {0, 1};

  std::uint64_t fixed = 0;
  for (std::size_t i = 0; i < k; ++i) fixed += answer[i] == key[i] ? 1 : 0;
  return Rational::make(fixed, k);
}

Rational oracle_expected_reward(int k, RewardMode mode) {
  if (k < 1 || k > 8) throw InputError("oracle supports 1 <= k <= 8");
  std::vector<Label> key;
  for (int i = 0; i < k; ++i) key.push_back(label_at(i));
  std::vector<Label> perm = key;
  Rational sum{0, 1};
  std::uint64_t count = 0;
  do {
    sum = sum + oracle_reward(perm, key, mode);
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return Rational::make(sum.num, sum.den * count);
}

void EvalAccumulator::add(int k, const ScoreResult& result) {
  Tally& t = per_k_[k];
  ++t.n;
  t.extracted += result.extraction_ok ? 1 : 0;
  t.valid += result.valid_permutation ? 1 : 0;
  t.exact += (result.valid_permutation && result.correct_positions == k) ? 1 : 0;
  t.correct_positions += static_cast<std::size_t>(result.correct_positions);
}

EvalReport EvalAccumulator::report(RewardMode mode) const {
  auto stats = [](std::size_t n, std::size_t extracted, std::size_t valid,
                  std::size_t exact, double dense_sum) {
    EvalStats s;
    s.n_tasks = n;
    if (n == 0) return s;
    const auto dn = static_cast<double>(n);
    s.extraction_rate = static_cast<double>(extracted) / dn;
    s.valid_permutation_rate = static_cast<double>(valid) / dn;
    s.exact_match_rate = static_cast<double>(exact) / dn;
    s.mean_sparse = s.exact_match_rate;
    s.mean_dense = dense_sum / dn;
    return s;
  };

  EvalReport report;
  report.mode = mode;
  std::size_t n = 0, extracted = 0, valid = 0, exact = 0;
  double dense_sum = 0.0;
  for (const auto& [k, t] : per_k_) {
    const double k_dense = static_cast<double>(t.correct_positions) / static_cast<double>(k);
    report.per_k[k] = stats(t.n, t.extracted, t.valid, t.exact, k_dense);
    n += t.n;
    extracted += t.extracted;
    valid += t.valid;
    exact += t.exact;
    dense_sum += k_dense;
  }
  report.overall = stats(n, extracted, valid, exact, dense_sum);
  return report;
}

DecodeMode parse_decode_mode(std::string_view name) {
  if (name == "greedy") return DecodeMode::kGreedy;
  if (name == "sample") return DecodeMode::kSample;
  throw InputError("unknown decode mode \"" + std::string(name) +
                   "\" (expected greedy or sample)");
}

EvalReport evaluate_policy(const PolicyParams& params,
                           std::span<const ReconstructionTask> tasks,
                           std::span<const FeatureTable> features, RewardMode mode,
                           DecodeMode decode, std::uint64_t seed) {
  if (features.size() != tasks.size()) {
    throw InvariantError("feature tables do not match tasks");
  }
  EvalAccumulator acc;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    ParsedAnswer answer;
    answer.extraction_ok = true;
    if (decode == DecodeMode::kGreedy) {
      answer.labels = greedy_decode(params, features[i]);
    } else {
      answer.labels = sample_trajectory(params, features[i], tasks[i].task_id,
                                        derive_seed(seed, tasks[i].task_id))
                          .chosen;
    }
    acc.add(tasks[i].k, score_answer(answer, tasks[i], mode));
  }
  return acc.report(mode);
}

EvalReport evaluate_policy(const PolicyParams& params,
                           std::span<const ReconstructionTask> tasks, RewardMode mode,
                           DecodeMode decode, std::uint64_t seed) {
  if (tasks.empty()) throw InputError("no tasks to evaluate");
  std::vector<FeatureTable> features;
  features.reserve(tasks.size());
  for (const auto& t : tasks) features.emplace_back(t);
  return evaluate_policy(params, tasks, features, mode, decode, seed);
}

ResponseScoring score_responses(
    std::span<const ReconstructionTask> tasks,
    std::span<const std::pair<std::string, std::string>> responses, RewardMode mode) {
  ResponseScoring out;
  std::unordered_map<std::string, std::size_t> task_index;
  for (std::size_t i = 0; i < tasks.size(); ++i) task_index.emplace(tasks[i].task_id, i);

  std::set<std::string> orphans;
  std::unordered_map<std::string, std::string_view> latest;
  for (const auto& [task_id, response] : responses) {
    if (!task_index.contains(task_id)) {
      orphans.insert(task_id);
      continue;
    }
    auto [it, inserted] = latest.insert_or_assign(task_id, response);
    if (!inserted) {
      out.warnings.push_back("duplicate response for " + task_id + "; keeping the last one");
    }
  }
  if (!orphans.empty()) {
    std::string ids;
    for (const auto& id : orphans) ids += (ids.empty() ? "" : ", ") + id;
    throw InputError("responses reference unknown task ids: " + ids);
  }

  EvalAccumulator acc;
  std::size_t unanswered = 0;
  for (const auto& task : tasks) {
    auto it = latest.find(task.task_id);
    if (it == latest.end()) {
      ++unanswered;
      continue;
    }
    const ScoreResult result = score_response(it->second, task, mode);
    acc.add(task.k, result);
    out.scores_jsonl += score_to_json_line(task.task_id, result, task.k, mode);
  }
  out.report = acc.report(mode);
  out.report.unanswered_tasks = unanswered;
  if (unanswered > 0) {
    out.warnings.push_back(std::to_string(unanswered) + " tasks have no response");
  }
  return out;
}

ResponseScoring score_response_file(const std::filesystem::path& responses,
                                    const std::filesystem::path& tasks, RewardMode mode) {
  const std::vector<ReconstructionTask> task_list = read_dataset(tasks);
  std::vector<std::pair<std::string, std::string>> pairs;
  for_each_jsonl_line(responses, [&](std::string_view line, std::size_t line_no) {
    const auto where = responses.string() + ":" + std::to_string(line_no) + ": ";
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError(where + e.what());
    }
    if (!obj.is_object() || !obj.contains("task_id") || !obj["task_id"].is_string()) {
      throw InputError(where + "missing string field \"task_id\"");
    }
    if (!obj.contains("response") || !obj["response"].is_string()) {
      throw InputError(where + "missing string field \"response\"");
    }
    pairs.emplace_back(obj["task_id"].get<std::string>(), obj["response"].get<std::string>());
  });
  return score_responses(task_list, pairs, mode);
}

std::string report_to_json(const EvalReport& report) {
  auto stats_json = [](const EvalStats& s) {
    json obj;
    obj["n_tasks"] = s.n_tasks;
    obj["extraction_rate"] = s.extraction_rate;
    obj["valid_permutation_rate"] = s.valid_permutation_rate;
    obj["mean_dense"] = s.mean_dense;
    obj["mean_sparse"] = s.mean_sparse;
    obj["exact_match_rate"] = s.exact_match_rate;
    return obj;
  };
  json obj = stats_json(report.overall);
  obj["mode"] = to_string(report.mode);
  obj["mean_reward"] =
      report.mode == RewardMode::kDense ? report.overall.mean_dense : report.overall.mean_sparse;
  obj["unanswered_tasks"] = report.unanswered_tasks;
  json per_k = json::object();
  for (const auto& [k, s] : report.per_k) per_k[std::to_string(k)] = stats_json(s);
  obj["per_k"] = std::move(per_k);
  return obj.dump(2) + "\n";
}

}  // namespace docrecon
