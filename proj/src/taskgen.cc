// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

#include "docrecon/taskgen.h"

#include <algorithm>
#include <numeric>
#include <set>

#include <json.hpp>

#include "docrecon/errors.h"
#include "docrecon/io.h"
#include "docrecon/random.h"

namespace docrecon {

using json = nlohmann::ordered_json;

namespace {

std::vector<bool> eligible_positions(const Document& doc,
                                     const TaskOptions& options) {
  std::vector<bool> eligible(doc.paragraphs.size());
  for (std::size_t i = 0; i < doc.paragraphs.size(); ++i) {
    eligible[i] = utf8_length(trim(doc.paragraphs[i])) >= options.min_paragraph_chars;
  }
  return eligible;
}

// Uniform k-subset of eligible positions with no two adjacent. ways[i][j]
// counts the admissible j-subsets of positions [i, n).
std::vector<std::size_t> sample_non_adjacent(const std::vector<bool>& eligible,
                                             int k, Rng& rng) {
  const std::size_t n = eligible.size();
  const auto kk = static_cast<std::size_t>(k);
  std::vector<std::vector<double>> ways(n + 2, std::vector<double>(kk + 1, 0.0));
  ways[n][0] = ways[n + 1][0] = 1.0;
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = 0; j <= kk; ++j) {
      ways[i][j] = ways[i + 1][j];
      if (eligible[i] && j > 0) ways[i][j] += ways[i + 2][j - 1];
    }
  }
  std::vector<std::size_t> picked;
  std::size_t need = kk;
  for (std::size_t i = 0; i < n && need > 0;) {
    const double take = eligible[i] ? ways[i + 2][need - 1] : 0.0;
    if (take > 0.0 && rng.uniform01() * ways[i][need] < take) {
      picked.push_back(i);
      --need;
      i += 2;
    } else {
      ++i;
    }
  }
  if (need != 0) throw InvariantError("non-adjacent sampler ran out of positions");
  return picked;
}

std::vector<std::size_t> sample_any(const std::vector<bool>& eligible, int k,
                                    Rng& rng) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < eligible.size(); ++i) {
    if (eligible[i]) pool.push_back(i);
  }
  const auto kk = static_cast<std::size_t>(k);
  for (std::size_t i = 0; i < kk; ++i) {
    auto j = i + static_cast<std::size_t>(rng.uniform_below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(kk);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::string line_error(const std::filesystem::path& path, std::size_t line,
                       const std::string& what) {
  return path.string() + ":" + std::to_string(line) + ": " + what;
}

ReconstructionTask task_from_json(const json& obj) {
  auto field = [&](const char* name) -> const json& {
    auto it = obj.find(name);
    if (it == obj.end()) {
      throw InputError(std::string("missing field \"") + name + "\"");
    }
    return *it;
  };
  auto bad = [](const char* name, const char* what) {
    return InputError(std::string("field \"") + name + "\" " + what);
  };

  ReconstructionTask task;
  const json& task_id = field("task_id");
  if (!task_id.is_string()) throw bad("task_id", "must be a string");
  task.task_id = task_id.get<std::string>();
  const json& doc_id = field("doc_id");
  if (!doc_id.is_string()) throw bad("doc_id", "must be a string");
  task.doc_id = doc_id.get<std::string>();
  const json& k = field("k");
  if (!k.is_number_integer()) throw bad("k", "must be an integer");
  task.k = k.get<int>();

  const json& segments = field("segments");
  if (!segments.is_array()) throw bad("segments", "must be an array");
  for (const auto& s : segments) {
    if (!s.is_object() || !s.contains("type") || !s["type"].is_string()) {
      throw bad("segments", "entries need a string \"type\"");
    }
    const auto type = s["type"].get<std::string>();
    if (type == "text") {
      if (!s.contains("text") || !s["text"].is_string()) {
        throw bad("segments", "text entries need a string \"text\"");
      }
      task.segments.emplace_back(TextSegment{s["text"].get<std::string>()});
    } else if (type == "placeholder") {
      if (!s.contains("index") || !s["index"].is_number_integer()) {
        throw bad("segments", "placeholder entries need an integer \"index\"");
      }
      task.segments.emplace_back(Placeholder{s["index"].get<int>()});
    } else {
      throw bad("segments", "has an unknown type");
    }
  }

  const json& options = field("options");
  if (!options.is_object()) throw bad("options", "must be an object");
  for (const auto& [label, text] : options.items()) {
    if (label.size() != 1 || label[0] < 'A' || label[0] > 'Z') {
      throw bad("options", "keys must be single uppercase letters");
    }
    if (!text.is_string()) throw bad("options", "values must be strings");
    task.options[label[0]] = text.get<std::string>();
  }

  const json& answer_key = field("answer_key");
  if (!answer_key.is_array()) throw bad("answer_key", "must be an array");
  for (const auto& a : answer_key) {
    if (!a.is_string() || a.get<std::string>().size() != 1) {
      throw bad("answer_key", "entries must be single letters");
    }
    task.answer_key.push_back(a.get<std::string>()[0]);
  }

  const json& seed = field("seed");
  if (!seed.is_number_unsigned()) throw bad("seed", "must be an unsigned integer");
  task.seed = seed.get<std::uint64_t>();
  return task;
}

json task_to_json(const ReconstructionTask& task) {
  json obj;
  obj["task_id"] = task.task_id;
  obj["doc_id"] = task.doc_id;
  obj["k"] = task.k;
  json segments = json::array();
  for (const auto& s : task.segments) {
    json seg;
    if (const auto* text = std::get_if<TextSegment>(&s)) {
      seg["type"] = "text";
      seg["text"] = text->text;
    } else {
      seg["type"] = "placeholder";
      seg["index"] = std::get<Placeholder>(s).index;
    }
    segments.push_back(std::move(seg));
  }
  obj["segments"] = std::move(segments);
  json options = json::object();
  for (const auto& [label, text] : task.options) {
    options[std::string(1, label)] = text;
  }
  obj["options"] = std::move(options);
  json key = json::array();
  for (Label l : task.answer_key) key.push_back(std::string(1, l));
  obj["answer_key"] = std::move(key);
  obj["seed"] = task.seed;
  return obj;
}

}  // namespace

int max_task_k(const Document& doc, const TaskOptions& options) {
  const std::vector<bool> eligible = eligible_positions(doc, options);
  int capacity = 0;
  if (options.forbid_adjacent) {
    for (std::size_t i = 0; i < eligible.size();) {
      if (eligible[i]) {
        ++capacity;
        i += 2;
      } else {
        ++i;
      }
    }
  } else {
    capacity = static_cast<int>(std::count(eligible.begin(), eligible.end(), true));
  }
  const int context_bound = static_cast<int>(doc.paragraphs.size()) - 1;
  return std::min({capacity, context_bound, kMaxTaskK});
}

ReconstructionTask make_task(const Document& doc, int k, std::uint64_t seed,
                             const TaskOptions& options) {
  if (k < kMinTaskK || k > kMaxTaskK) {
    throw InputError("k must be in [2, 26], got " + std::to_string(k));
  }
  if (k > max_task_k(doc, options)) {
    throw InsufficientParagraphs(
        "document " + doc.id + " cannot host k=" + std::to_string(k) + " (" +
        std::to_string(doc.paragraphs.size()) + " paragraphs)");
  }

  Rng rng(derive_seed(seed, doc.id));
  const std::vector<bool> eligible = eligible_positions(doc, options);
  const std::vector<std::size_t> masked = options.forbid_adjacent
                                              ? sample_non_adjacent(eligible, k, rng)
                                              : sample_any(eligible, k, rng);

  ReconstructionTask task;
  task.task_id = doc.id + "#k" + std::to_string(k);
  task.doc_id = doc.id;
  task.k = k;
  task.seed = seed;

  std::size_t next_mask = 0;
  for (std::size_t i = 0; i < doc.paragraphs.size(); ++i) {
    if (next_mask < masked.size() && masked[next_mask] == i) {
      ++next_mask;
      task.segments.emplace_back(Placeholder{static_cast<int>(next_mask)});
    } else {
      task.segments.emplace_back(TextSegment{doc.paragraphs[i]});
    }
  }

  // Option j holds the masked paragraph of placeholder order[j] + 1.
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<int>(order));
  task.answer_key.resize(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    const auto slot = static_cast<std::size_t>(order[static_cast<std::size_t>(j)]);
    task.options[label_at(j)] = doc.paragraphs[masked[slot]];
    task.answer_key[slot] = label_at(j);
  }
  return task;
}

std::vector<std::string> reconstruct(const ReconstructionTask& task) {
  std::vector<std::string> out;
  out.reserve(task.segments.size());
  for (const auto& s : task.segments) {
    if (const auto* text = std::get_if<TextSegment>(&s)) {
      out.push_back(text->text);
    } else {
      const int index = std::get<Placeholder>(s).index;
      const Label label = task.answer_key.at(static_cast<std::size_t>(index - 1));
      out.push_back(task.options.at(label));
    }
  }
  return out;
}

std::vector<Label> option_labels(const ReconstructionTask& task) {
  std::vector<Label> labels;
  labels.reserve(task.options.size());
  for (const auto& [label, text] : task.options) labels.push_back(label);
  return labels;
}

void validate_task(const ReconstructionTask& task) {
  if (task.k < 1 || task.k > kMaxTaskK) {
    throw InvariantError("k must be in [1, 26]");
  }
  const auto k = static_cast<std::size_t>(task.k);
  int expected_index = 1;
  for (const auto& s : task.segments) {
    if (const auto* p = std::get_if<Placeholder>(&s)) {
      if (p->index != expected_index) {
        throw InvariantError("segments: placeholder indices must be 1..k in order");
      }
      ++expected_index;
    }
  }
  if (static_cast<std::size_t>(expected_index - 1) != k) {
    throw InvariantError("segments: placeholder count differs from k");
  }
  if (task.options.size() != k) {
    throw InvariantError("options: expected exactly k options");
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (!task.options.contains(label_at(static_cast<int>(j)))) {
      throw InvariantError("options: labels must be A.. in sequence");
    }
  }
  std::set<Label> key(task.answer_key.begin(), task.answer_key.end());
  if (task.answer_key.size() != k || key.size() != k ||
      !std::all_of(key.begin(), key.end(),
                   [&](Label l) { return task.options.contains(l); })) {
    throw InvariantError("answer_key is not a permutation of the option labels");
  }
}

Ordering parse_ordering(std::string_view name) {
  if (name == "curriculum") return Ordering::kCurriculum;
  if (name == "shuffled") return Ordering::kShuffled;
  throw InputError("unknown ordering \"" + std::string(name) +
                   "\" (expected curriculum or shuffled)");
}

std::string_view to_string(Ordering ordering) {
  return ordering == Ordering::kCurriculum ? "curriculum" : "shuffled";
}

std::string_view to_string(Split split) {
  return split == Split::kTrain ? "train" : "validation";
}

void validate_curriculum(const CurriculumSpec& spec) {
  if (spec.k_values.empty()) throw InputError("k_values must not be empty");
  if (spec.k_values.size() != spec.ratios.size()) {
    throw InputError("k_values and ratios must have the same length");
  }
  for (std::size_t i = 0; i < spec.k_values.size(); ++i) {
    if (spec.k_values[i] < kMinTaskK || spec.k_values[i] > kMaxTaskK) {
      throw InputError("k_values entries must be in [2, 26]");
    }
    if (i > 0 && spec.k_values[i] <= spec.k_values[i - 1]) {
      throw InputError("k_values must be strictly increasing");
    }
    if (spec.ratios[i] < 1) throw InputError("ratios must be at least 1");
  }
}

std::vector<std::size_t> apportion(std::size_t total, std::span<const int> ratios) {
  std::vector<std::size_t> counts(ratios.size(), 0);
  if (ratios.empty()) return counts;
  const std::uint64_t weight_sum =
      std::accumulate(ratios.begin(), ratios.end(), std::uint64_t{0},
                      [](std::uint64_t acc, int r) { return acc + static_cast<std::uint64_t>(r); });
  // Exact integer quotas: total * r_i = q_i * weight_sum + rem_i.
  std::vector<std::uint64_t> remainders(ratios.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const std::uint64_t scaled = total * static_cast<std::uint64_t>(ratios[i]);
    counts[i] = static_cast<std::size_t>(scaled / weight_sum);
    remainders[i] = scaled % weight_sum;
    assigned += counts[i];
  }
  std::vector<std::size_t> by_remainder(ratios.size());
  std::iota(by_remainder.begin(), by_remainder.end(), 0);
  std::stable_sort(by_remainder.begin(), by_remainder.end(),
                   [&](std::size_t a, std::size_t b) {
                     return remainders[a] > remainders[b];
                   });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) {
    ++counts[by_remainder[i]];
  }
  return counts;
}

Dataset build_dataset(std::span<const Document> docs, const CurriculumSpec& spec,
                      std::size_t validation_count, const TaskOptions& options) {
  validate_curriculum(spec);
  if (docs.empty()) throw InputError("no documents to build a dataset from");
  if (validation_count >= docs.size()) {
    throw InputError("validation_count must be smaller than the number of documents");
  }

  std::vector<const Document*> sorted;
  for (const auto& d : docs) sorted.push_back(&d);
  std::sort(sorted.begin(), sorted.end(),
            [](const Document* a, const Document* b) { return a->id < b->id; });

  const int min_k = spec.k_values.front();
  std::vector<const Document*> usable;
  std::vector<int> capacity;
  for (const Document* d : sorted) {
    const int cap = max_task_k(*d, options);
    if (cap >= min_k) {
      usable.push_back(d);
      capacity.push_back(cap);
    }
  }
  const std::size_t skipped = sorted.size() - usable.size();
  if (validation_count >= usable.size()) {
    throw InputError("only " + std::to_string(usable.size()) +
                     " documents can host a task; validation_count must be smaller");
  }

  std::vector<std::size_t> visit(usable.size());
  std::iota(visit.begin(), visit.end(), 0);
  Rng assign_rng(derive_seed(spec.seed, "assign"));
  assign_rng.shuffle(std::span<std::size_t>(visit));

  const auto train_counts = apportion(usable.size() - validation_count, spec.ratios);
  const auto val_counts = apportion(validation_count, spec.ratios);
  const std::size_t buckets = spec.k_values.size();

  std::vector<std::vector<const Document*>> train_docs(buckets), val_docs(buckets);
  std::vector<bool> taken(usable.size(), false);
  // Documents able to host k also host every smaller k, so filling the
  // largest bucket first never starves a smaller one unnecessarily.
  for (std::size_t b = buckets; b-- > 0;) {
    const int k = spec.k_values[b];
    const std::size_t need = train_counts[b] + val_counts[b];
    std::vector<const Document*> picked;
    for (std::size_t idx : visit) {
      if (picked.size() == need) break;
      if (!taken[idx] && capacity[idx] >= k) {
        taken[idx] = true;
        picked.push_back(usable[idx]);
      }
    }
    if (picked.size() < need) {
      throw InputError("bucket k=" + std::to_string(k) + " needs " +
                       std::to_string(need) + " documents that can host it, found " +
                       std::to_string(picked.size()));
    }
    val_docs[b].assign(picked.begin(), picked.begin() + static_cast<std::ptrdiff_t>(val_counts[b]));
    train_docs[b].assign(picked.begin() + static_cast<std::ptrdiff_t>(val_counts[b]), picked.end());
  }

  Dataset out;
  out.train_manifest.split = Split::kTrain;
  out.validation_manifest.split = Split::kValidation;
  for (auto* m : {&out.train_manifest, &out.validation_manifest}) {
    m->seed = spec.seed;
    m->skipped_documents = skipped;
    m->selection = "one task per document; " + std::to_string(usable.size()) +
                   " of " + std::to_string(docs.size()) + " documents usable";
  }
  for (std::size_t b = 0; b < buckets; ++b) {
    const int k = spec.k_values[b];
    for (const Document* d : train_docs[b]) {
      out.train.push_back(make_task(*d, k, spec.seed, options));
    }
    for (const Document* d : val_docs[b]) {
      out.validation.push_back(make_task(*d, k, spec.seed, options));
    }
    out.train_manifest.counts[k] = train_docs[b].size();
    out.validation_manifest.counts[k] = val_docs[b].size();
  }
  out.train_manifest.total = out.train.size();
  out.validation_manifest.total = out.validation.size();

  if (spec.ordering == Ordering::kShuffled) {
    Rng order_rng(derive_seed(spec.seed, "order"));
    order_rng.shuffle(std::span<ReconstructionTask>(out.train));
  }
  return out;
}

std::string tasks_to_jsonl(std::span<const ReconstructionTask> tasks) {
  std::string out;
  for (const auto& t : tasks) {
    out += task_to_json(t).dump();
    out += '\n';
  }
  return out;
}

void write_dataset(const std::filesystem::path& path,
                   std::span<const ReconstructionTask> tasks) {
  std::string content;
  try {
    content = tasks_to_jsonl(tasks);
  } catch (const json::exception& e) {
    throw InputError(std::string("cannot encode tasks: ") + e.what());
  }
  write_file_atomic(path, content);
}

std::vector<ReconstructionTask> read_dataset(const std::filesystem::path& path) {
  std::vector<ReconstructionTask> tasks;
  for_each_jsonl_line(path, [&](std::string_view line, std::size_t line_no) {
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError(line_error(path, line_no, e.what()));
    }
    if (!obj.is_object()) {
      throw InputError(line_error(path, line_no, "expected a json object"));
    }
    try {
      ReconstructionTask task = task_from_json(obj);
      validate_task(task);
      tasks.push_back(std::move(task));
    } catch (const InputError& e) {
      throw InputError(line_error(path, line_no, e.what()));
    } catch (const InvariantError& e) {
      throw InputError(line_error(path, line_no, e.what()));
    }
  });
  return tasks;
}

std::string manifest_to_json(const DatasetManifest& train,
                             const DatasetManifest& validation,
                             const CurriculumSpec& spec) {
  auto split_json = [](const DatasetManifest& m) {
    json obj;
    obj["split"] = to_string(m.split);
    json counts = json::object();
    for (const auto& [k, n] : m.counts) counts[std::to_string(k)] = n;
    obj["counts"] = std::move(counts);
    obj["total"] = m.total;
    obj["seed"] = m.seed;
    obj["selection"] = m.selection;
    obj["skipped_documents"] = m.skipped_documents;
    return obj;
  };
  json obj;
  obj["k_values"] = spec.k_values;
  obj["ratios"] = spec.ratios;
  obj["ordering"] = to_string(spec.ordering);
  obj["seed"] = spec.seed;
  obj["train"] = split_json(train);
  obj["validation"] = split_json(validation);
  return obj.dump(2) + "\n";
}

}  // namespace docrecon
