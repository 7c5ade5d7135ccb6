// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

// Reconstruction tasks: mask K paragraphs of a document, shuffle them into a
// lettered option pool, and assemble K-mixture datasets.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "docrecon/corpus.h"

namespace docrecon {

using Label = char;  // 'A'..'Z'

inline constexpr int kMinTaskK = 2;
inline constexpr int kMaxTaskK = 26;

inline Label label_at(int index) { return static_cast<Label>('A' + index); }
inline int label_index(Label label) { return label - 'A'; }

struct TextSegment {
  std::string text;
  bool operator==(const TextSegment&) const = default;
};

// Stands for the index-th masked paragraph (1-based, document order).
struct Placeholder {
  int index = 0;
  bool operator==(const Placeholder&) const = default;
};

using Segment = std::variant<TextSegment, Placeholder>;

struct ReconstructionTask {
  std::string task_id;
  std::string doc_id;
  int k = 0;
  std::vector<Segment> segments;
  std::map<Label, std::string> options;
  // answer_key[i] is the label whose text fills Placeholder(i + 1).
  std::vector<Label> answer_key;
  std::uint64_t seed = 0;

  bool operator==(const ReconstructionTask&) const = default;
};

struct TaskOptions {
  // Paragraphs shorter than this (code points, trimmed) are never masked.
  std::size_t min_paragraph_chars = kDefaultMinParagraphChars;
  // Forbid two masked paragraphs from being neighbours.
  bool forbid_adjacent = false;
};

// Largest k make_task accepts for this document under `options`.
int max_task_k(const Document& doc, const TaskOptions& options = {});

// Masks k paragraphs drawn uniformly from the eligible positions and shuffles
// them into options A, B, ... with a generator keyed by (seed, doc.id).
// Throws InsufficientParagraphs when k > n - 1 or too few positions are
// eligible, InputError when k is outside [2, 26].
ReconstructionTask make_task(const Document& doc, int k, std::uint64_t seed,
                             const TaskOptions& options = {});

// Splices options[answer_key[i]] back into each placeholder.
std::vector<std::string> reconstruct(const ReconstructionTask& task);

// Option labels in order: A, B, ... (k of them).
std::vector<Label> option_labels(const ReconstructionTask& task);

// Throws InvariantError naming the first broken invariant.
void validate_task(const ReconstructionTask& task);

enum class Ordering { kCurriculum, kShuffled };

Ordering parse_ordering(std::string_view name);
std::string_view to_string(Ordering ordering);

struct CurriculumSpec {
  std::vector<int> k_values = {2, 4, 6, 8};
  std::vector<int> ratios = {3, 3, 3, 5};
  Ordering ordering = Ordering::kCurriculum;
  std::uint64_t seed = 0;
};

// Throws InputError if the lists are misaligned, k_values not strictly
// increasing or outside [2, 26], or a ratio is < 1.
void validate_curriculum(const CurriculumSpec& spec);

// Largest-remainder apportionment of `total` items over `ratios`. Ties in the
// remainder go to the earlier bucket.
std::vector<std::size_t> apportion(std::size_t total, std::span<const int> ratios);

enum class Split { kTrain, kValidation };
std::string_view to_string(Split split);

struct DatasetManifest {
  Split split = Split::kTrain;
  std::map<int, std::size_t> counts;  // k -> number of tasks
  std::size_t total = 0;
  std::uint64_t seed = 0;
  std::string selection;  // free-form summary of how documents were chosen
  std::size_t skipped_documents = 0;

  bool operator==(const DatasetManifest&) const = default;
};

struct Dataset {
  std::vector<ReconstructionTask> train;
  std::vector<ReconstructionTask> validation;
  DatasetManifest train_manifest;
  DatasetManifest validation_manifest;
};

// One task per document. Documents too short for the smallest k are skipped.
// The remaining N documents are split into N - validation_count train and
// validation_count held-out documents, each apportioned over the k buckets
// by `spec.ratios`. Larger buckets are filled first from documents able to
// host them. Throws InputError naming the bucket when it cannot be filled.
Dataset build_dataset(std::span<const Document> docs, const CurriculumSpec& spec,
                      std::size_t validation_count,
                      const TaskOptions& options = {});

// Task jsonl, one task per line with keys in schema order.
std::string tasks_to_jsonl(std::span<const ReconstructionTask> tasks);
void write_dataset(const std::filesystem::path& path,
                   std::span<const ReconstructionTask> tasks);
// Throws InputError with line number and field name on schema violations.
std::vector<ReconstructionTask> read_dataset(const std::filesystem::path& path);

std::string manifest_to_json(const DatasetManifest& train,
                             const DatasetManifest& validation,
                             const CurriculumSpec& spec);

}  // namespace docrecon
