// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

// Corpus ingestion: raw documents, paragraph segmentation, size estimates
// and length-based subset selection.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace docrecon {

enum class Domain { kBook, kArxiv, kCode, kOther };

inline constexpr Domain kAllDomains[] = {Domain::kBook, Domain::kArxiv,
                                         Domain::kCode, Domain::kOther};

std::string_view to_string(Domain domain);
// Accepts "book", "arxiv", "code", "other". Throws InputError otherwise.
Domain parse_domain(std::string_view name);

struct RawDocument {
  std::string id;
  Domain domain = Domain::kOther;
  std::string text;

  bool operator==(const RawDocument&) const = default;
};

struct Document {
  std::string id;
  Domain domain = Domain::kOther;
  std::vector<std::string> paragraphs;
  std::size_t token_estimate = 1;

  bool operator==(const Document&) const = default;
};

enum class CorpusFormat { kPlaintextDir, kJsonl };

CorpusFormat parse_corpus_format(std::string_view name);

struct LoadOptions {
  // Domain for plaintext files the manifest does not mention.
  Domain default_domain = Domain::kOther;
  // jsonl of {id, domain}; defaults to <dir>/manifest.jsonl when present.
  std::optional<std::filesystem::path> manifest;
};

// Loads a directory of .txt files (id = path relative to the directory) or a
// jsonl file of {id, domain, text}. Output is sorted by id. Malformed jsonl
// lines abort the load with an InputError naming the line number.
std::vector<RawDocument> load_corpus(const std::filesystem::path& path,
                                     CorpusFormat format,
                                     const LoadOptions& options = {});

inline constexpr std::size_t kDefaultMinParagraphChars = 64;
inline constexpr std::string_view kParagraphSeparator = "\n\n";

// Splits on runs of blank lines. Blocks shorter than min_paragraph_chars
// (in code points, after trimming) are merged into the following block, or
// into the preceding one at the end of the document. Throws InputError when
// the text has no non-blank content.
Document segment_paragraphs(const RawDocument& raw,
                            std::size_t min_paragraph_chars =
                                kDefaultMinParagraphChars);

// Canonical re-join: paragraphs separated by exactly one blank line.
std::string join_paragraphs(std::span<const std::string> paragraphs);

// max(1, ceil(bytes / 4)).
std::size_t estimate_tokens(std::string_view text);

// Number of UTF-8 code points (continuation bytes are not counted).
std::size_t utf8_length(std::string_view text);

std::string_view trim(std::string_view text);

enum class SelectionStrategy { kLongest, kShortest, kRandom };

SelectionStrategy parse_selection_strategy(std::string_view name);
std::string_view to_string(SelectionStrategy strategy);

struct SelectionSpec {
  SelectionStrategy strategy = SelectionStrategy::kLongest;
  std::map<Domain, std::size_t> per_domain_counts;
  std::uint64_t seed = 0;  // only read by kRandom
};

// Output is domain-major (book, arxiv, code, other), then in strategy order.
// Length sorts break ties by id ascending. Throws InputError when a domain
// has fewer documents than requested.
std::vector<Document> select_documents(std::span<const Document> docs,
                                       const SelectionSpec& spec);

// Documents jsonl: {id, domain, paragraphs, token_estimate} per line.
std::string documents_to_jsonl(std::span<const Document> docs);
void write_documents(const std::filesystem::path& path,
                     std::span<const Document> docs);
std::vector<Document> read_documents(const std::filesystem::path& path);

}  // namespace docrecon
