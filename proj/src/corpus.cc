// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

#include "docrecon/corpus.h"

#include <algorithm>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "docrecon/errors.h"
#include "docrecon/io.h"
#include "docrecon/random.h"

namespace docrecon {

using json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kWhitespace = " \t\r\n\f\v";

std::string line_error(const std::filesystem::path& path, std::size_t line,
                       const std::string& what) {
  return path.string() + ":" + std::to_string(line) + ": " + what;
}

std::string require_string(const json& obj, const char* field,
                           const std::filesystem::path& path,
                           std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    throw InputError(line_error(path, line,
                                std::string("missing field \"") + field + "\""));
  }
  if (!it->is_string()) {
    throw InputError(line_error(
        path, line, std::string("field \"") + field + "\" must be a string"));
  }
  return it->get<std::string>();
}

json parse_line(std::string_view line, const std::filesystem::path& path,
                std::size_t line_no) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw InputError(line_error(path, line_no, e.what()));
  }
  if (!obj.is_object()) {
    throw InputError(line_error(path, line_no, "expected a json object"));
  }
  return obj;
}

std::map<std::string, Domain> read_manifest(const std::filesystem::path& path) {
  std::map<std::string, Domain> domains;
  for_each_jsonl_line(path, [&](std::string_view line, std::size_t line_no) {
    const json obj = parse_line(line, path, line_no);
    const std::string id = require_string(obj, "id", path, line_no);
    const std::string domain = require_string(obj, "domain", path, line_no);
    try {
      domains[id] = parse_domain(domain);
    } catch (const InputError& e) {
      throw InputError(line_error(path, line_no, e.what()));
    }
  });
  return domains;
}

std::vector<RawDocument> load_plaintext_dir(const std::filesystem::path& dir,
                                            const LoadOptions& options) {
  if (!std::filesystem::is_directory(dir)) {
    throw InputError("not a directory: " + dir.string());
  }
  std::map<std::string, Domain> manifest;
  std::filesystem::path manifest_path =
      options.manifest.value_or(dir / "manifest.jsonl");
  if (options.manifest || std::filesystem::exists(manifest_path)) {
    manifest = read_manifest(manifest_path);
  }

  std::vector<RawDocument> docs;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") {
      continue;
    }
    RawDocument doc;
    doc.id = std::filesystem::relative(entry.path(), dir).generic_string();
    doc.text = read_file(entry.path());
    if (doc.text.empty()) throw InputError("empty document: " + doc.id);
    auto it = manifest.find(doc.id);
    doc.domain = it != manifest.end() ? it->second : options.default_domain;
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<RawDocument> load_jsonl(const std::filesystem::path& path) {
  std::vector<RawDocument> docs;
  for_each_jsonl_line(path, [&](std::string_view line, std::size_t line_no) {
    const json obj = parse_line(line, path, line_no);
    RawDocument doc;
    doc.id = require_string(obj, "id", path, line_no);
    try {
      doc.domain = parse_domain(require_string(obj, "domain", path, line_no));
    } catch (const InputError& e) {
      throw InputError(line_error(path, line_no, e.what()));
    }
    doc.text = require_string(obj, "text", path, line_no);
    if (doc.text.empty()) {
      throw InputError(line_error(path, line_no, "field \"text\" is empty"));
    }
    docs.push_back(std::move(doc));
  });
  return docs;
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(kWhitespace) == std::string_view::npos;
}

}  // namespace

std::string_view to_string(Domain domain) {
  switch (domain) {
    case Domain::kBook:
      return "book";
    case Domain::kArxiv:
      return "arxiv";
    case Domain::kCode:
      return "code";
    case Domain::kOther:
      return "other";
  }
  return "other";
}

Domain parse_domain(std::string_view name) {
  for (Domain d : kAllDomains) {
    if (to_string(d) == name) return d;
  }
  throw InputError("unknown domain \"" + std::string(name) +
                   "\" (expected book, arxiv, code or other)");
}

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "plaintext-dir") return CorpusFormat::kPlaintextDir;
  if (name == "jsonl") return CorpusFormat::kJsonl;
  throw InputError("unknown corpus format \"" + std::string(name) +
                   "\" (expected plaintext-dir or jsonl)");
}

std::vector<RawDocument> load_corpus(const std::filesystem::path& path,
                                     CorpusFormat format,
                                     const LoadOptions& options) {
  if (!std::filesystem::exists(path)) {
    throw InputError("no such file or directory: " + path.string());
  }
  std::vector<RawDocument> docs = format == CorpusFormat::kPlaintextDir
                                      ? load_plaintext_dir(path, options)
                                      : load_jsonl(path);
  std::sort(docs.begin(), docs.end(),
            [](const RawDocument& a, const RawDocument& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < docs.size(); ++i) {
    if (docs[i].id == docs[i - 1].id) {
      throw InputError("duplicate document id: " + docs[i].id);
    }
  }
  return docs;
}

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(kWhitespace);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(kWhitespace);
  return text.substr(first, last - first + 1);
}

std::size_t utf8_length(std::string_view text) {
  return static_cast<std::size_t>(std::count_if(
      text.begin(), text.end(),
      [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::size_t estimate_tokens(std::string_view text) {
  return std::max<std::size_t>(1, (text.size() + 3) / 4);
}

Document segment_paragraphs(const RawDocument& raw,
                            std::size_t min_paragraph_chars) {
  if (min_paragraph_chars < 1) {
    throw InputError("min_paragraph_chars must be at least 1");
  }

  // Blocks of consecutive non-blank lines, joined by '\n'.
  std::vector<std::string> blocks;
  std::string current;
  std::string_view text = raw.text;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (is_blank(line)) {
      if (!current.empty()) blocks.push_back(std::move(current));
      current.clear();
    } else {
      if (!current.empty()) current += '\n';
      current += line;
    }
    pos = end + 1;
  }
  if (!current.empty()) blocks.push_back(std::move(current));

  if (blocks.empty()) {
    throw InputError("document " + raw.id + " has no paragraphs");
  }

  auto long_enough = [&](const std::string& s) {
    return utf8_length(trim(s)) >= min_paragraph_chars;
  };

  Document doc;
  doc.id = raw.id;
  doc.domain = raw.domain;
  doc.token_estimate = estimate_tokens(raw.text);

  std::string pending;
  for (auto& block : blocks) {
    std::string merged = pending.empty() ? std::move(block) : pending + '\n' + block;
    if (long_enough(merged)) {
      doc.paragraphs.push_back(std::move(merged));
      pending.clear();
    } else {
      pending = std::move(merged);
    }
  }
  if (!pending.empty()) {
    if (doc.paragraphs.empty()) {
      doc.paragraphs.push_back(std::move(pending));
    } else {
      doc.paragraphs.back() += '\n' + pending;
    }
  }
  return doc;
}

std::string join_paragraphs(std::span<const std::string> paragraphs) {
  std::string out;
  for (std::size_t i = 0; i < paragraphs.size(); ++i) {
    if (i > 0) out += kParagraphSeparator;
    out += paragraphs[i];
  }
  return out;
}

SelectionStrategy parse_selection_strategy(std::string_view name) {
  if (name == "longest") return SelectionStrategy::kLongest;
  if (name == "shortest") return SelectionStrategy::kShortest;
  if (name == "random") return SelectionStrategy::kRandom;
  throw InputError("unknown selection strategy \"" + std::string(name) +
                   "\" (expected longest, shortest or random)");
}

std::string_view to_string(SelectionStrategy strategy) {
  switch (strategy) {
    case SelectionStrategy::kLongest:
      return "longest";
    case SelectionStrategy::kShortest:
      return "shortest";
    case SelectionStrategy::kRandom:
      return "random";
  }
  return "longest";
}

std::vector<Document> select_documents(std::span<const Document> docs,
                                       const SelectionSpec& spec) {
  std::vector<Document> out;
  for (Domain domain : kAllDomains) {
    auto wanted_it = spec.per_domain_counts.find(domain);
    const std::size_t wanted =
        wanted_it == spec.per_domain_counts.end() ? 0 : wanted_it->second;
    if (wanted == 0) continue;

    std::vector<const Document*> pool;
    for (const auto& d : docs) {
      if (d.domain == domain) pool.push_back(&d);
    }
    if (wanted > pool.size()) {
      throw InputError("requested " + std::to_string(wanted) + " " +
                       std::string(to_string(domain)) + " documents but only " +
                       std::to_string(pool.size()) + " are available");
    }

    std::sort(pool.begin(), pool.end(),
              [](const Document* a, const Document* b) { return a->id < b->id; });
    switch (spec.strategy) {
      case SelectionStrategy::kLongest:
        std::stable_sort(pool.begin(), pool.end(),
                         [](const Document* a, const Document* b) {
                           return a->token_estimate > b->token_estimate;
                         });
        break;
      case SelectionStrategy::kShortest:
        std::stable_sort(pool.begin(), pool.end(),
                         [](const Document* a, const Document* b) {
                           return a->token_estimate < b->token_estimate;
                         });
        break;
      case SelectionStrategy::kRandom: {
        Rng rng(derive_seed(spec.seed, to_string(domain)));
        // Partial Fisher-Yates: the first `wanted` slots are the draw.
        for (std::size_t i = 0; i < wanted; ++i) {
          auto j = i + static_cast<std::size_t>(rng.uniform_below(pool.size() - i));
          std::swap(pool[i], pool[j]);
        }
        break;
      }
    }
    for (std::size_t i = 0; i < wanted; ++i) out.push_back(*pool[i]);
  }
  return out;
}

std::string documents_to_jsonl(std::span<const Document> docs) {
  std::string out;
  for (const auto& d : docs) {
    json obj;
    obj["id"] = d.id;
    obj["domain"] = to_string(d.domain);
    obj["paragraphs"] = d.paragraphs;
    obj["token_estimate"] = d.token_estimate;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void write_documents(const std::filesystem::path& path,
                     std::span<const Document> docs) {
  std::string content;
  try {
    content = documents_to_jsonl(docs);
  } catch (const json::exception& e) {
    throw InputError(std::string("cannot encode documents: ") + e.what());
  }
  write_file_atomic(path, content);
}

std::vector<Document> read_documents(const std::filesystem::path& path) {
  std::vector<Document> docs;
  std::set<std::string> seen;
  for_each_jsonl_line(path, [&](std::string_view line, std::size_t line_no) {
    const json obj = parse_line(line, path, line_no);
    Document d;
    d.id = require_string(obj, "id", path, line_no);
    try {
      d.domain = parse_domain(require_string(obj, "domain", path, line_no));
    } catch (const InputError& e) {
      throw InputError(line_error(path, line_no, e.what()));
    }
    auto paragraphs = obj.find("paragraphs");
    if (paragraphs == obj.end() || !paragraphs->is_array() ||
        paragraphs->empty()) {
      throw InputError(line_error(
          path, line_no, "field \"paragraphs\" must be a non-empty array"));
    }
    for (const auto& p : *paragraphs) {
      if (!p.is_string() || trim(p.get<std::string>()).empty()) {
        throw InputError(line_error(
            path, line_no, "field \"paragraphs\" has an empty or non-string entry"));
      }
      d.paragraphs.push_back(p.get<std::string>());
    }
    auto estimate = obj.find("token_estimate");
    if (estimate != obj.end()) {
      if (!estimate->is_number_unsigned() || estimate->get<std::size_t>() < 1) {
        throw InputError(line_error(
            path, line_no, "field \"token_estimate\" must be a positive integer"));
      }
      d.token_estimate = estimate->get<std::size_t>();
    } else {
      d.token_estimate = estimate_tokens(join_paragraphs(d.paragraphs));
    }
    if (!seen.insert(d.id).second) {
      throw InputError(line_error(path, line_no, "duplicate id " + d.id));
    }
    docs.push_back(std::move(d));
  });
  return docs;
}

}  // namespace docrecon
