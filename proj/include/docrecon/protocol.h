// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

// Prompt rendering and \boxed{} answer extraction.

#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "docrecon/taskgen.h"

namespace docrecon {

enum class PlaceholderStyle {
  kChunk,  // <CHUNK_i>MISSING</CHUNK_i>
  kC,      // <C_i>MISSING</C_i>
};

PlaceholderStyle parse_placeholder_style(std::string_view name);

std::string placeholder_marker(PlaceholderStyle style, int index);

struct Prompt {
  std::string task_id;
  std::string text;
};

Prompt render_prompt(const ReconstructionTask& task,
                     PlaceholderStyle style = PlaceholderStyle::kChunk);

struct ParsedAnswer {
  std::vector<Label> labels;
  bool extraction_ok = false;

  bool operator==(const ParsedAnswer&) const = default;
};

// Reads the last \boxed{...} in the response. Items are comma separated,
// trimmed and uppercased; extraction fails (labels empty) unless every item
// is a single letter. The count is not checked here.
ParsedAnswer extract_answer(std::string_view response, int k);

// Extraction succeeded, no label repeats, and the label set equals
// option_labels.
bool is_valid_permutation(const ParsedAnswer& answer,
                          const std::set<Label>& option_labels);

// "\boxed{B, A, D, C}"
std::string format_boxed(const std::vector<Label>& labels);

// {task_id, prompt} per line.
std::string prompts_to_jsonl(const std::vector<Prompt>& prompts);

}  // namespace docrecon
