// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

#include "docrecon/protocol.h"

#include <json.hpp>

#include "docrecon/errors.h"

namespace docrecon {

namespace {

constexpr std::string_view kBoxOpen = "\\boxed{";

std::string style_tag(PlaceholderStyle style) {
  return style == PlaceholderStyle::kChunk ? "CHUNK" : "C";
}

}  // namespace

PlaceholderStyle parse_placeholder_style(std::string_view name) {
  if (name == "chunk") return PlaceholderStyle::kChunk;
  if (name == "c") return PlaceholderStyle::kC;
  throw InputError("unknown placeholder style \"" + std::string(name) +
                   "\" (expected chunk or c)");
}

std::string placeholder_marker(PlaceholderStyle style, int index) {
  const std::string tag = style_tag(style) + "_" + std::to_string(index);
  return "<" + tag + ">MISSING</" + tag + ">";
}

Prompt render_prompt(const ReconstructionTask& task, PlaceholderStyle style) {
  const std::string generic =
      "<" + style_tag(style) + "_i>MISSING</" + style_tag(style) + "_i>";

  std::string text;
  text += "The following document contains missing segments marked as " +
          generic + ".\n\n";
  text +=
      "Please reason about the logical and narrative structure of the document "
      "and select appropriate chunks one by one from the given options to "
      "reconstruct it.\n\n";
  text +=
      "Then, output the label for each missing chunk by order in \\boxed{} "
      "separated by commas.\n\n";

  text += "The document is as follows:\n\n";
  for (std::size_t i = 0; i < task.segments.size(); ++i) {
    if (i > 0) text += "\n\n";
    const auto& s = task.segments[i];
    if (const auto* t = std::get_if<TextSegment>(&s)) {
      text += t->text;
    } else {
      text += placeholder_marker(style, std::get<Placeholder>(s).index);
    }
  }

  text += "\n\nThe options are:\n\n";
  bool first = true;
  for (const auto& [label, option] : task.options) {
    if (!first) text += "\n\n";
    first = false;
    text += label;
    text += ": ";
    text += option;
  }
  text += '\n';
  return Prompt{task.task_id, std::move(text)};
}

ParsedAnswer extract_answer(std::string_view response, int k) {
  if (k < 1) throw InvariantError("extract_answer requires k >= 1");
  ParsedAnswer failed;
  const std::size_t open = response.rfind(kBoxOpen);
  if (open == std::string_view::npos) return failed;
  const std::size_t start = open + kBoxOpen.size();
  const std::size_t close = response.find('}', start);
  if (close == std::string_view::npos) return failed;

  std::string_view body = response.substr(start, close - start);
  ParsedAnswer answer;
  while (true) {
    const std::size_t comma = body.find(',');
    std::string_view item = trim(body.substr(0, comma));
    if (item.size() != 1) return failed;
    char c = item[0];
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    if (c < 'A' || c > 'Z') return failed;
    answer.labels.push_back(c);
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  answer.extraction_ok = true;
  return answer;
}

bool is_valid_permutation(const ParsedAnswer& answer,
                          const std::set<Label>& option_labels) {
  if (!answer.extraction_ok) return false;
  if (answer.labels.size() != option_labels.size()) return false;
  std::set<Label> seen;
  for (Label l : answer.labels) {
    if (!option_labels.contains(l) || !seen.insert(l).second) return false;
  }
  return true;
}

std::string format_boxed(const std::vector<Label>& labels) {
  std::string out(kBoxOpen);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i > 0) out += ", ";
    out += labels[i];
  }
  out += '}';
  return out;
}

std::string prompts_to_jsonl(const std::vector<Prompt>& prompts) {
  std::string out;
  for (const auto& p : prompts) {
    nlohmann::ordered_json obj;
    obj["task_id"] = p.task_id;
    obj["prompt"] = p.text;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

}  // namespace docrecon
