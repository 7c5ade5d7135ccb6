// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace docrecon {

// Reads a whole file. Throws InputError if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it over `path`, so readers
// never observe a partial file.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);

// Calls `fn(line, line_number)` for each non-blank line of a jsonl file.
// Line numbers are 1-based.
void for_each_jsonl_line(
    const std::filesystem::path& path,
    const std::function<void(std::string_view, std::size_t)>& fn);

}  // namespace docrecon
