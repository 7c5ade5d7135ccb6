// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "docrecon/corpus.h"

namespace docrecon {

struct MirrorCorpusOptions {
  std::size_t documents = 500;
  std::size_t min_paragraphs = 10;  // body paragraphs, title excluded
  std::size_t max_paragraphs = 14;
  std::size_t own_words = 12;     // fresh words per paragraph
  std::size_t echo_words = 6;     // words repeated from the previous paragraph
  std::size_t filler_words = 4;   // drawn from a small shared pool
};

// Documents whose body paragraphs each repeat part of their predecessor's
// vocabulary, so a paragraph's place is recoverable from the overlap with
// its preceding neighbour. Each document starts with a short title that is
// too short to be masked.
std::vector<Document> make_mirror_corpus(const MirrorCorpusOptions& options,
                                         std::uint64_t seed);

}  // namespace docrecon
