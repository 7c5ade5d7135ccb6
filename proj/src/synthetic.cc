// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

#include "docrecon/synthetic.h"

#include <array>
#include <set>
#include <string>

#include "docrecon/errors.h"
#include "docrecon/random.h"

namespace docrecon {

namespace {

constexpr std::array<std::string_view, 24> kSyllables = {
    "ka", "lo", "mir", "ten", "su", "dra", "vel", "po", "qui", "ran", "tho", "bel",
    "cor", "fen", "gal", "hu", "ist", "jor", "nak", "ove", "pil", "sem", "ul", "zet"};

constexpr std::array<std::string_view, 12> kFiller = {
    "the", "and", "of", "then", "with", "from", "its", "was", "into", "over", "under", "near"};

std::string fresh_word(Rng& rng, std::set<std::string>& used) {
  while (true) {
    std::string w;
    const auto syllables = 2 + rng.uniform_below(3);
    for (std::uint64_t i = 0; i < syllables; ++i) {
      w += kSyllables[rng.uniform_below(kSyllables.size())];
    }
    if (used.insert(w).second) return w;
  }
}

}  // namespace

std::vector<Document> make_mirror_corpus(const MirrorCorpusOptions& options,
                                         std::uint64_t seed) {
  if (options.min_paragraphs < 2 || options.max_paragraphs < options.min_paragraphs ||
      options.echo_words > options.own_words || options.own_words == 0) {
    throw InputError("invalid mirror corpus options");
  }
  std::vector<Document> docs;
  docs.reserve(options.documents);
  for (std::size_t d = 0; d < options.documents; ++d) {
    Rng rng(derive_seed(seed, d));
    Document doc;
    doc.id = "mirror-" + std::to_string(100000 + d).substr(1);
    doc.domain = Domain::kBook;

    const std::string title_word = "doc" + std::to_string(d);
    doc.paragraphs.push_back("Document " + title_word + ".");

    std::set<std::string> used;
    std::vector<std::string> previous_own = {"document", title_word};
    const std::size_t body =
        options.min_paragraphs +
        rng.uniform_below(options.max_paragraphs - options.min_paragraphs + 1);
    for (std::size_t p = 0; p < body; ++p) {
      std::vector<std::string> words;
      std::vector<std::string> own;
      for (std::size_t i = 0; i < options.own_words; ++i) own.push_back(fresh_word(rng, used));
      words.insert(words.end(), own.begin(), own.end());

      std::vector<std::string> echo = previous_own;
      rng.shuffle(std::span<std::string>(echo));
      echo.resize(std::min(echo.size(), options.echo_words));
      words.insert(words.end(), echo.begin(), echo.end());

      for (std::size_t i = 0; i < options.filler_words; ++i) {
        words.emplace_back(kFiller[rng.uniform_below(kFiller.size())]);
      }
      rng.shuffle(std::span<std::string>(words));

      std::string text;
      for (const auto& w : words) {
        if (!text.empty()) text += ' ';
        text += w;
      }
      text[0] = static_cast<char>(text[0] - 'a' + 'A');
      text += '.';
      doc.paragraphs.push_back(std::move(text));
      previous_own = std::move(own);
    }

    doc.token_estimate = estimate_tokens(join_paragraphs(doc.paragraphs));
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace docrecon
