// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <set>

#include "docrecon/corpus.h"
#include "docrecon/errors.h"
#include "docrecon/random.h"
#include "test_util.h"

using namespace docrecon;

namespace {

void write(const std::filesystem::path& p, const std::string& content) {
  std::ofstream(p, std::ios::binary) << content;
}

RawDocument raw(std::string text) { return RawDocument{"doc", Domain::kBook, std::move(text)}; }

}  // namespace

TEST_CASE("load_corpus: plaintext directory ordered by id") {
  const auto dir = testing::scratch_dir("plaintext");
  write(dir / "b.txt", "second document");
  write(dir / "a.txt", "first document");
  write(dir / "notes.md", "ignored");
  write(dir / "manifest.jsonl", "{\"id\": \"a.txt\", \"domain\": \"code\"}\n");

  LoadOptions options;
  options.default_domain = Domain::kArxiv;
  const auto docs = load_corpus(dir, CorpusFormat::kPlaintextDir, options);
  REQUIRE(docs.size() == 2);
  CHECK(docs[0].id == "a.txt");
  CHECK(docs[1].id == "b.txt");
  CHECK(docs[0].domain == Domain::kCode);
  CHECK(docs[1].domain == Domain::kArxiv);
  CHECK(docs[0].text == "first document");
}

TEST_CASE("load_corpus: jsonl") {
  const auto dir = testing::scratch_dir("jsonl");
  write(dir / "c.jsonl",
        "{\"id\": \"z\", \"domain\": \"book\", \"text\": \"zz\"}\n"
        "{\"id\": \"x\", \"domain\": \"arxiv\", \"text\": \"xx\"}\n"
        "\n"
        "{\"id\": \"y\", \"domain\": \"code\", \"text\": \"yy\"}\n");
  const auto docs = load_corpus(dir / "c.jsonl", CorpusFormat::kJsonl);
  REQUIRE(docs.size() == 3);
  CHECK(docs[0].id == "x");
  CHECK(docs[1].id == "y");
  CHECK(docs[2].id == "z");
  CHECK(docs[1].domain == Domain::kCode);
}

TEST_CASE("load_corpus: errors") {
  const auto dir = testing::scratch_dir("jsonl_errors");
  write(dir / "missing_text.jsonl",
        "{\"id\": \"a\", \"domain\": \"book\", \"text\": \"ok\"}\n"
        "{\"id\": \"b\", \"domain\": \"book\"}\n");
  try {
    (void)load_corpus(dir / "missing_text.jsonl", CorpusFormat::kJsonl);
    FAIL("expected an error");
  } catch (const InputError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(":2:") != std::string::npos);
    CHECK(msg.find("text") != std::string::npos);
  }

  write(dir / "garbage.jsonl", "{not json\n");
  CHECK_THROWS_AS((void)load_corpus(dir / "garbage.jsonl", CorpusFormat::kJsonl), InputError);

  write(dir / "dup.jsonl",
        "{\"id\": \"a\", \"domain\": \"book\", \"text\": \"1\"}\n"
        "{\"id\": \"a\", \"domain\": \"book\", \"text\": \"2\"}\n");
  CHECK_THROWS_AS((void)load_corpus(dir / "dup.jsonl", CorpusFormat::kJsonl), InputError);

  write(dir / "domain.jsonl", "{\"id\": \"a\", \"domain\": \"poetry\", \"text\": \"1\"}\n");
  CHECK_THROWS_AS((void)load_corpus(dir / "domain.jsonl", CorpusFormat::kJsonl), InputError);

  CHECK_THROWS_AS((void)load_corpus(dir / "nope.jsonl", CorpusFormat::kJsonl), InputError);
}

TEST_CASE("segment_paragraphs: blank-line runs") {
  const Document doc = segment_paragraphs(raw("p1\n\np2\n\n\np3"), 1);
  CHECK(doc.paragraphs == std::vector<std::string>{"p1", "p2", "p3"});
  CHECK(doc.id == "doc");
  CHECK(doc.domain == Domain::kBook);
}

TEST_CASE("segment_paragraphs: whitespace-only lines are blank") {
  const Document doc = segment_paragraphs(raw("a\r\nb\n \t \nc\r\n"), 1);
  CHECK(doc.paragraphs == std::vector<std::string>{"a\nb", "c"});
}

TEST_CASE("segment_paragraphs: short blocks merge forward") {
  const Document doc = segment_paragraphs(raw("x\n\nlong paragraph here"), 3);
  REQUIRE(doc.paragraphs.size() == 1);
  CHECK(doc.paragraphs[0] == "x\nlong paragraph here");
}

TEST_CASE("segment_paragraphs: trailing short block merges backward") {
  const Document doc = segment_paragraphs(raw("first long one\n\nsecond long one\n\nz"), 5);
  CHECK(doc.paragraphs == std::vector<std::string>{"first long one", "second long one\nz"});
}

TEST_CASE("segment_paragraphs: code points, not bytes") {
  // Three code points, six bytes.
  const Document doc = segment_paragraphs(raw("\xC3\xA9\xC3\xA9\xC3\xA9\n\nabcd"), 4);
  CHECK(doc.paragraphs.size() == 1);
}

TEST_CASE("segment_paragraphs: blank text is an error") {
  CHECK_THROWS_AS((void)segment_paragraphs(raw("\n\n   \n\t\n"), 1), InputError);
  CHECK_THROWS_AS((void)segment_paragraphs(raw("text"), 0), InputError);
}

TEST_CASE("segmentation is idempotent under the canonical re-join") {
  Rng rng(123);
  const std::vector<std::string> pieces = {"a", "bb", "short", "a much longer line of text",
                                           "  indented", "x y z", ""};
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    const auto lines = 1 + rng.uniform_below(20);
    for (std::uint64_t i = 0; i < lines; ++i) {
      text += pieces[rng.uniform_below(pieces.size())];
      text += rng.uniform_below(3) == 0 ? "\n\n" : "\n";
    }
    if (trim(text).empty()) text += "tail";
    const std::size_t min_chars = 1 + rng.uniform_below(30);
    const Document once = segment_paragraphs(raw(text), min_chars);
    const Document twice = segment_paragraphs(raw(join_paragraphs(once.paragraphs)), min_chars);
    REQUIRE(once.paragraphs == twice.paragraphs);
    for (const auto& p : once.paragraphs) CHECK(!trim(p).empty());
  }
}

TEST_CASE("estimate_tokens") {
  CHECK(estimate_tokens("") == 1);
  CHECK(estimate_tokens("12345678") == 2);
  CHECK(estimate_tokens("123456789") == 3);
  CHECK(estimate_tokens(std::string(196000, 'x')) == 49000);

  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const std::string a(rng.uniform_below(100), 'a');
    const std::string b(rng.uniform_below(100), 'b');
    CHECK(estimate_tokens(a + b) >= estimate_tokens(a));
  }
}

namespace {

std::vector<Document> five_books() {
  std::vector<Document> docs;
  for (int i = 1; i <= 5; ++i) {
    Document d = testing::make_document("book" + std::to_string(i), 3);
    d.token_estimate = static_cast<std::size_t>(10 * i);
    docs.push_back(d);
  }
  return docs;
}

std::vector<std::size_t> estimates(const std::vector<Document>& docs) {
  std::vector<std::size_t> out;
  for (const auto& d : docs) out.push_back(d.token_estimate);
  return out;
}

}  // namespace

TEST_CASE("select_documents: longest and shortest") {
  const auto docs = five_books();
  SelectionSpec spec;
  spec.per_domain_counts[Domain::kBook] = 2;

  spec.strategy = SelectionStrategy::kLongest;
  CHECK(estimates(select_documents(docs, spec)) == std::vector<std::size_t>{50, 40});

  spec.strategy = SelectionStrategy::kShortest;
  CHECK(estimates(select_documents(docs, spec)) == std::vector<std::size_t>{10, 20});
}

TEST_CASE("select_documents: ties broken by id") {
  std::vector<Document> docs = five_books();
  for (auto& d : docs) d.token_estimate = 7;
  SelectionSpec spec;
  spec.per_domain_counts[Domain::kBook] = 3;
  const auto picked = select_documents(docs, spec);
  CHECK(picked[0].id == "book1");
  CHECK(picked[1].id == "book2");
  CHECK(picked[2].id == "book3");
}

TEST_CASE("select_documents: random is seeded") {
  const auto docs = five_books();
  SelectionSpec spec;
  spec.strategy = SelectionStrategy::kRandom;
  spec.per_domain_counts[Domain::kBook] = 2;
  spec.seed = 99;
  CHECK(select_documents(docs, spec) == select_documents(docs, spec));

  std::set<std::vector<std::size_t>> seen;
  for (std::uint64_t s = 0; s < 50; ++s) {
    spec.seed = s;
    seen.insert(estimates(select_documents(docs, spec)));
  }
  CHECK(seen.size() > 5);
}

TEST_CASE("select_documents: too many requested") {
  const auto docs = five_books();
  SelectionSpec spec;
  spec.per_domain_counts[Domain::kBook] = 6;
  CHECK_THROWS_AS((void)select_documents(docs, spec), InputError);
  spec.per_domain_counts[Domain::kBook] = 0;
  spec.per_domain_counts[Domain::kCode] = 1;
  CHECK_THROWS_AS((void)select_documents(docs, spec), InputError);
}

TEST_CASE("select_documents: properties over random corpora") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Document> docs;
    std::map<Domain, std::size_t> available;
    const auto n = 1 + rng.uniform_below(30);
    for (std::uint64_t i = 0; i < n; ++i) {
      Document d = testing::make_document("d" + std::to_string(i), 2,
                                          kAllDomains[rng.uniform_below(4)]);
      d.token_estimate = 1 + rng.uniform_below(20);
      ++available[d.domain];
      docs.push_back(d);
    }
    SelectionSpec spec;
    spec.strategy = static_cast<SelectionStrategy>(rng.uniform_below(3));
    spec.seed = rng.next();
    std::size_t total = 0;
    for (const auto& [domain, count] : available) {
      spec.per_domain_counts[domain] = rng.uniform_below(count + 1);
      total += spec.per_domain_counts[domain];
    }
    const auto picked = select_documents(docs, spec);
    CHECK(picked.size() == total);
    std::set<std::string> ids;
    for (const auto& d : picked) ids.insert(d.id);
    CHECK(ids.size() == picked.size());

    if (spec.strategy == SelectionStrategy::kLongest) {
      for (const auto& chosen : picked) {
        for (const auto& d : docs) {
          if (d.domain == chosen.domain && !ids.contains(d.id)) {
            CHECK(chosen.token_estimate >= d.token_estimate);
          }
        }
      }
    }
  }
}

TEST_CASE("documents jsonl round trip") {
  const auto dir = testing::scratch_dir("docs_roundtrip");
  std::vector<Document> docs = {testing::make_document("a", 3, Domain::kCode),
                                testing::make_document("b", 1, Domain::kOther)};
  docs[0].paragraphs[1] = "unicode \xE2\x9C\x93 and \"quotes\"\nsecond line";
  write_documents(dir / "docs.jsonl", docs);
  CHECK(read_documents(dir / "docs.jsonl") == docs);
}
