#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lexiport/corpus_io.hpp"
#include "lexiport/error.hpp"
#include "temp_dir.hpp"

using namespace lexiport;
using lexiport::testing::TempDir;
using lexiport::testing::write_file;

TEST_CASE("normalize_line collapses whitespace and keeps the empty line") {
    CHECK(normalize_line("a  b\t c") == "a b c");
    CHECK(normalize_line("") == "");
    CHECK(normalize_line("  lead and trail \r") == "lead and trail");
    CHECK(normalize_line(std::string("x\0y", 3)) == "x y");
    NormalizationConfig keep;
    keep.collapse_whitespace = false;
    CHECK(normalize_line("a  b", keep) == "a  b");
}

// Expected bytes were produced by Python's unicodedata.normalize("NFC", ...).
TEST_CASE("normalize_line composes to NFC like a reference normalizer") {
    CHECK(normalize_line("e\xcc\x81") == "\xc3\xa9");                  // e + U+0301
    CHECK(normalize_line("A\xcc\x8a") == "\xc3\x85");                  // A + U+030A
    CHECK(normalize_line("\xe2\x84\xab") == "\xc3\x85");               // U+212B
    CHECK(normalize_line("\xe1\x84\x80\xe1\x85\xa1\xe1\x86\xa8") == "\xea\xb0\x81");  // jamo -> U+AC01
    NormalizationConfig lower;
    lower.lowercase = true;
    CHECK(normalize_line("Cafe\xcc\x81 O\xcc\x88L", lower) == "caf\xc3\xa9 \xc3\xb6l");
    NormalizationConfig raw;
    raw.nfc = false;
    CHECK(normalize_line("e\xcc\x81", raw) == "e\xcc\x81");
}

TEST_CASE("normalize_line rejects invalid utf8") {
    CHECK_THROWS_AS(normalize_line("ok \xff"), DecodeError);
}

TEST_CASE("corpus stream yields tokens in order") {
    TempDir tmp("corpus");
    write_file(tmp / "c.txt", "aa bb\naa");
    CorpusStream s(tmp / "c.txt");
    std::vector<std::string> tokens;
    s.for_each_token([&](std::string_view t) { tokens.emplace_back(t); });
    CHECK(tokens == std::vector<std::string>{"aa", "bb", "aa"});
    CHECK(s.token_count() == 3);
    CHECK(s.line_count() == 2);
}

TEST_CASE("empty file gives no tokens") {
    TempDir tmp("corpus");
    write_file(tmp / "empty.txt", "");
    CorpusStream s(tmp / "empty.txt");
    CHECK(s.read_sentences().empty());
    CHECK(s.token_count() == 0);
    CHECK(read_tokens(tmp / "empty.txt").empty());
}

TEST_CASE("three-line fixture matches a naive split of the normalized lines") {
    TempDir tmp("corpus");
    const std::vector<std::string> lines{"The  cafe\xcc\x81\topens", "", "  at\tnine  o'clock \r"};
    write_file(tmp / "fx.txt", lines[0] + "\n" + lines[1] + "\n" + lines[2] + "\n");

    std::vector<std::string> expected;
    for (const auto& l : lines) {
        const auto norm = normalize_line(l);
        std::string cur;
        for (char c : norm) {
            if (c == ' ') {
                if (!cur.empty()) expected.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!cur.empty()) expected.push_back(cur);
    }
    CHECK(read_tokens(tmp / "fx.txt") == expected);
    CHECK(expected.size() == 6);
    CHECK(expected[1] == "caf\xc3\xa9");
}

TEST_CASE("directories are read file by file in name order") {
    TempDir tmp("corpus");
    std::filesystem::create_directories(tmp / "d");
    write_file(tmp / "d" / "b.txt", "three\n");
    write_file(tmp / "d" / "a.txt", "one two\n");
    CHECK(read_tokens(tmp / "d") == std::vector<std::string>{"one", "two", "three"});
}

TEST_CASE("over-long lines are split at whitespace") {
    TempDir tmp("corpus");
    std::string line;
    for (int i = 0; i < 40; ++i) line += "word" + std::to_string(i) + " ";
    write_file(tmp / "long.txt", line + "\n");
    CorpusStream s(tmp / "long.txt", {}, 32);
    std::vector<std::string> got;
    std::size_t pieces = 0;
    while (auto l = s.next_line()) {
        ++pieces;
        CHECK(l->size() <= 32);
        for (auto& t : split_whitespace(*l)) got.push_back(t);
    }
    CHECK(pieces > 1);
    CHECK(got == split_whitespace(line));
}

TEST_CASE("decode errors name the file and line") {
    TempDir tmp("corpus");
    write_file(tmp / "bad.txt", "fine\nbroken \xc3(\n");
    CorpusStream s(tmp / "bad.txt");
    try {
        (void)s.read_sentences();
        FAIL("expected StreamError");
    } catch (const StreamError& e) {
        const std::string what = e.what();
        CHECK(what.find("bad.txt") != std::string::npos);
        CHECK(what.find("line 2") != std::string::npos);
    }
}

TEST_CASE("missing input is a stream error") {
    CHECK_THROWS_AS(CorpusStream("/nonexistent/lexiport/corpus.txt"), StreamError);
}
