#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "lexiport/error.hpp"
#include "lexiport/rng.hpp"
#include "lexiport/vocab.hpp"
#include "lexiport/wordpiece.hpp"
#include "temp_dir.hpp"

using namespace lexiport;

namespace {

std::vector<std::string> specials() {
    return {kSpecialTokens.begin(), kSpecialTokens.end()};
}

std::vector<std::string> with_specials(std::vector<std::string> rest) {
    auto out = specials();
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

}  // namespace

TEST_CASE("vocabulary ids and prefix handling") {
    const auto v = Vocabulary::with_specials({"un", "##aff", "##able", "[UNK]"});
    CHECK(v.size() == 8);
    CHECK(v.has_leading_specials());
    CHECK(v.id_of("[PAD]") == 0u);
    CHECK(v.id_of("un") == 5u);
    CHECK(v.id_of("##able") == 7u);
    CHECK_FALSE(v.id_of("able"));
    CHECK(v.is_continuation("##aff"));
    CHECK_FALSE(v.is_continuation("un"));
    CHECK(v.strip_prefix("##aff") == "aff");
    CHECK(v.is_special(1));
}

TEST_CASE("vocabulary rejects empty, duplicate and bare-prefix tokens") {
    CHECK_THROWS_AS(Vocabulary({"a", ""}), VocabError);
    CHECK_THROWS_AS(Vocabulary({"a", "b", "a"}), VocabError);
    CHECK_THROWS_AS(Vocabulary({"a", "##"}), VocabError);
}

TEST_CASE("loaded vocabularies may place specials anywhere") {
    const Vocabulary v({"[PAD]", "x", "[UNK]", "[CLS]", "[SEP]", "[MASK]"});
    CHECK_FALSE(v.has_leading_specials());
    CHECK(v.is_special(2));
}

TEST_CASE("vocab.txt round trip") {
    testing::TempDir tmp("vocab");
    const auto v = Vocabulary::with_specials({"\xc3\xa9t\xc3\xa9", "##s", "ab"});
    save_vocab_txt(v, tmp / "vocab.txt");
    CHECK(testing::read_file(tmp / "vocab.txt") == "[PAD]\n[UNK]\n[CLS]\n[SEP]\n[MASK]\n\xc3\xa9t\xc3\xa9\n##s\nab\n");
    CHECK(load_vocab_txt(tmp / "vocab.txt") == v);
    testing::write_file(tmp / "dup.txt", "a\nb\na\n");
    CHECK_THROWS_AS(load_vocab_txt(tmp / "dup.txt"), Error);
}

// Counts: aa x2, ab x1 -> a:3, ##a:2, ##b:1.
// score(a,##a) = 2/(3*2) = 1/3, score(a,##b) = 1/(3*1) = 1/3.
// The scores tie; (a,##a) wins on pair frequency 2 > 1.
TEST_CASE("wordpiece merges the hand-scored pair") {
    WordPieceConfig cfg;
    cfg.target_size = 10;
    const auto v = induce_wordpiece_vocab(std::vector<std::string>{"aa", "aa", "ab"}, cfg);
    CHECK(v.has_leading_specials());
    CHECK(v.tokens() == with_specials({"a", "b", "##a", "##b", "aa"}));
}

// Counts: ab x1, cd x5. All four pairs-of-one-word have score
// freq/(freq*freq): (a,##b)=1/(1*1)=1, (c,##d)=5/(5*5)=0.2.
TEST_CASE("wordpiece prefers the pair with the higher normalised score") {
    WordPieceConfig cfg;
    cfg.target_size = 14;
    std::vector<std::string> corpus{"ab"};
    for (int i = 0; i < 5; ++i) corpus.push_back("cd");
    const auto v = induce_wordpiece_vocab(corpus, cfg);
    REQUIRE(v.size() == 14);
    CHECK(v.token(13) == "ab");
}

TEST_CASE("wordpiece keeps only the alphabet at the capacity bound") {
    WordPieceConfig cfg;
    cfg.target_size = 7;
    const auto v = induce_wordpiece_vocab(std::vector<std::string>{"aaaa", "aa", "a"}, cfg);
    CHECK(v.tokens() == with_specials({"a", "##a"}));
    cfg.target_size = 6;
    CHECK_THROWS_AS(induce_wordpiece_vocab(std::vector<std::string>{"aaaa"}, cfg), CapacityError);
}

TEST_CASE("wordpiece stops early when no pairs remain") {
    WordPieceConfig cfg;
    cfg.target_size = 1000;
    const auto v = induce_wordpiece_vocab(std::vector<std::string>{"abc", "abc"}, cfg);
    CHECK(v.contains("abc"));
    CHECK(v.size() < 1000);
}

TEST_CASE("wordpiece drops characters under min_frequency") {
    WordPieceConfig cfg;
    cfg.target_size = 20;
    cfg.min_frequency = 2;
    const auto v = induce_wordpiece_vocab(std::vector<std::string>{"ab", "ab", "z"}, cfg);
    CHECK_FALSE(v.contains("z"));
    CHECK_FALSE(v.contains("##z"));
    CHECK(tokenize(v, "z") == std::vector<std::string>{"[UNK]"});
}

TEST_CASE("wordpiece input errors") {
    WordPieceConfig cfg;
    cfg.target_size = 50;
    CHECK_THROWS_AS(induce_wordpiece_vocab(std::vector<std::string>{}, cfg), InductionError);
    cfg.min_frequency = 0;
    CHECK_THROWS_AS(induce_wordpiece_vocab(std::vector<std::string>{"a"}, cfg), Error);
}

TEST_CASE("default vocabulary size") {
    CHECK(kDefaultVocabSize == 30000);
    CHECK(WordPieceConfig{}.target_size == 30000);
}

TEST_CASE("random corpora are fully covered by their own vocabulary") {
    Rng rng(17);
    const std::vector<std::string> alphabet{"a", "b", "c", "\xc3\xa9", "\xe1\x88\x80", "z"};
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::string> corpus;
        for (int w = 0; w < 200; ++w) {
            std::string word;
            const auto len = 1 + rng.below(7);
            for (std::size_t i = 0; i < len; ++i) word += alphabet[rng.below(alphabet.size())];
            corpus.push_back(word);
        }
        WordPieceConfig cfg;
        cfg.target_size = 17 + rng.below(60);
        const auto v = induce_wordpiece_vocab(corpus, cfg);
        CHECK(v.size() <= cfg.target_size);
        CHECK(v.has_leading_specials());
        for (const auto& w : corpus) {
            const auto pieces = tokenize(v, w);
            std::string joined;
            for (std::size_t i = 0; i < pieces.size(); ++i) {
                REQUIRE(pieces[i] != "[UNK]");
                joined += i ? std::string(v.strip_prefix(pieces[i])) : pieces[i];
                CHECK(v.is_continuation(pieces[i]) == (i > 0));
            }
            CHECK(joined == w);
        }
    }
}

TEST_CASE("tokenize is greedy longest match") {
    const auto v = Vocabulary::with_specials({"un", "una", "##aff", "##able", "##a", "##ffable", "unaffable"});
    CHECK(tokenize(v, "unaffable") == std::vector<std::string>{"unaffable"});
    const auto w = Vocabulary::with_specials({"un", "##aff", "##able", "##a"});
    CHECK(tokenize(w, "unaffable") == std::vector<std::string>{"un", "##aff", "##able"});
    CHECK(tokenize(w, "un") == std::vector<std::string>{"un"});
    CHECK(tokenize(w, "unx") == std::vector<std::string>{"[UNK]"});
    CHECK(tokenize(w, "aff") == std::vector<std::string>{"[UNK]"});
}

TEST_CASE("screening keeps the shared non-special tokens with base rows") {
    const Vocabulary mono({"[UNK]", "a", "b", "c"});
    const auto base = Vocabulary::with_specials({"b", "c", "d"});
    Matrix m(base.size(), 2);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        m(i, 0) = float(i);
        m(i, 1) = -float(i);
    }
    const auto set = screen_source_vocab(mono, base, m);
    CHECK(set.tokens == std::vector<std::string>{"b", "c"});
    CHECK(set.base_ids == std::vector<std::size_t>{5, 6});
    REQUIRE(set.rows.rows() == 2);
    CHECK(set.rows(0, 0) == 5.0f);
    CHECK(set.rows(1, 1) == -6.0f);

    CHECK_THROWS_AS(screen_source_vocab(Vocabulary({"x", "y"}), base, m), ScreeningError);
    CHECK_THROWS_AS(screen_source_vocab(mono, base, Matrix(3, 2)), Error);
}

TEST_CASE("screening subsample is a seeded subset in base order") {
    std::vector<std::string> words;
    for (int i = 0; i < 100; ++i) words.push_back("w" + std::to_string(i));
    const auto base = Vocabulary::with_specials(words);
    const Vocabulary mono(words);
    const Matrix m(base.size(), 3, 1.0f);
    const auto a = screen_source_vocab(mono, base, m, 30, 4);
    const auto b = screen_source_vocab(mono, base, m, 30, 4);
    const auto c = screen_source_vocab(mono, base, m, 30, 5);
    CHECK(a.tokens.size() == 30);
    CHECK(a.tokens == b.tokens);
    CHECK(a.tokens != c.tokens);
    CHECK(std::is_sorted(a.base_ids.begin(), a.base_ids.end()));
    CHECK(screen_source_vocab(mono, base, m, 100, 4).tokens.size() == 100);
    CHECK_THROWS_AS(screen_source_vocab(mono, base, m, 101, 4), ScreeningError);
}

TEST_CASE("merge appends new tokens and keeps base ids") {
    const auto base = Vocabulary::with_specials({"a", "b"});
    const Vocabulary fresh({"b", "c"});
    const auto r = merge_vocab(base, fresh);
    CHECK(r.appended == std::vector<std::string>{"c"});
    CHECK(r.overlap == std::vector<std::string>{"b"});
    CHECK(r.merged.id_of("b") == base.id_of("b"));
    CHECK(r.merged.id_of("c") == base.size());

    const auto same = merge_vocab(base, Vocabulary({"a", "[UNK]"}));
    CHECK(same.appended.empty());
    CHECK(same.merged == base);
}

TEST_CASE("merge invariants on random vocabularies") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        std::set<std::string> bs, ns;
        while (bs.size() < 30) bs.insert("t" + std::to_string(rng.below(80)));
        while (ns.size() < 25) ns.insert("t" + std::to_string(rng.below(80)));
        const auto base = Vocabulary::with_specials({bs.begin(), bs.end()});
        const Vocabulary fresh({ns.begin(), ns.end()});
        const auto r = merge_vocab(base, fresh);
        CHECK(r.merged.size() == base.size() + r.appended.size());
        for (std::size_t i = 0; i < base.size(); ++i) CHECK(r.merged.token(i) == base.token(i));
        for (const auto& t : ns) CHECK(r.merged.contains(t));
        CHECK(r.overlap.size() + r.appended.size() == ns.size());
    }
}
