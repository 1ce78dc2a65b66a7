#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cipher_fixture.hpp"
#include "lexiport/embed_io.hpp"
#include "lexiport/rng.hpp"
#include "temp_dir.hpp"

namespace lexiport::testing {

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out.flush()) throw std::runtime_error("cannot write " + p.string());
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::string random_word(Rng& rng, const std::vector<std::string>& onsets,
                        const std::vector<std::string>& nuclei, std::size_t syllables) {
    std::string w;
    for (std::size_t s = 0; s < syllables; ++s) {
        w += onsets[rng.below(onsets.size())];
        w += nuclei[rng.below(nuclei.size())];
    }
    return w;
}

std::vector<std::string> unique_words(Rng& rng, std::size_t n, const std::vector<std::string>& onsets,
                                      const std::vector<std::string>& nuclei) {
    std::set<std::string> seen;
    std::vector<std::string> out;
    while (out.size() < n) {
        auto w = random_word(rng, onsets, nuclei, 2 + rng.below(2));
        if (seen.insert(w).second) out.push_back(w);
    }
    return out;
}

struct Chain {
    std::vector<double> unigram_cdf;
    std::vector<std::vector<std::size_t>> successors;
    std::vector<std::vector<double>> successor_cdf;
};

std::size_t draw(const std::vector<double>& cdf, Rng& rng) {
    const double u = rng.uniform() * cdf.back();
    std::size_t lo = 0, hi = cdf.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (cdf[mid] > u)
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

Chain make_chain(std::size_t n, Rng& rng) {
    Chain c;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += 1.0 / static_cast<double>(i + 1);
        c.unigram_cdf.push_back(acc);
    }
    c.successors.resize(n);
    c.successor_cdf.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 6; ++j) {
            c.successors[i].push_back(rng.below(n));
            s += 0.5 + rng.uniform();
            c.successor_cdf[i].push_back(s);
        }
    }
    return c;
}

std::vector<std::vector<std::size_t>> sample(const Chain& c, std::size_t tokens, Rng& rng) {
    std::vector<std::vector<std::size_t>> out;
    std::size_t total = 0;
    while (total < tokens) {
        const std::size_t len = 8 + rng.below(13);
        std::vector<std::size_t> s;
        std::size_t w = draw(c.unigram_cdf, rng);
        for (std::size_t i = 0; i < len; ++i) {
            s.push_back(w);
            if (rng.uniform() < 0.75)
                w = c.successors[w][draw(c.successor_cdf[w], rng)];
            else
                w = draw(c.unigram_cdf, rng);
        }
        total += s.size();
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

CipherFixture make_cipher_fixture(const CipherParams& params) {
    Rng rng(params.seed);
    CipherFixture f;
    f.source_words = unique_words(rng, params.vocab_size, {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t"},
                                  {"a", "e", "i", "o", "u"});
    // target script: Cyrillic syllables, disjoint from the source alphabet
    f.cipher_words = unique_words(rng, params.vocab_size, {"б", "в", "г", "д", "ж", "з", "к", "л", "м", "н", "п", "т"},
                                  {"а", "е", "и", "о", "у", "ы"});

    const Chain chain = make_chain(params.vocab_size, rng);
    Rng src_rng(keyed_seed(params.seed, "source-corpus"));
    Rng tgt_rng(keyed_seed(params.seed, "target-corpus"));
    for (const auto& s : sample(chain, params.source_tokens, src_rng)) {
        std::vector<std::string> words;
        for (auto i : s) words.push_back(f.source_words[i]);
        f.source_sentences.push_back(std::move(words));
    }
    for (const auto& s : sample(chain, params.target_tokens, tgt_rng)) {
        std::vector<std::string> words;
        for (auto i : s) words.push_back(f.cipher_words[i]);
        f.target_sentences.push_back(std::move(words));
    }

    // dictionary and held-out pairs drawn from disjoint word indices
    std::vector<std::size_t> idx(params.vocab_size);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i + 1 < idx.size(); ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    for (std::size_t i = 0; i < params.lexicon_pairs; ++i)
        f.lexicon.emplace_back(f.source_words[idx[i]], f.cipher_words[idx[i]]);
    for (std::size_t i = params.lexicon_pairs; i < params.lexicon_pairs + params.heldout_pairs; ++i)
        f.heldout.emplace_back(f.source_words[idx[i]], f.cipher_words[idx[i]]);

    // base vocabulary: specials, every source word, some pieces the mono vocab lacks
    std::vector<std::string> base = f.source_words;
    for (const char* extra : {"##s", "##ed", "##ing", "zz", "qq"}) base.push_back(extra);
    f.base_vocab = Vocabulary::with_specials(base);
    f.base_matrix = Matrix(f.base_vocab.size(), params.base_dim);
    Rng base_rng(keyed_seed(params.seed, "base-matrix"));
    for (auto& v : f.base_matrix.data()) v = static_cast<float>(base_rng.normal() / std::sqrt(double(params.base_dim)));

    std::vector<std::string> mono = f.source_words;
    for (const char* extra : {"the", "##ly", "of"}) mono.push_back(extra);
    f.mono_vocab = Vocabulary::with_specials(mono);
    return f;
}

void write_cipher_fixture(const CipherFixture& f, const std::filesystem::path& dir, std::size_t dim,
                          std::size_t epochs) {
    std::filesystem::create_directories(dir);
    auto corpus = [](const std::vector<std::vector<std::string>>& sentences) {
        std::string out;
        for (const auto& s : sentences) {
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (i) out += ' ';
                out += s[i];
            }
            out += '\n';
        }
        return out;
    };
    write_file(dir / "source.txt", corpus(f.source_sentences));
    write_file(dir / "target.txt", corpus(f.target_sentences));
    std::string lex;
    for (const auto& [s, t] : f.lexicon) lex += s + "\t" + t + "\n";
    write_file(dir / "lexicon.tsv", lex);
    std::string held;
    for (const auto& [s, t] : f.heldout) held += s + "\t" + t + "\n";
    write_file(dir / "heldout.tsv", held);
    save_vocab_txt(f.base_vocab, dir / "base_vocab.txt");
    save_matrix(f.base_matrix, dir / "base_matrix.bin");
    save_vocab_txt(f.mono_vocab, dir / "mono_vocab.txt");

    std::ostringstream cfg;
    cfg << "seed: 11\n"
        << "paths:\n"
        << "  target_corpus: target.txt\n"
        << "  source_corpus: source.txt\n"
        << "  base_vocab: base_vocab.txt\n"
        << "  base_matrix: base_matrix.bin\n"
        << "  mono_vocab: mono_vocab.txt\n"
        << "  lexicon: lexicon.tsv\n"
        << "  output_dir: out\n"
        << "vocab:\n"
        << "  size: 2000\n"
        << "trainer:\n"
        << "  dim: " << dim << "\n"
        << "  epochs: " << epochs << "\n"
        << "  bucket_count: 50000\n";
    write_file(dir / "config.yaml", cfg.str());
}

}  // namespace lexiport::testing
