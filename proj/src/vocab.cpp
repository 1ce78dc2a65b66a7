#include "lexiport/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "lexiport/error.hpp"
#include "lexiport/rng.hpp"
#include "lexiport/utf8.hpp"

namespace lexiport {

bool is_special_token(std::string_view token) noexcept {
    return std::find(kSpecialTokens.begin(), kSpecialTokens.end(), token) != kSpecialTokens.end();
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::string continuation_prefix)
    : tokens_(std::move(tokens)), prefix_(std::move(continuation_prefix)) {
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        const auto& t = tokens_[i];
        if (t.empty()) throw VocabError("empty token at id " + std::to_string(i));
        if (t == prefix_) throw VocabError("bare continuation prefix at id " + std::to_string(i));
        if (!index_.emplace(t, i).second)
            throw VocabError("duplicate token '" + t + "' at id " + std::to_string(i));
    }
}

Vocabulary Vocabulary::with_specials(const std::vector<std::string>& tokens,
                                     std::string continuation_prefix) {
    std::vector<std::string> all(kSpecialTokens.begin(), kSpecialTokens.end());
    all.reserve(all.size() + tokens.size());
    for (const auto& t : tokens)
        if (!is_special_token(t)) all.push_back(t);
    return Vocabulary(std::move(all), std::move(continuation_prefix));
}

std::optional<std::size_t> Vocabulary::id_of(std::string_view token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

bool Vocabulary::is_continuation(std::string_view token) const noexcept {
    return !prefix_.empty() && token.size() > prefix_.size() && token.starts_with(prefix_);
}

std::string_view Vocabulary::strip_prefix(std::string_view token) const noexcept {
    return is_continuation(token) ? token.substr(prefix_.size()) : token;
}

bool Vocabulary::has_leading_specials() const noexcept {
    if (tokens_.size() < kSpecialTokens.size()) return false;
    for (std::size_t i = 0; i < kSpecialTokens.size(); ++i)
        if (tokens_[i] != kSpecialTokens[i]) return false;
    return true;
}

Vocabulary load_vocab_txt(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StreamError("cannot open vocabulary " + path.string());
    std::vector<std::string> tokens;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        try {
            utf8::validate(line);
        } catch (const DecodeError& e) {
            throw FormatError(path.string(), lineno, e.what());
        }
        tokens.push_back(std::move(line));
    }
    try {
        return Vocabulary(std::move(tokens));
    } catch (const VocabError& e) {
        throw FormatError(path.string(), 0, e.what());
    }
}

void save_vocab_txt(const Vocabulary& vocab, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw WriteError("cannot create " + path.string());
    for (const auto& t : vocab.tokens()) out << t << '\n';
    if (!out.flush()) throw WriteError("write failed for " + path.string());
}

std::vector<std::string> tokenize(const Vocabulary& vocab, std::string_view word) {
    std::vector<std::string> pieces;
    const std::string& prefix = vocab.continuation_prefix();
    std::string candidate;
    std::size_t start = 0;
    while (start < word.size()) {
        std::size_t end = word.size();
        bool found = false;
        while (end > start) {
            candidate.clear();
            if (start > 0) candidate = prefix;
            candidate.append(word.substr(start, end - start));
            if (vocab.contains(candidate)) {
                found = true;
                break;
            }
            // step back one code point
            do {
                --end;
            } while (end > start && (static_cast<unsigned char>(word[end]) & 0xC0) == 0x80);
        }
        if (!found) return {std::string(kUnkToken)};
        pieces.push_back(candidate);
        start = end;
    }
    return pieces;
}

SourceVocabSet screen_source_vocab(const Vocabulary& mono_vocab, const Vocabulary& base_vocab,
                                   const Matrix& base_matrix, std::optional<std::size_t> subsample,
                                   std::uint64_t seed) {
    if (base_matrix.rows() != base_vocab.size())
        throw ContractError("base matrix has " + std::to_string(base_matrix.rows()) +
                            " rows but base vocabulary has " + std::to_string(base_vocab.size()) +
                            " tokens");
    std::vector<std::size_t> ids;
    for (std::size_t id = 0; id < base_vocab.size(); ++id) {
        const auto& t = base_vocab.token(id);
        if (!is_special_token(t) && mono_vocab.contains(t)) ids.push_back(id);
    }
    if (ids.empty()) throw ScreeningError("monolingual and base vocabularies share no tokens");

    if (subsample) {
        if (*subsample > ids.size())
            throw ScreeningError("subsample size " + std::to_string(*subsample) +
                                 " exceeds intersection size " + std::to_string(ids.size()));
        // partial Fisher-Yates, then restore base-id order
        Rng rng(seed);
        for (std::size_t i = 0; i < *subsample; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(ids.size() - i));
            std::swap(ids[i], ids[j]);
        }
        ids.resize(*subsample);
        std::sort(ids.begin(), ids.end());
    }

    SourceVocabSet out;
    out.rows = Matrix(0, base_matrix.cols());
    out.tokens.reserve(ids.size());
    out.base_ids = ids;
    out.rows.data().reserve(ids.size() * base_matrix.cols());
    for (std::size_t id : ids) {
        out.tokens.push_back(base_vocab.token(id));
        out.rows.append_row(base_matrix.row(id));
    }
    return out;
}

MergeResult merge_vocab(const Vocabulary& base_vocab, const Vocabulary& new_vocab) {
    MergeResult out;
    std::vector<std::string> tokens = base_vocab.tokens();
    for (const auto& t : new_vocab.tokens()) {
        if (base_vocab.contains(t))
            out.overlap.push_back(t);
        else
            out.appended.push_back(t);
    }
    tokens.insert(tokens.end(), out.appended.begin(), out.appended.end());
    out.merged = Vocabulary(std::move(tokens), base_vocab.continuation_prefix());
    return out;
}

}  // namespace lexiport
