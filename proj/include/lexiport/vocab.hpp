#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lexiport/matrix.hpp"

namespace lexiport {

// Reserved tokens, in the id order an induced vocabulary assigns them.
inline constexpr std::array<std::string_view, 5> kSpecialTokens = {"[PAD]", "[UNK]", "[CLS]",
                                                                   "[SEP]", "[MASK]"};
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kDefaultContinuationPrefix = "##";

bool is_special_token(std::string_view token) noexcept;

// Ordered token list; a token's id is its position. Word-initial and
// continuation forms ("a" vs "##a") are distinct entries.
class Vocabulary {
public:
    Vocabulary() = default;

    // Takes tokens as-is (e.g. a published vocab.txt). Specials may sit at
    // any id. Throws VocabError on empty/duplicate tokens or a bare prefix.
    explicit Vocabulary(std::vector<std::string> tokens,
                        std::string continuation_prefix = std::string(kDefaultContinuationPrefix));

    // Specials first in kSpecialTokens order, then `tokens` (specials in
    // `tokens` are skipped).
    static Vocabulary with_specials(const std::vector<std::string>& tokens,
                                    std::string continuation_prefix =
                                        std::string(kDefaultContinuationPrefix));

    std::size_t size() const noexcept { return tokens_.size(); }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }
    const std::string& token(std::size_t id) const { return tokens_.at(id); }
    const std::string& continuation_prefix() const noexcept { return prefix_; }

    std::optional<std::size_t> id_of(std::string_view token) const;
    bool contains(std::string_view token) const { return id_of(token).has_value(); }
    bool is_special(std::size_t id) const { return is_special_token(tokens_.at(id)); }

    bool is_continuation(std::string_view token) const noexcept;
    // Token text with any continuation prefix removed.
    std::string_view strip_prefix(std::string_view token) const noexcept;

    // True when all specials are present and occupy ids 0..4 in order.
    bool has_leading_specials() const noexcept;

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.tokens_ == b.tokens_ && a.prefix_ == b.prefix_;
    }

private:
    struct Hash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept {
            return std::hash<std::string_view>{}(s);
        }
    };
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
    std::string prefix_ = std::string(kDefaultContinuationPrefix);
};

// vocab.txt: one token per line, line number = id.
Vocabulary load_vocab_txt(const std::filesystem::path& path);
void save_vocab_txt(const Vocabulary& vocab, const std::filesystem::path& path);

// Greedy longest-match-first segmentation. Returns {"[UNK]"} when any
// position cannot be matched.
std::vector<std::string> tokenize(const Vocabulary& vocab, std::string_view word);

// Source-biased slice of the base model's vocabulary with its embedding rows.
struct SourceVocabSet {
    std::vector<std::string> tokens;
    std::vector<std::size_t> base_ids;  // id of each token in the base vocabulary
    Matrix rows;                        // base-model rows, one per token
};

// V_s1 ∩ V_m minus specials, in base-id order. With `subsample`, a uniform
// random subset of that size (still in base-id order).
SourceVocabSet screen_source_vocab(const Vocabulary& mono_vocab, const Vocabulary& base_vocab,
                                   const Matrix& base_matrix,
                                   std::optional<std::size_t> subsample = std::nullopt,
                                   std::uint64_t seed = 0);

struct MergeResult {
    Vocabulary merged;
    std::vector<std::string> overlap;   // in new-vocabulary order
    std::vector<std::string> appended;  // in new-vocabulary order
};

// Base ids never move; new tokens are appended in `new_vocab` order.
MergeResult merge_vocab(const Vocabulary& base_vocab, const Vocabulary& new_vocab);

}  // namespace lexiport
