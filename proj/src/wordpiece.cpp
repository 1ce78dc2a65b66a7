#include "lexiport/wordpiece.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

#include "lexiport/error.hpp"
#include "lexiport/utf8.hpp"

namespace lexiport {

namespace {

using SymbolId = std::uint32_t;
using Pair = std::pair<SymbolId, SymbolId>;

struct PairHash {
    std::size_t operator()(const Pair& p) const noexcept {
        return (static_cast<std::size_t>(p.first) << 32) ^ p.second;
    }
};

class Inducer {
public:
    Inducer(const std::unordered_map<std::string, std::size_t>& counts, const WordPieceConfig& cfg)
        : cfg_(cfg) {
        std::vector<std::pair<std::string, std::size_t>> words(counts.begin(), counts.end());
        std::sort(words.begin(), words.end());

        std::map<std::string, std::size_t> char_freq;
        for (const auto& [w, c] : words)
            for (const auto& ch : utf8::characters(w)) char_freq[ch] += c;
        for (const auto& [ch, f] : char_freq)
            if (f >= cfg_.min_frequency) alphabet_.insert(ch);

        for (const auto& [w, c] : words) {
            if (c == 0 || w.empty()) continue;
            auto chars = utf8::characters(w);
            if (!std::all_of(chars.begin(), chars.end(),
                             [&](const std::string& ch) { return alphabet_.contains(ch); }))
                continue;
            Word word{{}, c};
            for (std::size_t i = 0; i < chars.size(); ++i)
                word.symbols.push_back(intern(i == 0 ? chars[i] : cfg_.continuation_prefix + chars[i]));
            words_.push_back(std::move(word));
        }
    }

    Vocabulary run() {
        if (words_.empty()) throw InductionError("corpus has no usable words");
        const std::size_t base = kSpecialTokens.size() + 2 * alphabet_.size();
        if (cfg_.target_size < base)
            throw CapacityError("target size " + std::to_string(cfg_.target_size) +
                                " cannot hold " + std::to_string(kSpecialTokens.size()) +
                                " specials and a " + std::to_string(2 * alphabet_.size()) +
                                "-entry character alphabet");

        std::vector<std::string> tokens;
        std::unordered_set<std::string> present;
        for (const auto& ch : alphabet_) tokens.push_back(ch);
        for (const auto& ch : alphabet_) tokens.push_back(cfg_.continuation_prefix + ch);
        present.insert(tokens.begin(), tokens.end());

        for (std::size_t w = 0; w < words_.size(); ++w) add_word(w);

        while (kSpecialTokens.size() + tokens.size() < cfg_.target_size) {
            auto best = best_pair();
            if (!best) break;
            const std::string merged = symbols_[best->first] + std::string(strip(symbols_[best->second]));
            const SymbolId merged_id = intern(merged);
            if (present.insert(merged).second) tokens.push_back(merged);
            apply_merge(*best, merged_id);
        }
        return Vocabulary::with_specials(tokens, cfg_.continuation_prefix);
    }

private:
    struct Word {
        std::vector<SymbolId> symbols;
        std::size_t count;
    };

    SymbolId intern(const std::string& s) {
        auto [it, inserted] = symbol_ids_.emplace(s, static_cast<SymbolId>(symbols_.size()));
        if (inserted) {
            symbols_.push_back(s);
            unit_freq_.push_back(0);
        }
        return it->second;
    }

    std::string_view strip(const std::string& s) const {
        std::string_view v = s;
        if (v.starts_with(cfg_.continuation_prefix)) v.remove_prefix(cfg_.continuation_prefix.size());
        return v;
    }

    void add_word(std::size_t w) {
        const auto& word = words_[w];
        for (std::size_t i = 0; i < word.symbols.size(); ++i) {
            unit_freq_[word.symbols[i]] += word.count;
            if (i + 1 < word.symbols.size()) {
                const Pair p{word.symbols[i], word.symbols[i + 1]};
                pair_freq_[p] += word.count;
                pair_words_[p].insert(w);
            }
        }
    }

    void remove_word(std::size_t w) {
        const auto& word = words_[w];
        for (std::size_t i = 0; i < word.symbols.size(); ++i) {
            unit_freq_[word.symbols[i]] -= word.count;
            if (i + 1 < word.symbols.size()) {
                const Pair p{word.symbols[i], word.symbols[i + 1]};
                auto it = pair_freq_.find(p);
                it->second -= word.count;
                if (it->second == 0) pair_freq_.erase(it);
            }
        }
    }

    // score(a) > score(b), compared exactly as rationals
    bool better(const Pair& a, std::size_t fa, const Pair& b, std::size_t fb) const {
        using u128 = unsigned __int128;
        const u128 lhs = u128(fa) * (u128(unit_freq_[b.first]) * unit_freq_[b.second]);
        const u128 rhs = u128(fb) * (u128(unit_freq_[a.first]) * unit_freq_[a.second]);
        if (lhs != rhs) return lhs > rhs;
        if (fa != fb) return fa > fb;
        const auto ka = std::tie(symbols_[a.first], symbols_[a.second]);
        const auto kb = std::tie(symbols_[b.first], symbols_[b.second]);
        return ka < kb;
    }

    std::optional<Pair> best_pair() const {
        std::optional<Pair> best;
        std::size_t best_freq = 0;
        for (const auto& [p, f] : pair_freq_) {
            if (f < cfg_.min_frequency) continue;
            if (!best || better(p, f, *best, best_freq)) {
                best = p;
                best_freq = f;
            }
        }
        return best;
    }

    void apply_merge(const Pair& p, SymbolId merged) {
        auto node = pair_words_.extract(p);
        if (node.empty()) return;
        std::vector<std::size_t> affected(node.mapped().begin(), node.mapped().end());
        std::sort(affected.begin(), affected.end());
        for (std::size_t w : affected) {
            auto& syms = words_[w].symbols;
            bool hit = false;
            for (std::size_t i = 0; i + 1 < syms.size(); ++i)
                if (syms[i] == p.first && syms[i + 1] == p.second) hit = true;
            if (!hit) continue;
            remove_word(w);
            std::vector<SymbolId> next;
            next.reserve(syms.size());
            for (std::size_t i = 0; i < syms.size();) {
                if (i + 1 < syms.size() && syms[i] == p.first && syms[i + 1] == p.second) {
                    next.push_back(merged);
                    i += 2;
                } else {
                    next.push_back(syms[i++]);
                }
            }
            syms = std::move(next);
            add_word(w);
        }
    }

    WordPieceConfig cfg_;
    std::set<std::string> alphabet_;
    std::vector<Word> words_;
    std::vector<std::string> symbols_;
    std::unordered_map<std::string, SymbolId> symbol_ids_;
    std::vector<std::size_t> unit_freq_;
    std::unordered_map<Pair, std::size_t, PairHash> pair_freq_;
    std::unordered_map<Pair, std::unordered_set<std::size_t>, PairHash> pair_words_;
};

}  // namespace

Vocabulary induce_wordpiece_vocab(const std::unordered_map<std::string, std::size_t>& word_counts,
                                  const WordPieceConfig& config) {
    if (config.min_frequency < 1) throw InductionError("min_frequency must be at least 1");
    if (word_counts.empty()) throw InductionError("empty corpus");
    return Inducer(word_counts, config).run();
}

Vocabulary induce_wordpiece_vocab(const std::vector<std::string>& corpus_tokens,
                                  const WordPieceConfig& config) {
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& t : corpus_tokens) ++counts[t];
    return induce_wordpiece_vocab(counts, config);
}

}  // namespace lexiport
