#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexiport/vocab.hpp"

namespace lexiport {

inline constexpr std::size_t kDefaultVocabSize = 30000;

struct WordPieceConfig {
    std::size_t target_size = kDefaultVocabSize;
    std::size_t min_frequency = 1;
    std::string continuation_prefix = std::string(kDefaultContinuationPrefix);
};

// Induces a WordPiece vocabulary from word counts. The alphabet holds both
// the word-initial and the continuation form of every character seen at
// least `min_frequency` times. Merges pick the pair maximising
// freq(pair) / (freq(left) * freq(right)); ties go to the more frequent pair,
// then to the lexicographically smaller (left, right).
Vocabulary induce_wordpiece_vocab(const std::unordered_map<std::string, std::size_t>& word_counts,
                                  const WordPieceConfig& config = {});

// Same, counting whitespace tokens of a corpus.
Vocabulary induce_wordpiece_vocab(const std::vector<std::string>& corpus_tokens,
                                  const WordPieceConfig& config = {});

}  // namespace lexiport
