#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lexiport/kernels.hpp"
#include "lexiport/matrix.hpp"
#include "lexiport/ngrams.hpp"
#include "lexiport/vector_lookup.hpp"
#include "lexiport/vocab.hpp"

namespace lexiport {

struct SynthConfig {
    std::size_t n_min = 3;
    std::size_t n_max = 6;
    bool markers = true;      // wrap tokens in '<' '>' before taking n-grams
    bool ngram_mean = false;  // divide the n-gram sum by the number of hits
    std::string continuation_prefix = std::string(kDefaultContinuationPrefix);
};

// Static vector per vocabulary token in a common space. Rows flagged in
// zero_mask are exactly zero and take no part in similarity search.
struct VocabEmbeddingTable {
    std::vector<std::string> tokens;
    Matrix vectors;
    std::vector<std::uint8_t> zero_mask;

    std::size_t size() const noexcept { return tokens.size(); }
    std::size_t dim() const noexcept { return vectors.cols(); }
    std::size_t live_count() const noexcept;
};

// Full-word vector of the (prefix-stripped) token when the model has one;
// otherwise the sum of the n-gram vectors that resolve, or all zeros.
std::vector<float> synthesize_embedding(std::string_view token, const VectorLookup& model,
                                        const SynthConfig& config = {});

// Specials are masked; every other token goes through synthesize_embedding.
VocabEmbeddingTable build_table(const Vocabulary& vocab, const VectorLookup& model,
                                const SynthConfig& config = {},
                                kernels::Exec exec = kernels::Exec::parallel);
VocabEmbeddingTable build_table(const std::vector<std::string>& tokens, const VectorLookup& model,
                                const SynthConfig& config = {},
                                kernels::Exec exec = kernels::Exec::parallel);

// .vec export; reloading recovers the mask from the all-zero rows.
void save_table(const VocabEmbeddingTable& table, const std::filesystem::path& path);
VocabEmbeddingTable load_table(const std::filesystem::path& path);

}  // namespace lexiport
