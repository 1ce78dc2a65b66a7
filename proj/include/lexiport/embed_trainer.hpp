#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lexiport/corpus_io.hpp"
#include "lexiport/embed_io.hpp"
#include "lexiport/matrix.hpp"
#include "lexiport/vector_lookup.hpp"

namespace lexiport {

struct TrainerConfig {
    std::size_t dim = 300;
    std::size_t epochs = 20;
    std::size_t negatives = 10;
    std::size_t window = 5;
    std::size_t min_count = 5;
    double initial_lr = 0.05;  // decays linearly to 0
    std::size_t bucket_count = 2'000'000;
    std::size_t n_min = 3;
    std::size_t n_max = 6;
    std::uint64_t seed = 1;
    std::size_t workers = 1;

    void validate() const;
};

// Subword-aware CBOW model: one input row per word followed by one per
// hashed n-gram bucket. A word's reported vector is the mean of its own row
// and its n-gram bucket rows.
class EmbeddingModel : public VectorLookup {
public:
    EmbeddingModel(TrainerConfig config, std::vector<std::string> words, Matrix input);

    std::size_t dim() const noexcept override { return config_.dim; }
    std::span<const float> word_vector(std::string_view word) const override;
    bool has_ngram_buckets() const noexcept override { return true; }
    std::span<const float> ngram_vector(std::string_view ngram) const override;

    const TrainerConfig& config() const noexcept { return config_; }
    const std::vector<std::string>& words() const noexcept { return words_; }
    std::size_t bucket_count() const noexcept { return config_.bucket_count; }
    std::ptrdiff_t index_of(std::string_view word) const;

    // fnv1a32(ngram) mod bucket_count
    std::size_t bucket_of(std::string_view ngram) const noexcept;
    // Input rows averaged into a word's vector: its own row first.
    std::vector<std::size_t> subword_rows(std::size_t word_index) const;

    const Matrix& input() const noexcept { return input_; }
    // Reported vectors, one row per word.
    const Matrix& word_vectors() const noexcept { return word_vectors_; }

    // Applies `fn` to the input matrix and recomputes reported vectors.
    template <class Fn>
    void transform_input(Fn&& fn) {
        fn(input_);
        refresh();
    }

    const std::vector<double>& epoch_losses() const noexcept { return epoch_losses_; }
    void set_epoch_losses(std::vector<double> l) { epoch_losses_ = std::move(l); }

    VectorTable to_table() const;

private:
    void refresh();

    struct Hash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept {
            return std::hash<std::string_view>{}(s);
        }
    };
    TrainerConfig config_;
    std::vector<std::string> words_;
    std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
    Matrix input_;
    Matrix word_vectors_;
    std::vector<double> epoch_losses_;
};

// CBOW with negative sampling (noise ∝ count^0.75). workers = 1 with a fixed
// seed is bit-reproducible; more workers update shared rows without locks.
EmbeddingModel train_cbow_subword(const std::vector<std::vector<std::string>>& sentences,
                                  const TrainerConfig& config);
EmbeddingModel train_cbow_subword(CorpusStream& stream, const TrainerConfig& config);

struct RankedWord {
    std::string token;
    double cosine;
};

// k highest-cosine words to `query`; ties go to the lower word index.
std::vector<RankedWord> nearest_words(const EmbeddingModel& model, std::span<const float> query,
                                      std::size_t k);

// Binary dump starting with the magic "LEXIPORT-EMB\x01".
inline constexpr std::string_view kModelMagic{"LEXIPORT-EMB\x01", 13};
void save_model(const EmbeddingModel& model, const std::filesystem::path& path);
EmbeddingModel load_model(const std::filesystem::path& path);
bool is_model_file(const std::filesystem::path& path);

}  // namespace lexiport
