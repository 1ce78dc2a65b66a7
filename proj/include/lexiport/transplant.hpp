#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexiport/embed_io.hpp"
#include "lexiport/kernels.hpp"
#include "lexiport/matrix.hpp"
#include "lexiport/synth.hpp"
#include "lexiport/vocab.hpp"

namespace lexiport {

struct TransplantConfig {
    std::size_t k = 10;
    double tau = 0.1;
    std::uint64_t seed = 1;

    void validate() const;
};

// Top-k source neighbours per target token. lists[t] is empty for masked
// target rows; indices refer to rows of the source table.
struct SimilarityView {
    std::vector<std::vector<kernels::Neighbor>> lists;
};

SimilarityView top_k_similar(const VocabEmbeddingTable& source, const VocabEmbeddingTable& target,
                             std::size_t k, kernels::Exec exec = kernels::Exec::parallel);

// Temperature softmax over similarities (max-subtracted).
std::vector<double> softmax_weights(std::span<const double> similarities, double tau);

struct WeightedRow {
    std::vector<float> vector;
    std::vector<double> weights;
};

// sum_x w_x * row_x with w = softmax(similarity / tau).
WeightedRow weighted_init(std::span<const double> similarities,
                          const std::vector<std::span<const float>>& rows, double tau);

enum class Provenance { weighted, fallback_sampled, overlap_copied };
std::string_view to_string(Provenance p);

struct NeighborRecord {
    std::string source_token;
    double similarity;
    double weight;
};

struct ProvenanceRecord {
    std::string token;
    std::size_t id;  // id in the merged vocabulary
    Provenance kind;
    std::vector<NeighborRecord> neighbors;  // empty unless weighted
};

struct TransplantResult {
    Vocabulary merged_vocab;
    Matrix matrix;
    std::vector<ProvenanceRecord> provenance;  // one per appended token, merged-id order
    std::vector<ProvenanceRecord> overlap;     // overlap_copied records
    nlohmann::json manifest = nlohmann::json::object();
};

// Appended tokens get a softmax-weighted mix of the base-model rows of their
// top-k source neighbours (similarities from the static tables), or a row
// sampled from the normal fitted to the source rows when their static row
// is masked or the mix is exactly zero. Base and overlap rows are copied.
// k is capped at the number of live source rows.
TransplantResult run_transplant(const Vocabulary& base_vocab, const Matrix& base_matrix,
                                const SourceVocabSet& source_set,
                                const VocabEmbeddingTable& source_table,
                                const VocabEmbeddingTable& target_table, const Vocabulary& new_vocab,
                                const TransplantConfig& config,
                                kernels::Exec exec = kernels::Exec::parallel);

// Writes vocab.txt, matrix.bin + matrix.json, provenance.jsonl, manifest.json.
void export_result(const TransplantResult& result, const std::filesystem::path& out_dir);
TransplantResult load_result(const std::filesystem::path& dir);

nlohmann::json provenance_json(const ProvenanceRecord& record);

}  // namespace lexiport
