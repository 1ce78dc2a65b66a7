#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "lexiport/embed_io.hpp"
#include "lexiport/embed_trainer.hpp"
#include "lexiport/kernels.hpp"

namespace lexiport {

struct Lexicon {
    std::vector<std::pair<std::string, std::string>> pairs;  // (source, target)
    std::pair<std::string, std::string> language_pair{"src", "tgt"};
};

// One "source target" pair per line, tab or space separated. Blank lines and
// '#' comments are skipped; duplicates keep their first occurrence.
Lexicon parse_lexicon(const std::filesystem::path& path);

struct AlignmentStats {
    std::size_t pair_count = 0;
    double residual = 0.0;  // ||XW - Y||_F on the fitting pairs
    std::vector<std::string> warnings;
};

// Orthogonal d x d map applied to row vectors: v -> v * matrix. Sends target
// space to source space.
struct OrthogonalMap {
    Eigen::MatrixXd matrix;
    AlignmentStats fit_stats;
};

// argmin over orthogonal W of ||XW - Y||_F, via the SVD of X^T Y = U S V^T,
// W = U V^T. Rows of X and Y are paired observations.
OrthogonalMap fit_procrustes(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

struct AlignOptions {
    bool normalize_before_align = false;
};

// Builds X from target vectors and Y from source vectors for every lexicon
// pair where both words have a vector; a word with several translations
// contributes one row per pair. Fewer than 3 usable pairs is an error,
// fewer than dim a warning.
OrthogonalMap fit_alignment(const Lexicon& lexicon, const VectorLookup& source,
                            const VectorLookup& target, const AlignOptions& options = {});

// Maps every word vector (and, for a model, every n-gram bucket row).
VectorTable apply_map(const OrthogonalMap& map, VectorTable table,
                      kernels::Exec exec = kernels::Exec::parallel);
EmbeddingModel apply_map(const OrthogonalMap& map, EmbeddingModel model,
                         kernels::Exec exec = kernels::Exec::parallel);

// Audit export: float32 matrix plus {"rows","dim"} sidecar.
void save_map(const OrthogonalMap& map, const std::filesystem::path& path);
OrthogonalMap load_map(const std::filesystem::path& path);

}  // namespace lexiport
