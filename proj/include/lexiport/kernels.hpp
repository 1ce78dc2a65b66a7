#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "lexiport/matrix.hpp"

// Data-parallel inner loops. Each kernel has a serial reference path and an
// OpenMP path selected by Exec; both produce identical results because the
// per-row arithmetic is shared and only the row loop is distributed.
namespace lexiport::kernels {

enum class Exec { serial, parallel };

struct Neighbor {
    std::size_t index;
    double cosine;
};

// For every query row not flagged in `query_skip`, the k key rows (not
// flagged in `key_skip`) with the highest cosine, descending, ties to the
// lower key index. Skipped queries get an empty list. Skip spans may be empty
// (nothing skipped). Cosines are accumulated in double and clamped to [-1, 1].
std::vector<std::vector<Neighbor>> topk_cosine(const Matrix& queries,
                                               std::span<const std::uint8_t> query_skip,
                                               const Matrix& keys,
                                               std::span<const std::uint8_t> key_skip,
                                               std::size_t k, Exec exec = Exec::parallel);

// rows[i] <- rows[i] * map for every row (row-vector convention).
void right_multiply_rows(Matrix& rows, const Eigen::MatrixXd& map, Exec exec = Exec::parallel);

}  // namespace lexiport::kernels
