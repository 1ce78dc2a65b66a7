#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexiport/matrix.hpp"
#include "lexiport/rng.hpp"
#include "lexiport/vector_lookup.hpp"

namespace lexiport {

// Ordered (token, vector) pairs of one dimension; the .vec file in memory.
class VectorTable : public VectorLookup {
public:
    VectorTable() = default;
    explicit VectorTable(std::size_t dim) : vectors_(0, dim) {}
    VectorTable(std::vector<std::string> tokens, Matrix vectors);

    std::size_t dim() const noexcept override { return vectors_.cols(); }
    std::size_t size() const noexcept { return tokens_.size(); }

    const std::vector<std::string>& tokens() const noexcept { return tokens_; }
    const Matrix& vectors() const noexcept { return vectors_; }
    Matrix& vectors() noexcept { return vectors_; }

    // Throws on duplicate token, width mismatch, or non-finite values.
    void add(std::string token, std::span<const float> vector);

    std::span<const float> word_vector(std::string_view word) const override;
    std::ptrdiff_t index_of(std::string_view word) const;

private:
    struct Hash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept {
            return std::hash<std::string_view>{}(s);
        }
    };
    std::vector<std::string> tokens_;
    Matrix vectors_;
    std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
};

// Header "count dim", then "token v1 ... vd" per line. Tokens run up to the
// first space.
VectorTable load_vec(const std::filesystem::path& path);
// Writes values with 9 significant digits.
void save_vec(const VectorTable& table, const std::filesystem::path& path);

// 9 significant digits, the precision every text writer here uses.
std::string format_float(float value);

// Raw little-endian float32 rows plus a {"rows", "dim"} JSON sidecar.
std::filesystem::path sidecar_path(const std::filesystem::path& matrix_path);
void save_matrix(const Matrix& m, const std::filesystem::path& path);
Matrix load_matrix(const std::filesystem::path& path);

// Diagonal normal N(mean, variance) fitted to embedding rows.
struct GaussianInit {
    std::vector<double> mean;
    std::vector<double> variance;  // population variance, per dimension
    std::size_t source_row_count = 0;
};

GaussianInit fit_gaussian(const Matrix& rows);
std::vector<float> sample_gaussian(const GaussianInit& g, Rng& rng);

}  // namespace lexiport
