#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace lexiport {

// Read-only access shared by plain vector tables and subword models, so
// alignment and table synthesis accept either.
class VectorLookup {
public:
    virtual ~VectorLookup() = default;

    virtual std::size_t dim() const noexcept = 0;

    // Stored (reported) vector for a full word; empty span when absent.
    virtual std::span<const float> word_vector(std::string_view word) const = 0;

    // Whether n-gram vectors come from a hashed bucket table. When false,
    // n-grams resolve only if they coincide with stored words.
    virtual bool has_ngram_buckets() const noexcept { return false; }

    // Bucket row for an n-gram; only meaningful when has_ngram_buckets().
    virtual std::span<const float> ngram_vector(std::string_view /*ngram*/) const { return {}; }
};

}  // namespace lexiport
