#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace lexiport::utf8 {

// Throws DecodeError naming the offset of the first invalid byte.
void validate(std::string_view text);

// Length in bytes of the sequence starting with `lead`. Assumes valid input.
inline std::size_t sequence_length(unsigned char lead) noexcept {
    if (lead < 0x80) return 1;
    if ((lead >> 5) == 0x6) return 2;
    if ((lead >> 4) == 0xE) return 3;
    return 4;
}

// Splits valid UTF-8 into one string per code point.
std::vector<std::string> characters(std::string_view text);

// Number of code points in valid UTF-8.
std::size_t length(std::string_view text) noexcept;

}  // namespace lexiport::utf8
