#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace lexiport {

// 32-bit FNV-1a. Offset basis 2166136261, prime 16777619.
constexpr std::uint32_t fnv1a32(std::string_view bytes) noexcept {
    std::uint32_t h = 2166136261u;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace lexiport
