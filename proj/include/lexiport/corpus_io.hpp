#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lexiport {

struct NormalizationConfig {
    bool nfc = true;
    bool lowercase = false;  // off: several target scripts are caseless
    bool collapse_whitespace = true;
};

// NFC, optional lowercasing, whitespace collapsing and trimming. NUL bytes
// count as whitespace. Throws DecodeError on invalid UTF-8.
std::string normalize_line(std::string_view raw, const NormalizationConfig& config = {});

// Splits on ASCII whitespace.
std::vector<std::string> split_whitespace(std::string_view line);

inline constexpr std::size_t kMaxLineBytes = std::size_t{1} << 20;

// Line-oriented reader over a file or a directory of files (read in
// lexicographic filename order). Single consumer.
class CorpusStream {
public:
    explicit CorpusStream(std::filesystem::path source, NormalizationConfig config = {},
                          std::size_t max_line_bytes = kMaxLineBytes);

    // Next normalized line, or nullopt at end of input.
    std::optional<std::string> next_line();

    // Calls `fn` for every whitespace token in document order.
    void for_each_token(const std::function<void(std::string_view)>& fn);

    // Drains the stream into per-line token lists. Empty lines are dropped.
    std::vector<std::vector<std::string>> read_sentences();

    const std::filesystem::path& source() const noexcept { return source_; }
    const std::vector<std::filesystem::path>& files() const noexcept { return files_; }
    std::size_t line_count() const noexcept { return line_count_; }
    std::size_t token_count() const noexcept { return token_count_; }

private:
    bool open_next_file();
    std::optional<std::string> next_raw_line();

    std::filesystem::path source_;
    NormalizationConfig config_;
    std::size_t max_line_bytes_;
    std::vector<std::filesystem::path> files_;
    std::size_t file_index_ = 0;
    std::ifstream in_;
    std::string pending_;  // remainder of an over-long physical line
    std::size_t line_count_ = 0;
    std::size_t token_count_ = 0;
};

// Convenience: all tokens of a file or directory.
std::vector<std::string> read_tokens(const std::filesystem::path& source,
                                     const NormalizationConfig& config = {});

}  // namespace lexiport
