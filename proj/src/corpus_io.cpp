#include "lexiport/corpus_io.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/locid.h>

#include <algorithm>

#include "lexiport/error.hpp"
#include "lexiport/utf8.hpp"

namespace lexiport {

namespace {

bool is_ascii_space(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' || c == '\0';
}

bool is_space_cp(UChar32 c) noexcept { return c == 0 || u_isUWhiteSpace(c); }

}  // namespace

std::string normalize_line(std::string_view raw, const NormalizationConfig& config) {
    utf8::validate(raw);
    if (raw.empty()) return {};

    icu::UnicodeString text = icu::UnicodeString::fromUTF8(
        icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
    if (config.nfc) {
        UErrorCode status = U_ZERO_ERROR;
        const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
        if (U_FAILURE(status)) throw Error("normalization error", u_errorName(status));
        text = nfc->normalize(text, status);
        if (U_FAILURE(status)) throw Error("normalization error", u_errorName(status));
    }
    if (config.lowercase) text.toLower(icu::Locale::getRoot());

    if (config.collapse_whitespace) {
        icu::UnicodeString collapsed;
        bool pending_space = false;
        for (int32_t i = 0; i < text.length();) {
            const UChar32 c = text.char32At(i);
            i += U16_LENGTH(c);
            if (is_space_cp(c)) {
                pending_space = !collapsed.isEmpty();
                continue;
            }
            if (pending_space) collapsed.append(static_cast<UChar>(u' '));
            pending_space = false;
            collapsed.append(c);
        }
        text = std::move(collapsed);
    }

    std::string out;
    text.toUTF8String(out);
    return out;
}

std::vector<std::string> split_whitespace(std::string_view line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_ascii_space(line[i])) ++i;
        std::size_t j = i;
        while (j < line.size() && !is_ascii_space(line[j])) ++j;
        if (j > i) out.emplace_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

CorpusStream::CorpusStream(std::filesystem::path source, NormalizationConfig config,
                           std::size_t max_line_bytes)
    : source_(std::move(source)), config_(config), max_line_bytes_(max_line_bytes) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (fs::is_directory(source_, ec)) {
        for (const auto& entry : fs::directory_iterator(source_, ec))
            if (entry.is_regular_file()) files_.push_back(entry.path());
        if (ec) throw StreamError("cannot list " + source_.string() + ": " + ec.message());
        std::sort(files_.begin(), files_.end(),
                  [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    } else if (fs::is_regular_file(source_, ec)) {
        files_.push_back(source_);
    } else {
        throw StreamError("no such corpus file or directory: " + source_.string());
    }
}

bool CorpusStream::open_next_file() {
    while (file_index_ < files_.size()) {
        in_ = std::ifstream(files_[file_index_], std::ios::binary);
        if (!in_) throw StreamError("cannot open " + files_[file_index_].string());
        ++file_index_;
        return true;
    }
    return false;
}

std::optional<std::string> CorpusStream::next_raw_line() {
    std::string line;
    if (!pending_.empty()) {
        line = std::move(pending_);
        pending_.clear();
    } else {
        for (;;) {
            if (in_.is_open() && std::getline(in_, line)) break;
            if (in_.is_open() && in_.bad())
                throw StreamError("read failed for " + files_[file_index_ - 1].string());
            in_.close();
            if (!open_next_file()) return std::nullopt;
        }
        if (!line.empty() && line.back() == '\r') line.pop_back();
    }
    if (line.size() > max_line_bytes_) {
        std::size_t cut = max_line_bytes_;
        std::size_t ws = line.find_last_of(" \t", cut);
        if (ws != std::string::npos && ws > 0) {
            cut = ws;
        } else {
            // no whitespace: back up to a character boundary
            while (cut > 0 && (static_cast<unsigned char>(line[cut]) & 0xC0) == 0x80) --cut;
        }
        pending_ = line.substr(cut);
        line.resize(cut);
    }
    return line;
}

std::optional<std::string> CorpusStream::next_line() {
    auto raw = next_raw_line();
    if (!raw) return std::nullopt;
    ++line_count_;
    try {
        return normalize_line(*raw, config_);
    } catch (const DecodeError& e) {
        const auto& file = files_[file_index_ ? file_index_ - 1 : 0];
        throw StreamError(file.string() + " line " + std::to_string(line_count_) + ": " + e.what());
    }
}

void CorpusStream::for_each_token(const std::function<void(std::string_view)>& fn) {
    while (auto line = next_line()) {
        for (const auto& tok : split_whitespace(*line)) {
            ++token_count_;
            fn(tok);
        }
    }
}

std::vector<std::vector<std::string>> CorpusStream::read_sentences() {
    std::vector<std::vector<std::string>> out;
    while (auto line = next_line()) {
        auto toks = split_whitespace(*line);
        token_count_ += toks.size();
        if (!toks.empty()) out.push_back(std::move(toks));
    }
    return out;
}

std::vector<std::string> read_tokens(const std::filesystem::path& source,
                                     const NormalizationConfig& config) {
    CorpusStream stream(source, config);
    std::vector<std::string> out;
    stream.for_each_token([&](std::string_view t) { out.emplace_back(t); });
    return out;
}

}  // namespace lexiport
