#include "lexiport/utf8.hpp"

#include "lexiport/error.hpp"

namespace lexiport::utf8 {

void validate(std::string_view text) {
    const auto* s = reinterpret_cast<const unsigned char*>(text.data());
    const std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n) {
        const unsigned char c = s[i];
        if (c < 0x80) {
            ++i;
            continue;
        }
        std::size_t len;
        char32_t cp;
        if (c >= 0xC2 && c <= 0xDF) {
            len = 2;
            cp = c & 0x1F;
        } else if (c >= 0xE0 && c <= 0xEF) {
            len = 3;
            cp = c & 0x0F;
        } else if (c >= 0xF0 && c <= 0xF4) {
            len = 4;
            cp = c & 0x07;
        } else {
            throw DecodeError(i, "invalid UTF-8 lead byte");
        }
        if (i + len > n) throw DecodeError(i, "truncated UTF-8 sequence");
        for (std::size_t k = 1; k < len; ++k) {
            if ((s[i + k] & 0xC0) != 0x80) throw DecodeError(i, "invalid UTF-8 continuation byte");
            cp = (cp << 6) | (s[i + k] & 0x3F);
        }
        if ((len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000))
            throw DecodeError(i, "overlong UTF-8 encoding");
        if (cp >= 0xD800 && cp <= 0xDFFF) throw DecodeError(i, "UTF-8 encoded surrogate");
        if (cp > 0x10FFFF) throw DecodeError(i, "code point beyond U+10FFFF");
        i += len;
    }
}

std::vector<std::string> characters(std::string_view text) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < text.size();) {
        const std::size_t len = sequence_length(static_cast<unsigned char>(text[i]));
        out.emplace_back(text.substr(i, len));
        i += len;
    }
    return out;
}

std::size_t length(std::string_view text) noexcept {
    std::size_t count = 0;
    for (unsigned char c : text)
        if ((c & 0xC0) != 0x80) ++count;
    return count;
}

}  // namespace lexiport::utf8
