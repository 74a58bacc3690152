#include "gapforge/unicode.hpp"

namespace gapforge {

std::u32string utf8_decode(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    const auto n = s.size();
    while (i < n) {
        unsigned char b0 = static_cast<unsigned char>(s[i]);
        char32_t cp = 0xFFFD;
        std::size_t len = 1;
        if (b0 < 0x80) {
            cp = b0;
        } else if ((b0 & 0xE0) == 0xC0 && i + 1 < n && (s[i + 1] & 0xC0) == 0x80) {
            cp = (char32_t(b0 & 0x1F) << 6) | (s[i + 1] & 0x3F);
            len = 2;
            if (cp < 0x80) cp = 0xFFFD;  // overlong
        } else if ((b0 & 0xF0) == 0xE0 && i + 2 < n && (s[i + 1] & 0xC0) == 0x80 &&
                   (s[i + 2] & 0xC0) == 0x80) {
            cp = (char32_t(b0 & 0x0F) << 12) | (char32_t(s[i + 1] & 0x3F) << 6) |
                 (s[i + 2] & 0x3F);
            len = 3;
            if (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
        } else if ((b0 & 0xF8) == 0xF0 && i + 3 < n && (s[i + 1] & 0xC0) == 0x80 &&
                   (s[i + 2] & 0xC0) == 0x80 && (s[i + 3] & 0xC0) == 0x80) {
            cp = (char32_t(b0 & 0x07) << 18) | (char32_t(s[i + 1] & 0x3F) << 12) |
                 (char32_t(s[i + 2] & 0x3F) << 6) | (s[i + 3] & 0x3F);
            len = 4;
            if (cp < 0x10000 || cp > 0x10FFFF) cp = 0xFFFD;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string utf8_encode(std::u32string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char32_t cp : s) {
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    }
    return out;
}

std::size_t utf8_length(std::string_view s) {
    std::size_t count = 0;
    for (char c : s)
        if ((c & 0xC0) != 0x80) ++count;
    return count;
}

std::string utf8_slice(std::string_view s, std::size_t begin, std::size_t end) {
    std::u32string cps = utf8_decode(s);
    if (begin > cps.size()) begin = cps.size();
    if (end > cps.size()) end = cps.size();
    if (begin >= end) return {};
    return utf8_encode(std::u32string_view(cps).substr(begin, end - begin));
}

bool is_space_cp(char32_t c) {
    return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' ||
           c == U'\v' || c == 0x00A0 || c == 0x2009 || c == 0x202F;
}

bool is_letter_cp(char32_t c) {
    if ((c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z')) return true;
    if (c == 0x00D7 || c == 0x00F7) return false;
    if (c >= 0x00C0 && c <= 0x024F) return true;   // Latin-1 supplement + extended
    if (c >= 0x0370 && c <= 0x03FF) return true;   // Greek
    if (c >= 0x0400 && c <= 0x04FF) return true;   // Cyrillic
    if (c >= 0x1E00 && c <= 0x1EFF) return true;   // Latin extended additional
    return false;
}

bool is_upper_cp(char32_t c) {
    if (c >= U'A' && c <= U'Z') return true;
    if (c >= 0x00C0 && c <= 0x00DE && c != 0x00D7) return true;
    // Latin Extended-A alternates upper/lower on even/odd codepoints, close enough
    if (c >= 0x0100 && c <= 0x017F && (c % 2 == 0)) return true;
    return false;
}

bool is_digit_cp(char32_t c) { return c >= U'0' && c <= U'9'; }

}  // namespace gapforge
