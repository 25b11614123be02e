#include "medhop/text.hpp"

#include <unicode/uchar.h>
#include <unicode/unorm2.h>
#include <unicode/ustring.h>
#include <unicode/utf8.h>

#include <array>
#include <cctype>

namespace medhop::text {

namespace {

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

void append_utf8(std::string& out, UChar32 cp) {
    char buf[U8_MAX_LENGTH];
    int32_t len = 0;
    UBool err = false;
    U8_APPEND(buf, len, U8_MAX_LENGTH, cp, err);
    if (!err) out.append(buf, static_cast<std::size_t>(len));
}

}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;  // swallow leading whitespace
    for (char c : s) {
        if (is_space(c)) {
            in_space = true;
        } else {
            if (in_space && !out.empty()) out.push_back(' ');
            out.push_back(c);
            in_space = false;
        }
    }
    return out;
}

std::vector<std::string> whitespace_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        std::size_t start = i;
        while (i < s.size() && !is_space(s[i])) ++i;
        if (i > start) out.emplace_back(s.substr(start, i - start));
    }
    return out;
}

int token_count(std::string_view s) {
    int n = 0;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        if (i < s.size()) ++n;
        while (i < s.size() && !is_space(s[i])) ++i;
    }
    return n;
}

bool is_valid_utf8(std::string_view s) {
    const auto* p = reinterpret_cast<const uint8_t*>(s.data());
    int32_t i = 0;
    const auto len = static_cast<int32_t>(s.size());
    while (i < len) {
        UChar32 cp;
        U8_NEXT(p, i, len, cp);
        if (cp < 0) return false;
    }
    return true;
}

std::string nfc(std::string_view s) {
    if (s.empty() || !is_valid_utf8(s)) return std::string(s);

    UErrorCode ec = U_ZERO_ERROR;
    const UNormalizer2* norm = unorm2_getNFCInstance(&ec);
    if (U_FAILURE(ec)) return std::string(s);

    // UTF-8 -> UTF-16
    std::vector<UChar> u16(s.size() + 1);
    int32_t u16len = 0;
    u_strFromUTF8(u16.data(), static_cast<int32_t>(u16.size()), &u16len, s.data(),
                  static_cast<int32_t>(s.size()), &ec);
    if (U_FAILURE(ec)) return std::string(s);

    std::vector<UChar> out16(static_cast<std::size_t>(u16len) * 3 + 16);
    int32_t outlen = unorm2_normalize(norm, u16.data(), u16len, out16.data(),
                                      static_cast<int32_t>(out16.size()), &ec);
    if (U_FAILURE(ec)) return std::string(s);

    std::string out(static_cast<std::size_t>(outlen) * 4 + 4, '\0');
    int32_t u8len = 0;
    u_strToUTF8(out.data(), static_cast<int32_t>(out.size()), &u8len, out16.data(), outlen, &ec);
    if (U_FAILURE(ec)) return std::string(s);
    out.resize(static_cast<std::size_t>(u8len));
    return out;
}

std::string lowercase(std::string_view s) {
    if (!is_valid_utf8(s)) {
        std::string out(s);
        for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return out;
    }
    std::string out;
    out.reserve(s.size());
    const auto* p = reinterpret_cast<const uint8_t*>(s.data());
    int32_t i = 0;
    const auto len = static_cast<int32_t>(s.size());
    while (i < len) {
        UChar32 cp;
        U8_NEXT(p, i, len, cp);
        append_utf8(out, u_tolower(cp));
    }
    return out;
}

std::vector<std::string> term_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    const auto* p = reinterpret_cast<const uint8_t*>(s.data());
    int32_t i = 0;
    const auto len = static_cast<int32_t>(s.size());
    while (i < len) {
        UChar32 cp;
        U8_NEXT(p, i, len, cp);
        bool word_char;
        if (cp < 0) {
            word_char = false;  // invalid byte acts as a separator
        } else if (cp < 0x80) {
            word_char = std::isalnum(static_cast<int>(cp)) != 0;
        } else {
            word_char = true;
        }
        if (word_char) {
            append_utf8(cur, cp >= 0 ? u_tolower(cp) : cp);
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> split_sentences(std::string_view s) {
    std::vector<std::string> out;
    auto flush = [&out](std::string_view piece) {
        std::string t = trim(piece);
        if (!t.empty()) out.push_back(std::move(t));
    };

    std::size_t start = 0;
    std::size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (c == '\n') {
            flush(s.substr(start, i - start));
            while (i < s.size() && s[i] == '\n') ++i;
            start = i;
            continue;
        }
        if (c == '.' || c == '?' || c == '!') {
            std::size_t punct_end = i + 1;
            while (punct_end < s.size() &&
                   (s[punct_end] == '.' || s[punct_end] == '?' || s[punct_end] == '!')) {
                ++punct_end;
            }
            std::size_t j = punct_end;
            while (j < s.size() && is_space(s[j]) && s[j] != '\n') ++j;
            bool boundary = j > punct_end && j < s.size() && s[j] >= 'A' && s[j] <= 'Z';
            if (boundary) {
                flush(s.substr(start, punct_end - start));
                start = j;
                i = j;
                continue;
            }
            i = punct_end;
            continue;
        }
        ++i;
    }
    flush(s.substr(start));
    return out;
}

std::string canonical_answer(std::string_view s) {
    static constexpr std::string_view kAsciiStrip = "\"'`.?!,;:()[]";

    std::string cur = lowercase(nfc(s));
    // Strip surrounding quotes/punctuation to a fixpoint so nested layers
    // like "'Yes'." reduce fully.
    for (;;) {
        std::string t = trim(cur);
        std::size_t b = 0, e = t.size();
        auto strippable = [&](std::size_t pos, std::size_t& width) {
            char c = t[pos];
            if (kAsciiStrip.find(c) != std::string_view::npos) {
                width = 1;
                return true;
            }
            // Curly quotes U+2018/2019/201C/201D, e2 80 98..9d in UTF-8.
            if (pos + 2 < e && static_cast<unsigned char>(t[pos]) == 0xe2 &&
                static_cast<unsigned char>(t[pos + 1]) == 0x80) {
                unsigned char b3 = static_cast<unsigned char>(t[pos + 2]);
                if (b3 >= 0x98 && b3 <= 0x9d) {
                    width = 3;
                    return true;
                }
            }
            return false;
        };
        std::size_t w = 0;
        while (b < e && strippable(b, w)) b += w;
        // Walk trailing strippables byte-wise from the front to stay on
        // UTF-8 boundaries.
        std::size_t last_keep = b;
        std::size_t pos = b;
        while (pos < e) {
            std::size_t width = 1;
            if (strippable(pos, width)) {
                pos += width;
            } else {
                unsigned char uc = static_cast<unsigned char>(t[pos]);
                std::size_t adv = uc < 0x80 ? 1 : uc < 0xe0 ? 2 : uc < 0xf0 ? 3 : 4;
                pos += adv;
                last_keep = pos;
            }
        }
        std::string next = t.substr(b, last_keep > b ? last_keep - b : 0);
        if (next == cur) break;
        cur = std::move(next);
    }
    return collapse_whitespace(cur);
}

}  // namespace medhop::text
