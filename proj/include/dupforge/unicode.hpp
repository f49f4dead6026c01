#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

namespace dupforge::unicode {

/// Decodes UTF-8 into code points. Ill-formed sequences become U+FFFD.
inline std::u32string to_u32(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    int32_t i = 0;
    auto const n = static_cast<int32_t>(s.size());
    auto const* p = reinterpret_cast<uint8_t const*>(s.data());
    while (i < n) {
        UChar32 c;
        U8_NEXT(p, i, n, c);
        out.push_back(c < 0 ? char32_t{0xFFFD} : static_cast<char32_t>(c));
    }
    return out;
}

inline void append_utf8(std::string& out, char32_t c) {
    uint8_t buf[4];
    int32_t len = 0;
    UBool err = false;
    U8_APPEND(buf, len, 4, static_cast<UChar32>(c), err);
    if (err) {
        out += "\xEF\xBF\xBD";
        return;
    }
    out.append(reinterpret_cast<char const*>(buf), static_cast<std::size_t>(len));
}

inline std::string to_utf8(std::u32string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char32_t c : s) {
        append_utf8(out, c);
    }
    return out;
}

/// Number of code points in a UTF-8 string.
inline std::size_t length(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s) {
        if ((c & 0xC0U) != 0x80U) {
            ++n;
        }
    }
    return n;
}

inline bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)) != 0; }

inline bool is_punct(char32_t c) { return u_ispunct(static_cast<UChar32>(c)) != 0; }

/// General categories Nd, Nl and No.
inline bool is_numeric(char32_t c) {
    auto const mask = U_GET_GC_MASK(static_cast<UChar32>(c));
    return (mask & U_GC_N_MASK) != 0;
}

inline bool is_alnum(char32_t c) {
    auto const mask = U_GET_GC_MASK(static_cast<UChar32>(c));
    return (mask & (U_GC_L_MASK | U_GC_N_MASK)) != 0;
}

inline bool is_upper(char32_t c) { return u_isupper(static_cast<UChar32>(c)) != 0; }

inline bool is_digit(char32_t c) { return u_isdigit(static_cast<UChar32>(c)) != 0; }

inline char32_t to_lower(char32_t c) {
    if (c < 0x80) {
        return (c >= U'A' && c <= U'Z') ? c + 32 : c;
    }
    return static_cast<char32_t>(u_tolower(static_cast<UChar32>(c)));
}

inline std::u32string to_lower(std::u32string_view s) {
    std::u32string out(s);
    for (auto& c : out) {
        c = to_lower(c);
    }
    return out;
}

/// Canonical decomposition, removal of nonspacing marks (Mn), recomposition.
inline std::string deaccent(std::string_view s) {
    bool ascii = true;
    for (unsigned char c : s) {
        if (c >= 0x80) {
            ascii = false;
            break;
        }
    }
    if (ascii) {
        return std::string(s);
    }
    UErrorCode status = U_ZERO_ERROR;
    auto const* nfd = icu::Normalizer2::getNFDInstance(status);
    auto const* nfc = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) {
        throw std::runtime_error("ICU normalizer unavailable");
    }
    auto const src = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    auto decomposed = nfd->normalize(src, status);
    icu::UnicodeString stripped;
    for (int32_t i = 0; i < decomposed.length();) {
        UChar32 c = decomposed.char32At(i);
        if (u_charType(c) != U_NON_SPACING_MARK) {
            stripped.append(c);
        }
        i += U16_LENGTH(c);
    }
    auto recomposed = nfc->normalize(stripped, status);
    if (U_FAILURE(status)) {
        throw std::runtime_error("ICU normalization failed");
    }
    std::string out;
    recomposed.toUTF8String(out);
    return out;
}

}  // namespace dupforge::unicode
