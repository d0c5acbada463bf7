#include "embkit/utf8.hpp"

#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/utf8.h>

namespace embkit::utf8 {

std::u32string decode(std::string_view text) {
    std::u32string out;
    out.reserve(text.size());
    const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
    const auto length = static_cast<int32_t>(text.size());
    int32_t i = 0;
    while (i < length) {
        UChar32 c = 0;
        U8_NEXT(bytes, i, length, c);
        out.push_back(c < 0 ? U'\uFFFD' : static_cast<char32_t>(c));
    }
    return out;
}

void append(std::string& out, char32_t cp) {
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

std::string encode(std::u32string_view cps) {
    std::string out;
    out.reserve(cps.size());
    for (const char32_t cp : cps) {
        append(out, cp);
    }
    return out;
}

bool is_cjk(char32_t cp) {
    return (cp >= 0x3041 && cp <= 0x309F)      // hiragana
           || (cp >= 0x30A1 && cp <= 0x30FA)   // katakana letters
           || (cp >= 0x30FC && cp <= 0x30FF)   // prolonged sound mark, iteration marks
           || (cp >= 0x31F0 && cp <= 0x31FF)   // katakana phonetic extensions
           || (cp >= 0x3005 && cp <= 0x3007)   // 々 〆 〇
           || (cp >= 0x3400 && cp <= 0x4DBF)   // ext A
           || (cp >= 0x4E00 && cp <= 0x9FFF)   // unified ideographs
           || (cp >= 0xF900 && cp <= 0xFAFF)   // compatibility ideographs
           || (cp >= 0xAC00 && cp <= 0xD7AF)   // hangul syllables
           || (cp >= 0xFF66 && cp <= 0xFF9F)   // halfwidth katakana
           || (cp >= 0x20000 && cp <= 0x3134F);
}

bool is_latin_alnum(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    }
    const auto c = static_cast<UChar32>(cp);
    UErrorCode status = U_ZERO_ERROR;
    return u_isalpha(c) && uscript_getScript(c, &status) == USCRIPT_LATIN && U_SUCCESS(status);
}

char32_t to_lower(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
    }
    return static_cast<char32_t>(u_tolower(static_cast<UChar32>(cp)));
}

}  // namespace embkit::utf8
