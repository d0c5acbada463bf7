#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace embkit::utf8 {

/// Decodes UTF-8 into code points. Ill-formed sequences decode to U+FFFD.
std::u32string decode(std::string_view text);

std::string encode(std::u32string_view cps);
void append(std::string& out, char32_t cp);

/// Hiragana, Katakana (incl. the prolonged sound mark), CJK ideographs,
/// iteration marks and Hangul syllables.
bool is_cjk(char32_t cp);

/// ASCII digits and alphabetic code points of the Latin script.
bool is_latin_alnum(char32_t cp);

char32_t to_lower(char32_t cp);

}  // namespace embkit::utf8
