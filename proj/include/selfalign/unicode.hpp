#pragma once

#include <string>
#include <string_view>

namespace selfalign::unicode {

/// Decodes UTF-8 into Unicode scalar values. Throws Utf8Error on malformed
/// sequences (truncated, overlong, surrogate, out of range).
std::u32string decode_utf8(std::string_view text);

std::string encode_utf8(std::u32string_view codepoints);

/// Unicode whitespace (ASCII controls, space, NBSP, the general-punctuation
/// spaces, line/paragraph separators, ideographic space).
bool is_whitespace(char32_t cp);

/// Punctuation as used by the word tokenizer: ASCII punctuation plus the
/// common general, CJK, fullwidth, Arabic and Indic punctuation marks.
bool is_punct(char32_t cp);

/// Simple one-to-one case fold covering ASCII, Latin-1, Latin Extended-A,
/// the Romanian comma-below letters, Latin Extended Additional (Vietnamese),
/// Greek (including final sigma) and the basic Cyrillic block. Codepoints
/// outside those ranges are returned unchanged.
char32_t fold_case(char32_t cp);

/// fold_case applied codepoint-wise.
std::u32string fold_case(std::u32string_view text);

/// True if the text contains no codepoint besides whitespace.
bool is_blank(std::u32string_view text);

}  // namespace selfalign::unicode
