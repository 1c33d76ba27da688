#include "selfalign/unicode.hpp"

#include <algorithm>
#include <array>
#include <cstdint>

#include "selfalign/errors.hpp"

namespace selfalign::unicode {
namespace {

[[noreturn]] void bad_utf8(std::size_t offset) {
  throw Utf8Error("malformed UTF-8 at byte offset " + std::to_string(offset));
}

// Punctuation singles outside the ranges below, kept sorted for binary search.
constexpr std::array<char32_t, 30> kPunctSingles = {
    0x00A1,  // inverted exclamation
    0x00AB,  // left guillemet
    0x00B7,  // middle dot
    0x00BB,  // right guillemet
    0x00BF,  // inverted question
    0x037E,  // Greek question mark
    0x0387,  // Greek ano teleia
    0x0589,  // Armenian full stop
    0x060C,  // Arabic comma
    0x061B,  // Arabic semicolon
    0x061F,  // Arabic question mark
    0x066A, 0x066B, 0x066C, 0x066D,
    0x0964,  // devanagari danda
    0x0965, 0x0970,
    0x09FD,  // Bengali abbreviation sign
    0x104A, 0x104B,
    0x10FB,
    0x1362, 0x1363,
    0x166E,
    0x169B, 0x169C,
    0x2E2E, 0x2E3A, 0x2E3B,
};

struct Range {
  char32_t lo;
  char32_t hi;
};

// ASCII handled separately; these cover general punctuation, CJK symbols,
// katakana middle dot, small form variants and fullwidth forms.
constexpr std::array<Range, 9> kPunctRanges = {{
    {0x2010, 0x2027},
    {0x2030, 0x205E},
    {0x3001, 0x3003},
    {0x3008, 0x3011},
    {0x3014, 0x301F},
    {0x30FB, 0x30FB},
    {0xFE50, 0xFE57},
    {0xFF01, 0xFF0F},
    {0xFF1A, 0xFF20},
}};

constexpr std::array<Range, 2> kPunctRangesTail = {{
    {0xFF3B, 0xFF40},
    {0xFF5B, 0xFF65},
}};

}  // namespace

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    char32_t cp = 0;
    std::size_t len = 0;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      len = 4;
    } else {
      bad_utf8(i);
    }
    if (i + len > text.size()) {
      bad_utf8(i);
    }
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) {
        bad_utf8(i + k);
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    // Reject overlong encodings, surrogates and out-of-range values.
    static constexpr char32_t kMinForLen[5] = {0, 0, 0x80, 0x800, 0x10000};
    if (len > 1 && cp < kMinForLen[len]) {
      bad_utf8(i);
    }
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      bad_utf8(i);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(std::u32string_view codepoints) {
  std::string out;
  out.reserve(codepoints.size());
  for (char32_t cp : codepoints) {
    if (cp <= 0x7F) {
      out.push_back(static_cast<char>(cp));
    } else if (cp <= 0x7FF) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp <= 0xFFFF) {
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

bool is_whitespace(char32_t cp) {
  switch (cp) {
    case U' ':
    case U'\t':
    case U'\n':
    case U'\r':
    case 0x0B:
    case 0x0C:
    case 0x00A0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_punct(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= U'!' && cp <= U'/') || (cp >= U':' && cp <= U'@') ||
           (cp >= U'[' && cp <= U'`') || (cp >= U'{' && cp <= U'~');
  }
  for (const auto& r : kPunctRanges) {
    if (cp >= r.lo && cp <= r.hi) {
      return true;
    }
  }
  for (const auto& r : kPunctRangesTail) {
    if (cp >= r.lo && cp <= r.hi) {
      return true;
    }
  }
  return std::binary_search(kPunctSingles.begin(), kPunctSingles.end(), cp);
}

char32_t fold_case(char32_t cp) {
  // ASCII
  if (cp >= U'A' && cp <= U'Z') {
    return cp + 0x20;
  }
  if (cp < 0xC0) {
    return cp;
  }
  // Latin-1 (multiplication sign excluded)
  if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) {
    return cp + 0x20;
  }
  // Latin Extended-A
  if (cp >= 0x0100 && cp <= 0x0137) {
    if (cp == 0x0130) {
      return U'i';  // Turkish dotted capital I
    }
    if (cp == 0x0131) {
      return cp;  // dotless i is already lowercase
    }
    return (cp % 2 == 0) ? cp + 1 : cp;
  }
  if (cp >= 0x0139 && cp <= 0x0148) {
    return (cp % 2 == 1) ? cp + 1 : cp;
  }
  if (cp >= 0x014A && cp <= 0x0177) {
    return (cp % 2 == 0) ? cp + 1 : cp;
  }
  if (cp == 0x0178) {
    return 0x00FF;  // Y with diaeresis
  }
  if (cp >= 0x0179 && cp <= 0x017E) {
    return (cp % 2 == 1) ? cp + 1 : cp;
  }
  if (cp == 0x017F) {
    return U's';  // long s
  }
  // Latin Extended-B subsets used by the supported languages
  if ((cp >= 0x01DE && cp <= 0x01EF) || (cp >= 0x01F8 && cp <= 0x021F) ||
      (cp >= 0x0222 && cp <= 0x0233)) {
    return (cp % 2 == 0) ? cp + 1 : cp;
  }
  // Greek
  if (cp == 0x0386) {
    return 0x03AC;
  }
  if (cp >= 0x0388 && cp <= 0x038A) {
    return cp + 0x25;
  }
  if (cp == 0x038C) {
    return 0x03CC;
  }
  if (cp == 0x038E || cp == 0x038F) {
    return cp + 0x3F;
  }
  if ((cp >= 0x0391 && cp <= 0x03A1) || (cp >= 0x03A3 && cp <= 0x03AB)) {
    return cp + 0x20;
  }
  if (cp == 0x03C2) {
    return 0x03C3;  // final sigma folds to sigma
  }
  // Cyrillic
  if (cp >= 0x0400 && cp <= 0x040F) {
    return cp + 0x50;
  }
  if (cp >= 0x0410 && cp <= 0x042F) {
    return cp + 0x20;
  }
  // Latin Extended Additional (Vietnamese)
  if (cp >= 0x1E00 && cp <= 0x1E95) {
    return (cp % 2 == 0) ? cp + 1 : cp;
  }
  if (cp == 0x1E9E) {
    return 0x00DF;  // capital sharp s
  }
  if (cp >= 0x1EA0 && cp <= 0x1EFF) {
    return (cp % 2 == 0) ? cp + 1 : cp;
  }
  return cp;
}

std::u32string fold_case(std::u32string_view text) {
  std::u32string out;
  out.reserve(text.size());
  for (char32_t cp : text) {
    out.push_back(fold_case(cp));
  }
  return out;
}

bool is_blank(std::u32string_view text) {
  for (char32_t cp : text) {
    if (!is_whitespace(cp)) {
      return false;
    }
  }
  return true;
}

}  // namespace selfalign::unicode
