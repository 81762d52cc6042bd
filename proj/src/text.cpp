#include "lrnmt/text.hpp"

#include <algorithm>
#include <array>

namespace lrnmt::text {

std::u32string decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int extra = 0;
    char32_t cp = b0;
    if (b0 >= 0xF0 && b0 < 0xF8) {
      extra = 3;
      cp = b0 & 0x07;
    } else if (b0 >= 0xE0) {
      extra = b0 < 0xF0 ? 2 : 0;
      cp = b0 & 0x0F;
    } else if (b0 >= 0xC2) {
      extra = 1;
      cp = b0 & 0x1F;
    }
    bool ok = extra > 0;
    if (ok) {
      for (int k = 1; k <= extra; ++k) {
        if (i + k >= s.size()) {
          ok = false;
          break;
        }
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) {
          ok = false;
          break;
        }
        cp = (cp << 6) | (b & 0x3F);
      }
    }
    if (ok) {
      out.push_back(cp);
      i += extra + 1;
    } else {
      out.push_back(b0);
      ++i;
    }
  }
  return out;
}

std::string encode(char32_t cp) {
  std::string out;
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
  return out;
}

std::string encode(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) out += encode(cp);
  return out;
}

std::vector<std::string> chars(std::string_view s) {
  std::vector<std::string> out;
  for (char32_t cp : decode(s)) out.push_back(encode(cp));
  return out;
}

std::size_t length(std::string_view s) { return decode(s).size(); }

bool is_space(char32_t cp) {
  switch (cp) {
    case U'\t': case U'\n': case U'\v': case U'\f': case U'\r': case U' ':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

namespace {

constexpr std::u32string_view kClosing = U".,;:!?)]}%»”’…،؛؟۔、。";
constexpr std::u32string_view kOpening = U"([{«“‘¿¡";
constexpr std::u32string_view kOtherPunct =
    U"\"'#$&*+-/<=>@\\^_`|~·–—„";

bool contains(std::u32string_view set, char32_t cp) {
  return set.find(cp) != std::u32string_view::npos;
}

}  // namespace

bool is_closing_punct(char32_t cp) { return contains(kClosing, cp); }
bool is_opening_punct(char32_t cp) { return contains(kOpening, cp); }

bool is_punct(char32_t cp) {
  return is_closing_punct(cp) || is_opening_punct(cp) || contains(kOtherPunct, cp);
}

char32_t to_lower(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 32;
  if (cp < 0xC0) return cp;
  if (cp <= 0xDE) return cp == 0xD7 ? cp : cp + 32;
  if (cp == 0x130) return U'i';
  if (cp >= 0x100 && cp <= 0x137) return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp >= 0x139 && cp <= 0x148) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp >= 0x14A && cp <= 0x177) return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp == 0x178) return 0xFF;
  if (cp >= 0x179 && cp <= 0x17E) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp == 0x18F) return 0x259;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 32;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
  return cp;
}

char32_t to_upper(char32_t cp) {
  if (cp >= U'a' && cp <= U'z') return cp - 32;
  if (cp < 0xE0) return cp;
  if (cp <= 0xFE) return cp == 0xF7 ? cp : cp - 32;
  if (cp == 0xFF) return 0x178;
  if (cp == 0x131) return U'I';
  if (cp >= 0x100 && cp <= 0x137) return (cp % 2 == 1 && cp != 0x131) ? cp - 1 : cp;
  if (cp >= 0x139 && cp <= 0x148) return (cp % 2 == 0) ? cp - 1 : cp;
  if (cp >= 0x14A && cp <= 0x177) return (cp % 2 == 1) ? cp - 1 : cp;
  if (cp >= 0x179 && cp <= 0x17E) return (cp % 2 == 0) ? cp - 1 : cp;
  if (cp == 0x259) return 0x18F;
  if (cp >= 0x3B1 && cp <= 0x3C9 && cp != 0x3C2) return cp - 32;
  if (cp >= 0x430 && cp <= 0x44F) return cp - 32;
  if (cp >= 0x450 && cp <= 0x45F) return cp - 80;
  return cp;
}

bool is_cased(char32_t cp) { return to_lower(cp) != cp || to_upper(cp) != cp; }

std::string lower(std::string_view s) {
  std::u32string cps = decode(s);
  std::transform(cps.begin(), cps.end(), cps.begin(), [](char32_t c) { return to_lower(c); });
  return encode(cps);
}

std::string capitalize(std::string_view s) {
  std::u32string cps = decode(s);
  if (!cps.empty()) cps[0] = to_upper(cps[0]);
  return encode(cps);
}

bool has_cased_letter(std::string_view s) {
  const std::u32string cps = decode(s);
  return std::any_of(cps.begin(), cps.end(), [](char32_t c) { return is_cased(c); });
}

std::string join(const Tokens& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

Tokens split_ws(std::string_view s) {
  Tokens out;
  std::u32string cur;
  for (char32_t cp : decode(s)) {
    if (is_space(cp)) {
      if (!cur.empty()) out.push_back(encode(cur));
      cur.clear();
    } else {
      cur.push_back(cp);
    }
  }
  if (!cur.empty()) out.push_back(encode(cur));
  return out;
}

}  // namespace lrnmt::text
