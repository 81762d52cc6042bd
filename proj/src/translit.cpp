#include "lrnmt/translit.hpp"

#include <fstream>
#include <stdexcept>

#include "lrnmt/text.hpp"

namespace lrnmt {

namespace {

bool is_latin_output(char32_t cp) {
  if (cp >= 0x21 && cp < 0x7F) return true;                 // printable ASCII
  if (cp >= 0xC0 && cp <= 0x24F && cp != 0xD7 && cp != 0xF7) return true;  // Latin-1/Ext-A/B
  if (cp == 0x2BB || cp == 0x2BC || cp == 0x2019) return true;  // apostrophe letters
  return text::is_punct(cp);
}

}  // namespace

TranslitTable::TranslitTable(const std::vector<std::pair<std::string, std::string>>& entries,
                             TargetScript script) {
  for (const auto& [key, value] : entries) {
    std::u32string k = text::decode(key);
    if (k.empty()) throw std::invalid_argument("transliteration table: empty key");
    if (script == TargetScript::latin)
      for (char32_t cp : text::decode(value))
        if (!is_latin_output(cp))
          throw std::invalid_argument("transliteration table: replacement for '" + key +
                                      "' contains a non-Latin character");
    if (!entries_.emplace(k, value).second)
      throw std::invalid_argument("transliteration table: duplicate key '" + key + "'");
    max_key_chars_ = std::max(max_key_chars_, k.size());
  }
}

TranslitTable TranslitTable::parse(std::istream& is, TargetScript script) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::invalid_argument("transliteration table line " + std::to_string(lineno) +
                                  ": expected grapheme<TAB>replacement");
    entries.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return TranslitTable(entries, script);
}

TranslitTable TranslitTable::load(const std::string& path, TargetScript script) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read transliteration table " + path);
  return parse(is, script);
}

std::vector<std::string> TranslitTable::segment(std::string_view input) const {
  const std::u32string cps = text::decode(input);
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < cps.size()) {
    std::size_t take = 1;
    for (std::size_t len = std::min(max_key_chars_, cps.size() - i); len >= 1; --len) {
      if (entries_.count(cps.substr(i, len))) {
        take = len;
        break;
      }
    }
    out.push_back(text::encode(std::u32string_view(cps).substr(i, take)));
    i += take;
  }
  return out;
}

std::string TranslitTable::transliterate(std::string_view input) const {
  std::string out;
  for (const auto& piece : segment(input)) {
    auto it = entries_.find(text::decode(piece));
    out += it == entries_.end() ? piece : it->second;
  }
  return out;
}

}  // namespace lrnmt
