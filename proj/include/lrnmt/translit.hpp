#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lrnmt {

// Which characters a replacement string may contain.
enum class TargetScript {
  latin,  // Latin letters, digits, punctuation and apostrophes
  any,
};

/// Context-free grapheme replacement table. Keys are single code points or
/// multi-code-point clusters; lookup takes the longest key matching at each
/// position, and characters with no entry are copied through.
class TranslitTable {
 public:
  TranslitTable() = default;
  // Throws std::invalid_argument on duplicate or empty keys, or on a
  // replacement outside `script`.
  explicit TranslitTable(const std::vector<std::pair<std::string, std::string>>& entries,
                         TargetScript script = TargetScript::latin);

  // Format: "grapheme<TAB>replacement" per line, '#' starts a comment line.
  static TranslitTable parse(std::istream& is, TargetScript script = TargetScript::latin);
  static TranslitTable load(const std::string& path, TargetScript script = TargetScript::latin);

  std::string transliterate(std::string_view text) const;
  // The input split into matched keys and pass-through characters.
  std::vector<std::string> segment(std::string_view text) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t max_key_length() const { return max_key_chars_; }

 private:
  std::map<std::u32string, std::string> entries_;
  std::size_t max_key_chars_ = 0;
};

inline std::string transliterate(std::string_view text, const TranslitTable& table) {
  return table.transliterate(text);
}

}  // namespace lrnmt
