#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lrnmt {

using Tokens = std::vector<std::string>;
using Sentences = std::vector<Tokens>;

namespace text {

// Decodes UTF-8 into code points. A malformed byte decodes to the Latin-1
// code point of the same value.
std::u32string decode(std::string_view s);
std::string encode(char32_t cp);
std::string encode(std::u32string_view s);

// Splits into per-code-point UTF-8 substrings.
std::vector<std::string> chars(std::string_view s);

std::size_t length(std::string_view s);

bool is_space(char32_t cp);
bool is_punct(char32_t cp);
// Punctuation that attaches to the preceding token on detokenization.
bool is_closing_punct(char32_t cp);
// Punctuation that attaches to the following token on detokenization.
bool is_opening_punct(char32_t cp);

char32_t to_lower(char32_t cp);
char32_t to_upper(char32_t cp);
bool is_cased(char32_t cp);

std::string lower(std::string_view s);
// Uppercases the first code point only.
std::string capitalize(std::string_view s);
bool has_cased_letter(std::string_view s);

std::string join(const Tokens& tokens, std::string_view sep = " ");
// Splits on Unicode whitespace only; used for already tokenized files.
Tokens split_ws(std::string_view s);

}  // namespace text
}  // namespace lrnmt
