#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "lrnmt/rng.hpp"
#include "lrnmt/text.hpp"
#include "lrnmt/translit.hpp"

#ifndef LRNMT_DATA_DIR
#define LRNMT_DATA_DIR "data"
#endif

using namespace lrnmt;

namespace {

using Entries = std::vector<std::pair<std::string, std::string>>;

TranslitTable make_table(const Entries& e, TargetScript script = TargetScript::latin) {
  return TranslitTable(e, script);
}

}  // namespace

TEST(Translit, Examples) {
  const TranslitTable t = make_table({{"ا", "a"}, {"ب", "b"}});
  EXPECT_EQ(t.transliterate(""), "");
  EXPECT_EQ(t.transliterate("اب"), "ab");
  EXPECT_EQ(TranslitTable{}.transliterate("abc"), "abc");
}

TEST(Translit, LongestMatchFirst) {
  const TranslitTable t = make_table({{"ئ", ""}, {"ئا", "a"}, {"ا", "A"}});
  EXPECT_EQ(t.transliterate("ئاا"), "aA");
  EXPECT_EQ(t.segment("ئاxا"), (std::vector<std::string>{"ئا", "x", "ا"}));
  EXPECT_EQ(t.max_key_length(), 2u);
}

TEST(Translit, RejectsBadTables) {
  EXPECT_THROW(make_table({{"a", "x"}, {"a", "y"}}), std::invalid_argument);
  EXPECT_THROW(make_table({{"", "x"}}), std::invalid_argument);
  EXPECT_THROW(make_table({{"a", "ب"}}), std::invalid_argument);
  EXPECT_NO_THROW(make_table({{"a", "ب"}}, TargetScript::any));
}

TEST(Translit, ParseFormat) {
  std::istringstream in("# comment\nا\ta\nب\tb\n\nئ\t\n");
  const TranslitTable t = TranslitTable::parse(in);
  EXPECT_EQ(t.size(), 3u);
  EXPECT_EQ(t.transliterate("ئاب"), "ab");
}

TEST(Translit, PassThroughOutsideTable) {
  const TranslitTable t = make_table({{"ا", "a"}});
  EXPECT_EQ(t.transliterate("12, ا!\t?"), "12, a!\t?");
}

TEST(Translit, HomomorphismOnRandomStringsAndTables) {
  Rng rng(1);
  const std::vector<std::string> alphabet = {"ا", "ب", "ت", "ئ", "ۇ", "x", "1", " ", ","};
  for (int trial = 0; trial < 300; ++trial) {
    // Random table over single graphemes and two-grapheme clusters.
    std::vector<std::pair<std::string, std::string>> entries;
    std::set<std::string> keys;
    const std::size_t n = 1 + rng.below(8);
    for (std::size_t i = 0; i < n; ++i) {
      std::string key = alphabet[rng.below(alphabet.size())];
      if (rng.bernoulli(0.3)) key += alphabet[rng.below(alphabet.size())];
      if (!keys.insert(key).second) continue;
      std::string rep;
      for (std::size_t k = rng.below(3); k > 0; --k) rep += static_cast<char>('a' + rng.below(26));
      entries.emplace_back(key, rep);
    }
    const TranslitTable t(entries);
    std::string s;
    for (std::size_t k = rng.below(12); k > 0; --k) s += alphabet[rng.below(alphabet.size())];
    // Split at a grapheme boundary of the table's own segmentation.
    const auto seg = t.segment(s);
    const std::size_t cut = seg.empty() ? 0 : rng.below(seg.size() + 1);
    std::string x, y;
    for (std::size_t i = 0; i < seg.size(); ++i) (i < cut ? x : y) += seg[i];
    EXPECT_EQ(t.transliterate(x + y), t.transliterate(x) + t.transliterate(y));
    EXPECT_EQ(t.transliterate(s), t.transliterate(s));
  }
}

TEST(Translit, ShippedUyghurTableLoads) {
  const TranslitTable t = TranslitTable::load(std::string(LRNMT_DATA_DIR) + "/uyghur_arabic_latin.tsv");
  EXPECT_GT(t.size(), 30u);
  EXPECT_EQ(t.transliterate("ئانا"), "ana");
  const std::string out = t.transliterate("ئۇيغۇر تىلى");
  for (char32_t c : text::decode(out)) EXPECT_TRUE(c < 0x600 || c > 0x6FF) << out;
}
