#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lrnmt/text.hpp"
#include "lrnmt/vocab.hpp"

namespace lrnmt {

struct SentencePair {
  Tokens source;
  Tokens target;
  std::size_t origin_line = 0;  // 1-based line in the raw files

  friend bool operator==(const SentencePair&, const SentencePair&) = default;
};

struct CorpusStats {
  std::size_t sentences = 0;
  std::size_t source_tokens = 0;
  std::size_t target_tokens = 0;
};

class ParallelCorpus {
 public:
  ParallelCorpus() = default;
  ParallelCorpus(std::string src_lang, std::string tgt_lang, std::vector<SentencePair> pairs = {})
      : src_lang_(std::move(src_lang)), tgt_lang_(std::move(tgt_lang)), pairs_(std::move(pairs)) {}

  const std::vector<SentencePair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const SentencePair& operator[](std::size_t i) const { return pairs_[i]; }

  void add(SentencePair p) { pairs_.push_back(std::move(p)); }

  const std::string& src_lang() const { return src_lang_; }
  const std::string& tgt_lang() const { return tgt_lang_; }

  // Always recomputed from the pairs.
  CorpusStats stats() const;

  Sentences source_side() const;
  Sentences target_side() const;

  // Same metadata, different pairs.
  ParallelCorpus with_pairs(std::vector<SentencePair> pairs) const {
    return ParallelCorpus(src_lang_, tgt_lang_, std::move(pairs));
  }

 private:
  std::string src_lang_;
  std::string tgt_lang_;
  std::vector<SentencePair> pairs_;
};

struct PreprocessConfig {
  std::size_t max_len = 50;
  std::size_t rare_threshold = 5;
  bool truecase = false;
  // Lowercase sentence-initial tokens the case model has never seen.
  bool lowercase_fallback = false;

  void validate() const;
};

/// Whitespace split with leading/trailing punctuation detached as
/// single-character tokens. Word-internal punctuation is kept.
Tokens tokenize(std::string_view line);

/// Inverse of tokenize's punctuation rules: closing punctuation attaches to
/// the previous token, opening punctuation to the next one.
std::string detokenize(const Tokens& tokens);

class CaseModel {
 public:
  void set(std::string lowered, std::string cased) { forms_[std::move(lowered)] = std::move(cased); }
  // Cased form for `token`'s lowercased surface, or nullptr.
  const std::string* lookup(std::string_view token) const;
  std::size_t size() const { return forms_.size(); }
  bool empty() const { return forms_.empty(); }
  const std::map<std::string, std::string>& forms() const { return forms_; }

  void save(std::ostream& os) const;
  void save(const std::string& path) const;
  static CaseModel load(std::istream& is);
  static CaseModel load(const std::string& path);

 private:
  std::map<std::string, std::string> forms_;
};

/// Most frequent casing per lowercased form, counted over non-initial
/// positions of both sides. Ties go to the lowercase form, then to the
/// lexicographically smallest variant.
CaseModel truecase_fit(const ParallelCorpus& corpus);

Tokens truecase_apply(const Tokens& sentence, const CaseModel& model,
                      bool lowercase_fallback = false);

/// Uppercases the first code point of the sentence-initial token.
Tokens detruecase(const Tokens& sentence);

ParallelCorpus truecase_corpus(const ParallelCorpus& corpus, const CaseModel& model,
                               bool lowercase_fallback = false);

ParallelCorpus filter_by_length(const ParallelCorpus& corpus, std::size_t max_len);

/// Original pairs followed by a copy where tokens with per-side corpus
/// frequency below `rare_threshold` are replaced by the UNK symbol.
ParallelCorpus unk_augment(const ParallelCorpus& corpus, std::size_t rare_threshold);

ParallelCorpus replace_oov(const ParallelCorpus& corpus, const Vocabulary& source_vocab,
                           const Vocabulary& target_vocab);
inline ParallelCorpus replace_oov(const ParallelCorpus& corpus, const Vocabulary& vocab) {
  return replace_oov(corpus, vocab, vocab);
}

struct LoadedCorpus {
  ParallelCorpus corpus;
  std::size_t dropped_empty = 0;
};

/// Reads two line-aligned UTF-8 files and tokenizes every line. Pairs with
/// an empty side are dropped and counted.
LoadedCorpus read_parallel(const std::string& source_path, const std::string& target_path,
                           std::string src_lang = "src", std::string tgt_lang = "tgt");
LoadedCorpus read_parallel(std::istream& source, std::istream& target,
                           std::string src_lang = "src", std::string tgt_lang = "tgt");

/// Writes one side as space-joined tokens, one sentence per line.
void write_side(const std::string& path, const Sentences& side);
Sentences read_side(const std::string& path);
std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);

}  // namespace lrnmt
