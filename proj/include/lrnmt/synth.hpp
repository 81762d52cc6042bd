#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "lrnmt/corpus.hpp"

namespace lrnmt {

/// A synthetic pair of related agglutinative source languages sharing one
/// gloss target language. Words are root + affix; the child language
/// mutates each root with probability mutation_rate and keeps each affix
/// with probability affix_share.
struct SynthSpec {
  std::uint64_t seed = 0;
  std::size_t n_roots = 200;
  std::size_t n_affixes = 6;
  double affix_share = 0.85;
  double mutation_rate = 0.3;
  std::size_t parent_sentences = 2000;
  std::size_t child_sentences = 500;  // split 80/10/10 into train/dev/test
  std::size_t min_words = 3;
  std::size_t max_words = 6;

  void validate() const;
};

struct SynthLexicon {
  std::vector<std::string> parent_roots;
  std::vector<std::string> child_roots;   // index-aligned with parent_roots
  std::vector<std::string> parent_affixes;
  std::vector<std::string> child_affixes;  // index-aligned with parent_affixes
  std::vector<std::string> root_glosses;
  std::vector<std::string> affix_glosses;  // empty string: no particle

  // Every root + affix word form of each language.
  std::set<std::string> parent_words() const;
  std::set<std::string> child_words() const;
};

struct SynthData {
  SynthLexicon lexicon;
  ParallelCorpus parent;
  ParallelCorpus child_train;
  ParallelCorpus child_dev;
  ParallelCorpus child_test;
};

SynthData gen_synthetic(const SynthSpec& spec);

/// Writes detokenized text files parent.{src,tgt}, train.{src,tgt},
/// dev.{src,tgt} and test.{src,tgt} into `dir`.
void write_synthetic(const SynthData& data, const std::string& dir);

}  // namespace lrnmt
