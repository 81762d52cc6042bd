#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lrnmt/text.hpp"

namespace lrnmt {

inline constexpr std::string_view kDefaultEow = "</w>";
inline constexpr std::string_view kContinuation = "@@";

struct MergeRule {
  std::string left;
  std::string right;
  std::size_t rank = 0;

  friend bool operator==(const MergeRule&, const MergeRule&) = default;
};

// A decoded piece sequence ended on a continuation marker.
class TruncatedHypothesis : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BpeModel {
 public:
  BpeModel() = default;
  BpeModel(std::vector<MergeRule> merges, std::size_t n_ops_requested,
           std::string eow = std::string(kDefaultEow));

  const std::vector<MergeRule>& merges() const { return merges_; }
  std::size_t n_ops_requested() const { return n_ops_requested_; }
  const std::string& eow() const { return eow_; }

  std::optional<std::size_t> rank(std::string_view left, std::string_view right) const;

  // Symbols after merging, with the end-of-word marker still fused on.
  std::vector<std::string> segment_symbols(std::string_view word) const;

  void save(std::ostream& os) const;
  void save(const std::string& path) const;
  static BpeModel load(std::istream& is);
  static BpeModel load(const std::string& path);

 private:
  std::vector<MergeRule> merges_;
  std::size_t n_ops_requested_ = 0;
  std::string eow_ = std::string(kDefaultEow);
  std::unordered_map<std::string, std::size_t> ranks_;
};

using WordCounts = std::map<std::string, std::uint64_t>;

WordCounts count_words(std::span<const Sentences> corpora);

/// Learns merges from the pooled word frequencies of all `corpora`.
/// Each round merges the most frequent adjacent pair (ties: smallest
/// (left, right)); stops after `n_ops` merges or once no pair occurs more
/// than once.
BpeModel bpe_learn(std::span<const Sentences> corpora, std::size_t n_ops,
                   std::string eow = std::string(kDefaultEow));
BpeModel bpe_learn(const WordCounts& counts, std::size_t n_ops,
                   std::string eow = std::string(kDefaultEow));

/// Segments one word; every piece but the last carries the "@@" suffix.
Tokens bpe_apply(const BpeModel& model, std::string_view word);

/// Inverse of bpe_apply's rendering over a whole sentence.
Tokens bpe_rejoin(const Tokens& pieces);

/// Segments whole sentences, memoizing per word type. Reserved symbols are
/// passed through unsegmented.
class BpeSegmenter {
 public:
  explicit BpeSegmenter(const BpeModel& model) : model_(model) {}
  const Tokens& word(const std::string& w);
  Tokens sentence(const Tokens& words);
  Sentences corpus(const Sentences& sentences);

 private:
  const BpeModel& model_;
  std::unordered_map<std::string, Tokens> cache_;
};

}  // namespace lrnmt
