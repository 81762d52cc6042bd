#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lrnmt/text.hpp"

namespace lrnmt {

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kBosToken = "<s>";
inline constexpr std::string_view kEosToken = "</s>";

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kBosId = 2;
inline constexpr int kEosId = 3;
inline constexpr int kNumReserved = 4;

bool is_reserved_token(std::string_view token);

enum class VocabMode { word, subword };

std::string to_string(VocabMode mode);
VocabMode parse_vocab_mode(std::string_view s);

/// Bidirectional token/id map. Ids 0..3 are always PAD, UNK, BOS, EOS.
class Vocabulary {
 public:
  explicit Vocabulary(VocabMode mode = VocabMode::word);

  // Returns the id of `token`, adding it if absent.
  int add(std::string_view token);

  std::optional<int> find(std::string_view token) const;
  // Id of `token`, or kUnkId when absent.
  int id(std::string_view token) const;
  const std::string& token(int id) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }

  std::size_t size() const { return tokens_.size(); }
  VocabMode mode() const { return mode_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(const Tokens& tokens) const;
  Tokens decode(std::span<const int> ids) const;

  // FNV-1a over the serialized form; identifies the vocabulary in checkpoints.
  std::uint64_t hash() const;

  void save(std::ostream& os) const;
  void save(const std::string& path) const;
  static Vocabulary load(std::istream& is, VocabMode mode);
  static Vocabulary load(const std::string& path, VocabMode mode);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.mode_ == b.mode_ && a.tokens_ == b.tokens_;
  }

 private:
  VocabMode mode_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

/// Word mode keeps the `cutoff` most frequent types (ties by lexicographic
/// order); subword mode keeps every distinct piece and takes no cutoff.
/// Reserved symbols occurring in the data are not counted.
Vocabulary build_vocab(std::span<const Sentences> corpora, VocabMode mode,
                       std::optional<std::size_t> cutoff = std::nullopt);

std::set<std::string> types_of(const Sentences& sentences);

struct OverlapReport {
  std::size_t child_types_total = 0;
  std::size_t child_types_in_parent = 0;
  double percentage = 0.0;
};

OverlapReport overlap_report(const Vocabulary& child_source_vocab,
                             const std::set<std::string>& parent_source_types);

// Plain-text table: one row per labelled report.
void write_overlap_table(std::ostream& os,
                         const std::vector<std::pair<std::string, OverlapReport>>& rows);

}  // namespace lrnmt
