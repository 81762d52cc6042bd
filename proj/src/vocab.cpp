#include "lrnmt/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

namespace lrnmt {

bool is_reserved_token(std::string_view token) {
  return token == kPadToken || token == kUnkToken || token == kBosToken || token == kEosToken;
}

std::string to_string(VocabMode mode) { return mode == VocabMode::word ? "word" : "subword"; }

VocabMode parse_vocab_mode(std::string_view s) {
  if (s == "word") return VocabMode::word;
  if (s == "subword" || s == "bpe") return VocabMode::subword;
  throw std::invalid_argument("unknown vocabulary mode: " + std::string(s));
}

Vocabulary::Vocabulary(VocabMode mode) : mode_(mode) {
  for (auto t : {kPadToken, kUnkToken, kBosToken, kEosToken}) add(t);
}

int Vocabulary::add(std::string_view token) {
  if (auto it = ids_.find(std::string(token)); it != ids_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.emplace_back(token);
  ids_.emplace(tokens_.back(), id);
  return id;
}

std::optional<int> Vocabulary::find(std::string_view token) const {
  if (auto it = ids_.find(std::string(token)); it != ids_.end()) return it->second;
  return std::nullopt;
}

int Vocabulary::id(std::string_view token) const { return find(token).value_or(kUnkId); }

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw std::out_of_range("vocabulary id out of range: " + std::to_string(id));
  return tokens_[id];
}

std::vector<int> Vocabulary::encode(const Tokens& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

Tokens Vocabulary::decode(std::span<const int> ids) const {
  Tokens out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    feed(tokens_[i]);
    feed("\t");
    feed(std::to_string(i));
    feed("\n");
  }
  return h;
}

void Vocabulary::save(std::ostream& os) const {
  for (std::size_t i = 0; i < tokens_.size(); ++i) os << tokens_[i] << '\t' << i << '\n';
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write vocabulary file " + path);
  save(os);
}

Vocabulary Vocabulary::load(std::istream& is, VocabMode mode) {
  Vocabulary v(mode);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("vocabulary line " + std::to_string(lineno) + ": missing tab");
    const std::string tok = line.substr(0, tab);
    const int id = std::stoi(line.substr(tab + 1));
    if (id < kNumReserved) {
      if (v.token(id) != tok)
        throw std::runtime_error("vocabulary line " + std::to_string(lineno) +
                                 ": reserved id " + std::to_string(id) + " is not " + v.token(id));
      continue;
    }
    if (static_cast<std::size_t>(id) != v.size() || v.contains(tok))
      throw std::runtime_error("vocabulary line " + std::to_string(lineno) +
                               ": ids must be dense and tokens unique");
    v.add(tok);
  }
  return v;
}

Vocabulary Vocabulary::load(const std::string& path, VocabMode mode) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read vocabulary file " + path);
  return load(is, mode);
}

Vocabulary build_vocab(std::span<const Sentences> corpora, VocabMode mode,
                       std::optional<std::size_t> cutoff) {
  if (mode == VocabMode::subword && cutoff)
    throw std::invalid_argument("subword vocabularies take the full piece inventory (no cutoff)");
  if (mode == VocabMode::word && cutoff && *cutoff < 1)
    throw std::invalid_argument("word vocabulary cutoff must be >= 1");

  std::map<std::string, std::uint64_t> counts;
  for (const auto& corpus : corpora)
    for (const auto& sent : corpus)
      for (const auto& tok : sent)
        if (!is_reserved_token(tok)) ++counts[tok];

  std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(), counts.end());
  // std::map iteration is already lexicographic, so a stable sort by count
  // leaves ties in lexicographic order.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (cutoff && ranked.size() > *cutoff) ranked.resize(*cutoff);

  Vocabulary v(mode);
  for (const auto& [tok, n] : ranked) v.add(tok);
  return v;
}

std::set<std::string> types_of(const Sentences& sentences) {
  std::set<std::string> out;
  for (const auto& s : sentences)
    for (const auto& t : s)
      if (!is_reserved_token(t)) out.insert(t);
  return out;
}

OverlapReport overlap_report(const Vocabulary& child_source_vocab,
                             const std::set<std::string>& parent_source_types) {
  OverlapReport r;
  for (std::size_t i = kNumReserved; i < child_source_vocab.size(); ++i) {
    ++r.child_types_total;
    if (parent_source_types.count(child_source_vocab.tokens()[i])) ++r.child_types_in_parent;
  }
  if (r.child_types_total == 0)
    throw std::invalid_argument("overlap_report: child vocabulary has no non-reserved types");
  r.percentage = 100.0 * static_cast<double>(r.child_types_in_parent) /
                 static_cast<double>(r.child_types_total);
  return r;
}

void write_overlap_table(std::ostream& os,
                         const std::vector<std::pair<std::string, OverlapReport>>& rows) {
  os << std::left << std::setw(24) << "settings" << std::right << std::setw(10) << "child"
     << std::setw(10) << "shared" << std::setw(10) << "overlap" << '\n';
  for (const auto& [label, r] : rows) {
    std::ostringstream pct;
    pct << std::fixed << std::setprecision(1) << r.percentage << '%';
    os << std::left << std::setw(24) << label << std::right << std::setw(10)
       << r.child_types_total << std::setw(10) << r.child_types_in_parent << std::setw(10)
       << pct.str() << '\n';
  }
}

}  // namespace lrnmt
