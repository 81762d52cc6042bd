#include "lrnmt/bpe.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "lrnmt/vocab.hpp"

namespace lrnmt {

namespace {

std::string pair_key(std::string_view left, std::string_view right) {
  std::string k;
  k.reserve(left.size() + right.size() + 1);
  k += left;
  k += ' ';
  k += right;
  return k;
}

std::vector<std::string> initial_symbols(std::string_view word, const std::string& eow) {
  std::vector<std::string> syms = text::chars(word);
  if (!syms.empty()) syms.back() += eow;
  return syms;
}

// Replaces every non-overlapping occurrence of (left, right), scanning
// left to right. Returns whether anything changed.
bool merge_pair(std::vector<std::string>& syms, const std::string& left,
                const std::string& right) {
  bool changed = false;
  std::vector<std::string> out;
  out.reserve(syms.size());
  for (std::size_t i = 0; i < syms.size(); ++i) {
    if (i + 1 < syms.size() && syms[i] == left && syms[i + 1] == right) {
      out.push_back(left + right);
      ++i;
      changed = true;
    } else {
      out.push_back(std::move(syms[i]));
    }
  }
  syms = std::move(out);
  return changed;
}

using Pair = std::pair<std::string, std::string>;

// Pair statistics with a max-count queue, updated incrementally.
class PairStats {
 public:
  void add(const Pair& p, std::int64_t delta, std::size_t word) {
    auto& n = counts_[p];
    if (n > 0) queue_.erase({-n, p.first, p.second});
    n += delta;
    if (n > 0) {
      queue_.insert({-n, p.first, p.second});
    } else {
      counts_.erase(p);
    }
    if (delta > 0) where_[p].insert(word);
  }

  // Highest count, smallest (left, right) among ties.
  std::optional<std::pair<Pair, std::int64_t>> top() const {
    if (queue_.empty()) return std::nullopt;
    const auto& [neg, l, r] = *queue_.begin();
    return std::make_pair(Pair{l, r}, -neg);
  }

  std::set<std::size_t> words_with(const Pair& p) const {
    auto it = where_.find(p);
    return it == where_.end() ? std::set<std::size_t>{} : it->second;
  }

  void forget(const Pair& p) { where_.erase(p); }

 private:
  std::map<Pair, std::int64_t> counts_;
  std::set<std::tuple<std::int64_t, std::string, std::string>> queue_;
  // May list words that no longer contain the pair; callers re-check.
  std::map<Pair, std::set<std::size_t>> where_;
};

}  // namespace

BpeModel::BpeModel(std::vector<MergeRule> merges, std::size_t n_ops_requested, std::string eow)
    : merges_(std::move(merges)), n_ops_requested_(n_ops_requested), eow_(std::move(eow)) {
  if (merges_.size() > n_ops_requested_)
    throw std::invalid_argument("BpeModel: more merges than requested operations");
  for (std::size_t i = 0; i < merges_.size(); ++i) {
    if (merges_[i].rank != i) throw std::invalid_argument("BpeModel: ranks must be 0..n-1");
    if (!ranks_.emplace(pair_key(merges_[i].left, merges_[i].right), i).second)
      throw std::invalid_argument("BpeModel: duplicate merge rule");
  }
}

std::optional<std::size_t> BpeModel::rank(std::string_view left, std::string_view right) const {
  auto it = ranks_.find(pair_key(left, right));
  if (it == ranks_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> BpeModel::segment_symbols(std::string_view word) const {
  std::vector<std::string> syms = initial_symbols(word, eow_);
  // Lowest-rank pair first. A rule can only involve symbols produced by
  // lower-ranked rules, so this equals applying the rules in rank order.
  while (syms.size() > 1) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      auto r = rank(syms[i], syms[i + 1]);
      if (r && (!best || *r < *best)) best = r;
    }
    if (!best) break;
    const MergeRule& m = merges_[*best];
    merge_pair(syms, m.left, m.right);
  }
  return syms;
}

void BpeModel::save(std::ostream& os) const {
  os << "#bpe v1 " << n_ops_requested_ << ' ' << eow_ << '\n';
  for (const auto& m : merges_) os << m.left << ' ' << m.right << '\n';
}

void BpeModel::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write merges file " + path);
  save(os);
}

BpeModel BpeModel::load(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("merges file: missing header");
  std::istringstream header(line);
  std::string magic, version, eow;
  std::size_t n_ops = 0;
  if (!(header >> magic >> version >> n_ops >> eow) || magic != "#bpe" || version != "v1")
    throw std::runtime_error("merges file: bad header '" + line + "'");
  std::vector<MergeRule> merges;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    MergeRule m;
    if (!(ls >> m.left >> m.right))
      throw std::runtime_error("merges file: bad rule '" + line + "'");
    m.rank = merges.size();
    merges.push_back(std::move(m));
  }
  return BpeModel(std::move(merges), n_ops, eow);
}

BpeModel BpeModel::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read merges file " + path);
  return load(is);
}

WordCounts count_words(std::span<const Sentences> corpora) {
  WordCounts counts;
  for (const auto& corpus : corpora)
    for (const auto& sent : corpus)
      for (const auto& w : sent)
        if (!is_reserved_token(w)) ++counts[w];
  return counts;
}

BpeModel bpe_learn(std::span<const Sentences> corpora, std::size_t n_ops, std::string eow) {
  return bpe_learn(count_words(corpora), n_ops, std::move(eow));
}

BpeModel bpe_learn(const WordCounts& counts, std::size_t n_ops, std::string eow) {
  std::vector<std::vector<std::string>> words;
  std::vector<std::int64_t> freq;
  for (const auto& [w, n] : counts) {
    if (w.empty()) continue;
    words.push_back(initial_symbols(w, eow));
    freq.push_back(static_cast<std::int64_t>(n));
  }

  PairStats stats;
  auto account = [&](std::size_t w, std::int64_t sign) {
    const auto& syms = words[w];
    for (std::size_t i = 0; i + 1 < syms.size(); ++i)
      stats.add({syms[i], syms[i + 1]}, sign * freq[w], w);
  };
  for (std::size_t w = 0; w < words.size(); ++w) account(w, +1);

  std::vector<MergeRule> merges;
  while (merges.size() < n_ops) {
    auto top = stats.top();
    if (!top || top->second <= 1) break;
    const Pair best = top->first;
    for (std::size_t w : stats.words_with(best)) {
      auto& syms = words[w];
      bool present = false;
      for (std::size_t i = 0; i + 1 < syms.size() && !present; ++i)
        present = syms[i] == best.first && syms[i + 1] == best.second;
      if (!present) continue;
      account(w, -1);
      merge_pair(syms, best.first, best.second);
      account(w, +1);
    }
    stats.forget(best);
    merges.push_back({best.first, best.second, merges.size()});
  }
  return BpeModel(std::move(merges), n_ops, std::move(eow));
}

Tokens bpe_apply(const BpeModel& model, std::string_view word) {
  std::vector<std::string> syms = model.segment_symbols(word);
  if (syms.empty()) return {};
  const std::string& eow = model.eow();
  std::string& last = syms.back();
  if (last.size() >= eow.size() && last.compare(last.size() - eow.size(), eow.size(), eow) == 0)
    last.erase(last.size() - eow.size());
  for (std::size_t i = 0; i + 1 < syms.size(); ++i) syms[i] += kContinuation;
  return syms;
}

namespace {

bool has_continuation(const std::string& piece) {
  return piece.size() >= kContinuation.size() &&
         piece.compare(piece.size() - kContinuation.size(), kContinuation.size(),
                       kContinuation) == 0;
}

}  // namespace

Tokens bpe_rejoin(const Tokens& pieces) {
  Tokens out;
  std::string cur;
  bool open = false;
  for (const auto& p : pieces) {
    if (has_continuation(p)) {
      cur.append(p, 0, p.size() - kContinuation.size());
      open = true;
    } else {
      cur += p;
      out.push_back(std::move(cur));
      cur.clear();
      open = false;
    }
  }
  if (open)
    throw TruncatedHypothesis("bpe_rejoin: sequence ends on a continuation piece ('" + cur +
                              "@@')");
  return out;
}

const Tokens& BpeSegmenter::word(const std::string& w) {
  auto it = cache_.find(w);
  if (it != cache_.end()) return it->second;
  Tokens pieces = is_reserved_token(w) ? Tokens{w} : bpe_apply(model_, w);
  return cache_.emplace(w, std::move(pieces)).first->second;
}

Tokens BpeSegmenter::sentence(const Tokens& words) {
  Tokens out;
  for (const auto& w : words) {
    const Tokens& pieces = word(w);
    out.insert(out.end(), pieces.begin(), pieces.end());
  }
  return out;
}

Sentences BpeSegmenter::corpus(const Sentences& sentences) {
  Sentences out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(sentence(s));
  return out;
}

}  // namespace lrnmt
