#include "lrnmt/corpus.hpp"

#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace lrnmt {

CorpusStats ParallelCorpus::stats() const {
  CorpusStats s;
  s.sentences = pairs_.size();
  for (const auto& p : pairs_) {
    s.source_tokens += p.source.size();
    s.target_tokens += p.target.size();
  }
  return s;
}

Sentences ParallelCorpus::source_side() const {
  Sentences out;
  out.reserve(pairs_.size());
  for (const auto& p : pairs_) out.push_back(p.source);
  return out;
}

Sentences ParallelCorpus::target_side() const {
  Sentences out;
  out.reserve(pairs_.size());
  for (const auto& p : pairs_) out.push_back(p.target);
  return out;
}

void PreprocessConfig::validate() const {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  if (rare_threshold < 1) throw std::invalid_argument("rare_threshold must be >= 1");
}

Tokens tokenize(std::string_view line) {
  Tokens out;
  for (const auto& chunk : text::split_ws(line)) {
    const std::u32string cps = text::decode(chunk);
    std::size_t begin = 0;
    std::size_t end = cps.size();
    while (begin < end && text::is_punct(cps[begin])) ++begin;
    if (begin == end) {
      for (char32_t c : cps) out.push_back(text::encode(c));
      continue;
    }
    while (end > begin && text::is_punct(cps[end - 1])) --end;
    for (std::size_t i = 0; i < begin; ++i) out.push_back(text::encode(cps[i]));
    out.push_back(text::encode(std::u32string_view(cps).substr(begin, end - begin)));
    for (std::size_t i = end; i < cps.size(); ++i) out.push_back(text::encode(cps[i]));
  }
  return out;
}

namespace {

bool all_of_class(std::string_view tok, bool (*pred)(char32_t)) {
  const std::u32string cps = text::decode(tok);
  if (cps.empty()) return false;
  for (char32_t c : cps)
    if (!pred(c)) return false;
  return true;
}

}  // namespace

std::string detokenize(const Tokens& tokens) {
  std::string out;
  bool glue_next = true;
  for (const auto& tok : tokens) {
    const bool closing = all_of_class(tok, text::is_closing_punct);
    if (!glue_next && !closing) out += ' ';
    out += tok;
    glue_next = all_of_class(tok, text::is_opening_punct);
  }
  return out;
}

const std::string* CaseModel::lookup(std::string_view token) const {
  auto it = forms_.find(text::lower(token));
  return it == forms_.end() ? nullptr : &it->second;
}

void CaseModel::save(std::ostream& os) const {
  for (const auto& [low, cased] : forms_) os << low << '\t' << cased << '\n';
}

void CaseModel::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write case model " + path);
  save(os);
}

CaseModel CaseModel::load(std::istream& is) {
  CaseModel m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("case model line " + std::to_string(lineno) + ": missing tab");
    m.set(line.substr(0, tab), line.substr(tab + 1));
  }
  return m;
}

CaseModel CaseModel::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read case model " + path);
  return load(is);
}

CaseModel truecase_fit(const ParallelCorpus& corpus) {
  if (corpus.empty()) throw std::invalid_argument("truecase_fit: empty corpus, no statistics");
  // lowered form -> (variant -> non-initial count)
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  auto scan = [&counts](const Tokens& sent) {
    for (std::size_t i = 0; i < sent.size(); ++i) {
      if (!text::has_cased_letter(sent[i])) continue;
      auto& variants = counts[text::lower(sent[i])];
      if (i == 0)
        variants.try_emplace(sent[i], 0);
      else
        ++variants[sent[i]];
    }
  };
  for (const auto& p : corpus.pairs()) {
    scan(p.source);
    scan(p.target);
  }
  CaseModel model;
  for (const auto& [low, variants] : counts) {
    std::string best = low;
    std::size_t best_count = 0;
    if (auto it = variants.find(low); it != variants.end()) best_count = it->second;
    // map order makes the first strictly larger count win among ties.
    for (const auto& [form, n] : variants)
      if (n > best_count) {
        best = form;
        best_count = n;
      }
    model.set(low, best);
  }
  return model;
}

Tokens truecase_apply(const Tokens& sentence, const CaseModel& model, bool lowercase_fallback) {
  Tokens out = sentence;
  if (out.empty()) return out;
  if (const std::string* cased = model.lookup(out.front()))
    out.front() = *cased;
  else if (lowercase_fallback)
    out.front() = text::lower(out.front());
  return out;
}

Tokens detruecase(const Tokens& sentence) {
  Tokens out = sentence;
  if (!out.empty()) out.front() = text::capitalize(out.front());
  return out;
}

ParallelCorpus truecase_corpus(const ParallelCorpus& corpus, const CaseModel& model,
                               bool lowercase_fallback) {
  std::vector<SentencePair> pairs;
  pairs.reserve(corpus.size());
  for (const auto& p : corpus.pairs())
    pairs.push_back({truecase_apply(p.source, model, lowercase_fallback),
                     truecase_apply(p.target, model, lowercase_fallback), p.origin_line});
  return corpus.with_pairs(std::move(pairs));
}

ParallelCorpus filter_by_length(const ParallelCorpus& corpus, std::size_t max_len) {
  if (max_len < 1) throw std::invalid_argument("filter_by_length: max_len must be >= 1");
  std::vector<SentencePair> kept;
  for (const auto& p : corpus.pairs())
    if (p.source.size() <= max_len && p.target.size() <= max_len) kept.push_back(p);
  return corpus.with_pairs(std::move(kept));
}

ParallelCorpus unk_augment(const ParallelCorpus& corpus, std::size_t rare_threshold) {
  if (rare_threshold < 1) throw std::invalid_argument("unk_augment: rare_threshold must be >= 1");
  std::unordered_map<std::string, std::size_t> src_counts, tgt_counts;
  for (const auto& p : corpus.pairs()) {
    for (const auto& t : p.source) ++src_counts[t];
    for (const auto& t : p.target) ++tgt_counts[t];
  }
  auto mask = [rare_threshold](const Tokens& sent, const auto& counts) {
    Tokens out = sent;
    for (auto& t : out)
      if (counts.at(t) < rare_threshold) t = std::string(kUnkToken);
    return out;
  };
  std::vector<SentencePair> pairs = corpus.pairs();
  pairs.reserve(2 * corpus.size());
  for (const auto& p : corpus.pairs())
    pairs.push_back({mask(p.source, src_counts), mask(p.target, tgt_counts), p.origin_line});
  return corpus.with_pairs(std::move(pairs));
}

ParallelCorpus replace_oov(const ParallelCorpus& corpus, const Vocabulary& source_vocab,
                           const Vocabulary& target_vocab) {
  auto map_side = [](const Tokens& sent, const Vocabulary& v) {
    Tokens out = sent;
    for (auto& t : out)
      if (!v.contains(t)) t = std::string(kUnkToken);
    return out;
  };
  std::vector<SentencePair> pairs;
  pairs.reserve(corpus.size());
  for (const auto& p : corpus.pairs())
    pairs.push_back({map_side(p.source, source_vocab), map_side(p.target, target_vocab),
                     p.origin_line});
  return corpus.with_pairs(std::move(pairs));
}

LoadedCorpus read_parallel(std::istream& source, std::istream& target, std::string src_lang,
                           std::string tgt_lang) {
  LoadedCorpus out{ParallelCorpus(std::move(src_lang), std::move(tgt_lang)), 0};
  std::string s, t;
  std::size_t lineno = 0;
  while (true) {
    const bool has_s = static_cast<bool>(std::getline(source, s));
    const bool has_t = static_cast<bool>(std::getline(target, t));
    if (has_s != has_t)
      throw std::runtime_error("parallel files differ in line count near line " +
                               std::to_string(lineno + 1));
    if (!has_s) break;
    ++lineno;
    SentencePair p{tokenize(s), tokenize(t), lineno};
    if (p.source.empty() || p.target.empty()) {
      ++out.dropped_empty;
      continue;
    }
    out.corpus.add(std::move(p));
  }
  return out;
}

LoadedCorpus read_parallel(const std::string& source_path, const std::string& target_path,
                           std::string src_lang, std::string tgt_lang) {
  std::ifstream s(source_path), t(target_path);
  if (!s) throw std::runtime_error("cannot read " + source_path);
  if (!t) throw std::runtime_error("cannot read " + target_path);
  return read_parallel(s, t, std::move(src_lang), std::move(tgt_lang));
}

void write_side(const std::string& path, const Sentences& side) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const auto& s : side) os << text::join(s) << '\n';
}

Sentences read_side(const std::string& path) {
  Sentences out;
  for (const auto& line : read_lines(path)) out.push_back(text::split_ws(line));
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const auto& l : lines) os << l << '\n';
}

}  // namespace lrnmt
