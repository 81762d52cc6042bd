#include "lrnmt/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <map>
#include <stdexcept>

#include "lrnmt/corpus.hpp"
#include "lrnmt/rng.hpp"

namespace lrnmt {

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  for (int n = 0; n < kBleuOrder; ++n) {
    matches[n] += o.matches[n];
    totals[n] += o.totals[n];
  }
  candidate_length += o.candidate_length;
  reference_length += o.reference_length;
  return *this;
}

Tokens bleu_tokens(std::string_view line, const BleuConfig& config) {
  const std::string folded = config.case_sensitive ? std::string(line) : text::lower(line);
  return config.tokenized ? tokenize(folded) : text::split_ws(folded);
}

namespace {

std::map<Tokens, std::uint64_t> ngram_counts(const Tokens& s, std::size_t n) {
  std::map<Tokens, std::uint64_t> counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i)
    ++counts[Tokens(s.begin() + static_cast<std::ptrdiff_t>(i),
                    s.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

}  // namespace

BleuStats sentence_stats(const Tokens& candidate, const Tokens& reference) {
  BleuStats st;
  st.candidate_length = candidate.size();
  st.reference_length = reference.size();
  for (std::size_t n = 1; n <= kBleuOrder; ++n) {
    const auto cand = ngram_counts(candidate, n);
    const auto ref = ngram_counts(reference, n);
    for (const auto& [gram, c] : cand) {
      st.totals[n - 1] += c;
      if (auto it = ref.find(gram); it != ref.end()) st.matches[n - 1] += std::min(c, it->second);
    }
  }
  return st;
}

double bleu_from_stats(const BleuStats& st) {
  if (st.candidate_length == 0) return 0.0;
  double log_sum = 0.0;
  int orders = 0;
  for (int n = 0; n < kBleuOrder; ++n) {
    if (st.totals[n] == 0) continue;
    if (st.matches[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(st.matches[n]) / static_cast<double>(st.totals[n]));
    ++orders;
  }
  const double c = static_cast<double>(st.candidate_length);
  const double r = static_cast<double>(st.reference_length);
  const double bp = std::exp(std::min(0.0, 1.0 - r / c));
  return 100.0 * bp * std::exp(log_sum / orders);
}

namespace {

std::vector<BleuStats> per_sentence(const std::vector<std::string>& cands,
                                    const std::vector<std::string>& refs,
                                    const BleuConfig& config) {
  std::vector<BleuStats> out;
  out.reserve(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i)
    out.push_back(sentence_stats(bleu_tokens(cands[i], config), bleu_tokens(refs[i], config)));
  return out;
}

}  // namespace

double bleu(const std::vector<std::string>& candidates, const std::vector<std::string>& references,
            const BleuConfig& config) {
  if (candidates.size() != references.size())
    throw std::invalid_argument("bleu: " + std::to_string(candidates.size()) +
                                " candidate lines vs " + std::to_string(references.size()) +
                                " reference lines");
  if (candidates.empty()) throw std::invalid_argument("bleu: no lines");
  BleuStats total;
  for (const auto& s : per_sentence(candidates, references, config)) total += s;
  return bleu_from_stats(total);
}

std::vector<std::size_t> bootstrap_sample(std::size_t n_sentences, std::uint64_t seed,
                                          std::size_t iteration) {
  Rng rng(derive_seed(seed, iteration));
  std::vector<std::size_t> idx(n_sentences);
  for (auto& i : idx) i = rng.below(n_sentences);
  return idx;
}

SignificanceResult paired_bootstrap(const std::vector<std::string>& sys_a,
                                    const std::vector<std::string>& sys_b,
                                    const std::vector<std::string>& references,
                                    std::size_t n_resamples, std::uint64_t seed,
                                    const BleuConfig& config) {
  if (sys_a.size() != references.size() || sys_b.size() != references.size())
    throw std::invalid_argument("paired_bootstrap: line count mismatch");
  if (references.empty()) throw std::invalid_argument("paired_bootstrap: no lines");
  if (n_resamples < 1) throw std::invalid_argument("paired_bootstrap: n_resamples must be >= 1");

  // Resample over a canonical sentence order so the result does not depend
  // on how the test set happens to be ordered.
  std::vector<std::size_t> order(references.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return std::tie(references[x], sys_a[x], sys_b[x]) <
           std::tie(references[y], sys_a[y], sys_b[y]);
  });
  std::vector<std::string> ca, cb, cr;
  for (std::size_t i : order) {
    ca.push_back(sys_a[i]);
    cb.push_back(sys_b[i]);
    cr.push_back(references[i]);
  }
  const auto stats_a = per_sentence(ca, cr, config);
  const auto stats_b = per_sentence(cb, cr, config);
  BleuStats full_a, full_b;
  for (std::size_t i = 0; i < stats_a.size(); ++i) {
    full_a += stats_a[i];
    full_b += stats_b[i];
  }
  SignificanceResult r;
  r.bleu_a = bleu_from_stats(full_a);
  r.bleu_b = bleu_from_stats(full_b);
  r.delta_bleu = r.bleu_b - r.bleu_a;
  r.n_resamples = n_resamples;

  std::size_t not_better = 0;
  for (std::size_t it = 0; it < n_resamples; ++it) {
    BleuStats a, b;
    for (std::size_t i : bootstrap_sample(references.size(), seed, it)) {
      a += stats_a[i];
      b += stats_b[i];
    }
    if (bleu_from_stats(b) <= bleu_from_stats(a)) ++not_better;
  }
  r.p_value = static_cast<double>(not_better) / static_cast<double>(n_resamples);
  return r;
}

}  // namespace lrnmt
