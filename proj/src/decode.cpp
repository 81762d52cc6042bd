#include "lrnmt/decode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lrnmt/bpe.hpp"
#include "lrnmt/corpus.hpp"

namespace lrnmt {

double length_penalty(std::size_t length, double alpha) {
  if (length < 1) throw std::invalid_argument("length_penalty: length must be >= 1");
  return std::pow((5.0 + static_cast<double>(length)) / 6.0, alpha);
}

double rescore(double logp, std::size_t length, double alpha) {
  return logp / length_penalty(length, alpha);
}

void BeamConfig::validate() const {
  if (beam_size < 1) throw std::invalid_argument("beam_size must be >= 1");
  if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
  if (max_len && *max_len < 1) throw std::invalid_argument("max_len must be >= 1");
}

std::size_t BeamConfig::max_length(std::size_t source_length) const {
  if (max_len) return *max_len;
  return static_cast<std::size_t>(max_len_factor * static_cast<double>(source_length)) +
         max_len_offset;
}

std::vector<int> Hypothesis::output() const {
  std::vector<int> out;
  for (std::size_t i = 1; i < ids.size(); ++i)
    if (ids[i] != kEosId) out.push_back(ids[i]);
  return out;
}

namespace {

struct Candidate {
  double logp;
  int token;
  std::size_t parent;
};

}  // namespace

std::vector<ScoredHypothesis> beam_search(const Seq2SeqParams& params,
                                          std::span<const int> src_ids, const BeamConfig& config) {
  if (src_ids.empty()) throw std::invalid_argument("beam_search: empty source");
  config.validate();
  const auto& cfg = params.config;
  if (kEosId >= cfg.tgt_vocab) throw std::out_of_range("beam_search: vocabulary lacks EOS");

  std::vector<bool> allowed(static_cast<std::size_t>(cfg.tgt_vocab), true);
  for (int b : config.banned)
    if (b >= 0 && b < cfg.tgt_vocab && b != kEosId) allowed[static_cast<std::size_t>(b)] = false;

  const EncoderOutput enc = encode(params, src_ids);
  const std::size_t limit = config.max_length(src_ids.size());

  std::vector<Hypothesis> beam(1);
  beam[0].ids = {kBosId};
  beam[0].state = enc.final;
  beam[0].attentional = Vector::Zero(cfg.hidden);

  std::vector<Hypothesis> pool;
  for (std::size_t step = 1; step <= limit && !beam.empty(); ++step) {
    const bool last = step == limit;
    std::vector<DecoderStep> expanded;
    std::vector<Candidate> cands;
    expanded.reserve(beam.size());
    for (std::size_t i = 0; i < beam.size(); ++i) {
      const Hypothesis& hyp = beam[i];
      expanded.push_back(decode_step(params, hyp.ids.back(), hyp.state, hyp.attentional, enc));
      const Vector& logits = expanded.back().logits;
      const double m = logits.maxCoeff();
      const double lse = m + std::log((logits.array() - m).exp().sum());
      if (last) {
        cands.push_back({hyp.logp + (logits[kEosId] - lse), kEosId, i});
        continue;
      }
      for (int w = 0; w < cfg.tgt_vocab; ++w)
        if (allowed[static_cast<std::size_t>(w)])
          cands.push_back({hyp.logp + (logits[w] - lse), w, i});
    }
    const std::size_t keep = std::min(config.beam_size, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.logp != b.logp) return a.logp > b.logp;
                        if (a.token != b.token) return a.token < b.token;
                        return a.parent < b.parent;
                      });
    std::vector<Hypothesis> next;
    for (std::size_t k = 0; k < keep; ++k) {
      const Candidate& c = cands[k];
      Hypothesis h;
      h.ids = beam[c.parent].ids;
      h.ids.push_back(c.token);
      h.logp = c.logp;
      h.state = expanded[c.parent].state;
      h.attentional = expanded[c.parent].attentional;
      h.finished = c.token == kEosId;
      (h.finished ? pool : next).push_back(std::move(h));
    }
    beam = std::move(next);
  }

  std::vector<ScoredHypothesis> ranked;
  ranked.reserve(pool.size());
  for (auto& h : pool) {
    const double s = rescore(h.logp, h.length(), config.alpha);
    ranked.push_back({std::move(h), s});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const ScoredHypothesis& a, const ScoredHypothesis& b) {
                     return a.score > b.score;
                   });
  return ranked;
}

std::string postprocess(const Tokens& hyp_tokens, const PostprocessOptions& options) {
  Tokens words = options.subword ? bpe_rejoin(hyp_tokens) : hyp_tokens;
  if (options.recase) words = detruecase(words);
  return options.detokenize ? detokenize(words) : text::join(words);
}

Translation translate(const Seq2SeqParams& params, std::span<const int> src_ids,
                      const Vocabulary& target_vocab, const BeamConfig& config, bool subword) {
  const auto ranked = beam_search(params, src_ids, config);
  if (ranked.empty()) return {};
  if (!subword) return {target_vocab.decode(ranked.front().hyp.output()), ranked.front().score};
  for (const auto& r : ranked) {
    try {
      return {bpe_rejoin(target_vocab.decode(r.hyp.output())), r.score};
    } catch (const TruncatedHypothesis&) {
    }
  }
  Tokens pieces = target_vocab.decode(ranked.front().hyp.output());
  std::string& last = pieces.back();
  last.erase(last.size() - kContinuation.size());
  if (last.empty()) pieces.pop_back();
  return {bpe_rejoin(pieces), ranked.front().score, true};
}

}  // namespace lrnmt
