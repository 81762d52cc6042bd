#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lrnmt/seq2seq.hpp"
#include "lrnmt/text.hpp"
#include "lrnmt/vocab.hpp"

namespace lrnmt {

/// ((5 + length) / 6)^alpha. Throws for length < 1.
double length_penalty(std::size_t length, double alpha);

/// logp / length_penalty(length, alpha)
double rescore(double logp, std::size_t length, double alpha);

struct BeamConfig {
  std::size_t beam_size = 10;
  double alpha = 0.8;
  // Output length limit: max_len_factor * |source| + max_len_offset
  // generated tokens (EOS included), unless max_len is set.
  double max_len_factor = 2.0;
  std::size_t max_len_offset = 5;
  std::optional<std::size_t> max_len;
  // Never generated.
  std::vector<int> banned = {kPadId, kBosId};

  void validate() const;
  std::size_t max_length(std::size_t source_length) const;
};

struct Hypothesis {
  std::vector<int> ids;  // starts with BOS
  double logp = 0.0;     // log p(e|f), summed over generated tokens
  LstmState state;
  Vector attentional;
  bool finished = false;

  // Generated tokens, EOS included.
  std::size_t length() const { return ids.size() - 1; }
  // Generated tokens without BOS/EOS.
  std::vector<int> output() const;
};

struct ScoredHypothesis {
  Hypothesis hyp;
  double score = 0.0;  // rescore(logp, length, alpha)
};

/// Beam search over raw cumulative log-probability. Ties prefer the lower
/// token id, then the earlier beam entry. Hypotheses that emit EOS leave
/// the beam; at the length limit only EOS may be emitted. The finished pool
/// is returned best-first by length-normalized score.
std::vector<ScoredHypothesis> beam_search(const Seq2SeqParams& params,
                                          std::span<const int> src_ids, const BeamConfig& config);

struct PostprocessOptions {
  bool subword = true;     // rejoin "@@" pieces
  bool recase = false;     // restore sentence-initial uppercase
  bool detokenize = true;  // reattach punctuation
};

/// Hypothesis tokens (no BOS/EOS) to a surface line. Rejoin errors propagate.
std::string postprocess(const Tokens& hyp_tokens, const PostprocessOptions& options);

struct Translation {
  Tokens tokens;  // word tokens, rejoined in subword mode
  double score = 0.0;
  // Set when every hypothesis ended on a dangling continuation marker and
  // the marker was dropped from the best one.
  bool repaired = false;
};

/// Best hypothesis as word tokens. In subword mode, hypotheses that cannot
/// be rejoined are passed over in favour of the next best.
Translation translate(const Seq2SeqParams& params, std::span<const int> src_ids,
                      const Vocabulary& target_vocab, const BeamConfig& config, bool subword);

}  // namespace lrnmt
