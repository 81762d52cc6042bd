#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lrnmt/text.hpp"

namespace lrnmt {

inline constexpr int kBleuOrder = 4;

struct BleuConfig {
  bool case_sensitive = true;
  // Run the toolkit tokenizer over both sides first; otherwise split on
  // whitespace.
  bool tokenized = false;
};

/// Clipped n-gram matches and totals for n = 1..4 plus lengths.
struct BleuStats {
  std::array<std::uint64_t, kBleuOrder> matches{};
  std::array<std::uint64_t, kBleuOrder> totals{};
  std::uint64_t candidate_length = 0;
  std::uint64_t reference_length = 0;

  BleuStats& operator+=(const BleuStats& o);
};

Tokens bleu_tokens(std::string_view line, const BleuConfig& config);

BleuStats sentence_stats(const Tokens& candidate, const Tokens& reference);

/// 100 * BP * exp(mean log p_n), no smoothing: zero whenever a precision
/// is zero. Orders with no candidate n-grams anywhere in the corpus are
/// left out of the mean.
double bleu_from_stats(const BleuStats& stats);

/// Corpus BLEU over aligned lines; throws std::invalid_argument on a line
/// count mismatch or empty input.
double bleu(const std::vector<std::string>& candidates, const std::vector<std::string>& references,
            const BleuConfig& config = {});

struct SignificanceResult {
  double bleu_a = 0.0;
  double bleu_b = 0.0;
  double delta_bleu = 0.0;  // bleu_b - bleu_a
  double p_value = 1.0;     // share of resamples with BLEU(b) <= BLEU(a)
  std::size_t n_resamples = 0;
};

/// Sentence indices for one bootstrap resample; iteration i draws from its
/// own seeded substream.
std::vector<std::size_t> bootstrap_sample(std::size_t n_sentences, std::uint64_t seed,
                                          std::size_t iteration);

/// Paired bootstrap resampling: tests whether system b beats system a.
/// Sentences are put in a canonical (reference, a, b) order before
/// resampling, so jointly permuting the inputs does not change the result.
SignificanceResult paired_bootstrap(const std::vector<std::string>& sys_a,
                                    const std::vector<std::string>& sys_b,
                                    const std::vector<std::string>& references,
                                    std::size_t n_resamples = 1000, std::uint64_t seed = 0,
                                    const BleuConfig& config = {});

}  // namespace lrnmt
