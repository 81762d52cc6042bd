#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lrnmt/decode.hpp"
#include "lrnmt/optim.hpp"
#include "lrnmt/seq2seq.hpp"
#include "lrnmt/vocab.hpp"

namespace lrnmt {

struct TrainConfig {
  std::size_t minibatch_size = 32;
  double dropout_rate = 0.2;
  double clip_norm = 5.0;
  int epochs = 10;
  std::uint64_t seed = 0;
  bool freeze_target_embeddings = false;
  int eval_every = 1;
  // Stop after this many optimizer steps (0 means no step at all).
  std::optional<std::size_t> max_steps;
  double rho = 0.95;
  double eps = 1e-6;
  // Dev decoding.
  std::size_t dev_beam = 10;
  double alpha = 0.8;

  void validate() const;

  static TrainConfig with_epochs(int n) {
    TrainConfig c;
    c.epochs = n;
    return c;
  }
};

/// Sets one field from its key; throws std::invalid_argument on an unknown
/// key or a malformed value.
void set_train_option(TrainConfig& config, std::string_view key, std::string_view value);

/// Flat "key = value" lines; '#' starts a comment.
TrainConfig parse_train_config(std::istream& is, TrainConfig base = {});
TrainConfig load_train_config(const std::string& path, TrainConfig base = {});
void write_train_config(std::ostream& os, const TrainConfig& config);

/// ceil(base / 2) for the duplicated-data BPE regime, base otherwise.
int epoch_budget(bool is_bpe, int base_epochs);

struct DevEval {
  int epoch = 0;
  double bleu = 0.0;
};

struct TrainReport {
  std::vector<double> epoch_loss;  // mean training loss per epoch
  std::vector<DevEval> evals;
  int best_epoch = 0;  // 0 when no epoch ran
  std::size_t steps = 0;
  double wall_seconds = 0.0;

  std::optional<double> best_bleu() const;
  // "epoch\tloss\tdev_bleu" rows; dev_bleu is "-" for epochs not evaluated.
  void write_rows(std::ostream& os) const;
};

// Dev BLEU of a parameter set; higher is better.
using DevScorer = std::function<double(const Seq2SeqParams&)>;

// Receives one human-readable line per epoch.
using TrainLogger = std::function<void(const std::string&)>;

struct TrainResult {
  Seq2SeqParams params;
  TrainReport report;
};

/// Minibatch Adadelta training. With a dev scorer the parameters of the
/// best evaluated epoch are returned (earliest on ties); without one the
/// final parameters are. `frozen` is merged with the config's freeze flag.
TrainResult train(const Seq2SeqParams& initial, const std::vector<IdPair>& data,
                  const TrainConfig& config, const DevScorer& dev = {},
                  const FreezeMask& frozen = {}, const TrainLogger& log = {});

/// Per-token mean cross-entropy over a corpus, without dropout.
double corpus_loss(const Seq2SeqParams& params, const std::vector<IdPair>& data);

struct DevSet {
  std::vector<std::vector<int>> sources;
  std::vector<std::string> references;  // tokenized reference lines
};

/// Tokenized, case-sensitive BLEU of beam-search output against the dev
/// references.
DevScorer make_bleu_scorer(DevSet dev, const Vocabulary& target_vocab, bool subword,
                           BeamConfig beam);

}  // namespace lrnmt
