#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lrnmt/corpus.hpp"
#include "lrnmt/decode.hpp"
#include "lrnmt/synth.hpp"
#include "lrnmt/train.hpp"
#include "lrnmt/transfer.hpp"
#include "lrnmt/vocab.hpp"

namespace lrnmt {

struct ExperimentConfig {
  // Raw parallel text. Ignored when `synthetic` is set.
  std::string parent_src, parent_tgt;
  std::string train_src, train_tgt;
  std::string dev_src, dev_tgt;
  std::string test_src, test_tgt;
  // Optional transliteration table applied to the child source side.
  std::string child_translit;

  // Generate the corpora into the run directory instead of reading files.
  std::optional<SynthSpec> synthetic;

  std::string out_dir = "run";
  std::uint64_t seed = 0;

  PreprocessConfig preprocess{.truecase = true};

  bool run_word = true;
  bool run_bpe = true;
  std::size_t parent_vocab_size = 30000;
  std::size_t child_vocab_size = 15000;
  std::size_t bpe_ops = 8000;

  TransferMode word_transfer = TransferMode::positional;
  TransferMode bpe_transfer = TransferMode::shared_surface;
  bool word_freeze = true;
  bool bpe_freeze = false;

  int embed = 32;
  int hidden = 32;
  // Epoch counts are the word-regime budgets; BPE runs get epoch_budget().
  TrainConfig parent_train = TrainConfig::with_epochs(100);
  TrainConfig child_train = TrainConfig::with_epochs(50);
  BeamConfig test_beam;
  std::size_t bootstrap_resamples = 1000;

  void validate() const;
};

/// Sets one option from its dotted key ("child.epochs", "synth.seed",
/// "bpe_ops", ...). Throws std::invalid_argument on unknown keys.
void set_experiment_option(ExperimentConfig& config, std::string_view key, std::string_view value);
ExperimentConfig parse_experiment_config(std::istream& is, ExperimentConfig base = {});
ExperimentConfig load_experiment_config(const std::string& path, ExperimentConfig base = {});
void write_experiment_config(std::ostream& os, const ExperimentConfig& config);

enum class CellStatus { ok, off, failed };

struct CellResult {
  std::string regime;   // "word" | "bpe"
  std::string setting;  // "baseline" | "transfer" | "transfer+freeze"
  CellStatus status = CellStatus::off;
  std::string error;
  double test_bleu = 0.0;
  // Against the baseline of the same regime; transfer cells only.
  std::optional<double> delta_bleu;
  std::optional<double> p_value;
  std::string mark;
  int best_epoch = 0;
  // Transfer cells: dev loss of the parent and of the child right after
  // transfer, both without dropout.
  std::optional<double> parent_dev_loss;
  std::optional<double> initial_dev_loss;
};

struct ExperimentResult {
  std::vector<CellResult> cells;  // word then bpe; baseline, transfer, transfer+freeze
  std::optional<OverlapReport> word_overlap;
  std::optional<OverlapReport> bpe_overlap;

  const CellResult* find(std::string_view regime, std::string_view setting) const;
};

using ExperimentLogger = std::function<void(const std::string&)>;

/// Runs the baseline/transfer/transfer+freeze x word/bpe grid, writing
/// every stage's artifacts, manifest.tsv, results.tsv and table.txt into
/// config.out_dir. A failing cell is reported and the others still run.
ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentLogger& log = {});

/// Plain-text grid of test BLEU, settings by regime.
void write_result_table(std::ostream& os, const ExperimentConfig& config,
                        const ExperimentResult& result);
void write_result_rows(std::ostream& os, const ExperimentResult& result);

/// Gain marks: "‡" for p < 0.01, "†" for p < 0.05, "*" for an
/// insignificant gain, empty otherwise.
std::string significance_mark(double delta_bleu, double p_value);

}  // namespace lrnmt
