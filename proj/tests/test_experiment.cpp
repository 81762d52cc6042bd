#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lrnmt/experiment.hpp"
#include "lrnmt/synth.hpp"
#include "lrnmt/vocab.hpp"

using namespace lrnmt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lrnmt_test_experiment_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double word_overlap(const SynthData& d) {
  const Sentences child = d.child_train.source_side();
  const Vocabulary cv = build_vocab(std::span(&child, 1), VocabMode::word);
  return overlap_report(cv, types_of(d.parent.source_side())).percentage;
}

SynthSpec small_spec(std::uint64_t seed = 0) {
  SynthSpec s;
  s.seed = seed;
  s.n_roots = 20;
  s.n_affixes = 3;
  s.parent_sentences = 60;
  s.child_sentences = 30;
  s.min_words = 2;
  s.max_words = 4;
  return s;
}

// Small enough that a full grid runs in a few seconds.
ExperimentConfig tiny(const fs::path& out) {
  ExperimentConfig c;
  c.synthetic = small_spec(3);
  c.out_dir = out.string();
  c.parent_vocab_size = 500;
  c.child_vocab_size = 500;
  c.bpe_ops = 30;
  c.embed = 8;
  c.hidden = 8;
  for (TrainConfig* t : {&c.parent_train, &c.child_train}) {
    *t = TrainConfig::with_epochs(2);
    t->minibatch_size = 4;
    t->dev_beam = 2;
  }
  c.test_beam.beam_size = 2;
  c.bootstrap_resamples = 50;
  return c;
}

}  // namespace

TEST(Synth, ZeroMutationFullShareGivesIdenticalLexicons) {
  SynthSpec s = small_spec();
  s.mutation_rate = 0.0;
  s.affix_share = 1.0;
  const SynthData d = gen_synthetic(s);
  EXPECT_EQ(d.lexicon.parent_roots, d.lexicon.child_roots);
  EXPECT_EQ(d.lexicon.parent_affixes, d.lexicon.child_affixes);
  EXPECT_EQ(d.lexicon.parent_words(), d.lexicon.child_words());
  const Sentences child = d.child_train.source_side();
  const OverlapReport r =
      overlap_report(build_vocab(std::span(&child, 1), VocabMode::word), d.lexicon.parent_words());
  // "." is the one child type that is not a lexicon word.
  EXPECT_EQ(r.child_types_in_parent + 1, r.child_types_total);
}

TEST(Synth, FullMutationNoShareGivesNearZeroOverlap) {
  SynthSpec s = small_spec();
  s.mutation_rate = 1.0;
  s.affix_share = 0.0;
  const SynthData d = gen_synthetic(s);
  EXPECT_LT(word_overlap(d), 5.0);
}

TEST(Synth, WordOverlapTracksExpectedShare) {
  // A child word is a parent word when its root was not mutated and its
  // affix is shared. With six affixes the drawn share swings widely around
  // affix_share, so the expectation uses the shares this lexicon realised.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthSpec s;
    s.seed = seed;
    s.n_roots = 200;
    s.mutation_rate = 0.3;
    s.parent_sentences = 3000;
    s.child_sentences = 1000;
    const SynthData d = gen_synthetic(s);
    const SynthLexicon& lx = d.lexicon;
    double kept_roots = 0, kept_affixes = 0;
    for (std::size_t i = 0; i < s.n_roots; ++i) kept_roots += lx.parent_roots[i] == lx.child_roots[i];
    for (std::size_t i = 0; i < s.n_affixes; ++i)
      kept_affixes += lx.parent_affixes[i] == lx.child_affixes[i];
    EXPECT_NEAR(kept_roots / s.n_roots, 1.0 - s.mutation_rate, 0.1);
    const double expect = 100.0 * (kept_roots / s.n_roots) * (kept_affixes / s.n_affixes);
    EXPECT_NEAR(word_overlap(d), expect, 10.0) << "seed " << seed;
  }
}

TEST(Synth, SplitSizesDeterminismAndValidation) {
  SynthSpec s = small_spec(4);
  s.child_sentences = 50;
  const SynthData a = gen_synthetic(s), b = gen_synthetic(s);
  EXPECT_EQ(a.parent.size(), 60u);
  EXPECT_EQ(a.child_train.size(), 40u);
  EXPECT_EQ(a.child_dev.size(), 5u);
  EXPECT_EQ(a.child_test.size(), 5u);
  EXPECT_EQ(a.child_train.source_side(), b.child_train.source_side());
  EXPECT_EQ(a.parent.target_side(), b.parent.target_side());
  EXPECT_EQ(a.lexicon.child_roots, b.lexicon.child_roots);
  for (const auto& p : a.parent.pairs()) {
    EXPECT_GE(p.source.size(), s.min_words);
    EXPECT_LE(p.source.size(), s.max_words + 1);  // final punctuation
  }
  s.seed = 5;
  EXPECT_NE(gen_synthetic(s).child_train.source_side(), a.child_train.source_side());
  s.child_sentences = 9;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = small_spec();
  s.mutation_rate = 1.5;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(ExperimentConfig, OptionsAndRoundTrip) {
  ExperimentConfig c;
  set_experiment_option(c, "child.epochs", "7");
  set_experiment_option(c, "parent.minibatch_size", "3");
  set_experiment_option(c, "synth.n_roots", "40");
  set_experiment_option(c, "bpe_transfer", "positional");
  set_experiment_option(c, "word_freeze", "false");
  set_experiment_option(c, "alpha", "0.5");
  EXPECT_EQ(c.child_train.epochs, 7);
  EXPECT_EQ(c.parent_train.minibatch_size, 3u);
  ASSERT_TRUE(c.synthetic.has_value());
  EXPECT_EQ(c.synthetic->n_roots, 40u);
  EXPECT_EQ(c.bpe_transfer, TransferMode::positional);
  EXPECT_FALSE(c.word_freeze);
  EXPECT_EQ(c.test_beam.alpha, 0.5);
  EXPECT_THROW(set_experiment_option(c, "colour", "blue"), std::invalid_argument);
  EXPECT_THROW(set_experiment_option(c, "child.colour", "blue"), std::invalid_argument);

  std::ostringstream a;
  write_experiment_config(a, c);
  std::istringstream in(a.str());
  std::ostringstream b;
  write_experiment_config(b, parse_experiment_config(in));
  EXPECT_EQ(a.str(), b.str());

  std::istringstream bad("just words\n");
  EXPECT_THROW(parse_experiment_config(bad), std::invalid_argument);
  std::istringstream comments("# header\n\nseed = 4  # trailing\n");
  EXPECT_EQ(parse_experiment_config(comments).seed, 4u);
}

TEST(ExperimentConfig, Validation) {
  ExperimentConfig c;
  EXPECT_THROW(c.validate(), std::invalid_argument);  // no corpora, no synthetic
  c.synthetic = SynthSpec{};
  c.validate();
  c.bpe_ops = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.run_bpe = false;
  c.validate();
}

TEST(SignificanceMark, Values) {
  EXPECT_EQ(significance_mark(1.0, 0.001), "‡");
  EXPECT_EQ(significance_mark(1.0, 0.03), "†");
  EXPECT_EQ(significance_mark(1.0, 0.2), "*");
  EXPECT_EQ(significance_mark(0.0, 0.001), "");
  EXPECT_EQ(significance_mark(-2.0, 0.001), "");
}

TEST(RunExperiment, ModeNoneRunsBaselinesOnly) {
  const fs::path out = scratch("none");
  ExperimentConfig c = tiny(out);
  c.word_transfer = TransferMode::none;
  c.bpe_transfer = TransferMode::none;
  const ExperimentResult r = run_experiment(c);
  ASSERT_EQ(r.cells.size(), 6u);
  for (const char* regime : {"word", "bpe"}) {
    ASSERT_NE(r.find(regime, "baseline"), nullptr);
    EXPECT_EQ(r.find(regime, "baseline")->status, CellStatus::ok) << r.find(regime, "baseline")->error;
    EXPECT_EQ(r.find(regime, "transfer")->status, CellStatus::off);
    EXPECT_EQ(r.find(regime, "transfer+freeze")->status, CellStatus::off);
  }
  EXPECT_FALSE(fs::exists(out / "word" / "parent.ckpt"));
  EXPECT_FALSE(fs::exists(out / "bpe" / "parent.ckpt"));
  const std::string table = slurp(out / "table.txt");
  EXPECT_NE(table.find("—"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "results.tsv"));
  EXPECT_TRUE(fs::exists(out / "manifest.tsv"));
  ASSERT_TRUE(r.word_overlap.has_value());
  ASSERT_TRUE(r.bpe_overlap.has_value());
  fs::remove_all(out);
}

TEST(RunExperiment, IdenticalParentAndChildDataContinueExactly) {
  // Parent corpus = child training corpus, so vocabularies coincide and the
  // transferred model is the parent itself.
  const fs::path out = scratch("continue");
  const fs::path raw = out / "input";
  write_synthetic(gen_synthetic(small_spec(6)), raw.string());
  ExperimentConfig c = tiny(out / "run");
  c.synthetic.reset();
  c.parent_src = c.train_src = (raw / "train.src").string();
  c.parent_tgt = c.train_tgt = (raw / "train.tgt").string();
  c.dev_src = (raw / "dev.src").string();
  c.dev_tgt = (raw / "dev.tgt").string();
  c.test_src = (raw / "test.src").string();
  c.test_tgt = (raw / "test.tgt").string();
  for (TransferMode mode : {TransferMode::positional, TransferMode::shared_surface}) {
    c.word_transfer = mode;
    const ExperimentResult r = run_experiment(c);
    for (const char* regime : {"word", "bpe"}) {
      const CellResult* t = r.find(regime, "transfer");
      ASSERT_NE(t, nullptr);
      ASSERT_EQ(t->status, CellStatus::ok) << t->error;
      ASSERT_TRUE(t->parent_dev_loss && t->initial_dev_loss);
      EXPECT_NEAR(*t->initial_dev_loss, *t->parent_dev_loss, 1e-9) << regime << " " << to_string(mode);
    }
    ASSERT_TRUE(r.word_overlap.has_value());
    EXPECT_DOUBLE_EQ(r.word_overlap->percentage, 100.0);
  }
  fs::remove_all(out);
}

TEST(RunExperiment, FailuresStayInTheirCells) {
  // A directory where the parent checkpoint should go breaks word-regime
  // parent training; one where the merges file should go breaks bpe data
  // preparation.
  const fs::path out = scratch("fail");
  fs::create_directories(out / "word" / "parent.ckpt");
  fs::create_directories(out / "bpe" / "merges.txt");
  const ExperimentResult r = run_experiment(tiny(out));
  EXPECT_EQ(r.find("word", "baseline")->status, CellStatus::ok) << r.find("word", "baseline")->error;
  for (const char* s : {"transfer", "transfer+freeze"}) {
    const CellResult* c = r.find("word", s);
    EXPECT_EQ(c->status, CellStatus::failed);
    EXPECT_NE(c->error.find("parent"), std::string::npos) << c->error;
  }
  for (const char* s : {"baseline", "transfer", "transfer+freeze"}) {
    const CellResult* c = r.find("bpe", s);
    EXPECT_EQ(c->status, CellStatus::failed);
    EXPECT_NE(c->error.find("merges"), std::string::npos) << c->error;
  }
  EXPECT_NE(slurp(out / "table.txt").find("error"), std::string::npos);
  EXPECT_NE(slurp(out / "results.tsv").find("failed"), std::string::npos);
  fs::remove_all(out);
}
