// lrnmt: command-line front end for the toolkit's pipeline stages.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lrnmt/bleu.hpp"
#include "lrnmt/bpe.hpp"
#include "lrnmt/checkpoint.hpp"
#include "lrnmt/corpus.hpp"
#include "lrnmt/decode.hpp"
#include "lrnmt/experiment.hpp"
#include "lrnmt/rng.hpp"
#include "lrnmt/synth.hpp"
#include "lrnmt/train.hpp"
#include "lrnmt/transfer.hpp"
#include "lrnmt/translit.hpp"
#include "lrnmt/vocab.hpp"

using namespace lrnmt;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string config;
  std::string out;
};

std::string need_out(const Globals& g, const char* what) {
  if (g.out.empty()) throw std::invalid_argument(std::string("--out is required (") + what + ")");
  return g.out;
}

// Lines from a file, or stdin for "-".
std::vector<std::string> input_lines(const std::string& path) {
  if (path != "-") return read_lines(path);
  std::vector<std::string> lines;
  for (std::string l; std::getline(std::cin, l);) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    lines.push_back(std::move(l));
  }
  return lines;
}

void output_lines(const std::string& path, const std::vector<std::string>& lines) {
  if (path.empty() || path == "-") {
    for (const auto& l : lines) std::cout << l << '\n';
    return;
  }
  write_lines(path, lines);
}

Sentences read_tokenized(const std::string& path) {
  Sentences out;
  for (const auto& l : input_lines(path)) out.push_back(text::split_ws(l));
  return out;
}

void check_hash(std::uint64_t stored, const Vocabulary& v, const char* side) {
  if (stored != v.hash())
    throw std::invalid_argument(std::string("checkpoint was trained with a different ") + side +
                                " vocabulary");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transfer learning toolkit for low-resource neural machine translation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->each([&g](const std::string&) { g.seed_set = true; });
  app.add_option("--config", g.config, "Key-value configuration file");
  app.add_option("--out", g.out, "Output file or directory");

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "Tokenize, length-filter, truecase and augment a parallel corpus");
  std::string pre_src, pre_tgt, pre_case_out, pre_case_in;
  std::size_t pre_max_len = 50, pre_rare = 5;
  bool pre_truecase = false, pre_fallback = false, pre_augment = false;
  pre->add_option("--src", pre_src, "Raw source file")->required();
  pre->add_option("--tgt", pre_tgt, "Raw target file")->required();
  pre->add_option("--max-len", pre_max_len, "Maximum tokens per side");
  pre->add_flag("--truecase", pre_truecase, "Fit a case model and truecase both sides");
  pre->add_option("--case-model", pre_case_in, "Apply an existing case model");
  pre->add_option("--save-case-model", pre_case_out, "Write the fitted case model");
  pre->add_flag("--lowercase-fallback", pre_fallback, "Lowercase unknown sentence-initial forms");
  pre->add_flag("--unk-augment", pre_augment, "Append a copy with rare tokens replaced by <unk>");
  pre->add_option("--rare-threshold", pre_rare, "Frequency below which a token is rare");

  // translit
  auto* tl = app.add_subcommand("translit", "Transliterate text with a grapheme table");
  std::string tl_table, tl_in = "-";
  bool tl_any = false;
  tl->add_option("--table", tl_table, "Table file (grapheme<TAB>replacement)")->required();
  tl->add_option("--in", tl_in, "Input file, '-' for stdin");
  tl->add_flag("--any-script", tl_any, "Allow non-Latin replacements");

  // bpe-learn
  auto* bl = app.add_subcommand("bpe-learn", "Learn joint BPE merges over tokenized files");
  std::vector<std::string> bl_in;
  std::size_t bl_ops = 8000;
  bl->add_option("--in", bl_in, "Tokenized files (all are pooled)")->required();
  bl->add_option("--ops", bl_ops, "Number of merge operations");

  // bpe-apply
  auto* ba = app.add_subcommand("bpe-apply", "Segment tokenized text with learned merges");
  std::string ba_merges, ba_in = "-";
  bool ba_rejoin = false;
  ba->add_option("--merges", ba_merges, "Merge file")->required();
  ba->add_option("--in", ba_in, "Tokenized input, '-' for stdin");
  ba->add_flag("--rejoin", ba_rejoin, "Undo segmentation instead");

  // vocab
  auto* vc = app.add_subcommand("vocab", "Build a vocabulary from tokenized files");
  std::vector<std::string> vc_in;
  std::string vc_mode = "word";
  std::size_t vc_size = 0;
  vc->add_option("--in", vc_in, "Tokenized files")->required();
  vc->add_option("--mode", vc_mode, "word or subword");
  vc->add_option("--size", vc_size, "Word mode: keep this many most frequent types");

  // overlap
  auto* ov = app.add_subcommand("overlap", "Share of child source types present in the parent");
  std::string ov_child, ov_parent;
  ov->add_option("--child", ov_child, "Child source side (tokenized or segmented)")->required();
  ov->add_option("--parent", ov_parent, "Parent source side (tokenized or segmented)")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train a model on id-encodable tokenized data");
  std::string tr_src, tr_tgt, tr_sv, tr_tv, tr_mode = "word", tr_init, tr_dev_src, tr_dev_tgt,
                                           tr_report;
  int tr_embed = 32, tr_hidden = 32;
  bool tr_freeze = false;
  std::vector<std::string> tr_set;
  tr->add_option("--src", tr_src, "Training source (tokenized or segmented)")->required();
  tr->add_option("--tgt", tr_tgt, "Training target (tokenized or segmented)")->required();
  tr->add_option("--src-vocab", tr_sv, "Source vocabulary")->required();
  tr->add_option("--tgt-vocab", tr_tv, "Target vocabulary")->required();
  tr->add_option("--mode", tr_mode, "word or subword (controls dev rejoining)");
  tr->add_option("--init", tr_init, "Start from this checkpoint instead of a fresh model");
  tr->add_option("--dev-src", tr_dev_src, "Dev source for model selection");
  tr->add_option("--dev-tgt", tr_dev_tgt, "Dev reference (word-level tokens)");
  tr->add_option("--embed", tr_embed, "Embedding size");
  tr->add_option("--hidden", tr_hidden, "Hidden size");
  tr->add_flag("--freeze-target", tr_freeze, "Freeze target embeddings");
  tr->add_option("--set", tr_set, "Training option key=value (overrides --config)");
  tr->add_option("--report", tr_report, "Write per-epoch rows here");

  // transfer
  auto* tf = app.add_subcommand("transfer", "Initialize a child model from a parent checkpoint");
  std::string tf_parent, tf_psv, tf_ptv, tf_csv, tf_ctv, tf_mode = "shared_surface";
  std::uint64_t tf_fresh = 0;
  tf->add_option("--parent", tf_parent, "Parent checkpoint")->required();
  tf->add_option("--parent-src-vocab", tf_psv, "Parent source vocabulary")->required();
  tf->add_option("--parent-tgt-vocab", tf_ptv, "Parent target vocabulary")->required();
  tf->add_option("--child-src-vocab", tf_csv, "Child source vocabulary")->required();
  tf->add_option("--child-tgt-vocab", tf_ctv, "Child target vocabulary")->required();
  tf->add_option("--mode", tf_mode, "none, positional or shared_surface");
  tf->add_option("--fresh-seed", tf_fresh, "Seed for rows with no parent counterpart");

  // translate
  auto* tx = app.add_subcommand("translate", "Beam-search translation of raw text");
  std::string tx_model, tx_sv, tx_tv, tx_in = "-", tx_merges, tx_case, tx_nbest;
  std::size_t tx_beam = 10;
  double tx_alpha = 0.8;
  bool tx_no_detok = false;
  tx->add_option("--model", tx_model, "Checkpoint")->required();
  tx->add_option("--src-vocab", tx_sv, "Source vocabulary")->required();
  tx->add_option("--tgt-vocab", tx_tv, "Target vocabulary")->required();
  tx->add_option("--in", tx_in, "Raw input, '-' for stdin");
  tx->add_option("--merges", tx_merges, "BPE merges (subword models)");
  tx->add_option("--case-model", tx_case, "Truecase input and recase output");
  tx->add_option("--beam", tx_beam, "Beam size");
  tx->add_option("--alpha", tx_alpha, "Length normalization exponent");
  tx->add_option("--nbest", tx_nbest, "Write 'index ||| score ||| text' lines here");
  tx->add_flag("--no-detok", tx_no_detok, "Keep output tokenized");

  // score
  auto* sc = app.add_subcommand("score", "Corpus BLEU");
  std::string sc_cand, sc_ref;
  bool sc_tok = false, sc_lower = false;
  sc->add_option("--cand", sc_cand, "Candidate lines")->required();
  sc->add_option("--ref", sc_ref, "Reference lines")->required();
  sc->add_flag("--tokenized", sc_tok, "Tokenize both sides first");
  sc->add_flag("--lowercase", sc_lower, "Case-insensitive");

  // signif
  auto* sg = app.add_subcommand("signif", "Paired bootstrap significance of b over a");
  std::string sg_a, sg_b, sg_ref;
  std::size_t sg_n = 1000;
  bool sg_tok = false;
  sg->add_option("--a", sg_a, "System a lines")->required();
  sg->add_option("--b", sg_b, "System b lines")->required();
  sg->add_option("--ref", sg_ref, "Reference lines")->required();
  sg->add_option("--n", sg_n, "Resamples");
  sg->add_flag("--tokenized", sg_tok, "Tokenize both sides first");

  // gen-synthetic
  auto* gs = app.add_subcommand("gen-synthetic", "Write a synthetic related-language corpus");
  SynthSpec gs_spec;
  gs->add_option("--roots", gs_spec.n_roots, "Root lexicon size");
  gs->add_option("--affixes", gs_spec.n_affixes, "Affix inventory size");
  gs->add_option("--affix-share", gs_spec.affix_share, "Share of child affixes kept from the parent");
  gs->add_option("--mutation-rate", gs_spec.mutation_rate, "Per-root mutation probability");
  gs->add_option("--parent-sentences", gs_spec.parent_sentences, "Parent corpus size");
  gs->add_option("--child-sentences", gs_spec.child_sentences, "Child corpus size before splitting");

  // experiment
  auto* ex = app.add_subcommand("experiment", "Run the baseline/transfer/freeze x word/bpe grid");
  bool ex_synth = false, ex_quiet = false;
  std::vector<std::string> ex_set;
  ex->add_flag("--synthetic", ex_synth, "Use generated data");
  ex->add_option("--set", ex_set, "Option key=value (overrides --config)");
  ex->add_flag("--quiet", ex_quiet, "No progress on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (pre->parsed()) {
      const LoadedCorpus lc = read_parallel(pre_src, pre_tgt);
      PreprocessConfig pc;
      pc.max_len = pre_max_len;
      pc.rare_threshold = pre_rare;
      pc.validate();
      ParallelCorpus c = filter_by_length(lc.corpus, pc.max_len);
      if (pre_truecase || !pre_case_in.empty()) {
        const CaseModel m = pre_case_in.empty() ? truecase_fit(c) : CaseModel::load(pre_case_in);
        if (!pre_case_out.empty()) m.save(pre_case_out);
        c = truecase_corpus(c, m, pre_fallback);
      }
      if (pre_augment) c = unk_augment(c, pc.rare_threshold);
      const std::string out = need_out(g, "output prefix");
      write_side(out + ".src", c.source_side());
      write_side(out + ".tgt", c.target_side());
      std::cout << "pairs\t" << c.size() << "\tdropped_empty\t" << lc.dropped_empty
                << "\tdropped_long\t" << lc.corpus.size() - filter_by_length(lc.corpus, pc.max_len).size()
                << '\n';
    } else if (tl->parsed()) {
      const TranslitTable table =
          TranslitTable::load(tl_table, tl_any ? TargetScript::any : TargetScript::latin);
      std::vector<std::string> lines = input_lines(tl_in);
      for (auto& l : lines) l = table.transliterate(l);
      output_lines(g.out, lines);
    } else if (bl->parsed()) {
      std::vector<Sentences> sides;
      for (const auto& f : bl_in) sides.push_back(read_tokenized(f));
      const BpeModel m = bpe_learn(sides, bl_ops);
      m.save(need_out(g, "merge file"));
      std::cout << "merges\t" << m.merges().size() << '\n';
    } else if (ba->parsed()) {
      const BpeModel m = BpeModel::load(ba_merges);
      BpeSegmenter seg(m);
      std::vector<std::string> out;
      for (const auto& s : read_tokenized(ba_in))
        out.push_back(text::join(ba_rejoin ? bpe_rejoin(s) : seg.sentence(s)));
      output_lines(g.out, out);
    } else if (vc->parsed()) {
      std::vector<Sentences> sides;
      for (const auto& f : vc_in) sides.push_back(read_tokenized(f));
      const VocabMode mode = parse_vocab_mode(vc_mode);
      std::optional<std::size_t> cutoff;
      if (vc_size > 0) cutoff = vc_size;
      const Vocabulary v = build_vocab(sides, mode, cutoff);
      v.save(need_out(g, "vocabulary file"));
      std::cout << "size\t" << v.size() << '\n';
    } else if (ov->parsed()) {
      const Sentences child = read_tokenized(ov_child);
      const Vocabulary cv = build_vocab(std::span(&child, 1), VocabMode::subword);
      const OverlapReport r = overlap_report(cv, types_of(read_tokenized(ov_parent)));
      std::cout << "child_types\t" << r.child_types_total << "\tin_parent\t"
                << r.child_types_in_parent << "\tpercent\t" << std::fixed << std::setprecision(2)
                << r.percentage << '\n';
    } else if (tr->parsed()) {
      TrainConfig tc;
      if (!g.config.empty()) tc = load_train_config(g.config);
      if (g.seed_set) tc.seed = g.seed;
      if (tr_freeze) tc.freeze_target_embeddings = true;
      for (const auto& kv : tr_set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value: " + kv);
        set_train_option(tc, kv.substr(0, eq), kv.substr(eq + 1));
      }
      const VocabMode mode = parse_vocab_mode(tr_mode);
      const Vocabulary sv = Vocabulary::load(tr_sv, mode), tv = Vocabulary::load(tr_tv, mode);
      const Sentences src = read_tokenized(tr_src), tgt = read_tokenized(tr_tgt);
      if (src.size() != tgt.size()) throw std::invalid_argument("train: source/target line counts differ");
      std::vector<IdPair> data;
      for (std::size_t i = 0; i < src.size(); ++i)
        if (!src[i].empty() && !tgt[i].empty()) data.push_back({sv.encode(src[i]), tv.encode(tgt[i])});
      Seq2SeqParams init;
      if (!tr_init.empty()) {
        Checkpoint ck = load_checkpoint(tr_init);
        check_hash(ck.src_vocab_hash, sv, "source");
        check_hash(ck.tgt_vocab_hash, tv, "target");
        init = std::move(ck.params);
      } else {
        ModelConfig mc;
        mc.src_vocab = static_cast<int>(sv.size());
        mc.tgt_vocab = static_cast<int>(tv.size());
        mc.embed = tr_embed;
        mc.hidden = tr_hidden;
        init = init_params(mc, derive_seed(tc.seed, 7));
      }
      DevScorer scorer;
      if (!tr_dev_src.empty() || !tr_dev_tgt.empty()) {
        if (tr_dev_src.empty() || tr_dev_tgt.empty())
          throw std::invalid_argument("train: give both --dev-src and --dev-tgt");
        DevSet dev;
        for (const auto& s : read_tokenized(tr_dev_src)) dev.sources.push_back(sv.encode(s));
        dev.references = input_lines(tr_dev_tgt);
        BeamConfig beam;
        beam.beam_size = tc.dev_beam;
        beam.alpha = tc.alpha;
        scorer = make_bleu_scorer(std::move(dev), tv, mode == VocabMode::subword, beam);
      }
      TrainResult r = train(init, data, tc, scorer, {},
                            [](const std::string& l) { std::cerr << l << '\n'; });
      save_checkpoint(need_out(g, "checkpoint"), Checkpoint{r.params, sv.hash(), tv.hash()});
      if (!tr_report.empty()) {
        std::ofstream rep(tr_report);
        r.report.write_rows(rep);
      }
      std::cerr << "best epoch " << r.report.best_epoch << ", " << r.report.steps << " steps, "
                << std::fixed << std::setprecision(1) << r.report.wall_seconds << " s\n";
    } else if (tf->parsed()) {
      const Vocabulary psv = Vocabulary::load(tf_psv, VocabMode::word);
      const Vocabulary ptv = Vocabulary::load(tf_ptv, VocabMode::word);
      const Vocabulary csv = Vocabulary::load(tf_csv, VocabMode::word);
      const Vocabulary ctv = Vocabulary::load(tf_ctv, VocabMode::word);
      const Checkpoint parent = load_checkpoint(tf_parent);
      check_hash(parent.src_vocab_hash, psv, "source");
      check_hash(parent.tgt_vocab_hash, ptv, "target");
      TransferSpec spec;
      spec.mode = parse_transfer_mode(tf_mode);
      spec.fresh_init_seed = tf_fresh;
      ModelConfig cc = parent.params.config;
      cc.src_vocab = static_cast<int>(csv.size());
      cc.tgt_vocab = static_cast<int>(ctv.size());
      const VocabAlignment sa = align(spec.mode, psv, csv);
      const VocabAlignment ta = align(spec.mode, ptv, ctv);
      const TransferResult t = transfer_params(parent.params, sa, ta, spec, cc);
      save_checkpoint(need_out(g, "child checkpoint"), Checkpoint{t.params, csv.hash(), ctv.hash()});
      std::cout << "source\tmapped\t" << sa.mapped() << "\tfresh\t" << sa.fresh() << '\n'
                << "target\tmapped\t" << ta.mapped() << "\tfresh\t" << ta.fresh() << '\n';
    } else if (tx->parsed()) {
      const bool subword = !tx_merges.empty();
      const VocabMode mode = subword ? VocabMode::subword : VocabMode::word;
      const Vocabulary sv = Vocabulary::load(tx_sv, mode), tv = Vocabulary::load(tx_tv, mode);
      const Checkpoint ck = load_checkpoint(tx_model);
      check_hash(ck.src_vocab_hash, sv, "source");
      check_hash(ck.tgt_vocab_hash, tv, "target");
      std::optional<BpeModel> bpe;
      std::optional<BpeSegmenter> seg;
      if (subword) {
        bpe = BpeModel::load(tx_merges);
        seg.emplace(*bpe);
      }
      std::optional<CaseModel> cm;
      if (!tx_case.empty()) cm = CaseModel::load(tx_case);
      BeamConfig beam;
      beam.beam_size = tx_beam;
      beam.alpha = tx_alpha;
      PostprocessOptions post;
      post.recase = cm.has_value();
      post.detokenize = !tx_no_detok;
      std::ofstream nbest;
      if (!tx_nbest.empty()) {
        nbest.open(tx_nbest);
        if (!nbest) throw std::runtime_error("cannot write " + tx_nbest);
      }
      std::vector<std::string> out;
      const std::vector<std::string> lines = input_lines(tx_in);
      for (std::size_t i = 0; i < lines.size(); ++i) {
        Tokens toks = tokenize(lines[i]);
        if (cm) toks = truecase_apply(toks, *cm);
        if (seg) toks = seg->sentence(toks);
        if (toks.empty()) {
          out.emplace_back();
          continue;
        }
        const std::vector<int> ids = sv.encode(toks);
        if (nbest) {
          for (const auto& h : beam_search(ck.params, ids, beam)) {
            std::string line;
            try {
              line = postprocess(tv.decode(h.hyp.output()), {subword, post.recase, post.detokenize});
            } catch (const TruncatedHypothesis&) {
              line = text::join(tv.decode(h.hyp.output()));
            }
            nbest << i << " ||| " << std::setprecision(10) << h.score << " ||| " << line << '\n';
          }
        }
        const Translation t = translate(ck.params, ids, tv, beam, subword);
        out.push_back(postprocess(t.tokens, {false, post.recase, post.detokenize}));
      }
      output_lines(g.out, out);
    } else if (sc->parsed()) {
      BleuConfig bc;
      bc.case_sensitive = !sc_lower;
      bc.tokenized = sc_tok;
      const double b = bleu(input_lines(sc_cand), read_lines(sc_ref), bc);
      std::cout << "BLEU\t" << std::fixed << std::setprecision(4) << b << '\n';
    } else if (sg->parsed()) {
      BleuConfig bc;
      bc.tokenized = sg_tok;
      const SignificanceResult r =
          paired_bootstrap(read_lines(sg_a), read_lines(sg_b), read_lines(sg_ref), sg_n, g.seed, bc);
      std::cout << std::fixed << std::setprecision(4) << "bleu_a\t" << r.bleu_a << "\tbleu_b\t"
                << r.bleu_b << "\tdelta\t" << r.delta_bleu << "\tp\t" << r.p_value << "\tn\t"
                << r.n_resamples << '\n';
    } else if (gs->parsed()) {
      gs_spec.seed = g.seed;
      const SynthData d = gen_synthetic(gs_spec);
      write_synthetic(d, need_out(g, "directory"));
      std::cout << "parent\t" << d.parent.size() << "\ttrain\t" << d.child_train.size() << "\tdev\t"
                << d.child_dev.size() << "\ttest\t" << d.child_test.size() << '\n';
    } else if (ex->parsed()) {
      ExperimentConfig ec;
      if (!g.config.empty()) ec = load_experiment_config(g.config);
      if (ex_synth && !ec.synthetic) ec.synthetic = SynthSpec{};
      if (g.seed_set) ec.seed = g.seed;
      if (!g.out.empty()) ec.out_dir = g.out;
      for (const auto& kv : ex_set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value: " + kv);
        set_experiment_option(ec, kv.substr(0, eq), kv.substr(eq + 1));
      }
      ExperimentLogger log;
      if (!ex_quiet) log = [](const std::string& l) { std::cerr << l << '\n'; };
      const ExperimentResult r = run_experiment(ec, log);
      write_result_table(std::cout, ec, r);
      for (const auto& c : r.cells)
        if (c.status == CellStatus::failed) return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "lrnmt: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
