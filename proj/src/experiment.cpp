#include "lrnmt/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "lrnmt/bleu.hpp"
#include "lrnmt/bpe.hpp"
#include "lrnmt/checkpoint.hpp"
#include "lrnmt/rng.hpp"
#include "lrnmt/translit.hpp"

namespace fs = std::filesystem;

namespace lrnmt {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T number(std::string_view key, std::string_view value) {
  std::istringstream in{std::string(value)};
  T v{};
  in >> v;
  if (!in || !(in >> std::ws).eof())
    throw std::invalid_argument("bad value for " + std::string(key) + ": '" + std::string(value) +
                                "'");
  return v;
}

bool flag(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw std::invalid_argument("bad flag for " + std::string(key) + ": '" + std::string(value) +
                              "'");
}

const char* yes_no(bool b) { return b ? "true" : "false"; }

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a(ss.str()));
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (out_dir.empty()) throw std::invalid_argument("experiment: out_dir is empty");
  if (!synthetic) {
    for (const auto* p : {&parent_src, &parent_tgt, &train_src, &train_tgt, &dev_src, &dev_tgt,
                          &test_src, &test_tgt})
      if (p->empty())
        throw std::invalid_argument("experiment: corpus paths are required without synthetic data");
  } else {
    synthetic->validate();
  }
  preprocess.validate();
  if (run_word && (parent_vocab_size < 1 || child_vocab_size < 1))
    throw std::invalid_argument("experiment: the word regime needs vocabulary sizes");
  if (run_bpe && bpe_ops < 1) throw std::invalid_argument("experiment: the bpe regime needs bpe_ops");
  if (embed < 1 || hidden < 1) throw std::invalid_argument("experiment: embed and hidden must be >= 1");
  parent_train.validate();
  child_train.validate();
  test_beam.validate();
  if (bootstrap_resamples < 1) throw std::invalid_argument("experiment: bootstrap_resamples must be >= 1");
}

namespace {

void set_synth_option(SynthSpec& s, std::string_view key, std::string_view value) {
  if (key == "seed") s.seed = number<std::uint64_t>(key, value);
  else if (key == "n_roots") s.n_roots = number<std::size_t>(key, value);
  else if (key == "n_affixes") s.n_affixes = number<std::size_t>(key, value);
  else if (key == "affix_share") s.affix_share = number<double>(key, value);
  else if (key == "mutation_rate") s.mutation_rate = number<double>(key, value);
  else if (key == "parent_sentences") s.parent_sentences = number<std::size_t>(key, value);
  else if (key == "child_sentences") s.child_sentences = number<std::size_t>(key, value);
  else if (key == "min_words") s.min_words = number<std::size_t>(key, value);
  else if (key == "max_words") s.max_words = number<std::size_t>(key, value);
  else throw std::invalid_argument("unknown synthetic option '" + std::string(key) + "'");
}

}  // namespace

void set_experiment_option(ExperimentConfig& c, std::string_view key, std::string_view value) {
  if (key.starts_with("parent.")) return set_train_option(c.parent_train, key.substr(7), value);
  if (key.starts_with("child.")) return set_train_option(c.child_train, key.substr(6), value);
  if (key.starts_with("synth.")) {
    if (!c.synthetic) c.synthetic = SynthSpec{};
    return set_synth_option(*c.synthetic, key.substr(6), value);
  }
  const std::string v(value);
  if (key == "synthetic") {
    if (flag(key, value)) {
      if (!c.synthetic) c.synthetic = SynthSpec{};
    } else {
      c.synthetic.reset();
    }
  } else if (key == "parent_src") c.parent_src = v;
  else if (key == "parent_tgt") c.parent_tgt = v;
  else if (key == "train_src") c.train_src = v;
  else if (key == "train_tgt") c.train_tgt = v;
  else if (key == "dev_src") c.dev_src = v;
  else if (key == "dev_tgt") c.dev_tgt = v;
  else if (key == "test_src") c.test_src = v;
  else if (key == "test_tgt") c.test_tgt = v;
  else if (key == "child_translit") c.child_translit = v;
  else if (key == "out_dir") c.out_dir = v;
  else if (key == "seed") c.seed = number<std::uint64_t>(key, value);
  else if (key == "max_len") c.preprocess.max_len = number<std::size_t>(key, value);
  else if (key == "rare_threshold") c.preprocess.rare_threshold = number<std::size_t>(key, value);
  else if (key == "truecase") c.preprocess.truecase = flag(key, value);
  else if (key == "lowercase_fallback") c.preprocess.lowercase_fallback = flag(key, value);
  else if (key == "run_word") c.run_word = flag(key, value);
  else if (key == "run_bpe") c.run_bpe = flag(key, value);
  else if (key == "parent_vocab_size") c.parent_vocab_size = number<std::size_t>(key, value);
  else if (key == "child_vocab_size") c.child_vocab_size = number<std::size_t>(key, value);
  else if (key == "bpe_ops") c.bpe_ops = number<std::size_t>(key, value);
  else if (key == "word_transfer") c.word_transfer = parse_transfer_mode(value);
  else if (key == "bpe_transfer") c.bpe_transfer = parse_transfer_mode(value);
  else if (key == "word_freeze") c.word_freeze = flag(key, value);
  else if (key == "bpe_freeze") c.bpe_freeze = flag(key, value);
  else if (key == "embed") c.embed = number<int>(key, value);
  else if (key == "hidden") c.hidden = number<int>(key, value);
  else if (key == "beam_size") c.test_beam.beam_size = number<std::size_t>(key, value);
  else if (key == "alpha") c.test_beam.alpha = number<double>(key, value);
  else if (key == "bootstrap_resamples") c.bootstrap_resamples = number<std::size_t>(key, value);
  else throw std::invalid_argument("unknown experiment option '" + std::string(key) + "'");
}

ExperimentConfig parse_experiment_config(std::istream& is, ExperimentConfig base) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    set_experiment_option(base, trim(std::string_view(t).substr(0, eq)),
                          trim(std::string_view(t).substr(eq + 1)));
  }
  return base;
}

ExperimentConfig load_experiment_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  return parse_experiment_config(in, std::move(base));
}

void write_experiment_config(std::ostream& os, const ExperimentConfig& c) {
  os << std::setprecision(17);
  if (c.synthetic) {
    const SynthSpec& s = *c.synthetic;
    os << "synthetic = true\n"
       << "synth.seed = " << s.seed << '\n'
       << "synth.n_roots = " << s.n_roots << '\n'
       << "synth.n_affixes = " << s.n_affixes << '\n'
       << "synth.affix_share = " << s.affix_share << '\n'
       << "synth.mutation_rate = " << s.mutation_rate << '\n'
       << "synth.parent_sentences = " << s.parent_sentences << '\n'
       << "synth.child_sentences = " << s.child_sentences << '\n'
       << "synth.min_words = " << s.min_words << '\n'
       << "synth.max_words = " << s.max_words << '\n';
  } else {
    os << "parent_src = " << c.parent_src << '\n'
       << "parent_tgt = " << c.parent_tgt << '\n'
       << "train_src = " << c.train_src << '\n'
       << "train_tgt = " << c.train_tgt << '\n'
       << "dev_src = " << c.dev_src << '\n'
       << "dev_tgt = " << c.dev_tgt << '\n'
       << "test_src = " << c.test_src << '\n'
       << "test_tgt = " << c.test_tgt << '\n';
  }
  if (!c.child_translit.empty()) os << "child_translit = " << c.child_translit << '\n';
  os << "seed = " << c.seed << '\n'
     << "max_len = " << c.preprocess.max_len << '\n'
     << "rare_threshold = " << c.preprocess.rare_threshold << '\n'
     << "truecase = " << yes_no(c.preprocess.truecase) << '\n'
     << "lowercase_fallback = " << yes_no(c.preprocess.lowercase_fallback) << '\n'
     << "run_word = " << yes_no(c.run_word) << '\n'
     << "run_bpe = " << yes_no(c.run_bpe) << '\n'
     << "parent_vocab_size = " << c.parent_vocab_size << '\n'
     << "child_vocab_size = " << c.child_vocab_size << '\n'
     << "bpe_ops = " << c.bpe_ops << '\n'
     << "word_transfer = " << to_string(c.word_transfer) << '\n'
     << "bpe_transfer = " << to_string(c.bpe_transfer) << '\n'
     << "word_freeze = " << yes_no(c.word_freeze) << '\n'
     << "bpe_freeze = " << yes_no(c.bpe_freeze) << '\n'
     << "embed = " << c.embed << '\n'
     << "hidden = " << c.hidden << '\n'
     << "beam_size = " << c.test_beam.beam_size << '\n'
     << "alpha = " << c.test_beam.alpha << '\n'
     << "bootstrap_resamples = " << c.bootstrap_resamples << '\n';
  auto train_block = [&os](const std::string& prefix, const TrainConfig& t) {
    std::ostringstream ss;
    write_train_config(ss, t);
    std::istringstream lines(ss.str());
    for (std::string l; std::getline(lines, l);) os << prefix << l << '\n';
  };
  train_block("parent.", c.parent_train);
  train_block("child.", c.child_train);
}

std::string significance_mark(double delta_bleu, double p_value) {
  if (!(delta_bleu > 0.0)) return "";
  if (p_value < 0.01) return "‡";
  if (p_value < 0.05) return "†";
  return "*";
}

const CellResult* ExperimentResult::find(std::string_view regime, std::string_view setting) const {
  for (const auto& c : cells)
    if (c.regime == regime && c.setting == setting) return &c;
  return nullptr;
}

namespace {

constexpr const char* kSettings[] = {"baseline", "transfer", "transfer+freeze"};

// Stage bookkeeping: inputs, outputs and a hash of each stage's settings.
class Manifest {
 public:
  explicit Manifest(fs::path root) : root_(std::move(root)) {}

  void stage(const std::string& name, const std::string& settings,
             const std::vector<std::string>& inputs, const std::vector<std::string>& outputs) {
    std::ostringstream row;
    row << name << "\tconfig=" << hex64(fnv1a(settings)) << "\tin=";
    list(row, inputs);
    row << "\tout=";
    list(row, outputs);
    rows_.push_back(row.str());
  }

  void write() const {
    std::ofstream out(root_ / "manifest.tsv");
    out << "stage\tconfig\tinputs\toutputs\n";
    for (const auto& r : rows_) out << r << '\n';
    if (!out) throw std::runtime_error("cannot write manifest");
  }

 private:
  // Files inside the run directory are listed relative to it, so the
  // manifest does not depend on where the run was placed.
  std::string shown(const fs::path& p) const {
    const fs::path rel = p.lexically_normal().lexically_relative(root_.lexically_normal());
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
    return p.generic_string();
  }

  void list(std::ostream& os, const std::vector<std::string>& files) const {
    for (std::size_t i = 0; i < files.size(); ++i) {
      if (i) os << ',';
      const fs::path p = fs::path(files[i]).is_absolute() ? fs::path(files[i]) : root_ / files[i];
      os << shown(p) << ':' << file_hash(p);
    }
  }

  fs::path root_;
  std::vector<std::string> rows_;
};

struct Prepared {
  ParallelCorpus parent, train, dev, test;
  std::vector<std::string> test_refs;  // raw test targets aligned with `test`
};

// Everything one regime (word or bpe) trains and decodes with.
struct Regime {
  std::string name;
  bool subword = false;
  std::string size_label;
  TransferMode mode = TransferMode::none;
  bool freeze = false;
  Vocabulary parent_src, parent_tgt, child_src, child_tgt;
  std::vector<IdPair> parent_data, child_data;
  std::vector<IdPair> dev_child, dev_parent;  // dev pairs in each model's vocabularies
  DevSet dev;
  std::vector<std::vector<int>> test_sources;
  int parent_epochs = 1, child_epochs = 1;
};

std::vector<IdPair> encode_pairs(const Sentences& src, const Sentences& tgt, const Vocabulary& sv,
                                 const Vocabulary& tv) {
  std::vector<IdPair> out;
  out.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out.push_back({sv.encode(src[i]), tv.encode(tgt[i])});
  return out;
}

std::vector<std::string> joined(const Sentences& s) {
  std::vector<std::string> out;
  out.reserve(s.size());
  for (const auto& t : s) out.push_back(text::join(t));
  return out;
}

class Runner {
 public:
  Runner(const ExperimentConfig& config, const ExperimentLogger& log)
      : cfg_(config), user_log_(log), root_(config.out_dir), manifest_(root_) {}

  ExperimentResult run() {
    fs::create_directories(root_);
    log_file_.open(root_ / "log.txt");
    {
      std::ofstream out(root_ / "config.txt");
      write_experiment_config(out, cfg_);
    }
    const Prepared data = prepare();
    ExperimentResult result;
    if (cfg_.run_word) run_regime(word_regime(data, result), data, result);
    else add_off("word", result);
    if (cfg_.run_bpe) run_regime(bpe_regime(data, result), data, result);
    else add_off("bpe", result);
    write_outputs(result);
    return result;
  }

 private:
  void log(const std::string& line) {
    if (log_file_) log_file_ << line << std::endl;
    if (user_log_) user_log_(line);
  }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  std::string path(const std::string& rel) const { return (root_ / rel).string(); }

  Prepared prepare() {
    fs::create_directories(root_ / "data");
    std::string ps = cfg_.parent_src, pt = cfg_.parent_tgt, ts = cfg_.train_src,
                tt = cfg_.train_tgt, ds = cfg_.dev_src, dt = cfg_.dev_tgt, xs = cfg_.test_src,
                xt = cfg_.test_tgt;
    if (cfg_.synthetic) {
      const SynthData synth = gen_synthetic(*cfg_.synthetic);
      write_synthetic(synth, path("raw"));
      ps = path("raw/parent.src"), pt = path("raw/parent.tgt");
      ts = path("raw/train.src"), tt = path("raw/train.tgt");
      ds = path("raw/dev.src"), dt = path("raw/dev.tgt");
      xs = path("raw/test.src"), xt = path("raw/test.tgt");
      ExperimentConfig placed = cfg_;
      placed.out_dir.clear();
      std::ostringstream settings;
      write_experiment_config(settings, placed);
      manifest_.stage("generate", settings.str(), {},
                      {"raw/parent.src", "raw/parent.tgt", "raw/train.src", "raw/train.tgt",
                       "raw/dev.src", "raw/dev.tgt", "raw/test.src", "raw/test.tgt"});
    }
    if (!cfg_.child_translit.empty()) {
      const TranslitTable table = TranslitTable::load(cfg_.child_translit);
      auto convert = [&](std::string& src, const std::string& name) {
        std::vector<std::string> lines = read_lines(src);
        for (auto& l : lines) l = table.transliterate(l);
        const std::string rel = "data/" + name + ".translit.src";
        write_lines(path(rel), lines);
        manifest_.stage("translit." + name, cfg_.child_translit, {src, cfg_.child_translit}, {rel});
        src = path(rel);
      };
      convert(ts, "train");
      convert(ds, "dev");
      convert(xs, "test");
    }

    auto load = [this](const std::string& s, const std::string& t, const std::string& name) {
      LoadedCorpus lc = read_parallel(s, t, name + ".src", name + ".tgt");
      if (lc.dropped_empty)
        log("preprocess: " + name + ": dropped " + std::to_string(lc.dropped_empty) +
            " pairs with an empty side");
      if (lc.corpus.empty()) throw std::runtime_error("preprocess: " + name + " corpus is empty");
      return lc.corpus;
    };
    Prepared p;
    p.parent = filter_by_length(load(ps, pt, "parent"), cfg_.preprocess.max_len);
    p.train = filter_by_length(load(ts, tt, "train"), cfg_.preprocess.max_len);
    p.dev = load(ds, dt, "dev");
    p.test = load(xs, xt, "test");
    const std::vector<std::string> raw_test = read_lines(xt);
    for (const auto& pair : p.test.pairs()) p.test_refs.push_back(raw_test[pair.origin_line - 1]);

    std::vector<std::string> outputs;
    if (cfg_.preprocess.truecase) {
      std::vector<SentencePair> both = p.parent.pairs();
      both.insert(both.end(), p.train.pairs().begin(), p.train.pairs().end());
      const CaseModel model = truecase_fit(ParallelCorpus("all", "all", std::move(both)));
      model.save(path("data/case.model"));
      outputs.push_back("data/case.model");
      const bool fb = cfg_.preprocess.lowercase_fallback;
      p.parent = truecase_corpus(p.parent, model, fb);
      p.train = truecase_corpus(p.train, model, fb);
      p.dev = truecase_corpus(p.dev, model, fb);
      p.test = truecase_corpus(p.test, model, fb);
    }
    for (auto [c, name] : {std::pair{&p.parent, "parent"}, {&p.train, "train"}, {&p.dev, "dev"},
                           {&p.test, "test"}}) {
      write_side(path(std::string("data/") + name + ".tok.src"), c->source_side());
      write_side(path(std::string("data/") + name + ".tok.tgt"), c->target_side());
      outputs.push_back(std::string("data/") + name + ".tok.src");
      outputs.push_back(std::string("data/") + name + ".tok.tgt");
    }
    std::ostringstream settings;
    settings << cfg_.preprocess.max_len << ' ' << cfg_.preprocess.truecase << ' '
             << cfg_.preprocess.lowercase_fallback;
    manifest_.stage("preprocess", settings.str(), {ps, pt, ts, tt, ds, dt, xs, xt}, outputs);
    log("preprocess: parent " + std::to_string(p.parent.size()) + ", train " +
        std::to_string(p.train.size()) + ", dev " + std::to_string(p.dev.size()) + ", test " +
        std::to_string(p.test.size()) + " pairs");
    return p;
  }

  void fill_eval_sets(Regime& r, const Sentences& dev_src, const Sentences& dev_tgt,
                      const Sentences& test_src, const Prepared& data) {
    r.dev_child = encode_pairs(dev_src, dev_tgt, r.child_src, r.child_tgt);
    r.dev_parent = encode_pairs(dev_src, dev_tgt, r.parent_src, r.parent_tgt);
    for (const auto& p : r.dev_child) r.dev.sources.push_back(p.source);
    r.dev.references = joined(data.dev.target_side());
    for (const auto& s : test_src) r.test_sources.push_back(r.child_src.encode(s));
  }

  std::optional<Regime> word_regime(const Prepared& data, ExperimentResult& result) {
    try {
      fs::create_directories(root_ / "word");
      Regime r;
      r.name = "word";
      r.size_label = std::to_string(cfg_.parent_vocab_size) + "/" + std::to_string(cfg_.child_vocab_size);
      r.mode = cfg_.word_transfer;
      r.freeze = cfg_.word_freeze;
      const Sentences ps = data.parent.source_side(), pt = data.parent.target_side();
      const Sentences cs = data.train.source_side(), ct = data.train.target_side();
      r.parent_src = build_vocab(std::span(&ps, 1), VocabMode::word, cfg_.parent_vocab_size);
      r.parent_tgt = build_vocab(std::span(&pt, 1), VocabMode::word, cfg_.parent_vocab_size);
      r.child_src = build_vocab(std::span(&cs, 1), VocabMode::word, cfg_.child_vocab_size);
      r.child_tgt = build_vocab(std::span(&ct, 1), VocabMode::word, cfg_.child_vocab_size);
      r.parent_src.save(path("word/parent.vocab.src"));
      r.parent_tgt.save(path("word/parent.vocab.tgt"));
      r.child_src.save(path("word/child.vocab.src"));
      r.child_tgt.save(path("word/child.vocab.tgt"));
      manifest_.stage("word.vocab", r.size_label,
                      {"data/parent.tok.src", "data/parent.tok.tgt", "data/train.tok.src",
                       "data/train.tok.tgt"},
                      {"word/parent.vocab.src", "word/parent.vocab.tgt", "word/child.vocab.src",
                       "word/child.vocab.tgt"});

      std::set<std::string> parent_types;
      for (std::size_t i = kNumReserved; i < r.parent_src.size(); ++i)
        parent_types.insert(r.parent_src.tokens()[i]);
      result.word_overlap = overlap_report(r.child_src, parent_types);

      const ParallelCorpus parent = replace_oov(data.parent, r.parent_src, r.parent_tgt);
      const ParallelCorpus child = replace_oov(data.train, r.child_src, r.child_tgt);
      write_side(path("word/parent.src"), parent.source_side());
      write_side(path("word/parent.tgt"), parent.target_side());
      write_side(path("word/train.src"), child.source_side());
      write_side(path("word/train.tgt"), child.target_side());
      manifest_.stage("word.unk", r.size_label,
                      {"data/parent.tok.src", "data/parent.tok.tgt", "data/train.tok.src",
                       "data/train.tok.tgt", "word/parent.vocab.src", "word/parent.vocab.tgt",
                       "word/child.vocab.src", "word/child.vocab.tgt"},
                      {"word/parent.src", "word/parent.tgt", "word/train.src", "word/train.tgt"});
      r.parent_data = encode_pairs(parent.source_side(), parent.target_side(), r.parent_src, r.parent_tgt);
      r.child_data = encode_pairs(child.source_side(), child.target_side(), r.child_src, r.child_tgt);
      fill_eval_sets(r, data.dev.source_side(), data.dev.target_side(), data.test.source_side(), data);
      r.parent_epochs = epoch_budget(false, cfg_.parent_train.epochs);
      r.child_epochs = epoch_budget(false, cfg_.child_train.epochs);
      return r;
    } catch (const std::exception& e) {
      fail_regime("word", e.what(), result);
      return std::nullopt;
    }
  }

  std::optional<Regime> bpe_regime(const Prepared& data, ExperimentResult& result) {
    try {
      fs::create_directories(root_ / "bpe");
      Regime r;
      r.name = "bpe";
      r.subword = true;
      r.size_label = std::to_string(cfg_.bpe_ops);
      r.mode = cfg_.bpe_transfer;
      r.freeze = cfg_.bpe_freeze;
      const std::vector<Sentences> sides = {data.parent.source_side(), data.parent.target_side(),
                                            data.train.source_side(), data.train.target_side()};
      const BpeModel model = bpe_learn(sides, cfg_.bpe_ops);
      model.save(path("bpe/merges.txt"));
      const std::vector<std::string> tok_inputs = {"data/parent.tok.src", "data/parent.tok.tgt",
                                                   "data/train.tok.src", "data/train.tok.tgt"};
      manifest_.stage("bpe.learn", r.size_label, tok_inputs, {"bpe/merges.txt"});

      BpeSegmenter seg(model);
      auto segment = [&seg](const ParallelCorpus& c) {
        std::vector<SentencePair> pairs;
        for (const auto& p : c.pairs())
          pairs.push_back({seg.sentence(p.source), seg.sentence(p.target), p.origin_line});
        return c.with_pairs(std::move(pairs));
      };
      const ParallelCorpus parent = segment(data.parent), child = segment(data.train),
                           dev = segment(data.dev);
      const Sentences test_src = seg.corpus(data.test.source_side());
      std::vector<std::string> seg_out;
      for (auto [c, name] : {std::pair{&parent, "parent"}, {&child, "train"}, {&dev, "dev"}}) {
        write_side(path(std::string("bpe/") + name + ".seg.src"), c->source_side());
        write_side(path(std::string("bpe/") + name + ".seg.tgt"), c->target_side());
        seg_out.push_back(std::string("bpe/") + name + ".seg.src");
        seg_out.push_back(std::string("bpe/") + name + ".seg.tgt");
      }
      write_side(path("bpe/test.seg.src"), test_src);
      seg_out.push_back("bpe/test.seg.src");
      std::vector<std::string> seg_in = tok_inputs;
      seg_in.insert(seg_in.end(), {"data/dev.tok.src", "data/dev.tok.tgt", "data/test.tok.src",
                                   "bpe/merges.txt"});
      manifest_.stage("bpe.segment", r.size_label, seg_in, seg_out);

      const std::vector<Sentences> seg_sides = {parent.source_side(), parent.target_side(),
                                                child.source_side(), child.target_side()};
      const Vocabulary vocab = build_vocab(seg_sides, VocabMode::subword);
      vocab.save(path("bpe/vocab.txt"));
      manifest_.stage("bpe.vocab", "joint",
                      {"bpe/parent.seg.src", "bpe/parent.seg.tgt", "bpe/train.seg.src",
                       "bpe/train.seg.tgt"},
                      {"bpe/vocab.txt"});
      r.parent_src = r.parent_tgt = r.child_src = r.child_tgt = vocab;

      const Sentences child_src_side = child.source_side();
      result.bpe_overlap = overlap_report(
          build_vocab(std::span(&child_src_side, 1), VocabMode::subword),
          types_of(parent.source_side()));

      const ParallelCorpus parent_aug = unk_augment(parent, cfg_.preprocess.rare_threshold);
      const ParallelCorpus child_aug = unk_augment(child, cfg_.preprocess.rare_threshold);
      write_side(path("bpe/parent.aug.src"), parent_aug.source_side());
      write_side(path("bpe/parent.aug.tgt"), parent_aug.target_side());
      write_side(path("bpe/train.aug.src"), child_aug.source_side());
      write_side(path("bpe/train.aug.tgt"), child_aug.target_side());
      manifest_.stage("bpe.unk_augment", std::to_string(cfg_.preprocess.rare_threshold),
                      {"bpe/parent.seg.src", "bpe/parent.seg.tgt", "bpe/train.seg.src",
                       "bpe/train.seg.tgt"},
                      {"bpe/parent.aug.src", "bpe/parent.aug.tgt", "bpe/train.aug.src",
                       "bpe/train.aug.tgt"});
      r.parent_data = encode_pairs(parent_aug.source_side(), parent_aug.target_side(), vocab, vocab);
      r.child_data = encode_pairs(child_aug.source_side(), child_aug.target_side(), vocab, vocab);
      // Dev references stay at word level; hypotheses are rejoined first.
      fill_eval_sets(r, dev.source_side(), dev.target_side(), test_src, data);
      r.parent_epochs = epoch_budget(true, cfg_.parent_train.epochs);
      r.child_epochs = epoch_budget(true, cfg_.child_train.epochs);
      return r;
    } catch (const std::exception& e) {
      fail_regime("bpe", e.what(), result);
      return std::nullopt;
    }
  }

  void fail_regime(const std::string& regime, const std::string& what, ExperimentResult& result) {
    log(regime + ": data preparation failed: " + what);
    for (const char* s : kSettings) {
      CellResult c;
      c.regime = regime;
      c.setting = s;
      c.status = CellStatus::failed;
      c.error = "data preparation failed: " + what;
      result.cells.push_back(std::move(c));
    }
  }

  void add_off(const std::string& regime, ExperimentResult& result) {
    for (const char* s : kSettings) {
      CellResult c;
      c.regime = regime;
      c.setting = s;
      c.status = CellStatus::off;
      result.cells.push_back(std::move(c));
    }
  }

  ModelConfig model_config(const Vocabulary& src, const Vocabulary& tgt) const {
    ModelConfig m;
    m.src_vocab = static_cast<int>(src.size());
    m.tgt_vocab = static_cast<int>(tgt.size());
    m.embed = cfg_.embed;
    m.hidden = cfg_.hidden;
    return m;
  }

  std::uint64_t seed_for(const Regime& r, std::uint64_t what) const {
    return derive_seed(cfg_.seed, (r.subword ? 200 : 100) + what);
  }

  void write_report(const std::string& rel, const TrainReport& report) {
    std::ofstream out(path(rel));
    report.write_rows(out);
  }

  // Decodes the test set and scores it; returns the hypothesis lines.
  std::vector<std::string> decode_test(const Regime& r, const Seq2SeqParams& params,
                                       const std::string& cell, const Prepared& data,
                                       CellResult& out) {
    std::vector<std::string> hyps;
    hyps.reserve(r.test_sources.size());
    PostprocessOptions post;
    post.subword = false;  // translate() already rejoined
    post.recase = cfg_.preprocess.truecase;
    std::size_t repaired = 0;
    for (const auto& src : r.test_sources) {
      if (src.empty()) {
        hyps.emplace_back();
        continue;
      }
      const Translation t = translate(params, src, r.child_tgt, cfg_.test_beam, r.subword);
      repaired += t.repaired;
      hyps.push_back(postprocess(t.tokens, post));
    }
    if (repaired)
      log(r.name + "." + cell + ": dropped a dangling continuation marker in " +
          std::to_string(repaired) + " test hypotheses");
    const std::string rel = r.name + "/" + cell + ".test.hyp";
    write_lines(path(rel), hyps);
    manifest_.stage(r.name + "." + cell + ".decode",
                    std::to_string(cfg_.test_beam.beam_size) + " " + fixed(cfg_.test_beam.alpha, 6),
                    {r.name + "/" + cell + ".ckpt", r.subword ? "bpe/test.seg.src" : "data/test.tok.src"},
                    {rel});
    out.test_bleu = bleu(hyps, data.test_refs, BleuConfig{true, true});
    return hyps;
  }

  void save_model(const Regime& r, const Seq2SeqParams& params, const std::string& rel) {
    save_checkpoint(path(rel), Checkpoint{params, r.child_src.hash(), r.child_tgt.hash()});
  }

  void run_regime(std::optional<Regime> maybe, const Prepared& data, ExperimentResult& result) {
    if (!maybe) return;
    Regime& r = *maybe;
    const ModelConfig parent_cfg = model_config(r.parent_src, r.parent_tgt);
    const ModelConfig child_cfg = model_config(r.child_src, r.child_tgt);
    const std::string data_dir = r.subword ? "bpe/" : "word/";
    const std::string parent_in = r.subword ? "bpe/parent.aug" : "word/parent";
    const std::string child_in = r.subword ? "bpe/train.aug" : "word/train";
    const std::string dev_in = r.subword ? "bpe/dev.seg.src" : "data/dev.tok.src";

    BeamConfig dev_beam = cfg_.test_beam;
    dev_beam.beam_size = cfg_.child_train.dev_beam;
    dev_beam.alpha = cfg_.child_train.alpha;
    const DevScorer scorer = make_bleu_scorer(r.dev, r.child_tgt, r.subword, dev_beam);

    auto logger = [this](std::string prefix) {
      return TrainLogger([this, prefix](const std::string& l) { log(prefix + ": " + l); });
    };
    auto train_settings = [](const TrainConfig& t, const ModelConfig& m) {
      std::ostringstream ss;
      write_train_config(ss, t);
      ss << m.src_vocab << ' ' << m.tgt_vocab << ' ' << m.embed << ' ' << m.hidden;
      return ss.str();
    };

    // Parent: full budget, final parameters (no parent dev set).
    std::optional<Seq2SeqParams> parent;
    std::string parent_error;
    const bool need_parent = r.mode != TransferMode::none;
    if (need_parent) {
      try {
        TrainConfig tc = cfg_.parent_train;
        tc.epochs = r.parent_epochs;
        tc.seed = seed_for(r, 1);
        tc.freeze_target_embeddings = false;
        const double t0 = elapsed();
        TrainResult tr = train(init_params(parent_cfg, seed_for(r, 2)), r.parent_data, tc, {}, {},
                               logger(r.name + ".parent"));
        save_checkpoint(path(data_dir + "parent.ckpt"),
                        Checkpoint{tr.params, r.parent_src.hash(), r.parent_tgt.hash()});
        write_report(data_dir + "parent.train.tsv", tr.report);
        manifest_.stage(r.name + ".parent", train_settings(tc, parent_cfg),
                        {parent_in + ".src", parent_in + ".tgt"},
                        {data_dir + "parent.ckpt", data_dir + "parent.train.tsv"});
        log(r.name + ".parent: done in " + fixed(elapsed() - t0, 1) + " s");
        parent = std::move(tr.params);
      } catch (const std::exception& e) {
        parent_error = e.what();
        log(r.name + ".parent: failed: " + parent_error);
      }
    }

    std::vector<std::string> baseline_hyps;
    for (int k = 0; k < 3; ++k) {
      CellResult cell;
      cell.regime = r.name;
      cell.setting = kSettings[k];
      const bool freeze = k == 2;
      if (k > 0 && (r.mode == TransferMode::none || (freeze && !r.freeze))) {
        cell.status = CellStatus::off;
        result.cells.push_back(std::move(cell));
        continue;
      }
      const std::string tag = k == 0 ? "baseline" : (freeze ? "transfer_freeze" : "transfer");
      try {
        const double t0 = elapsed();
        Seq2SeqParams init;
        FreezeMask frozen;
        if (k == 0) {
          init = init_params(child_cfg, seed_for(r, 3));
        } else {
          if (!parent) throw std::runtime_error("parent model unavailable: " + parent_error);
          TransferSpec spec{r.mode, freeze, seed_for(r, 3)};
          const VocabAlignment sa = align(r.mode, r.parent_src, r.child_src);
          const VocabAlignment ta = align(r.mode, r.parent_tgt, r.child_tgt);
          TransferResult t = transfer_params(*parent, sa, ta, spec, child_cfg);
          log(r.name + "." + tag + ": source rows mapped " + std::to_string(sa.mapped()) +
              ", fresh " + std::to_string(sa.fresh()) + "; target rows mapped " +
              std::to_string(ta.mapped()) + ", fresh " + std::to_string(ta.fresh()));
          cell.parent_dev_loss = corpus_loss(*parent, r.dev_parent);
          cell.initial_dev_loss = corpus_loss(t.params, r.dev_child);
          init = std::move(t.params);
          frozen = std::move(t.frozen);
        }
        TrainConfig tc = cfg_.child_train;
        tc.epochs = r.child_epochs;
        tc.seed = seed_for(r, 4);
        tc.freeze_target_embeddings = freeze;
        TrainResult tr = train(init, r.child_data, tc, scorer, frozen, logger(r.name + "." + tag));
        cell.best_epoch = tr.report.best_epoch;
        save_model(r, tr.params, data_dir + tag + ".ckpt");
        write_report(data_dir + tag + ".train.tsv", tr.report);
        std::vector<std::string> inputs = {child_in + ".src", child_in + ".tgt", dev_in};
        if (k > 0) inputs.push_back(data_dir + "parent.ckpt");
        manifest_.stage(r.name + "." + tag, train_settings(tc, child_cfg), inputs,
                        {data_dir + tag + ".ckpt", data_dir + tag + ".train.tsv"});
        std::vector<std::string> hyps = decode_test(r, tr.params, tag, data, cell);
        cell.status = CellStatus::ok;
        log(r.name + "." + tag + ": test BLEU " + fixed(cell.test_bleu, 2) + " (best epoch " +
            std::to_string(cell.best_epoch) + ", " + fixed(elapsed() - t0, 1) + " s)");
        if (k == 0) {
          baseline_hyps = std::move(hyps);
        } else if (!baseline_hyps.empty()) {
          const SignificanceResult s =
              paired_bootstrap(baseline_hyps, hyps, data.test_refs, cfg_.bootstrap_resamples,
                               derive_seed(cfg_.seed, 999), BleuConfig{true, true});
          cell.delta_bleu = s.delta_bleu;
          cell.p_value = s.p_value;
          cell.mark = significance_mark(s.delta_bleu, s.p_value);
        }
      } catch (const std::exception& e) {
        cell.status = CellStatus::failed;
        cell.error = e.what();
        log(r.name + "." + tag + ": failed: " + cell.error);
      }
      result.cells.push_back(std::move(cell));
    }
  }

  void write_outputs(const ExperimentResult& result) {
    {
      std::ofstream out(root_ / "results.tsv");
      write_result_rows(out, result);
    }
    {
      std::ofstream out(root_ / "table.txt");
      write_result_table(out, cfg_, result);
    }
    {
      std::ofstream out(root_ / "overlap.tsv");
      std::vector<std::pair<std::string, OverlapReport>> rows;
      if (result.word_overlap) rows.emplace_back("word", *result.word_overlap);
      if (result.bpe_overlap) rows.emplace_back("bpe", *result.bpe_overlap);
      write_overlap_table(out, rows);
    }
    manifest_.stage("report", "results", {}, {"results.tsv", "table.txt", "overlap.tsv"});
    manifest_.write();
    log("experiment finished in " + fixed(elapsed(), 1) + " s");
  }

  const ExperimentConfig& cfg_;
  const ExperimentLogger& user_log_;
  fs::path root_;
  Manifest manifest_;
  std::ofstream log_file_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string pad(const std::string& s, std::size_t width) {
  const std::size_t n = text::length(s);
  return n >= width ? s + " " : s + std::string(width - n, ' ');
}

std::string cell_text(const CellResult* c) {
  if (!c || c->status == CellStatus::off) return "—";
  if (c->status == CellStatus::failed) return "error";
  return fixed(c->test_bleu, 2) + c->mark;
}

std::string opt(const std::optional<double>& v, int digits) {
  return v ? fixed(*v, digits) : "-";
}

const char* status_name(CellStatus s) {
  switch (s) {
    case CellStatus::ok: return "ok";
    case CellStatus::off: return "off";
    case CellStatus::failed: return "failed";
  }
  return "?";
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentLogger& log) {
  config.validate();
  return Runner(config, log).run();
}

void write_result_rows(std::ostream& os, const ExperimentResult& result) {
  os << "regime\tsetting\tstatus\ttest_bleu\tdelta_bleu\tp_value\tmark\tbest_epoch\t"
        "parent_dev_loss\tinitial_dev_loss\tnote\n";
  for (const auto& c : result.cells) {
    const bool ok = c.status == CellStatus::ok;
    std::string note = c.error;
    for (char& ch : note)
      if (ch == '\t' || ch == '\n') ch = ' ';
    os << c.regime << '\t' << c.setting << '\t' << status_name(c.status) << '\t'
       << (ok ? fixed(c.test_bleu, 4) : "-") << '\t' << opt(c.delta_bleu, 4) << '\t'
       << opt(c.p_value, 4) << '\t' << (c.mark.empty() ? "-" : c.mark) << '\t'
       << (ok ? std::to_string(c.best_epoch) : "-") << '\t' << opt(c.parent_dev_loss, 10) << '\t'
       << opt(c.initial_dev_loss, 10) << '\t' << (note.empty() ? "-" : note) << '\n';
  }
}

void write_result_table(std::ostream& os, const ExperimentConfig& config,
                        const ExperimentResult& result) {
  const std::string word_head = "word (" + std::to_string(config.parent_vocab_size) + "/" +
                                std::to_string(config.child_vocab_size) + ")";
  const std::string bpe_head = "bpe (" + std::to_string(config.bpe_ops) + ")";
  constexpr std::size_t w0 = 18, w1 = 22;
  os << pad("setting", w0) << pad(word_head, w1) << bpe_head << '\n';
  for (const char* s : kSettings)
    os << pad(s, w0) << pad(cell_text(result.find("word", s)), w1)
       << cell_text(result.find("bpe", s)) << '\n';
  os << "\nCase-sensitive test BLEU. ‡ p < 0.01, † p < 0.05, * insignificant gain"
        " (paired bootstrap against the baseline of the same column).\n";
  auto overlap = [&os](const char* name, const std::optional<OverlapReport>& r) {
    if (!r) return;
    os << "Child source types found in parent (" << name << "): " << r->child_types_in_parent
       << "/" << r->child_types_total << " = " << fixed(r->percentage, 1) << "%\n";
  };
  overlap("word", result.word_overlap);
  overlap("bpe", result.bpe_overlap);
}

}  // namespace lrnmt
