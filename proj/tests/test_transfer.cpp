#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "lrnmt/rng.hpp"
#include "lrnmt/train.hpp"
#include "lrnmt/transfer.hpp"

using namespace lrnmt;

namespace {

Vocabulary vocab_of(std::initializer_list<const char*> tokens, VocabMode mode = VocabMode::word) {
  Vocabulary v(mode);
  for (const char* t : tokens) v.add(t);
  return v;
}

ModelConfig config_for(const Vocabulary& s, const Vocabulary& t) {
  ModelConfig c;
  c.src_vocab = static_cast<int>(s.size());
  c.tgt_vocab = static_cast<int>(t.size());
  c.embed = 4;
  c.hidden = 5;
  return c;
}

bool rows_equal(const Matrix& a, int ra, const Matrix& b, int rb) {
  return bitwise_equal(Matrix(a.row(ra)), Matrix(b.row(rb)));
}

}  // namespace

TEST(AlignPositional, Examples) {
  const Vocabulary p = vocab_of({"a", "b"});
  EXPECT_EQ(align_positional(p, vocab_of({"x", "y"})).parent_of, (std::vector<int>{0, 1, 2, 3, 4, 5}));
  const VocabAlignment bigger = align_positional(p, vocab_of({"x", "y", "z", "w"}));
  EXPECT_EQ(bigger.parent_of, (std::vector<int>{0, 1, 2, 3, 4, 5, kFresh, kFresh}));
  EXPECT_EQ(bigger.fresh(), 2u);
  EXPECT_EQ(bigger.mapped(), 6u);
}

TEST(AlignPositional, InvariantToChildSurfaceForms) {
  Rng rng(1);
  const Vocabulary p = vocab_of({"a", "b", "c", "d", "e"});
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> forms = {"p", "q", "r", "s", "t", "u", "v"};
    rng.shuffle(forms);
    Vocabulary c;
    for (std::size_t i = 0; i < 3 + rng.below(4); ++i) c.add(forms[i]);
    Vocabulary c2;
    std::vector<std::string> other(forms.rbegin(), forms.rend());
    for (std::size_t i = kNumReserved; i < c.size(); ++i) c2.add(other[i - kNumReserved] + "_");
    EXPECT_EQ(align_positional(p, c).parent_of, align_positional(p, c2).parent_of);
  }
}

TEST(AlignSharedSurface, Examples) {
  const Vocabulary v = vocab_of({"a", "b", "c"});
  EXPECT_EQ(align_shared_surface(v, v).fresh(), 0u);

  const VocabAlignment disjoint = align_shared_surface(vocab_of({"a", "b"}), vocab_of({"x", "y"}));
  EXPECT_EQ(disjoint.mapped(), static_cast<std::size_t>(kNumReserved));

  const Vocabulary parent = vocab_of({"b", "c", "d"});
  const Vocabulary child = vocab_of({"a", "b", "c"});
  const VocabAlignment al = align_shared_surface(parent, child);
  EXPECT_EQ(al.parent_of[*child.find("a")], kFresh);
  EXPECT_EQ(al.parent_of[*child.find("b")], *parent.find("b"));
  EXPECT_EQ(al.parent_of[*child.find("c")], *parent.find("c"));
}

TEST(AlignSharedSurface, MatchesSetIntersection) {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    Vocabulary p, c;
    for (int i = 0; i < 30; ++i) {
      if (rng.bernoulli(0.5)) p.add("t" + std::to_string(i));
      if (rng.bernoulli(0.5)) c.add("t" + std::to_string(i));
    }
    const VocabAlignment al = align_shared_surface(p, c);
    ASSERT_EQ(al.size(), c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      const std::string& tok = c.tokens()[i];
      const auto it = std::find(p.tokens().begin(), p.tokens().end(), tok);
      const int expect = it == p.tokens().end() ? kFresh : static_cast<int>(it - p.tokens().begin());
      EXPECT_EQ(al.parent_of[i], expect);
    }
  }
}

TEST(TransferMode, ParseAndPrint) {
  EXPECT_EQ(parse_transfer_mode("none"), TransferMode::none);
  EXPECT_EQ(parse_transfer_mode("positional"), TransferMode::positional);
  EXPECT_EQ(parse_transfer_mode("shared_surface"), TransferMode::shared_surface);
  EXPECT_EQ(parse_transfer_mode("shared-surface"), TransferMode::shared_surface);
  EXPECT_EQ(to_string(TransferMode::positional), "positional");
  EXPECT_THROW(parse_transfer_mode("magic"), std::invalid_argument);
}

TEST(TransferParams, IdenticalVocabsGiveBitwiseCopy) {
  const Vocabulary v = vocab_of({"a", "b", "c"}, VocabMode::subword);
  const ModelConfig cfg = config_for(v, v);
  const Seq2SeqParams parent = init_params(cfg, 3);
  const VocabAlignment al = align_shared_surface(v, v);
  TransferSpec spec;
  spec.fresh_init_seed = 99;
  const TransferResult r = transfer_params(parent, al, al, spec, cfg);
  EXPECT_TRUE(bitwise_equal(r.params, parent));
  EXPECT_TRUE(r.frozen.empty());
}

TEST(TransferParams, NoneIsFreshInitWithEmptyMask) {
  const Vocabulary v = vocab_of({"a", "b"});
  const ModelConfig cfg = config_for(v, v);
  const Seq2SeqParams parent = init_params(cfg, 3);
  TransferSpec spec{TransferMode::none, true, 17};
  const VocabAlignment al = align(TransferMode::none, v, v);
  EXPECT_EQ(al.mapped(), 0u);
  const TransferResult r = transfer_params(parent, al, al, spec, cfg);
  EXPECT_TRUE(bitwise_equal(r.params, init_params(cfg, 17)));
  EXPECT_TRUE(r.frozen.empty());
}

TEST(TransferParams, PartialOverlapRowByRow) {
  const Vocabulary ps = vocab_of({"b", "c", "d"}), pt = vocab_of({"x", "y"});
  const Vocabulary cs = vocab_of({"a", "b", "c", "e"}), ct = vocab_of({"y", "z"});
  const Seq2SeqParams parent = init_params(config_for(ps, pt), 5);
  const ModelConfig child_cfg = config_for(cs, ct);
  const VocabAlignment sa = align_shared_surface(ps, cs), ta = align_shared_surface(pt, ct);
  TransferSpec spec{TransferMode::shared_surface, true, 23};
  const TransferResult r = transfer_params(parent, sa, ta, spec, child_cfg);
  const Seq2SeqParams fresh = init_params(child_cfg, 23);

  for (std::size_t i = 0; i < cs.size(); ++i) {
    const int src = sa.parent_of[i];
    const int row = static_cast<int>(i);
    EXPECT_TRUE(src == kFresh ? rows_equal(r.params.src_embed, row, fresh.src_embed, row)
                              : rows_equal(r.params.src_embed, row, parent.src_embed, src));
  }
  for (std::size_t i = 0; i < ct.size(); ++i) {
    const int src = ta.parent_of[i];
    const int row = static_cast<int>(i);
    for (auto m : {&Seq2SeqParams::tgt_embed, &Seq2SeqParams::out_proj, &Seq2SeqParams::out_bias}) {
      EXPECT_TRUE(src == kFresh ? rows_equal(r.params.*m, row, fresh.*m, row)
                                : rows_equal(r.params.*m, row, parent.*m, src));
    }
  }
  for (int l = 0; l < kNumLayers; ++l) {
    EXPECT_TRUE(bitwise_equal(r.params.encoder[l].weight, parent.encoder[l].weight));
    EXPECT_TRUE(bitwise_equal(r.params.decoder[l].bias, parent.decoder[l].bias));
  }
  EXPECT_TRUE(bitwise_equal(r.params.attn_general, parent.attn_general));
  EXPECT_TRUE(bitwise_equal(r.params.attn_out, parent.attn_out));
  EXPECT_TRUE(r.frozen.contains("tgt_embed"));
  r.params.check_shapes();
}

TEST(TransferParams, ArchitectureMismatchThrows) {
  const Vocabulary v = vocab_of({"a"});
  const Seq2SeqParams parent = init_params(config_for(v, v), 1);
  ModelConfig other = config_for(v, v);
  other.hidden = 7;
  const VocabAlignment al = align_positional(v, v);
  EXPECT_THROW(transfer_params(parent, al, al, {}, other), std::invalid_argument);
  // Alignment pointing past the parent vocabulary.
  VocabAlignment bad = al;
  bad.parent_of.back() = 999;
  EXPECT_THROW(transfer_params(parent, bad, al, {}, config_for(v, v)), std::invalid_argument);
}

TEST(TransferParams, FrozenTargetEmbeddingsSurviveChildTraining) {
  const Vocabulary v = vocab_of({"a", "b", "c", "d"});
  const ModelConfig cfg = config_for(v, v);
  const Seq2SeqParams parent = init_params(cfg, 8);
  const VocabAlignment al = align_positional(v, v);
  const TransferResult t = transfer_params(parent, al, al, {TransferMode::positional, true, 9}, cfg);
  const std::vector<IdPair> data = {{{4, 5}, {6, 7}}, {{6, 7}, {4}}, {{5, 4, 7}, {5, 6}}};
  TrainConfig tc = TrainConfig::with_epochs(20);
  tc.minibatch_size = 2;
  const TrainResult r = train(t.params, data, tc, {}, t.frozen);
  EXPECT_TRUE(bitwise_equal(r.params.tgt_embed, parent.tgt_embed));
  EXPECT_FALSE(bitwise_equal(r.params.out_proj, parent.out_proj));
}
