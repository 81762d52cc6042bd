#pragma once

// Independent reimplementations used as test oracles. They follow
// docs/ARCHITECTURE.md and the textbook definitions with plain loops and
// long double arithmetic; none of them calls the code under test except to
// read parameter values.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lrnmt/seq2seq.hpp"
#include "lrnmt/vocab.hpp"

namespace oracle {

using ld = long double;
using Vec = std::vector<ld>;

inline ld sigm(ld z) { return 1.0L / (1.0L + std::exp(-z)); }

inline Vec concat(const Vec& a, const Vec& b) {
  Vec out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// y = M x (+ bias column)
inline Vec matvec(const lrnmt::Matrix& m, const Vec& x) {
  Vec y(static_cast<std::size_t>(m.rows()), 0.0L);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ld s = 0.0L;
    for (Eigen::Index c = 0; c < m.cols(); ++c) s += static_cast<ld>(m(r, c)) * x[static_cast<std::size_t>(c)];
    y[static_cast<std::size_t>(r)] = s;
  }
  return y;
}

inline Vec row(const lrnmt::Matrix& m, int r) {
  Vec out;
  for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

inline Vec scaled(const Vec& v, const lrnmt::Vector* mask) {
  if (!mask) return v;
  Vec out = v;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= static_cast<ld>((*mask)[static_cast<Eigen::Index>(i)]);
  return out;
}

struct Cell {
  Vec h, c;
};

inline Cell lstm(const lrnmt::LstmWeights& w, const Vec& x, const Cell& prev) {
  const std::size_t h = prev.h.size();
  Vec z = matvec(w.weight, concat(x, prev.h));
  for (std::size_t k = 0; k < z.size(); ++k) z[k] += static_cast<ld>(w.bias(static_cast<Eigen::Index>(k), 0));
  Cell out{Vec(h), Vec(h)};
  for (std::size_t k = 0; k < h; ++k) {
    const ld i = sigm(z[k]), f = sigm(z[h + k]), o = sigm(z[2 * h + k]), g = std::tanh(z[3 * h + k]);
    out.c[k] = f * prev.c[k] + i * g;
    out.h[k] = o * std::tanh(out.c[k]);
  }
  return out;
}

struct EncoderResult {
  std::vector<Vec> states;  // top layer per position
  std::array<Cell, lrnmt::kNumLayers> final;
};

inline EncoderResult encode(const lrnmt::Seq2SeqParams& p, const std::vector<int>& src,
                            const lrnmt::ForwardTrace* tr = nullptr) {
  const std::size_t h = static_cast<std::size_t>(p.config.hidden);
  EncoderResult r;
  for (auto& c : r.final) c = {Vec(h, 0.0L), Vec(h, 0.0L)};
  for (std::size_t s = 0; s < src.size(); ++s) {
    Vec x = scaled(row(p.src_embed, src[s]), tr ? &tr->src_embed_mask[s] : nullptr);
    r.final[0] = lstm(p.encoder[0], x, r.final[0]);
    x = scaled(r.final[0].h, tr ? &tr->enc_mid_mask[s] : nullptr);
    r.final[1] = lstm(p.encoder[1], x, r.final[1]);
    r.states.push_back(r.final[1].h);
  }
  return r;
}

struct Step {
  Vec logits;
  Vec attentional;
  std::array<Cell, lrnmt::kNumLayers> state;
};

inline Step decode_step(const lrnmt::Seq2SeqParams& p, int prev_id,
                        const std::array<Cell, lrnmt::kNumLayers>& state, const Vec& feed,
                        const std::vector<Vec>& H, const lrnmt::ForwardTrace* tr = nullptr,
                        std::size_t t = 0) {
  const std::size_t h = static_cast<std::size_t>(p.config.hidden);
  Step st;
  Vec emb = scaled(row(p.tgt_embed, prev_id), tr ? &tr->tgt_embed_mask[t] : nullptr);
  Vec x = concat(emb, p.config.input_feeding ? feed : Vec(h, 0.0L));
  st.state[0] = lstm(p.decoder[0], x, state[0]);
  x = scaled(st.state[0].h, tr ? &tr->dec_mid_mask[t] : nullptr);
  st.state[1] = lstm(p.decoder[1], x, state[1]);
  const Vec& q = st.state[1].h;
  // e_s = q^T W_a hbar_s
  Vec e;
  for (const auto& hs : H) {
    const Vec wh = matvec(p.attn_general, hs);
    ld s = 0.0L;
    for (std::size_t k = 0; k < h; ++k) s += q[k] * wh[k];
    e.push_back(s);
  }
  const ld m = *std::max_element(e.begin(), e.end());
  ld z = 0.0L;
  for (auto& v : e) z += std::exp(v - m);
  Vec ctx(h, 0.0L);
  for (std::size_t s = 0; s < H.size(); ++s) {
    const ld a = std::exp(e[s] - m) / z;
    for (std::size_t k = 0; k < h; ++k) ctx[k] += a * H[s][k];
  }
  st.attentional = matvec(p.attn_out, concat(ctx, q));
  for (auto& v : st.attentional) v = std::tanh(v);
  const Vec out = scaled(st.attentional, tr ? &tr->out_mask[t] : nullptr);
  st.logits = matvec(p.out_proj, out);
  for (std::size_t k = 0; k < st.logits.size(); ++k)
    st.logits[k] += static_cast<ld>(p.out_bias(static_cast<Eigen::Index>(k), 0));
  return st;
}

inline ld log_softmax_at(const Vec& logits, int k) {
  const ld m = *std::max_element(logits.begin(), logits.end());
  ld z = 0.0L;
  for (auto v : logits) z += std::exp(v - m);
  return logits[static_cast<std::size_t>(k)] - m - std::log(z);
}

/// Mean cross-entropy over target + EOS. Pass the trace to reuse its
/// dropout masks.
inline ld loss(const lrnmt::Seq2SeqParams& p, const lrnmt::IdPair& pair,
               const lrnmt::ForwardTrace* tr = nullptr) {
  const std::size_t h = static_cast<std::size_t>(p.config.hidden);
  const EncoderResult enc = encode(p, pair.source, tr);
  std::vector<int> in{lrnmt::kBosId}, out = pair.target;
  in.insert(in.end(), pair.target.begin(), pair.target.end());
  out.push_back(lrnmt::kEosId);
  auto state = enc.final;
  Vec feed(h, 0.0L);
  ld total = 0.0L;
  for (std::size_t t = 0; t < out.size(); ++t) {
    const Step st = decode_step(p, in[t], state, feed, enc.states, tr, t);
    total -= log_softmax_at(st.logits, out[t]);
    state = st.state;
    feed = st.attentional;
  }
  return total / static_cast<ld>(out.size());
}

/// Exhaustive search: every sequence of at most `max_len` generated tokens
/// that ends in EOS (EOS forced at the last position), never using a
/// banned token. Returns (best ids without BOS, logp, score).
struct Best {
  std::vector<int> ids;
  ld logp = -INFINITY;
  ld score = -INFINITY;
};

inline Best exhaustive(const lrnmt::Seq2SeqParams& p, const std::vector<int>& src,
                       std::size_t max_len, double alpha, const std::set<int>& banned) {
  const std::size_t h = static_cast<std::size_t>(p.config.hidden);
  const EncoderResult enc = encode(p, src);
  Best best;
  std::vector<int> prefix;
  std::function<void(int, std::array<Cell, lrnmt::kNumLayers>, Vec, ld)> rec =
      [&](int prev, std::array<Cell, lrnmt::kNumLayers> state, Vec feed, ld logp) {
        const Step st = decode_step(p, prev, state, feed, enc.states);
        const bool last = prefix.size() + 1 == max_len;
        for (int w = 0; w < p.config.tgt_vocab; ++w) {
          if (w != lrnmt::kEosId && (last || banned.count(w))) continue;
          const ld lp = logp + log_softmax_at(st.logits, w);
          prefix.push_back(w);
          if (w == lrnmt::kEosId) {
            const ld len = static_cast<ld>(prefix.size());
            const ld score = lp / std::pow((5.0L + len) / 6.0L, static_cast<ld>(alpha));
            // Strict improvement keeps the first sequence in enumeration
            // order among exact ties.
            if (score > best.score) best = {prefix, lp, score};
          } else {
            rec(w, st.state, st.attentional, lp);
          }
          prefix.pop_back();
        }
      };
  std::array<Cell, lrnmt::kNumLayers> start = enc.final;
  rec(lrnmt::kBosId, start, Vec(h, 0.0L), 0.0L);
  return best;
}

using Symbols = std::vector<std::string>;
using MergeList = std::vector<std::pair<std::string, std::string>>;

/// BPE learning by full recount after every merge.
inline MergeList bpe_bruteforce(const std::map<std::string, long>& counts, std::size_t n_ops,
                                const std::string& eow = "</w>") {
  std::vector<std::pair<Symbols, long>> words;
  for (const auto& [w, n] : counts) {
    // Split into code points by the UTF-8 lead-byte rule.
    Symbols s;
    for (std::size_t i = 0; i < w.size();) {
      const unsigned char c = static_cast<unsigned char>(w[i]);
      std::size_t len = c < 0x80 ? 1 : (c >> 5) == 6 ? 2 : (c >> 4) == 14 ? 3 : (c >> 3) == 30 ? 4 : 1;
      len = std::min(len, w.size() - i);
      s.push_back(w.substr(i, len));
      i += len;
    }
    if (s.empty()) continue;
    s.back() += eow;
    words.emplace_back(s, n);
  }
  MergeList merges;
  while (merges.size() < n_ops) {
    std::map<std::pair<std::string, std::string>, long> pc;
    for (const auto& [s, n] : words)
      for (std::size_t i = 0; i + 1 < s.size(); ++i) pc[{s[i], s[i + 1]}] += n;
    std::pair<std::string, std::string> best;
    long best_n = 0;
    for (const auto& [pair, n] : pc)
      if (n > best_n) best = pair, best_n = n;  // map order gives the smallest pair on ties
    if (best_n <= 1) break;
    merges.push_back(best);
    for (auto& [s, n] : words) {
      Symbols out;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (i + 1 < s.size() && s[i] == best.first && s[i + 1] == best.second) {
          out.push_back(s[i] + s[i + 1]);
          ++i;
        } else {
          out.push_back(s[i]);
        }
      }
      s = out;
    }
  }
  return merges;
}

}  // namespace oracle
