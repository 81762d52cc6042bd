#include "lrnmt/seq2seq.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "lrnmt/rng.hpp"
#include "lrnmt/vocab.hpp"

namespace lrnmt {

namespace {

Vector sigmoid(const Vector& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

// Runs one cell; fills `cache` when given.
void lstm_forward(const LstmWeights& w, const Vector& x, const Vector& h_prev,
                  const Vector& c_prev, Vector& h_out, Vector& c_out, LstmCache* cache) {
  const Eigen::Index h = h_prev.size();
  Vector input(x.size() + h);
  input << x, h_prev;
  const Vector z = w.weight * input + w.bias.col(0);
  Vector i = sigmoid(z.segment(0, h));
  Vector f = sigmoid(z.segment(h, h));
  Vector o = sigmoid(z.segment(2 * h, h));
  Vector g = z.segment(3 * h, h).array().tanh().matrix();
  c_out = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
  Vector tanh_c = c_out.array().tanh().matrix();
  h_out = o.cwiseProduct(tanh_c);
  if (cache) {
    cache->input = std::move(input);
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->o = std::move(o);
    cache->g = std::move(g);
    cache->c_prev = c_prev;
    cache->c = c_out;
    cache->tanh_c = std::move(tanh_c);
    cache->h = h_out;
  }
}

// Returns d(input); accumulates weight/bias gradients. dh_prev and
// dc_prev receive the gradients for the previous time step.
Vector lstm_backward(const LstmWeights& w, const LstmCache& cache, const Vector& dh,
                     const Vector& dc_next, LstmWeights& grad, Vector& dc_prev) {
  const Eigen::Index h = dh.size();
  const Vector dc =
      dc_next + dh.cwiseProduct(cache.o).cwiseProduct(
                    (1.0 - cache.tanh_c.array().square()).matrix());
  Vector dz(4 * h);
  dz.segment(0, h) = (dc.array() * cache.g.array() * cache.i.array() * (1.0 - cache.i.array()))
                         .matrix();
  dz.segment(h, h) =
      (dc.array() * cache.c_prev.array() * cache.f.array() * (1.0 - cache.f.array())).matrix();
  dz.segment(2 * h, h) =
      (dh.array() * cache.tanh_c.array() * cache.o.array() * (1.0 - cache.o.array())).matrix();
  dz.segment(3 * h, h) =
      (dc.array() * cache.i.array() * (1.0 - cache.g.array().square())).matrix();
  dc_prev = dc.cwiseProduct(cache.f);
  grad.weight.noalias() += dz * cache.input.transpose();
  grad.bias.col(0) += dz;
  return w.weight.transpose() * dz;
}

void check_ids(std::span<const int> ids, int vocab, const char* what) {
  for (int id : ids)
    if (id < 0 || id >= vocab)
      throw std::out_of_range(std::string(what) + " id " + std::to_string(id) +
                              " outside vocabulary of size " + std::to_string(vocab));
}

Vector embed_row(const Matrix& table, int id) { return table.row(id).transpose(); }

Vector dropout_mask(Rng& rng, Eigen::Index n, double rate) {
  const double keep = 1.0 - rate;
  Vector m(n);
  for (Eigen::Index k = 0; k < n; ++k) m[k] = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return m;
}

double log_sum_exp(const Vector& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

std::uint64_t fnv_bytes(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

LstmState LstmState::zeros(int hidden) {
  LstmState s;
  for (int l = 0; l < kNumLayers; ++l) {
    s.h[l] = Vector::Zero(hidden);
    s.c[l] = Vector::Zero(hidden);
  }
  return s;
}

EncoderOutput encode(const Seq2SeqParams& params, std::span<const int> src_ids) {
  if (src_ids.empty()) throw std::invalid_argument("encode: empty source sequence");
  check_ids(src_ids, params.config.src_vocab, "source");
  const int h = params.config.hidden;
  EncoderOutput out;
  out.final = LstmState::zeros(h);
  out.states.resize(h, static_cast<Eigen::Index>(src_ids.size()));
  LstmState& st = out.final;
  for (std::size_t s = 0; s < src_ids.size(); ++s) {
    Vector x = embed_row(params.src_embed, src_ids[s]);
    for (int l = 0; l < kNumLayers; ++l) {
      Vector h_new, c_new;
      lstm_forward(params.encoder[l], x, st.h[l], st.c[l], h_new, c_new, nullptr);
      st.h[l] = h_new;
      st.c[l] = std::move(c_new);
      x = std::move(h_new);
    }
    out.states.col(static_cast<Eigen::Index>(s)) = x;
  }
  return out;
}

AttentionResult attend(const Matrix& attn_general, const Vector& query, const Matrix& enc_states) {
  const Vector projected = attn_general.transpose() * query;
  const Vector scores = enc_states.transpose() * projected;
  const double m = scores.maxCoeff();
  Vector w = (scores.array() - m).exp().matrix();
  w /= w.sum();
  return {enc_states * w, std::move(w)};
}

DecoderStep decode_step(const Seq2SeqParams& params, int prev_target_id, const LstmState& prev,
                        const Vector& prev_attentional, const EncoderOutput& enc) {
  const auto& cfg = params.config;
  const int id[] = {prev_target_id};
  check_ids(id, cfg.tgt_vocab, "target");
  Vector x(cfg.embed + cfg.hidden);
  x << embed_row(params.tgt_embed, prev_target_id),
      (cfg.input_feeding ? prev_attentional : Vector::Zero(cfg.hidden));
  DecoderStep step;
  for (int l = 0; l < kNumLayers; ++l) {
    lstm_forward(params.decoder[l], x, prev.h[l], prev.c[l], step.state.h[l], step.state.c[l],
                 nullptr);
    x = step.state.h[l];
  }
  const AttentionResult att = attend(params.attn_general, x, enc.states);
  Vector z(2 * cfg.hidden);
  z << att.context, x;
  step.attentional = (params.attn_out * z).array().tanh().matrix();
  step.logits = params.out_proj * step.attentional + params.out_bias.col(0);
  return step;
}

std::uint64_t param_fingerprint(const Seq2SeqParams& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const int dims[] = {params.config.src_vocab, params.config.tgt_vocab, params.config.embed,
                      params.config.hidden, params.config.input_feeding ? 1 : 0};
  h = fnv_bytes(h, dims, sizeof(dims));
  for (const Matrix* m : {&params.attn_general, &params.attn_out, &params.out_bias})
    h = fnv_bytes(h, m->data(), sizeof(double) * static_cast<std::size_t>(m->size()));
  return h;
}

ForwardResult forward_loss(const Seq2SeqParams& params, const IdPair& pair, double dropout_rate,
                           std::uint64_t rng_seed) {
  const auto& cfg = params.config;
  if (pair.source.empty() || pair.target.empty())
    throw std::invalid_argument("forward_loss: both sides must be non-empty");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw std::invalid_argument("forward_loss: dropout rate must be in [0, 1)");
  check_ids(pair.source, cfg.src_vocab, "source");
  check_ids(pair.target, cfg.tgt_vocab, "target");

  ForwardResult result;
  ForwardTrace& tr = result.trace;
  tr.config = cfg;
  tr.fingerprint = param_fingerprint(params);
  tr.dropout_rate = dropout_rate;
  tr.source = pair.source;
  tr.target_in.push_back(kBosId);
  tr.target_in.insert(tr.target_in.end(), pair.target.begin(), pair.target.end());
  tr.target_out = pair.target;
  tr.target_out.push_back(kEosId);
  if (std::max({kBosId, kEosId}) >= cfg.tgt_vocab)
    throw std::out_of_range("forward_loss: target vocabulary lacks reserved symbols");

  const bool drop = dropout_rate > 0.0;
  Rng rng(rng_seed);
  const int h = cfg.hidden;
  const std::size_t S = pair.source.size();

  // Encoder.
  LstmState st = LstmState::zeros(h);
  tr.enc.resize(S);
  tr.enc_states.resize(h, static_cast<Eigen::Index>(S));
  for (std::size_t s = 0; s < S; ++s) {
    Vector x = embed_row(params.src_embed, pair.source[s]);
    if (drop) {
      tr.src_embed_mask.push_back(dropout_mask(rng, cfg.embed, dropout_rate));
      x = x.cwiseProduct(tr.src_embed_mask.back());
    }
    for (int l = 0; l < kNumLayers; ++l) {
      Vector h_new, c_new;
      lstm_forward(params.encoder[l], x, st.h[l], st.c[l], h_new, c_new, &tr.enc[s][l]);
      st.h[l] = h_new;
      st.c[l] = std::move(c_new);
      x = std::move(h_new);
      if (l + 1 < kNumLayers && drop) {
        tr.enc_mid_mask.push_back(dropout_mask(rng, h, dropout_rate));
        x = x.cwiseProduct(tr.enc_mid_mask.back());
      }
    }
    tr.enc_states.col(static_cast<Eigen::Index>(s)) = x;
  }

  // Decoder.
  const std::size_t T = tr.target_out.size();
  tr.dec.resize(T);
  Vector feed = Vector::Zero(h);
  double total = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    DecoderCache& dc = tr.dec[t];
    Vector emb = embed_row(params.tgt_embed, tr.target_in[t]);
    if (drop) {
      tr.tgt_embed_mask.push_back(dropout_mask(rng, cfg.embed, dropout_rate));
      emb = emb.cwiseProduct(tr.tgt_embed_mask.back());
    }
    Vector x(cfg.embed + h);
    x << emb, (cfg.input_feeding ? feed : Vector::Zero(h));
    for (int l = 0; l < kNumLayers; ++l) {
      Vector h_new, c_new;
      lstm_forward(params.decoder[l], x, st.h[l], st.c[l], h_new, c_new, &dc.cells[l]);
      st.h[l] = h_new;
      st.c[l] = std::move(c_new);
      x = std::move(h_new);
      if (l + 1 < kNumLayers && drop) {
        tr.dec_mid_mask.push_back(dropout_mask(rng, h, dropout_rate));
        x = x.cwiseProduct(tr.dec_mid_mask.back());
      }
    }
    AttentionResult att = attend(params.attn_general, x, tr.enc_states);
    dc.attn_input.resize(2 * h);
    dc.attn_input << att.context, x;
    dc.attn_weights = std::move(att.weights);
    dc.context = std::move(att.context);
    dc.attentional = (params.attn_out * dc.attn_input).array().tanh().matrix();
    dc.dropped_attentional = dc.attentional;
    if (drop) {
      tr.out_mask.push_back(dropout_mask(rng, h, dropout_rate));
      dc.dropped_attentional = dc.attentional.cwiseProduct(tr.out_mask.back());
    }
    const Vector logits = params.out_proj * dc.dropped_attentional + params.out_bias.col(0);
    const double lse = log_sum_exp(logits);
    dc.probs = (logits.array() - lse).exp().matrix();
    total += lse - logits[tr.target_out[t]];
    feed = dc.attentional;
  }
  tr.loss = total / static_cast<double>(T);
  if (!std::isfinite(tr.loss)) {
    std::ostringstream msg;
    msg << "forward_loss: non-finite loss " << tr.loss << " (source length " << S
        << ", target length " << pair.target.size() << ")";
    throw NonFiniteError(msg.str());
  }
  result.loss = tr.loss;
  return result;
}

double evaluate_loss(const Seq2SeqParams& params, const IdPair& pair) {
  return forward_loss(params, pair, 0.0, 0).loss;
}

void accumulate_gradients(const Seq2SeqParams& params, const ForwardTrace& tr, double scale,
                          GradientSet& g) {
  const auto& cfg = params.config;
  if (!(tr.config == cfg) || tr.fingerprint != param_fingerprint(params))
    throw std::invalid_argument("backward: trace was not produced by these parameters");
  if (tr.dec.size() != tr.target_out.size() || tr.enc.size() != tr.source.size())
    throw std::invalid_argument("backward: incomplete trace");
  const bool drop = tr.dropout_rate > 0.0;
  const int h = cfg.hidden;
  const int d = cfg.embed;
  const std::size_t T = tr.target_out.size();
  const std::size_t S = tr.source.size();
  const double step_scale = scale / static_cast<double>(T);

  Matrix dH = Matrix::Zero(h, static_cast<Eigen::Index>(S));
  std::array<Vector, kNumLayers> dh_rec, dc_rec;
  for (int l = 0; l < kNumLayers; ++l) {
    dh_rec[l] = Vector::Zero(h);
    dc_rec[l] = Vector::Zero(h);
  }
  Vector d_feed = Vector::Zero(h);

  for (std::size_t t = T; t-- > 0;) {
    const DecoderCache& dc = tr.dec[t];
    Vector dlogits = dc.probs;
    dlogits[tr.target_out[t]] -= 1.0;
    dlogits *= step_scale;
    g.out_proj.noalias() += dlogits * dc.dropped_attentional.transpose();
    g.out_bias.col(0) += dlogits;
    Vector d_att = params.out_proj.transpose() * dlogits;
    if (drop) d_att = d_att.cwiseProduct(tr.out_mask[t]);
    d_att += d_feed;

    const Vector dpre = d_att.cwiseProduct((1.0 - dc.attentional.array().square()).matrix());
    g.attn_out.noalias() += dpre * dc.attn_input.transpose();
    const Vector dz = params.attn_out.transpose() * dpre;
    const Vector dctx = dz.head(h);
    Vector dh_top = dz.tail(h);
    const Vector h_top = dc.attn_input.tail(h);

    // c = H a;  a = softmax(e);  e = H^T W_a^T h_top
    const Vector& a = dc.attn_weights;
    dH.noalias() += dctx * a.transpose();
    const Vector da = tr.enc_states.transpose() * dctx;
    const Vector de = a.cwiseProduct((da.array() - a.dot(da)).matrix());
    const Vector He = tr.enc_states * de;
    dh_top.noalias() += params.attn_general * He;
    g.attn_general.noalias() += h_top * He.transpose();
    const Vector q = params.attn_general.transpose() * h_top;
    dH.noalias() += q * de.transpose();

    Vector dh = dh_top + dh_rec[1];
    Vector dc_prev;
    Vector dx = lstm_backward(params.decoder[1], dc.cells[1], dh, dc_rec[1], g.decoder[1], dc_prev);
    dh_rec[1] = dx.tail(h);
    dc_rec[1] = dc_prev;
    Vector dh0 = dx.head(h);
    if (drop) dh0 = dh0.cwiseProduct(tr.dec_mid_mask[t]);
    dh0 += dh_rec[0];
    dx = lstm_backward(params.decoder[0], dc.cells[0], dh0, dc_rec[0], g.decoder[0], dc_prev);
    dh_rec[0] = dx.tail(h);
    dc_rec[0] = dc_prev;
    Vector demb = dx.head(d);
    if (drop) demb = demb.cwiseProduct(tr.tgt_embed_mask[t]);
    g.tgt_embed.row(tr.target_in[t]) += demb.transpose();
    d_feed = cfg.input_feeding ? Vector(dx.segment(d, h)) : Vector::Zero(h);
  }

  // The decoder starts from the encoder's final state, so dh_rec/dc_rec
  // now hold the gradients for it.
  for (std::size_t s = S; s-- > 0;) {
    const auto& cells = tr.enc[s];
    Vector dh = dH.col(static_cast<Eigen::Index>(s)) + dh_rec[1];
    Vector dc_prev;
    Vector dx = lstm_backward(params.encoder[1], cells[1], dh, dc_rec[1], g.encoder[1], dc_prev);
    dh_rec[1] = dx.tail(h);
    dc_rec[1] = dc_prev;
    Vector dh0 = dx.head(h);
    if (drop) dh0 = dh0.cwiseProduct(tr.enc_mid_mask[s]);
    dh0 += dh_rec[0];
    dx = lstm_backward(params.encoder[0], cells[0], dh0, dc_rec[0], g.encoder[0], dc_prev);
    dh_rec[0] = dx.tail(h);
    dc_rec[0] = dc_prev;
    Vector demb = dx.head(d);
    if (drop) demb = demb.cwiseProduct(tr.src_embed_mask[s]);
    g.src_embed.row(tr.source[s]) += demb.transpose();
  }
}

GradientSet backward(const Seq2SeqParams& params, const ForwardTrace& trace) {
  GradientSet g = GradientSet::zeros_like(params);
  accumulate_gradients(params, trace, 1.0, g);
  return g;
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult grad_check(const Seq2SeqParams& params, const IdPair& pair,
                           const GradCheckOptions& options) {
  const GradientSet grads = backward(params, forward_loss(params, pair).trace);
  Seq2SeqParams probe = params;

  std::vector<std::string_view> names;
  std::vector<Matrix*> targets;
  std::vector<const Matrix*> analytic;
  probe.for_each([&](std::string_view name, Matrix& m) {
    if (!options.include || options.include(name)) {
      names.push_back(name);
      targets.push_back(&m);
    }
  });
  grads.for_each([&](std::string_view name, const Matrix& m) {
    if (!options.include || options.include(name)) analytic.push_back(&m);
  });
  GradCheckResult result;
  if (targets.empty()) return result;

  Rng rng(options.seed);
  const double eps = options.epsilon;
  for (std::size_t k = 0; k < options.samples; ++k) {
    const std::size_t ti = rng.below(targets.size());
    Matrix& m = *targets[ti];
    const auto idx = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m.size())));
    const double saved = m.data()[idx];
    m.data()[idx] = saved + eps;
    const double plus = evaluate_loss(probe, pair);
    m.data()[idx] = saved - eps;
    const double minus = evaluate_loss(probe, pair);
    m.data()[idx] = saved;
    const double numeric = (plus - minus) / (2.0 * eps);
    const double err = relative_error(analytic[ti]->data()[idx], numeric);
    if (err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_tensor = std::string(names[ti]);
    }
    ++result.checked;
  }
  return result;
}

}  // namespace lrnmt
