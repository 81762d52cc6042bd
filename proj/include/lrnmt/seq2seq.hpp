#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lrnmt/model.hpp"

namespace lrnmt {

/// Attentional LSTM encoder-decoder with input feeding and "general"
/// attention scores. docs/ARCHITECTURE.md has the equations.

struct LstmState {
  std::array<Vector, kNumLayers> h;
  std::array<Vector, kNumLayers> c;

  static LstmState zeros(int hidden);
};

struct EncoderOutput {
  Matrix states;  // h x S, top-layer hidden state per source position
  LstmState final;
};

EncoderOutput encode(const Seq2SeqParams& params, std::span<const int> src_ids);

struct AttentionResult {
  Vector context;
  Vector weights;
};

AttentionResult attend(const Matrix& attn_general, const Vector& query, const Matrix& enc_states);

struct DecoderStep {
  Vector logits;
  LstmState state;
  Vector attentional;  // h~_t, fed to the next step
};

/// One decoder step at inference time (no dropout). At t = 0 pass the
/// encoder's final state and a zero attentional vector.
DecoderStep decode_step(const Seq2SeqParams& params, int prev_target_id, const LstmState& prev,
                        const Vector& prev_attentional, const EncoderOutput& enc);

struct IdPair {
  std::vector<int> source;
  std::vector<int> target;  // without BOS/EOS
};

struct LstmCache {
  Vector input;  // [x; h_prev]
  Vector i, f, o, g;
  Vector c_prev, c, tanh_c, h;
};

struct DecoderCache {
  std::array<LstmCache, kNumLayers> cells;
  Vector attn_weights;
  Vector context;
  Vector attn_input;  // [c_t; h_t]
  Vector attentional;
  Vector dropped_attentional;
  Vector probs;
};

/// Everything backward() needs, including the dropout masks drawn during
/// the forward pass. Mask vectors are empty when dropout is off.
struct ForwardTrace {
  ModelConfig config;
  std::uint64_t fingerprint = 0;
  double dropout_rate = 0.0;

  std::vector<int> source;
  std::vector<int> target_in;   // BOS y_1 .. y_T
  std::vector<int> target_out;  // y_1 .. y_T EOS

  std::vector<Vector> src_embed_mask, enc_mid_mask;
  std::vector<Vector> tgt_embed_mask, dec_mid_mask, out_mask;

  std::vector<std::array<LstmCache, kNumLayers>> enc;
  Matrix enc_states;
  std::vector<DecoderCache> dec;

  double loss = 0.0;
};

struct ForwardResult {
  double loss = 0.0;
  ForwardTrace trace;
};

/// Mean per-token cross-entropy over the target plus EOS. Throws
/// NonFiniteError if the loss is NaN or infinite.
ForwardResult forward_loss(const Seq2SeqParams& params, const IdPair& pair,
                           double dropout_rate = 0.0, std::uint64_t rng_seed = 0);

// Loss without dropout.
double evaluate_loss(const Seq2SeqParams& params, const IdPair& pair);

GradientSet backward(const Seq2SeqParams& params, const ForwardTrace& trace);

/// Adds `scale` times the gradient of trace.loss into `grads`.
void accumulate_gradients(const Seq2SeqParams& params, const ForwardTrace& trace, double scale,
                          GradientSet& grads);

// Cheap identity of a parameter set, checked by backward().
std::uint64_t param_fingerprint(const Seq2SeqParams& params);

struct GradCheckOptions {
  double epsilon = 1e-4;
  std::size_t samples = 200;
  std::uint64_t seed = 0;
  // Restricts sampling to tensors whose name passes; all tensors if empty.
  std::function<bool(std::string_view)> include;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::string worst_tensor;
};

double relative_error(double analytic, double numeric);

/// Compares analytic gradients with central differences on sampled scalars.
GradCheckResult grad_check(const Seq2SeqParams& params, const IdPair& pair,
                           const GradCheckOptions& options = {});

}  // namespace lrnmt
