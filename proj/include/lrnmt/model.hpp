#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace lrnmt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr int kNumLayers = 2;

struct ModelConfig {
  int src_vocab = 0;
  int tgt_vocab = 0;
  int embed = 32;
  int hidden = 32;
  bool input_feeding = true;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Desk-scale default and the 2x512 preset.
ModelConfig desk_preset(int src_vocab, int tgt_vocab);
ModelConfig large_preset(int src_vocab, int tgt_vocab);

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LstmWeights {
  Matrix weight;  // 4h x (n_in + h), gate rows ordered i, f, o, g
  Matrix bias;    // 4h x 1
};

/// Every trainable tensor, visited in a fixed order by for_each.
struct TensorSet {
  Matrix src_embed;  // V_s x d
  Matrix tgt_embed;  // V_t x d
  std::array<LstmWeights, kNumLayers> encoder;
  std::array<LstmWeights, kNumLayers> decoder;
  Matrix attn_general;  // h x h
  Matrix attn_out;      // h x 2h
  Matrix out_proj;      // V_t x h
  Matrix out_bias;      // V_t x 1

  template <class F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <class F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  std::size_t num_scalars() const;

 private:
  template <class Self, class F>
  static void visit(Self& s, F& f) {
    f(std::string_view("src_embed"), s.src_embed);
    f(std::string_view("tgt_embed"), s.tgt_embed);
    static constexpr std::string_view kEnc[] = {"enc0.weight", "enc0.bias", "enc1.weight",
                                                "enc1.bias"};
    static constexpr std::string_view kDec[] = {"dec0.weight", "dec0.bias", "dec1.weight",
                                                "dec1.bias"};
    for (int l = 0; l < kNumLayers; ++l) {
      f(kEnc[2 * l], s.encoder[l].weight);
      f(kEnc[2 * l + 1], s.encoder[l].bias);
    }
    for (int l = 0; l < kNumLayers; ++l) {
      f(kDec[2 * l], s.decoder[l].weight);
      f(kDec[2 * l + 1], s.decoder[l].bias);
    }
    f(std::string_view("attn_general"), s.attn_general);
    f(std::string_view("attn_out"), s.attn_out);
    f(std::string_view("out_proj"), s.out_proj);
    f(std::string_view("out_bias"), s.out_bias);
  }
};

bool is_bias_tensor(std::string_view name);

struct Seq2SeqParams : TensorSet {
  ModelConfig config;

  // Throws if any tensor shape disagrees with config.
  void check_shapes() const;
  // Throws NonFiniteError naming the first tensor holding NaN/Inf.
  void check_finite() const;
};

struct GradientSet : TensorSet {
  static GradientSet zeros_like(const Seq2SeqParams& params);
  void set_zero();
};

/// Zero-filled tensors of the right shapes.
Seq2SeqParams zero_params(const ModelConfig& config);

/// Uniform(-0.1, 0.1) weights and zero biases from one seeded stream.
Seq2SeqParams init_params(const ModelConfig& config, std::uint64_t seed);

// Bitwise equality of every tensor.
bool bitwise_equal(const TensorSet& a, const TensorSet& b);
bool bitwise_equal(const Matrix& a, const Matrix& b);

}  // namespace lrnmt
