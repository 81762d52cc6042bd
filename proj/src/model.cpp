#include "lrnmt/model.hpp"

#include <cstring>

#include "lrnmt/rng.hpp"

namespace lrnmt {

void ModelConfig::validate() const {
  if (src_vocab < 1 || tgt_vocab < 1) throw std::invalid_argument("vocabulary sizes must be >= 1");
  if (embed < 1 || hidden < 1) throw std::invalid_argument("embed and hidden must be >= 1");
}

ModelConfig desk_preset(int src_vocab, int tgt_vocab) {
  return ModelConfig{src_vocab, tgt_vocab, 32, 32, true};
}

ModelConfig large_preset(int src_vocab, int tgt_vocab) {
  return ModelConfig{src_vocab, tgt_vocab, 512, 512, true};
}

std::size_t TensorSet::num_scalars() const {
  std::size_t n = 0;
  for_each([&n](std::string_view, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

bool is_bias_tensor(std::string_view name) {
  return name.size() >= 4 && name.substr(name.size() - 4) == "bias";
}

namespace {

void shape(Matrix& m, Eigen::Index rows, Eigen::Index cols) { m = Matrix::Zero(rows, cols); }

void shape_all(TensorSet& t, const ModelConfig& c) {
  const int h = c.hidden;
  shape(t.src_embed, c.src_vocab, c.embed);
  shape(t.tgt_embed, c.tgt_vocab, c.embed);
  for (int l = 0; l < kNumLayers; ++l) {
    shape(t.encoder[l].weight, 4 * h, (l == 0 ? c.embed : h) + h);
    shape(t.encoder[l].bias, 4 * h, 1);
    shape(t.decoder[l].weight, 4 * h, (l == 0 ? c.embed + h : h) + h);
    shape(t.decoder[l].bias, 4 * h, 1);
  }
  shape(t.attn_general, h, h);
  shape(t.attn_out, h, 2 * h);
  shape(t.out_proj, c.tgt_vocab, h);
  shape(t.out_bias, c.tgt_vocab, 1);
}

}  // namespace

void Seq2SeqParams::check_shapes() const {
  TensorSet expected;
  shape_all(expected, config);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> dims;
  expected.for_each([&](std::string_view, const Matrix& m) { dims.emplace_back(m.rows(), m.cols()); });
  std::size_t i = 0;
  for_each([&](std::string_view name, const Matrix& m) {
    if (m.rows() != dims[i].first || m.cols() != dims[i].second)
      throw std::invalid_argument("tensor " + std::string(name) + " has shape " +
                                  std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                  ", expected " + std::to_string(dims[i].first) + "x" +
                                  std::to_string(dims[i].second));
    ++i;
  });
}

void Seq2SeqParams::check_finite() const {
  for_each([](std::string_view name, const Matrix& m) {
    if (!m.allFinite()) throw NonFiniteError("non-finite value in tensor " + std::string(name));
  });
}

GradientSet GradientSet::zeros_like(const Seq2SeqParams& params) {
  GradientSet g;
  shape_all(g, params.config);
  return g;
}

void GradientSet::set_zero() {
  for_each([](std::string_view, Matrix& m) { m.setZero(); });
}

Seq2SeqParams zero_params(const ModelConfig& config) {
  config.validate();
  Seq2SeqParams p;
  p.config = config;
  shape_all(p, config);
  return p;
}

Seq2SeqParams init_params(const ModelConfig& config, std::uint64_t seed) {
  Seq2SeqParams p = zero_params(config);
  Rng rng(seed);
  p.for_each([&rng](std::string_view name, Matrix& m) {
    if (is_bias_tensor(name)) return;
    // Column-major fill order.
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform(-0.1, 0.1);
  });
  return p;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

bool bitwise_equal(const TensorSet& a, const TensorSet& b) {
  std::vector<const Matrix*> bs;
  b.for_each([&bs](std::string_view, const Matrix& m) { bs.push_back(&m); });
  bool eq = true;
  std::size_t i = 0;
  a.for_each([&](std::string_view, const Matrix& m) { eq = eq && bitwise_equal(m, *bs[i++]); });
  return eq;
}

}  // namespace lrnmt
