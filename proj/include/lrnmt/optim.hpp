#pragma once

#include <set>
#include <string>
#include <string_view>

#include "lrnmt/model.hpp"

namespace lrnmt {

// Names of tensors that must not move during training.
class FreezeMask {
 public:
  FreezeMask() = default;
  explicit FreezeMask(std::set<std::string> tensors) : tensors_(std::move(tensors)) {}

  static FreezeMask target_embeddings() { return FreezeMask({"tgt_embed"}); }

  bool contains(std::string_view name) const { return tensors_.count(std::string(name)) > 0; }
  bool empty() const { return tensors_.empty(); }
  const std::set<std::string>& tensors() const { return tensors_; }

 private:
  std::set<std::string> tensors_;
};

double global_norm(const TensorSet& grads);

/// Scales all gradients by max_norm / norm when the global L2 norm exceeds
/// max_norm (strictly). Returns the norm before clipping. Throws
/// NonFiniteError on NaN/Inf.
double clip_gradients_in_place(GradientSet& grads, double max_norm);

inline GradientSet clip_gradients(GradientSet grads, double max_norm) {
  clip_gradients_in_place(grads, max_norm);
  return grads;
}

struct AdadeltaState {
  TensorSet mean_sq_grad;    // E[g^2]
  TensorSet mean_sq_update;  // E[dx^2]
  double rho = 0.95;
  double eps = 1e-6;

  static AdadeltaState zeros_like(const Seq2SeqParams& params, double rho = 0.95,
                                  double eps = 1e-6);
};

/// E[g^2] <- rho E[g^2] + (1-rho) g^2
/// dx = -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
/// E[dx^2] <- rho E[dx^2] + (1-rho) dx^2;  x <- x + dx
/// Frozen tensors and their accumulators are left untouched.
void adadelta_update(AdadeltaState& state, const GradientSet& grads, Seq2SeqParams& params,
                     const FreezeMask& frozen = {});

}  // namespace lrnmt
