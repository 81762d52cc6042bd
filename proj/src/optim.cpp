#include "lrnmt/optim.hpp"

#include <cmath>
#include <vector>

namespace lrnmt {

namespace {

std::vector<Matrix*> tensor_list(TensorSet& s) {
  std::vector<Matrix*> out;
  s.for_each([&out](std::string_view, Matrix& m) { out.push_back(&m); });
  return out;
}

std::vector<const Matrix*> tensor_list(const TensorSet& s) {
  std::vector<const Matrix*> out;
  s.for_each([&out](std::string_view, const Matrix& m) { out.push_back(&m); });
  return out;
}

}  // namespace

double global_norm(const TensorSet& grads) {
  double sum = 0.0;
  grads.for_each([&sum](std::string_view, const Matrix& m) { sum += m.squaredNorm(); });
  return std::sqrt(sum);
}

double clip_gradients_in_place(GradientSet& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("clip_gradients: max_norm must be > 0");
  const double norm = global_norm(grads);
  if (!std::isfinite(norm)) throw NonFiniteError("clip_gradients: non-finite gradient norm");
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    grads.for_each([scale](std::string_view, Matrix& m) { m *= scale; });
  }
  return norm;
}

AdadeltaState AdadeltaState::zeros_like(const Seq2SeqParams& params, double rho, double eps) {
  AdadeltaState s;
  s.mean_sq_grad = GradientSet::zeros_like(params);
  s.mean_sq_update = GradientSet::zeros_like(params);
  s.rho = rho;
  s.eps = eps;
  return s;
}

void adadelta_update(AdadeltaState& state, const GradientSet& grads, Seq2SeqParams& params,
                     const FreezeMask& frozen) {
  auto ps = tensor_list(params);
  auto gs = tensor_list(grads);
  auto eg = tensor_list(state.mean_sq_grad);
  auto ex = tensor_list(state.mean_sq_update);
  std::vector<std::string_view> names;
  params.for_each([&names](std::string_view n, const Matrix&) { names.push_back(n); });
  if (gs.size() != ps.size() || eg.size() != ps.size() || ex.size() != ps.size())
    throw std::invalid_argument("adadelta_update: tensor count mismatch");

  const double rho = state.rho;
  const double eps = state.eps;
  for (std::size_t k = 0; k < ps.size(); ++k) {
    Matrix& x = *ps[k];
    const Matrix& g = *gs[k];
    if (g.rows() != x.rows() || g.cols() != x.cols() || eg[k]->rows() != x.rows() ||
        eg[k]->cols() != x.cols() || ex[k]->rows() != x.rows() || ex[k]->cols() != x.cols())
      throw std::invalid_argument("adadelta_update: shape mismatch in " + std::string(names[k]));
    if (frozen.contains(names[k])) continue;
    auto eg2 = eg[k]->array();
    auto ex2 = ex[k]->array();
    eg2 = rho * eg2 + (1.0 - rho) * g.array().square();
    const Eigen::ArrayXXd dx = -((ex2 + eps).sqrt() / (eg2 + eps).sqrt()) * g.array();
    ex2 = rho * ex2 + (1.0 - rho) * dx.square();
    x.array() += dx;
  }
}

}  // namespace lrnmt
