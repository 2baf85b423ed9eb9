#include "cdcnn/adam.hpp"

#include <cmath>

#include "cdcnn/error.hpp"

namespace cdcnn {

void adam_step(std::span<const ParamRef> params, std::span<const Tensor> grads, AdamState& state) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (!state.m_.empty() && state.m_.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state was built for a different parameter list");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& p = *params[i].value;
    if (grads[i].shape() != p.shape()) {
      throw ShapeError("adam_step: gradient for '" + params[i].name + "' has shape " +
                       shape_to_string(grads[i].shape()) + ", parameter has " +
                       shape_to_string(p.shape()));
    }
    if (!state.m_.empty() && state.m_[i].shape() != p.shape()) {
      throw ShapeError("adam_step: moment shape mismatch for '" + params[i].name + "'");
    }
    if (!grads[i].all_finite()) {
      throw NumericError("adam_step: non-finite gradient for parameter '" + params[i].name + "'");
    }
  }

  if (state.m_.empty()) {
    for (const auto& p : params) {
      state.m_.push_back(Tensor::zeros_like(*p.value));
      state.v_.push_back(Tensor::zeros_like(*p.value));
    }
  }

  ++state.t_;
  const auto& opt = state.options_;
  const double t = static_cast<double>(state.t_);
  const auto b1 = static_cast<float>(1.0 - std::pow(static_cast<double>(opt.beta1), t));
  const auto b2 = static_cast<float>(1.0 - std::pow(static_cast<double>(opt.beta2), t));

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].value->data();
    auto g = grads[i].data();
    auto m = state.m_[i].data();
    auto v = state.v_[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = opt.beta1 * m[k] + (1.0f - opt.beta1) * g[k];
      v[k] = opt.beta2 * v[k] + (1.0f - opt.beta2) * g[k] * g[k];
      const float m_hat = m[k] / b1;
      const float v_hat = v[k] / b2;
      p[k] -= opt.lr * m_hat / (std::sqrt(v_hat) + opt.epsilon);
    }
  }
}

}  // namespace cdcnn
