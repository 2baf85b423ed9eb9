#include "cdcnn/baseline.hpp"

#include "cdcnn/error.hpp"
#include "cdcnn/layers.hpp"
#include "cdcnn/model.hpp"

namespace cdcnn {

BaselineParams init_baseline(std::size_t num_features, std::size_t num_classes) {
  if (num_features == 0 || num_classes < 2) {
    throw UsageError("baseline needs at least one feature and two classes");
  }
  return {Tensor({num_classes, num_features}, 0.0f), Tensor({num_classes}, 0.0f)};
}

std::vector<ParamRef> learnable_params(BaselineParams& params) {
  return {{"linear.weight", &params.weight}, {"linear.bias", &params.bias}};
}

Tensor baseline_forward(const BaselineParams& params, const Tensor& x) {
  require_finite(x, "baseline input");
  Tensor logits = layers::linear_forward(x, params.weight, params.bias);
  if (!logits.all_finite()) throw NumericError("non-finite baseline logits");
  return logits;
}

BaselineGrads baseline_backward(const BaselineParams& params, const Tensor& x,
                                const Tensor& grad_logits) {
  auto g = layers::linear_backward(grad_logits, x, params.weight);
  return {std::move(g.grad_w), std::move(g.grad_b)};
}

std::vector<int> baseline_predict(const BaselineParams& params, const Tensor& x) {
  return argmax_rows(baseline_forward(params, x));
}

bool bit_identical(const BaselineParams& a, const BaselineParams& b) noexcept {
  return bit_identical(a.weight, b.weight) && bit_identical(a.bias, b.bias);
}

}  // namespace cdcnn
