#pragma once

#include <cstddef>
#include <vector>

#include "cdcnn/adam.hpp"
#include "cdcnn/tensor.hpp"

namespace cdcnn {

// Multinomial logistic regression on flattened windows (T * F features in
// [time][channel] order). A reference point for the convolutional model; it
// is trained with the same optimizer, loss and split protocol.
struct BaselineParams {
  Tensor weight;  // (K, D)
  Tensor bias;    // (K)

  std::size_t num_features() const { return weight.dim(1); }
  std::size_t num_classes() const { return weight.dim(0); }
};

// Zero weights and bias: every class starts equally likely.
BaselineParams init_baseline(std::size_t num_features, std::size_t num_classes);

std::vector<ParamRef> learnable_params(BaselineParams& params);

struct BaselineGrads {
  Tensor weight;
  Tensor bias;
};

// Logits (N, K) for flattened inputs (N, D).
Tensor baseline_forward(const BaselineParams& params, const Tensor& x);
BaselineGrads baseline_backward(const BaselineParams& params, const Tensor& x,
                                const Tensor& grad_logits);
std::vector<int> baseline_predict(const BaselineParams& params, const Tensor& x);

bool bit_identical(const BaselineParams& a, const BaselineParams& b) noexcept;

}  // namespace cdcnn
