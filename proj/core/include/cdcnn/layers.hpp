#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cdcnn/rng.hpp"
#include "cdcnn/tensor.hpp"

// Forward/backward kernels for the circular dilated CNN. Every kernel is
// instantiated for float (training and inference) and double (gradient
// checking). Activations use the channels-first layout (N, C, T).
namespace cdcnn::layers {

enum class Mode { training, inference };

// 1D convolution along time with wrap-around padding. Output length equals
// input length because each side is padded by dilation * (kernel_size - 1) / 2.
struct ConvSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_size = 3;
  std::size_t dilation = 1;

  // Throws UsageError for even kernels, zero dilation or zero channels.
  void validate() const;
  std::size_t pad() const noexcept { return dilation * (kernel_size - 1) / 2; }
  // Number of input steps one output step reads: d * (k - 1) + 1.
  std::size_t footprint() const noexcept { return dilation * (kernel_size - 1) + 1; }
  Shape weight_shape() const { return {out_channels, in_channels, kernel_size}; }
};

template <typename T>
struct ConvGrads {
  BasicTensor<T> grad_x;
  BasicTensor<T> grad_w;
};

// y[n,o,t] = sum_{c,j} w[o,c,j] * x[n,c,(t + (j - (k-1)/2) * d) mod T]. No bias.
template <typename T>
BasicTensor<T> conv1d_circular_forward(const BasicTensor<T>& x, const ConvSpec& spec,
                                       const BasicTensor<T>& weights);

template <typename T>
ConvGrads<T> conv1d_circular_backward(const BasicTensor<T>& grad_y, const BasicTensor<T>& x,
                                      const BasicTensor<T>& weights, const ConvSpec& spec);

// Per-channel normalization pooled over the batch and time axes.
template <typename T>
struct BatchNormState {
  BasicTensor<T> gamma;
  BasicTensor<T> beta;
  BasicTensor<T> running_mean;
  BasicTensor<T> running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  // gamma = 1, beta = 0, running_mean = 0, running_var = 1.
  static BatchNormState identity(std::size_t channels);
  std::size_t channels() const noexcept { return gamma.size(); }
};

template <typename T>
struct BatchNormCache {
  Mode mode = Mode::training;
  BasicTensor<T> x_hat;
  std::vector<T> inv_std;
};

template <typename T>
struct BatchNormGrads {
  BasicTensor<T> grad_x;
  BasicTensor<T> grad_gamma;
  BasicTensor<T> grad_beta;
};

// Training mode normalizes with the batch statistics (biased variance) and
// folds them into the running estimates (unbiased variance) with `momentum`.
// Inference mode uses the running estimates and leaves the state untouched.
template <typename T>
BasicTensor<T> batchnorm_forward(const BasicTensor<T>& x, BatchNormState<T>& state, Mode mode,
                                 BatchNormCache<T>* cache = nullptr);

template <typename T>
BatchNormGrads<T> batchnorm_backward(const BasicTensor<T>& grad_y, const BatchNormCache<T>& cache,
                                     const BatchNormState<T>& state);

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& x);
// Gradient passes where the forward input was strictly positive.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& grad_y, const BasicTensor<T>& x);

// Inverted dropout. `mask` holds the per-element multiplier (0 or 1/(1-p));
// it is empty when the layer acted as the identity.
template <typename T>
struct DropoutResult {
  BasicTensor<T> y;
  std::vector<T> mask;
};

template <typename T>
DropoutResult<T> dropout_forward(const BasicTensor<T>& x, double p, Mode mode, Rng& rng);
template <typename T>
BasicTensor<T> dropout_backward(const BasicTensor<T>& grad_y, std::span<const T> mask);

// (N, C, T) -> (N, C), mean over time.
template <typename T>
BasicTensor<T> global_avg_pool_forward(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> global_avg_pool_backward(const BasicTensor<T>& grad_y, std::size_t time_steps);

template <typename T>
struct LinearGrads {
  BasicTensor<T> grad_x;
  BasicTensor<T> grad_w;
  BasicTensor<T> grad_b;
};

// x (N, in), weights (out, in), bias (out) -> (N, out).
template <typename T>
BasicTensor<T> linear_forward(const BasicTensor<T>& x, const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias);
template <typename T>
LinearGrads<T> linear_backward(const BasicTensor<T>& grad_y, const BasicTensor<T>& x,
                               const BasicTensor<T>& weights);

template <typename T>
struct LossResult {
  double loss = 0.0;
  BasicTensor<T> grad_logits;
};

// Mean negative log-likelihood of the labels under softmax(logits), with
// gradient (softmax - onehot) / N. Throws DataError for labels outside [0, K).
template <typename T>
LossResult<T> softmax_cross_entropy(const BasicTensor<T>& logits, std::span<const int> labels);

// Row-wise softmax of (N, K) logits.
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits);

}  // namespace cdcnn::layers
