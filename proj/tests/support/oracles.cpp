#include "oracles.hpp"

#include <algorithm>
#include <cmath>

#include "cdcnn/rng.hpp"

namespace cdcnn::testing {

TensorD naive_conv1d_circular(const TensorD& x, const TensorD& w, std::size_t dilation) {
  const std::size_t n_batch = x.dim(0), c_in = x.dim(1), len = x.dim(2);
  const std::size_t c_out = w.dim(0), k = w.dim(2);
  const std::size_t pad = dilation * (k - 1) / 2;
  TensorD y({n_batch, c_out, len});
  for (std::size_t n = 0; n < n_batch; ++n) {
    for (std::size_t c = 0; c < c_in; ++c) {
      // padded[p] = x[(p - pad) mod len]
      std::vector<double> padded(len + 2 * pad);
      for (std::size_t p = 0; p < padded.size(); ++p) {
        const long long src = (static_cast<long long>(p) - static_cast<long long>(pad) +
                               4 * static_cast<long long>(len)) % static_cast<long long>(len);
        padded[p] = x.at(n, c, static_cast<std::size_t>(src));
      }
      for (std::size_t o = 0; o < c_out; ++o) {
        for (std::size_t t = 0; t < len; ++t) {
          double acc = 0.0;
          for (std::size_t j = 0; j < k; ++j) acc += w.at(o, c, j) * padded[t + j * dilation];
          y.at(n, o, t) += acc;
        }
      }
    }
  }
  return y;
}

template <typename T>
std::vector<double> finite_difference(const std::function<double()>& loss, BasicTensor<T>& param, double step) {
  std::vector<double> grad(param.size());
  for (std::size_t i = 0; i < param.size(); ++i) {
    const T saved = param[i];
    param[i] = static_cast<T>(static_cast<double>(saved) + step);
    const double up = loss();
    param[i] = static_cast<T>(static_cast<double>(saved) - step);
    const double down = loss();
    // The actual perturbation may differ from `step` after rounding to T.
    const double span = static_cast<double>(static_cast<T>(static_cast<double>(saved) + step)) -
                        static_cast<double>(static_cast<T>(static_cast<double>(saved) - step));
    param[i] = saved;
    grad[i] = (up - down) / span;
  }
  return grad;
}

template <typename T>
GradCheck compare_gradients(std::span<const T> analytic, std::span<const double> numeric, double floor) {
  GradCheck g;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = static_cast<double>(analytic[i]);
    const double n = numeric[i];
    const double denom = std::max({std::abs(a), std::abs(n), floor});
    const double rel = std::abs(a - n) / denom;
    if (i == 0 || rel > g.max_rel_error) {
      g.max_rel_error = rel;
      g.worst_index = i;
      g.analytic = a;
      g.numeric = n;
    }
  }
  return g;
}

std::size_t parameter_count_formula(const ModelConfig& c) {
  const std::size_t blocks = c.dilations.size();
  return c.in_channels * c.hidden * c.kernel_size + (blocks - 1) * c.hidden * c.hidden * c.kernel_size +
         blocks * 2 * c.hidden + c.hidden * c.num_classes + c.num_classes;
}

template <typename T>
BasicTensor<T> random_like(const Shape& shape, std::uint64_t seed, double lo, double hi) {
  Rng rng(seed);
  BasicTensor<T> t(shape);
  for (auto& v : t.data()) v = static_cast<T>(lo + (hi - lo) * rng.uniform_double());
  return t;
}

template <typename T>
double weighted_sum(const BasicTensor<T>& y, const BasicTensor<T>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += static_cast<double>(y[i]) * static_cast<double>(w[i]);
  return s;
}

template std::vector<double> finite_difference(const std::function<double()>&, BasicTensor<float>&, double);
template std::vector<double> finite_difference(const std::function<double()>&, BasicTensor<double>&, double);
template GradCheck compare_gradients(std::span<const float>, std::span<const double>, double);
template GradCheck compare_gradients(std::span<const double>, std::span<const double>, double);
template BasicTensor<float> random_like(const Shape&, std::uint64_t, double, double);
template BasicTensor<double> random_like(const Shape&, std::uint64_t, double, double);
template double weighted_sum(const BasicTensor<float>&, const BasicTensor<float>&);
template double weighted_sum(const BasicTensor<double>&, const BasicTensor<double>&);

}  // namespace cdcnn::testing
