#include "cdcnn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cdcnn/error.hpp"
#include "cdcnn/parallel.hpp"

namespace cdcnn::layers {

namespace {

// dst[t] += w * src[(t + shift) mod len] for t in [0, len), shift in [0, len).
template <typename T>
inline void axpy_circular(T* __restrict dst, const T* __restrict src, T w, std::size_t shift,
                          std::size_t len) {
  const std::size_t head = len - shift;
  const T* s = src + shift;
  for (std::size_t t = 0; t < head; ++t) dst[t] += w * s[t];
  T* d = dst + head;
  for (std::size_t t = 0; t < shift; ++t) d[t] += w * src[t];
}

// Dot product with eight fixed partial sums; the summation order depends only
// on n, so the result is reproducible while still vectorizing.
template <typename T>
inline T dot_lanes(const T* __restrict a, const T* __restrict b, std::size_t n) {
  T acc[8] = {};
  std::size_t t = 0;
  for (; t + 8 <= n; t += 8) {
    for (std::size_t l = 0; l < 8; ++l) acc[l] += a[t + l] * b[t + l];
  }
  T tail = 0;
  for (; t < n; ++t) tail += a[t] * b[t];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

// sum_t a[t] * b[(t + shift) mod len]
template <typename T>
inline T dot_circular(const T* a, const T* b, std::size_t shift, std::size_t len) {
  const std::size_t head = len - shift;
  return dot_lanes(a, b + shift, head) + dot_lanes(a + head, b, shift);
}

// Non-negative time offset of tap j: (j - (k-1)/2) * d mod len.
std::size_t tap_shift(const ConvSpec& spec, std::size_t j, std::size_t len) {
  const auto offset = (static_cast<long long>(j) - static_cast<long long>(spec.kernel_size / 2)) *
                      static_cast<long long>(spec.dilation);
  const auto n = static_cast<long long>(len);
  return static_cast<std::size_t>(((offset % n) + n) % n);
}

template <typename T>
void check_conv_input(const BasicTensor<T>& x, const ConvSpec& spec, const BasicTensor<T>& weights) {
  spec.validate();
  if (x.rank() != 3 || x.dim(1) != spec.in_channels) {
    throw ShapeError("conv1d: input must be (N," + std::to_string(spec.in_channels) +
                     ",T), got " + shape_to_string(x.shape()));
  }
  require_shape(weights, spec.weight_shape(), "conv1d weights");
  const std::size_t span = spec.dilation * (spec.kernel_size - 1);
  if (x.dim(2) <= span) {
    throw ShapeError("conv1d: sequence length " + std::to_string(x.dim(2)) +
                     " too short for footprint (need T > " + std::to_string(span) + ")");
  }
}

template <typename T>
void check_nchw(const BasicTensor<T>& x, std::string_view what) {
  if (x.rank() != 3) {
    throw ShapeError(std::string(what) + ": expected (N,C,T), got " + shape_to_string(x.shape()));
  }
}

}  // namespace

void ConvSpec::validate() const {
  if (in_channels == 0 || out_channels == 0) throw UsageError("conv: channel counts must be positive");
  if (kernel_size == 0 || kernel_size % 2 == 0) {
    throw UsageError("conv: kernel size must be odd, got " + std::to_string(kernel_size));
  }
  if (dilation == 0) throw UsageError("conv: dilation must be >= 1");
}

template <typename T>
BasicTensor<T> conv1d_circular_forward(const BasicTensor<T>& x, const ConvSpec& spec,
                                       const BasicTensor<T>& weights) {
  check_conv_input(x, spec, weights);
  const std::size_t n_batch = x.dim(0);
  const std::size_t c_in = spec.in_channels;
  const std::size_t c_out = spec.out_channels;
  const std::size_t k = spec.kernel_size;
  const std::size_t len = x.dim(2);

  std::vector<std::size_t> shifts(k);
  for (std::size_t j = 0; j < k; ++j) shifts[j] = tap_shift(spec, j, len);

  BasicTensor<T> y({n_batch, c_out, len});
  const T* xs = x.data().data();
  const T* ws = weights.data().data();
  T* ys = y.data().data();
  parallel_for(n_batch, [&](std::size_t n) {
    for (std::size_t o = 0; o < c_out; ++o) {
      T* y_row = ys + (n * c_out + o) * len;
      for (std::size_t c = 0; c < c_in; ++c) {
        const T* x_row = xs + (n * c_in + c) * len;
        const T* w = ws + (o * c_in + c) * k;
        for (std::size_t j = 0; j < k; ++j) axpy_circular(y_row, x_row, w[j], shifts[j], len);
      }
    }
  });
  return y;
}

template <typename T>
ConvGrads<T> conv1d_circular_backward(const BasicTensor<T>& grad_y, const BasicTensor<T>& x,
                                      const BasicTensor<T>& weights, const ConvSpec& spec) {
  check_conv_input(x, spec, weights);
  const std::size_t n_batch = x.dim(0);
  const std::size_t c_in = spec.in_channels;
  const std::size_t c_out = spec.out_channels;
  const std::size_t k = spec.kernel_size;
  const std::size_t len = x.dim(2);
  require_shape(grad_y, {n_batch, c_out, len}, "conv1d grad_y");

  std::vector<std::size_t> shifts(k), back_shifts(k);
  for (std::size_t j = 0; j < k; ++j) {
    shifts[j] = tap_shift(spec, j, len);
    back_shifts[j] = (len - shifts[j]) % len;
  }

  ConvGrads<T> g{BasicTensor<T>(x.shape()), BasicTensor<T>(weights.shape())};
  const T* xs = x.data().data();
  const T* ws = weights.data().data();
  const T* gys = grad_y.data().data();
  T* gxs = g.grad_x.data().data();
  T* gws = g.grad_w.data().data();

  // grad_x[n,c,u] = sum_{o,j} w[o,c,j] * grad_y[n,o,(u - shift_j) mod T]
  parallel_for(n_batch, [&](std::size_t n) {
    for (std::size_t c = 0; c < c_in; ++c) {
      T* gx_row = gxs + (n * c_in + c) * len;
      for (std::size_t o = 0; o < c_out; ++o) {
        const T* gy_row = gys + (n * c_out + o) * len;
        const T* w = ws + (o * c_in + c) * k;
        for (std::size_t j = 0; j < k; ++j) axpy_circular(gx_row, gy_row, w[j], back_shifts[j], len);
      }
    }
  });

  // grad_w[o,c,j] = sum_{n,t} grad_y[n,o,t] * x[n,c,(t + shift_j) mod T]
  parallel_for(c_out, [&](std::size_t o) {
    for (std::size_t n = 0; n < n_batch; ++n) {
      const T* gy_row = gys + (n * c_out + o) * len;
      for (std::size_t c = 0; c < c_in; ++c) {
        const T* x_row = xs + (n * c_in + c) * len;
        T* gw = gws + (o * c_in + c) * k;
        for (std::size_t j = 0; j < k; ++j) gw[j] += dot_circular(gy_row, x_row, shifts[j], len);
      }
    }
  });
  return g;
}

template <typename T>
BatchNormState<T> BatchNormState<T>::identity(std::size_t channels) {
  BatchNormState s;
  s.gamma = BasicTensor<T>({channels}, T{1});
  s.beta = BasicTensor<T>({channels}, T{0});
  s.running_mean = BasicTensor<T>({channels}, T{0});
  s.running_var = BasicTensor<T>({channels}, T{1});
  return s;
}

template <typename T>
BasicTensor<T> batchnorm_forward(const BasicTensor<T>& x, BatchNormState<T>& state, Mode mode,
                                 BatchNormCache<T>* cache) {
  check_nchw(x, "batchnorm");
  const std::size_t n_batch = x.dim(0);
  const std::size_t channels = x.dim(1);
  const std::size_t len = x.dim(2);
  require_shape(state.gamma, {channels}, "batchnorm gamma");
  require_shape(state.beta, {channels}, "batchnorm beta");
  require_shape(state.running_mean, {channels}, "batchnorm running_mean");
  require_shape(state.running_var, {channels}, "batchnorm running_var");
  for (std::size_t c = 0; c < channels; ++c) {
    if (state.running_var[c] < T{0}) {
      throw NumericError("batchnorm: negative running variance in channel " + std::to_string(c));
    }
  }
  const std::size_t count = n_batch * len;
  if (mode == Mode::training && count < 2) {
    throw UsageError("batchnorm: training mode needs N*T >= 2 values per channel, got " +
                     std::to_string(count));
  }

  std::vector<T> mean(channels), inv_std(channels);
  if (mode == Mode::training) {
    parallel_for(channels, [&](std::size_t c) {
      double sum = 0.0;
      for (std::size_t n = 0; n < n_batch; ++n) {
        const T* row = x.data().data() + (n * channels + c) * len;
        for (std::size_t t = 0; t < len; ++t) sum += static_cast<double>(row[t]);
      }
      const double mu = sum / static_cast<double>(count);
      double sq = 0.0;
      for (std::size_t n = 0; n < n_batch; ++n) {
        const T* row = x.data().data() + (n * channels + c) * len;
        for (std::size_t t = 0; t < len; ++t) {
          const double d = static_cast<double>(row[t]) - mu;
          sq += d * d;
        }
      }
      const double var = sq / static_cast<double>(count);
      mean[c] = static_cast<T>(mu);
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + state.eps));
      const double m = state.momentum;
      const double unbiased = sq / static_cast<double>(count - 1);
      state.running_mean[c] =
          static_cast<T>((1.0 - m) * static_cast<double>(state.running_mean[c]) + m * mu);
      state.running_var[c] =
          static_cast<T>((1.0 - m) * static_cast<double>(state.running_var[c]) + m * unbiased);
    });
  } else {
    for (std::size_t c = 0; c < channels; ++c) {
      mean[c] = state.running_mean[c];
      inv_std[c] =
          static_cast<T>(1.0 / std::sqrt(static_cast<double>(state.running_var[c]) + state.eps));
    }
  }

  BasicTensor<T> y(x.shape());
  BasicTensor<T> x_hat;
  if (cache) x_hat = BasicTensor<T>(x.shape());
  parallel_for(n_batch, [&](std::size_t n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t base = (n * channels + c) * len;
      const T* xr = x.data().data() + base;
      T* yr = y.data().data() + base;
      const T mu = mean[c];
      const T is = inv_std[c];
      const T g = state.gamma[c];
      const T b = state.beta[c];
      if (cache) {
        T* hr = x_hat.data().data() + base;
        for (std::size_t t = 0; t < len; ++t) {
          hr[t] = (xr[t] - mu) * is;
          yr[t] = g * hr[t] + b;
        }
      } else {
        for (std::size_t t = 0; t < len; ++t) yr[t] = g * ((xr[t] - mu) * is) + b;
      }
    }
  });
  if (cache) {
    cache->mode = mode;
    cache->x_hat = std::move(x_hat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

template <typename T>
BatchNormGrads<T> batchnorm_backward(const BasicTensor<T>& grad_y, const BatchNormCache<T>& cache,
                                     const BatchNormState<T>& state) {
  require_shape(grad_y, cache.x_hat.shape(), "batchnorm grad_y");
  const std::size_t n_batch = grad_y.dim(0);
  const std::size_t channels = grad_y.dim(1);
  const std::size_t len = grad_y.dim(2);
  const double count = static_cast<double>(n_batch * len);

  BatchNormGrads<T> g{BasicTensor<T>(grad_y.shape()), BasicTensor<T>({channels}),
                      BasicTensor<T>({channels})};
  parallel_for(channels, [&](std::size_t c) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (std::size_t n = 0; n < n_batch; ++n) {
      const std::size_t base = (n * channels + c) * len;
      const T* dy = grad_y.data().data() + base;
      const T* xh = cache.x_hat.data().data() + base;
      for (std::size_t t = 0; t < len; ++t) {
        sum_dy += static_cast<double>(dy[t]);
        sum_dy_xhat += static_cast<double>(dy[t]) * static_cast<double>(xh[t]);
      }
    }
    g.grad_beta[c] = static_cast<T>(sum_dy);
    g.grad_gamma[c] = static_cast<T>(sum_dy_xhat);

    const double gamma = static_cast<double>(state.gamma[c]);
    const double is = static_cast<double>(cache.inv_std[c]);
    for (std::size_t n = 0; n < n_batch; ++n) {
      const std::size_t base = (n * channels + c) * len;
      const T* dy = grad_y.data().data() + base;
      const T* xh = cache.x_hat.data().data() + base;
      T* dx = g.grad_x.data().data() + base;
      if (cache.mode == Mode::training) {
        // dx = gamma * inv_std / M * (M * dy - sum(dy) - x_hat * sum(dy * x_hat))
        const double scale = gamma * is / count;
        for (std::size_t t = 0; t < len; ++t) {
          dx[t] = static_cast<T>(scale * (count * static_cast<double>(dy[t]) - sum_dy -
                                          static_cast<double>(xh[t]) * sum_dy_xhat));
        }
      } else {
        const T scale = static_cast<T>(gamma * is);
        for (std::size_t t = 0; t < len; ++t) dx[t] = scale * dy[t];
      }
    }
  });
  return g;
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& x) {
  BasicTensor<T> y(x.shape());
  auto xs = x.data();
  auto ys = y.data();
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = xs[i] > T{0} ? xs[i] : T{0};
  return y;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& grad_y, const BasicTensor<T>& x) {
  require_shape(grad_y, x.shape(), "relu grad_y");
  BasicTensor<T> g(x.shape());
  auto xs = x.data();
  auto gy = grad_y.data();
  auto gx = g.data();
  for (std::size_t i = 0; i < xs.size(); ++i) gx[i] = xs[i] > T{0} ? gy[i] : T{0};
  return g;
}

template <typename T>
DropoutResult<T> dropout_forward(const BasicTensor<T>& x, double p, Mode mode, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw UsageError("dropout: rate must be in [0, 1), got " + std::to_string(p));
  }
  DropoutResult<T> r;
  if (mode == Mode::inference || p == 0.0) {
    r.y = x;
    return r;
  }
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  const auto threshold = static_cast<float>(p);
  r.mask.resize(x.size());
  r.y = BasicTensor<T>(x.shape());
  auto xs = x.data();
  auto ys = r.y.data();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    r.mask[i] = rng.uniform() < threshold ? T{0} : keep_scale;
    ys[i] = xs[i] * r.mask[i];
  }
  return r;
}

template <typename T>
BasicTensor<T> dropout_backward(const BasicTensor<T>& grad_y, std::span<const T> mask) {
  if (mask.empty()) return grad_y;
  if (mask.size() != grad_y.size()) throw ShapeError("dropout: mask does not match gradient");
  BasicTensor<T> g(grad_y.shape());
  auto gy = grad_y.data();
  auto gx = g.data();
  for (std::size_t i = 0; i < gy.size(); ++i) gx[i] = gy[i] * mask[i];
  return g;
}

template <typename T>
BasicTensor<T> global_avg_pool_forward(const BasicTensor<T>& x) {
  check_nchw(x, "global_avg_pool");
  const std::size_t rows = x.dim(0) * x.dim(1);
  const std::size_t len = x.dim(2);
  BasicTensor<T> y({x.dim(0), x.dim(1)});
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data().data() + r * len;
    double sum = 0.0;
    for (std::size_t t = 0; t < len; ++t) sum += static_cast<double>(xr[t]);
    y[r] = static_cast<T>(sum / static_cast<double>(len));
  }
  return y;
}

template <typename T>
BasicTensor<T> global_avg_pool_backward(const BasicTensor<T>& grad_y, std::size_t time_steps) {
  if (grad_y.rank() != 2 || time_steps == 0) {
    throw ShapeError("global_avg_pool backward: expected (N,C) gradient and T > 0");
  }
  BasicTensor<T> g({grad_y.dim(0), grad_y.dim(1), time_steps});
  const T inv = static_cast<T>(1.0 / static_cast<double>(time_steps));
  for (std::size_t r = 0; r < grad_y.size(); ++r) {
    T* gr = g.data().data() + r * time_steps;
    std::fill(gr, gr + time_steps, grad_y[r] * inv);
  }
  return g;
}

template <typename T>
BasicTensor<T> linear_forward(const BasicTensor<T>& x, const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias) {
  if (x.rank() != 2 || weights.rank() != 2 || weights.dim(1) != x.dim(1)) {
    throw ShapeError("linear: input " + shape_to_string(x.shape()) + " incompatible with weights " +
                     shape_to_string(weights.shape()));
  }
  const std::size_t n_batch = x.dim(0);
  const std::size_t in = x.dim(1);
  const std::size_t out = weights.dim(0);
  require_shape(bias, {out}, "linear bias");
  BasicTensor<T> y({n_batch, out});
  parallel_for(n_batch, [&](std::size_t n) {
    const T* xr = x.data().data() + n * in;
    for (std::size_t o = 0; o < out; ++o) {
      y.at(n, o) = bias[o] + dot_lanes(weights.data().data() + o * in, xr, in);
    }
  });
  return y;
}

template <typename T>
LinearGrads<T> linear_backward(const BasicTensor<T>& grad_y, const BasicTensor<T>& x,
                               const BasicTensor<T>& weights) {
  const std::size_t n_batch = x.dim(0);
  const std::size_t in = x.dim(1);
  const std::size_t out = weights.dim(0);
  require_shape(grad_y, {n_batch, out}, "linear grad_y");
  require_shape(weights, {out, in}, "linear weights");
  LinearGrads<T> g{BasicTensor<T>(x.shape()), BasicTensor<T>(weights.shape()),
                   BasicTensor<T>({out})};
  parallel_for(n_batch, [&](std::size_t n) {
    T* gx = g.grad_x.data().data() + n * in;
    for (std::size_t o = 0; o < out; ++o) {
      const T gy = grad_y.at(n, o);
      const T* w = weights.data().data() + o * in;
      for (std::size_t i = 0; i < in; ++i) gx[i] += gy * w[i];
    }
  });
  parallel_for(out, [&](std::size_t o) {
    T* gw = g.grad_w.data().data() + o * in;
    double gb = 0.0;
    for (std::size_t n = 0; n < n_batch; ++n) {
      const T gy = grad_y.at(n, o);
      const T* xr = x.data().data() + n * in;
      for (std::size_t i = 0; i < in; ++i) gw[i] += gy * xr[i];
      gb += static_cast<double>(gy);
    }
    g.grad_b[o] = static_cast<T>(gb);
  });
  return g;
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits) {
  if (logits.rank() != 2) throw ShapeError("softmax: expected (N,K) logits");
  const std::size_t n_batch = logits.dim(0);
  const std::size_t k = logits.dim(1);
  BasicTensor<T> p(logits.shape());
  for (std::size_t n = 0; n < n_batch; ++n) {
    const T* z = logits.data().data() + n * k;
    const double zmax = static_cast<double>(*std::max_element(z, z + k));
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += std::exp(static_cast<double>(z[j]) - zmax);
    for (std::size_t j = 0; j < k; ++j) {
      p.at(n, j) = static_cast<T>(std::exp(static_cast<double>(z[j]) - zmax) / total);
    }
  }
  return p;
}

template <typename T>
LossResult<T> softmax_cross_entropy(const BasicTensor<T>& logits, std::span<const int> labels) {
  if (logits.rank() != 2) throw ShapeError("cross_entropy: expected (N,K) logits");
  const std::size_t n_batch = logits.dim(0);
  const std::size_t k = logits.dim(1);
  if (labels.size() != n_batch) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n_batch) + " rows");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw DataError("cross_entropy: label " + std::to_string(y) + " outside [0," +
                      std::to_string(k) + ")");
    }
  }
  LossResult<T> r{0.0, BasicTensor<T>(logits.shape())};
  const double inv_n = 1.0 / static_cast<double>(n_batch);
  double total = 0.0;
  for (std::size_t n = 0; n < n_batch; ++n) {
    const T* z = logits.data().data() + n * k;
    const double zmax = static_cast<double>(*std::max_element(z, z + k));
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) denom += std::exp(static_cast<double>(z[j]) - zmax);
    const double log_denom = std::log(denom);
    const auto y = static_cast<std::size_t>(labels[n]);
    total += -(static_cast<double>(z[y]) - zmax - log_denom);
    for (std::size_t j = 0; j < k; ++j) {
      const double pj = std::exp(static_cast<double>(z[j]) - zmax - log_denom);
      r.grad_logits.at(n, j) = static_cast<T>((pj - (j == y ? 1.0 : 0.0)) * inv_n);
    }
  }
  r.loss = total * inv_n;
  return r;
}

#define CDCNN_INSTANTIATE_LAYERS(T)                                                                \
  template BasicTensor<T> conv1d_circular_forward(const BasicTensor<T>&, const ConvSpec&,          \
                                                  const BasicTensor<T>&);                          \
  template ConvGrads<T> conv1d_circular_backward(const BasicTensor<T>&, const BasicTensor<T>&,     \
                                                 const BasicTensor<T>&, const ConvSpec&);          \
  template struct BatchNormState<T>;                                                               \
  template BasicTensor<T> batchnorm_forward(const BasicTensor<T>&, BatchNormState<T>&, Mode,       \
                                            BatchNormCache<T>*);                                   \
  template BatchNormGrads<T> batchnorm_backward(const BasicTensor<T>&, const BatchNormCache<T>&,   \
                                                const BatchNormState<T>&);                         \
  template BasicTensor<T> relu_forward(const BasicTensor<T>&);                                     \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);             \
  template DropoutResult<T> dropout_forward(const BasicTensor<T>&, double, Mode, Rng&);            \
  template BasicTensor<T> dropout_backward(const BasicTensor<T>&, std::span<const T>);             \
  template BasicTensor<T> global_avg_pool_forward(const BasicTensor<T>&);                          \
  template BasicTensor<T> global_avg_pool_backward(const BasicTensor<T>&, std::size_t);            \
  template BasicTensor<T> linear_forward(const BasicTensor<T>&, const BasicTensor<T>&,             \
                                         const BasicTensor<T>&);                                   \
  template LinearGrads<T> linear_backward(const BasicTensor<T>&, const BasicTensor<T>&,            \
                                          const BasicTensor<T>&);                                  \
  template BasicTensor<T> softmax(const BasicTensor<T>&);                                          \
  template LossResult<T> softmax_cross_entropy(const BasicTensor<T>&, std::span<const int>);

CDCNN_INSTANTIATE_LAYERS(float)
CDCNN_INSTANTIATE_LAYERS(double)

#undef CDCNN_INSTANTIATE_LAYERS

}  // namespace cdcnn::layers
