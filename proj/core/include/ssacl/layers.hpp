#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ssacl/parallel.hpp"
#include "ssacl/rng.hpp"
#include "ssacl/tensor.hpp"

namespace ssacl {

enum class Mode { train, eval };

template <typename T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<MatX<T>>;
template <typename T>
using MapConstMat = Eigen::Map<const MatX<T>>;

namespace detail {
template <typename T>
void kaiming_uniform(TensorT<T>& w, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : w.values) v = static_cast<T>(rng.uniform(-bound, bound));
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Dense (fully connected): y = x W + b
// ---------------------------------------------------------------------------

template <typename T>
struct DenseCtx {
  TensorT<T> input;  // (B, in)
  bool valid = false;
};

template <typename T>
struct Dense {
  std::size_t in_dim = 0, out_dim = 0;
  TensorT<T> weight;  // (in, out)
  TensorT<T> bias;    // (out)

  Dense() = default;
  Dense(std::size_t in, std::size_t out, Rng& rng) : in_dim(in), out_dim(out) {
    weight = TensorT<T>({in, out});
    bias = TensorT<T>({out});
    detail::kaiming_uniform(weight, in, rng);
    weight.ensure_grad();
    bias.ensure_grad();
  }

  TensorT<T> forward(const TensorT<T>& x, DenseCtx<T>* ctx) const {
    check_shape(x, {0, in_dim}, "Dense::forward");
    const std::size_t batch = x.dim(0);
    TensorT<T> y({batch, out_dim});
    MapConstMat<T> xm(x.values.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(in_dim));
    MapConstMat<T> wm(weight.values.data(), static_cast<Eigen::Index>(in_dim), static_cast<Eigen::Index>(out_dim));
    MapMat<T> ym(y.values.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(out_dim));
    ym.noalias() = xm * wm;
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t o = 0; o < out_dim; ++o) y.values[b * out_dim + o] += bias.values[o];
    }
    if (ctx != nullptr) {
      ctx->input = x;
      ctx->valid = true;
    }
    return y;
  }

  TensorT<T> backward(DenseCtx<T>& ctx, const TensorT<T>& dy) {
    if (!ctx.valid) throw StateError("Dense::backward called without a recorded forward pass");
    const std::size_t batch = ctx.input.dim(0);
    check_shape(dy, {batch, out_dim}, "Dense::backward");

    MapConstMat<T> xm(ctx.input.values.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(in_dim));
    MapConstMat<T> dym(dy.values.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(out_dim));
    MapConstMat<T> wm(weight.values.data(), static_cast<Eigen::Index>(in_dim), static_cast<Eigen::Index>(out_dim));

    weight.ensure_grad();
    bias.ensure_grad();
    MapMat<T> dwm(weight.grad.data(), static_cast<Eigen::Index>(in_dim), static_cast<Eigen::Index>(out_dim));
    dwm.noalias() += xm.transpose() * dym;
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t o = 0; o < out_dim; ++o) bias.grad[o] += dy.values[b * out_dim + o];
    }

    TensorT<T> dx({batch, in_dim});
    MapMat<T> dxm(dx.values.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(in_dim));
    dxm.noalias() = dym * wm.transpose();
    ctx.valid = false;
    return dx;
  }
};

// ---------------------------------------------------------------------------
// Conv2d with square kernel, zero padding kernel/2, configurable stride.
// Implemented as im2col + GEMM.
// ---------------------------------------------------------------------------

template <typename T>
struct Conv2dCtx {
  std::vector<T> col;  // (B*H_out*W_out, in_ch*k*k), row-major
  std::size_t batch = 0, in_h = 0, in_w = 0, out_h = 0, out_w = 0;
  bool valid = false;
};

template <typename T>
struct Conv2d {
  std::size_t in_ch = 0, out_ch = 0, kernel = 3, stride = 1;
  TensorT<T> weight;  // (out_ch, in_ch, k, k)
  TensorT<T> bias;    // (out_ch)

  Conv2d() = default;
  Conv2d(std::size_t in_c, std::size_t out_c, std::size_t k, std::size_t s, Rng& rng)
      : in_ch(in_c), out_ch(out_c), kernel(k), stride(s) {
    weight = TensorT<T>({out_c, in_c, k, k});
    bias = TensorT<T>({out_c});
    detail::kaiming_uniform(weight, in_c * k * k, rng);
    weight.ensure_grad();
    bias.ensure_grad();
  }

  std::size_t out_size(std::size_t in) const {
    const std::size_t pad = kernel / 2;
    return (in + 2 * pad - kernel) / stride + 1;
  }

  TensorT<T> forward(const TensorT<T>& x, Conv2dCtx<T>* ctx) const {
    check_shape(x, {0, in_ch, 0, 0}, "Conv2d::forward");
    const std::size_t batch = x.dim(0), in_h = x.dim(2), in_w = x.dim(3);
    const std::size_t out_h = out_size(in_h), out_w = out_size(in_w);
    const std::size_t patch = in_ch * kernel * kernel;
    const std::size_t pixels = out_h * out_w;

    std::vector<T> col(batch * pixels * patch);
    im2col(x, col, batch, in_h, in_w, out_h, out_w);

    TensorT<T> y({batch, out_ch, out_h, out_w});
    // y_mat (B*pixels, out_ch) = col (B*pixels, patch) * W^T
    MatX<T> y_mat(static_cast<Eigen::Index>(batch * pixels), static_cast<Eigen::Index>(out_ch));
    {
      MapConstMat<T> colm(col.data(), static_cast<Eigen::Index>(batch * pixels), static_cast<Eigen::Index>(patch));
      MapConstMat<T> wm(weight.values.data(), static_cast<Eigen::Index>(out_ch), static_cast<Eigen::Index>(patch));
      y_mat.noalias() = colm * wm.transpose();
    }
    parallel_for(batch, [&](std::size_t b) {
      for (std::size_t c = 0; c < out_ch; ++c) {
        T* dst = y.values.data() + (b * out_ch + c) * pixels;
        const T bc = bias.values[c];
        for (std::size_t p = 0; p < pixels; ++p) dst[p] = y_mat(static_cast<Eigen::Index>(b * pixels + p), static_cast<Eigen::Index>(c)) + bc;
      }
    });

    if (ctx != nullptr) {
      ctx->col = std::move(col);
      ctx->batch = batch;
      ctx->in_h = in_h;
      ctx->in_w = in_w;
      ctx->out_h = out_h;
      ctx->out_w = out_w;
      ctx->valid = true;
    }
    return y;
  }

  TensorT<T> backward(Conv2dCtx<T>& ctx, const TensorT<T>& dy) {
    if (!ctx.valid) throw StateError("Conv2d::backward called without a recorded forward pass");
    const std::size_t batch = ctx.batch, out_h = ctx.out_h, out_w = ctx.out_w;
    check_shape(dy, {batch, out_ch, out_h, out_w}, "Conv2d::backward");
    const std::size_t patch = in_ch * kernel * kernel;
    const std::size_t pixels = out_h * out_w;

    // (B*pixels, out_ch) view of dy.
    MatX<T> dy_mat(static_cast<Eigen::Index>(batch * pixels), static_cast<Eigen::Index>(out_ch));
    parallel_for(batch, [&](std::size_t b) {
      for (std::size_t c = 0; c < out_ch; ++c) {
        const T* src = dy.values.data() + (b * out_ch + c) * pixels;
        for (std::size_t p = 0; p < pixels; ++p) dy_mat(static_cast<Eigen::Index>(b * pixels + p), static_cast<Eigen::Index>(c)) = src[p];
      }
    });

    weight.ensure_grad();
    bias.ensure_grad();
    {
      MapConstMat<T> colm(ctx.col.data(), static_cast<Eigen::Index>(batch * pixels), static_cast<Eigen::Index>(patch));
      MapMat<T> dwm(weight.grad.data(), static_cast<Eigen::Index>(out_ch), static_cast<Eigen::Index>(patch));
      dwm.noalias() += dy_mat.transpose() * colm;
      for (std::size_t c = 0; c < out_ch; ++c) bias.grad[c] += dy_mat.col(static_cast<Eigen::Index>(c)).sum();
    }

    // dX via col2im of dy_mat * W.
    MatX<T> dcol(static_cast<Eigen::Index>(batch * pixels), static_cast<Eigen::Index>(patch));
    {
      MapConstMat<T> wm(weight.values.data(), static_cast<Eigen::Index>(out_ch), static_cast<Eigen::Index>(patch));
      dcol.noalias() = dy_mat * wm;
    }
    TensorT<T> dx({batch, in_ch, ctx.in_h, ctx.in_w});
    col2im(dcol, dx, batch, ctx.in_h, ctx.in_w, out_h, out_w);
    ctx.valid = false;
    ctx.col.clear();
    ctx.col.shrink_to_fit();
    return dx;
  }

 private:
  void im2col(const TensorT<T>& x, std::vector<T>& col, std::size_t batch, std::size_t in_h,
              std::size_t in_w, std::size_t out_h, std::size_t out_w) const {
    const std::size_t patch = in_ch * kernel * kernel;
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(kernel / 2);
    parallel_for(batch, [&](std::size_t b) {
      const T* xb = x.values.data() + b * in_ch * in_h * in_w;
      T* colb = col.data() + b * out_h * out_w * patch;
      for (std::size_t oy = 0; oy < out_h; ++oy) {
        for (std::size_t ox = 0; ox < out_w; ++ox) {
          T* row = colb + (oy * out_w + ox) * patch;
          std::size_t idx = 0;
          for (std::size_t ci = 0; ci < in_ch; ++ci) {
            for (std::size_t ky = 0; ky < kernel; ++ky) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - pad;
              for (std::size_t kx = 0; kx < kernel; ++kx, ++idx) {
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - pad;
                row[idx] = (iy >= 0 && iy < static_cast<std::ptrdiff_t>(in_h) && ix >= 0 &&
                            ix < static_cast<std::ptrdiff_t>(in_w))
                               ? xb[(ci * in_h + static_cast<std::size_t>(iy)) * in_w + static_cast<std::size_t>(ix)]
                               : T(0);
              }
            }
          }
        }
      }
    });
  }

  void col2im(const MatX<T>& dcol, TensorT<T>& dx, std::size_t batch, std::size_t in_h,
              std::size_t in_w, std::size_t out_h, std::size_t out_w) const {
    const std::size_t patch = in_ch * kernel * kernel;
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(kernel / 2);
    parallel_for(batch, [&](std::size_t b) {
      T* dxb = dx.values.data() + b * in_ch * in_h * in_w;
      for (std::size_t oy = 0; oy < out_h; ++oy) {
        for (std::size_t ox = 0; ox < out_w; ++ox) {
          const Eigen::Index row = static_cast<Eigen::Index>((b * out_h + oy) * out_w + ox);
          std::size_t idx = 0;
          for (std::size_t ci = 0; ci < in_ch; ++ci) {
            for (std::size_t ky = 0; ky < kernel; ++ky) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - pad;
              for (std::size_t kx = 0; kx < kernel; ++kx, ++idx) {
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - pad;
                if (iy >= 0 && iy < static_cast<std::ptrdiff_t>(in_h) && ix >= 0 &&
                    ix < static_cast<std::ptrdiff_t>(in_w)) {
                  dxb[(ci * in_h + static_cast<std::size_t>(iy)) * in_w + static_cast<std::size_t>(ix)] +=
                      dcol(row, static_cast<Eigen::Index>(idx));
                }
              }
            }
          }
        }
      }
    });
  }
};

// ---------------------------------------------------------------------------
// Batch normalization over (B, C) or (B, C, H, W); statistics per channel.
// ---------------------------------------------------------------------------

template <typename T>
struct BatchNormCtx {
  std::vector<T> xhat;     // normalized input, same layout as x
  std::vector<T> inv_std;  // per channel
  std::size_t batch = 0, channels = 0, spatial = 0;
  Mode mode = Mode::train;
  bool valid = false;
};

template <typename T>
struct BatchNorm {
  std::size_t channels = 0;
  T momentum = T(0.9);
  T eps = T(1e-5);
  TensorT<T> gamma, beta;              // trainable
  TensorT<T> running_mean, running_var;  // buffers

  BatchNorm() = default;
  explicit BatchNorm(std::size_t c) : channels(c) {
    gamma = TensorT<T>({c});
    beta = TensorT<T>({c});
    running_mean = TensorT<T>({c});
    running_var = TensorT<T>({c});
    std::fill(gamma.values.begin(), gamma.values.end(), T(1));
    std::fill(running_var.values.begin(), running_var.values.end(), T(1));
    gamma.ensure_grad();
    beta.ensure_grad();
  }

  // x is (B, C) when rank 2, (B, C, H, W) when rank 4.
  TensorT<T> forward(const TensorT<T>& x, Mode mode, BatchNormCtx<T>* ctx) {
    const auto [batch, spatial] = dims(x);
    TensorT<T> y(x.shape);
    std::vector<T> xhat(x.values.size());
    std::vector<T> inv_std(channels);

    const std::size_t n = batch * spatial;
    parallel_for(channels, [&](std::size_t c) {
      double mean, var;
      if (mode == Mode::train) {
        double acc = 0.0;
        for_channel(x, batch, spatial, c, [&](const T v, std::size_t) { acc += static_cast<double>(v); });
        mean = acc / static_cast<double>(n);
        double vacc = 0.0;
        for_channel(x, batch, spatial, c, [&](const T v, std::size_t) {
          const double d = static_cast<double>(v) - mean;
          vacc += d * d;
        });
        var = vacc / static_cast<double>(n);  // biased, as used for normalization
        running_mean.values[c] = static_cast<T>(momentum * running_mean.values[c] + (T(1) - momentum) * static_cast<T>(mean));
        running_var.values[c] = static_cast<T>(momentum * running_var.values[c] + (T(1) - momentum) * static_cast<T>(var));
      } else {
        mean = static_cast<double>(running_mean.values[c]);
        var = static_cast<double>(running_var.values[c]);
      }
      const T istd = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
      inv_std[c] = istd;
      const T g = gamma.values[c], bshift = beta.values[c], m = static_cast<T>(mean);
      for_channel(x, batch, spatial, c, [&](const T v, std::size_t i) {
        const T xh = (v - m) * istd;
        xhat[i] = xh;
        y.values[i] = g * xh + bshift;
      });
    });

    if (ctx != nullptr) {
      ctx->xhat = std::move(xhat);
      ctx->inv_std = std::move(inv_std);
      ctx->batch = batch;
      ctx->channels = channels;
      ctx->spatial = spatial;
      ctx->mode = mode;
      ctx->valid = true;
    }
    return y;
  }

  TensorT<T> backward(BatchNormCtx<T>& ctx, const TensorT<T>& dy) {
    if (!ctx.valid) throw StateError("BatchNorm::backward called without a recorded forward pass");
    const std::size_t batch = ctx.batch, spatial = ctx.spatial;
    if (dy.values.size() != ctx.xhat.size()) {
      throw ConfigError("BatchNorm::backward: gradient shape mismatch");
    }
    gamma.ensure_grad();
    beta.ensure_grad();

    TensorT<T> dx(dy.shape);
    const std::size_t n = batch * spatial;
    parallel_for(channels, [&](std::size_t c) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for_channel(dy, batch, spatial, c, [&](const T v, std::size_t i) {
        sum_dy += static_cast<double>(v);
        sum_dy_xhat += static_cast<double>(v) * static_cast<double>(ctx.xhat[i]);
      });
      gamma.grad[c] += static_cast<T>(sum_dy_xhat);
      beta.grad[c] += static_cast<T>(sum_dy);

      const double g = static_cast<double>(gamma.values[c]);
      const double istd = static_cast<double>(ctx.inv_std[c]);
      if (ctx.mode == Mode::train) {
        const double k = g * istd / static_cast<double>(n);
        for_channel(dy, batch, spatial, c, [&](const T v, std::size_t i) {
          dx.values[i] = static_cast<T>(
              k * (static_cast<double>(n) * static_cast<double>(v) - sum_dy -
                   static_cast<double>(ctx.xhat[i]) * sum_dy_xhat));
        });
      } else {
        const double k = g * istd;
        for_channel(dy, batch, spatial, c, [&](const T v, std::size_t i) {
          dx.values[i] = static_cast<T>(k * static_cast<double>(v));
        });
      }
    });
    ctx.valid = false;
    return dx;
  }

 private:
  std::pair<std::size_t, std::size_t> dims(const TensorT<T>& x) const {
    if (x.shape.size() == 2) {
      check_shape(x, {0, channels}, "BatchNorm::forward");
      return {x.dim(0), 1};
    }
    check_shape(x, {0, channels, 0, 0}, "BatchNorm::forward");
    return {x.dim(0), x.dim(2) * x.dim(3)};
  }

  template <class F>
  static void for_channel(const TensorT<T>& x, std::size_t batch, std::size_t spatial,
                          std::size_t c, F&& f) {
    const std::size_t channels = x.shape[1];
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t base = (b * channels + c) * spatial;
      for (std::size_t s = 0; s < spatial; ++s) f(x.values[base + s], base + s);
    }
  }
};

// ---------------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------------

template <typename T>
struct ReluCtx {
  std::vector<std::uint8_t> mask;
  bool valid = false;
};

template <typename T>
struct Relu {
  TensorT<T> forward(const TensorT<T>& x, ReluCtx<T>* ctx) const {
    TensorT<T> y(x.shape);
    std::vector<std::uint8_t> mask(x.values.size());
    for (std::size_t i = 0; i < x.values.size(); ++i) {
      const bool pos = x.values[i] > T(0);
      mask[i] = pos;
      y.values[i] = pos ? x.values[i] : T(0);
    }
    if (ctx != nullptr) {
      ctx->mask = std::move(mask);
      ctx->valid = true;
    }
    return y;
  }

  TensorT<T> backward(ReluCtx<T>& ctx, const TensorT<T>& dy) const {
    if (!ctx.valid) throw StateError("Relu::backward called without a recorded forward pass");
    TensorT<T> dx(dy.shape);
    for (std::size_t i = 0; i < dy.values.size(); ++i) {
      dx.values[i] = ctx.mask[i] ? dy.values[i] : T(0);
    }
    ctx.valid = false;
    return dx;
  }
};

// ---------------------------------------------------------------------------
// Global average pooling (B, C, H, W) -> (B, C)
// ---------------------------------------------------------------------------

template <typename T>
struct GapCtx {
  std::size_t h = 0, w = 0;
  bool valid = false;
};

template <typename T>
struct GlobalAvgPool {
  TensorT<T> forward(const TensorT<T>& x, GapCtx<T>* ctx) const {
    check_shape(x, {0, 0, 0, 0}, "GlobalAvgPool::forward");
    const std::size_t batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
    TensorT<T> y({batch, ch});
    const double inv = 1.0 / static_cast<double>(h * w);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t c = 0; c < ch; ++c) {
        const T* src = x.values.data() + (b * ch + c) * h * w;
        double acc = 0.0;
        for (std::size_t i = 0; i < h * w; ++i) acc += static_cast<double>(src[i]);
        y.values[b * ch + c] = static_cast<T>(acc * inv);
      }
    }
    if (ctx != nullptr) {
      ctx->h = h;
      ctx->w = w;
      ctx->valid = true;
    }
    return y;
  }

  TensorT<T> backward(GapCtx<T>& ctx, const TensorT<T>& dy) const {
    if (!ctx.valid) throw StateError("GlobalAvgPool::backward called without a recorded forward pass");
    check_shape(dy, {0, 0}, "GlobalAvgPool::backward");
    const std::size_t batch = dy.dim(0), ch = dy.dim(1), h = ctx.h, w = ctx.w;
    TensorT<T> dx({batch, ch, h, w});
    const T inv = static_cast<T>(1.0 / static_cast<double>(h * w));
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t c = 0; c < ch; ++c) {
        T* dst = dx.values.data() + (b * ch + c) * h * w;
        const T v = dy.values[b * ch + c] * inv;
        for (std::size_t i = 0; i < h * w; ++i) dst[i] = v;
      }
    }
    ctx.valid = false;
    return dx;
  }
};

// ---------------------------------------------------------------------------
// Row-wise L2 normalization: y = x / (||x|| + 1e-12)
// ---------------------------------------------------------------------------

template <typename T>
struct L2NormCtx {
  TensorT<T> input;
  std::vector<T> norm;  // per row, before the epsilon
  bool valid = false;
};

template <typename T>
struct L2NormalizeRows {
  static constexpr double kEps = 1e-12;

  TensorT<T> forward(const TensorT<T>& x, L2NormCtx<T>* ctx) const {
    check_shape(x, {0, 0}, "L2NormalizeRows::forward");
    const std::size_t batch = x.dim(0), dim = x.dim(1);
    TensorT<T> y(x.shape);
    std::vector<T> norms(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      double acc = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double v = static_cast<double>(x.values[b * dim + d]);
        acc += v * v;
      }
      const double norm = std::sqrt(acc);
      norms[b] = static_cast<T>(norm);
      const double denom = norm + kEps;
      for (std::size_t d = 0; d < dim; ++d) {
        y.values[b * dim + d] = static_cast<T>(static_cast<double>(x.values[b * dim + d]) / denom);
      }
    }
    if (ctx != nullptr) {
      ctx->input = x;
      ctx->norm = std::move(norms);
      ctx->valid = true;
    }
    return y;
  }

  TensorT<T> backward(L2NormCtx<T>& ctx, const TensorT<T>& dy) const {
    if (!ctx.valid) throw StateError("L2NormalizeRows::backward called without a recorded forward pass");
    const std::size_t batch = ctx.input.dim(0), dim = ctx.input.dim(1);
    check_shape(dy, {batch, dim}, "L2NormalizeRows::backward");
    TensorT<T> dx(ctx.input.shape);
    for (std::size_t b = 0; b < batch; ++b) {
      const double norm = static_cast<double>(ctx.norm[b]);
      const double denom = norm + kEps;
      double x_dot_dy = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        x_dot_dy += static_cast<double>(ctx.input.values[b * dim + d]) * static_cast<double>(dy.values[b * dim + d]);
      }
      for (std::size_t d = 0; d < dim; ++d) {
        double g = static_cast<double>(dy.values[b * dim + d]) / denom;
        if (norm > 0.0) {
          g -= x_dot_dy * static_cast<double>(ctx.input.values[b * dim + d]) / (norm * denom * denom);
        }
        dx.values[b * dim + d] = static_cast<T>(g);
      }
    }
    ctx.valid = false;
    return dx;
  }
};

}  // namespace ssacl
