#pragma once

#include "racegan/net/params.hpp"
#include "racegan/net/spec.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace racegan::net {

template <class S>
using CRef = Eigen::Ref<const Mat<S>>;
template <class S>
using CVRef = Eigen::Ref<const Vec<S>>;

/// Batched activation tensor: row = channel, column = b*(H*W) + y*W + x.
/// One matrix per batch keeps batch-norm a rowwise reduction and lets
/// convolutions work sample block by sample block.
template <class S>
struct Batch {
  int channels = 0, height = 0, width = 0, count = 0;
  Mat<S> data;

  static Batch zeros(int c, int h, int w, int n) {
    Batch b;
    b.channels = c;
    b.height = h;
    b.width = w;
    b.count = n;
    b.data = Mat<S>::Zero(c, static_cast<Eigen::Index>(n) * h * w);
    return b;
  }

  int pixels() const { return height * width; }
  auto sample(int b) {
    return data.middleCols(static_cast<Eigen::Index>(b) * pixels(), pixels());
  }
  auto sample(int b) const {
    return data.middleCols(static_cast<Eigen::Index>(b) * pixels(), pixels());
  }
  Shape shape() const { return Shape{channels, height, width}; }
};

namespace detail {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;

/// Extracts kernel patches around each pixel of an (hp x wp) grid from a
/// (C, h*w) sample; out-of-bounds cells read as zero. Row index is
/// (c*k + dy)*k + dx.
template <class S, class XBlock>
void im2col(const XBlock& x, int channels, int h, int w, int k, int stride,
            int pad, int hp, int wp, Mat<S>& patches) {
  patches.resize(static_cast<Eigen::Index>(channels) * k * k,
                 static_cast<Eigen::Index>(hp) * wp);
  for (int py = 0; py < hp; ++py)
    for (int px = 0; px < wp; ++px) {
      const Eigen::Index col = static_cast<Eigen::Index>(py) * wp + px;
      for (int c = 0; c < channels; ++c)
        for (int dy = 0; dy < k; ++dy) {
          const int iy = py * stride - pad + dy;
          const Eigen::Index row0 = (static_cast<Eigen::Index>(c) * k + dy) * k;
          if (iy < 0 || iy >= h) {
            for (int dx = 0; dx < k; ++dx) patches(row0 + dx, col) = S(0);
            continue;
          }
          for (int dx = 0; dx < k; ++dx) {
            const int ix = px * stride - pad + dx;
            patches(row0 + dx, col) =
                (ix < 0 || ix >= w)
                    ? S(0)
                    : x(c, static_cast<Eigen::Index>(iy) * w + ix);
          }
        }
    }
}

/// Adjoint of im2col: scatter-adds patch columns back into the (C, h*w)
/// sample; out-of-bounds cells are dropped.
template <class S, class XBlock>
void col2im_add(XBlock&& x, int channels, int h, int w, int k, int stride,
                int pad, int hp, int wp, const Mat<S>& patches) {
  for (int py = 0; py < hp; ++py)
    for (int px = 0; px < wp; ++px) {
      const Eigen::Index col = static_cast<Eigen::Index>(py) * wp + px;
      for (int c = 0; c < channels; ++c)
        for (int dy = 0; dy < k; ++dy) {
          const int iy = py * stride - pad + dy;
          if (iy < 0 || iy >= h) continue;
          const Eigen::Index row0 = (static_cast<Eigen::Index>(c) * k + dy) * k;
          for (int dx = 0; dx < k; ++dx) {
            const int ix = px * stride - pad + dx;
            if (ix < 0 || ix >= w) continue;
            x(c, static_cast<Eigen::Index>(iy) * w + ix) +=
                patches(row0 + dx, col);
          }
        }
    }
}

template <class S>
void conv_forward(const LayerSpec& l, const CRef<S>& w, const CVRef<S>& bias,
                  const Batch<S>& in, Batch<S>& out) {
  const Shape os = layer_output_shape(l, in.shape());
  out = Batch<S>::zeros(os.channels, os.height, os.width, in.count);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < in.count; ++b) {
    auto y = out.sample(b);
    if (l.kernel == 1 && l.stride == 1 && l.padding == 0) {
      y.noalias() = w * in.sample(b);
    } else {
      Mat<S> patches;
      im2col<S>(in.sample(b), l.in_ch, in.height, in.width, l.kernel, l.stride,
                l.padding, os.height, os.width, patches);
      y.noalias() = w * patches;
    }
    y.colwise() += bias;
  }
}

template <class S>
void conv_backward(const LayerSpec& l, const CRef<S>& w, const Batch<S>& in,
                   const Batch<S>& grad_out, Batch<S>* grad_in, MatMap<S>* dw,
                   VecMap<S>* db) {
  const Shape os = grad_out.shape();
  if (grad_in)
    *grad_in = Batch<S>::zeros(in.channels, in.height, in.width, in.count);
  std::vector<Mat<S>> dw_parts;
  if (dw)
    dw_parts.assign(static_cast<std::size_t>(in.count),
                    Mat<S>::Zero(w.rows(), w.cols()));
#pragma omp parallel for schedule(static)
  for (int b = 0; b < in.count; ++b) {
    const auto dy = grad_out.sample(b);
    if (l.kernel == 1 && l.stride == 1 && l.padding == 0) {
      if (grad_in) grad_in->sample(b).noalias() = w.transpose() * dy;
      if (dw)
        dw_parts[static_cast<std::size_t>(b)].noalias() =
            dy * in.sample(b).transpose();
    } else {
      if (grad_in) {
        Mat<S> dpatches = w.transpose() * dy;
        col2im_add<S>(grad_in->sample(b), l.in_ch, in.height, in.width,
                      l.kernel, l.stride, l.padding, os.height, os.width,
                      dpatches);
      }
      if (dw) {
        Mat<S> patches;
        im2col<S>(in.sample(b), l.in_ch, in.height, in.width, l.kernel,
                  l.stride, l.padding, os.height, os.width, patches);
        dw_parts[static_cast<std::size_t>(b)].noalias() =
            dy * patches.transpose();
      }
    }
  }
  if (dw)
    for (const Mat<S>& part : dw_parts) *dw += part;
  if (db)
    for (int b = 0; b < in.count; ++b) *db += grad_out.sample(b).rowwise().sum();
}

// Transpose convolution: weight is stored as the reverse-direction conv
// weight (in_ch, out_ch*k*k), so forward scatters via col2im and backward
// gathers via im2col.
template <class S>
void tconv_forward(const LayerSpec& l, const CRef<S>& w, const CVRef<S>& bias,
                   const Batch<S>& in, Batch<S>& out) {
  const Shape os = layer_output_shape(l, in.shape());
  out = Batch<S>::zeros(os.channels, os.height, os.width, in.count);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < in.count; ++b) {
    Mat<S> patches = w.transpose() * in.sample(b);  // (out_ch*k*k, Hin*Win)
    auto y = out.sample(b);
    col2im_add<S>(y, l.out_ch, os.height, os.width, l.kernel, l.stride,
                  l.padding, in.height, in.width, patches);
    y.colwise() += bias;
  }
}

template <class S>
void tconv_backward(const LayerSpec& l, const CRef<S>& w, const Batch<S>& in,
                    const Batch<S>& grad_out, Batch<S>* grad_in, MatMap<S>* dw,
                    VecMap<S>* db) {
  std::vector<Mat<S>> dw_parts;
  if (dw)
    dw_parts.assign(static_cast<std::size_t>(in.count),
                    Mat<S>::Zero(w.rows(), w.cols()));
  if (grad_in)
    *grad_in = Batch<S>::zeros(in.channels, in.height, in.width, in.count);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < in.count; ++b) {
    Mat<S> dpatches;  // (out_ch*k*k, Hin*Win)
    im2col<S>(grad_out.sample(b), l.out_ch, grad_out.height, grad_out.width,
              l.kernel, l.stride, l.padding, in.height, in.width, dpatches);
    if (grad_in) grad_in->sample(b).noalias() = w * dpatches;
    if (dw)
      dw_parts[static_cast<std::size_t>(b)].noalias() =
          in.sample(b) * dpatches.transpose();
  }
  if (dw)
    for (const Mat<S>& part : dw_parts) *dw += part;
  if (db)
    for (int b = 0; b < in.count; ++b) *db += grad_out.sample(b).rowwise().sum();
}

}  // namespace detail

template <class S>
struct LayerCache {
  Vec<S> bn_mean, bn_inv_std;
  Mat<S> bn_xhat;
  Eigen::Array<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic> pool_arg;
  Mat<S> post;  // pre-residual output; empty when the layer has no residual
};

template <class S>
struct SeqCache {
  Batch<S> input;
  std::vector<Batch<S>> outputs;
  std::vector<LayerCache<S>> layers;
};

namespace detail {

template <class S>
void max_pool_forward(const LayerSpec& l, const Batch<S>& in, Batch<S>& out,
                      LayerCache<S>& cache) {
  const Shape os = layer_output_shape(l, in.shape());
  out = Batch<S>::zeros(os.channels, os.height, os.width, in.count);
  cache.pool_arg.resize(out.channels, out.data.cols());
#pragma omp parallel for schedule(static)
  for (int b = 0; b < in.count; ++b) {
    const auto x = in.sample(b);
    auto y = out.sample(b);
    for (int c = 0; c < in.channels; ++c)
      for (int oy = 0; oy < os.height; ++oy)
        for (int ox = 0; ox < os.width; ++ox) {
          S best = -std::numeric_limits<S>::infinity();
          Eigen::Index best_idx = 0;
          for (int dy = 0; dy < l.kernel; ++dy)
            for (int dx = 0; dx < l.kernel; ++dx) {
              const Eigen::Index idx =
                  static_cast<Eigen::Index>(oy * l.stride + dy) * in.width +
                  (ox * l.stride + dx);
              if (x(c, idx) > best) {
                best = x(c, idx);
                best_idx = idx;
              }
            }
          const Eigen::Index ocol =
              static_cast<Eigen::Index>(oy) * os.width + ox;
          y(c, ocol) = best;
          cache.pool_arg(
              c, static_cast<Eigen::Index>(b) * os.height * os.width + ocol) =
              best_idx;
        }
  }
}

template <class S>
void max_pool_backward(const Batch<S>& in, const Batch<S>& grad_out,
                       const LayerCache<S>& cache, Batch<S>& grad_in) {
  grad_in = Batch<S>::zeros(in.channels, in.height, in.width, in.count);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < in.count; ++b) {
    auto gx = grad_in.sample(b);
    const auto gy = grad_out.sample(b);
    for (int c = 0; c < in.channels; ++c)
      for (Eigen::Index ocol = 0; ocol < gy.cols(); ++ocol)
        gx(c, cache.pool_arg(
                  c, static_cast<Eigen::Index>(b) * gy.cols() + ocol)) +=
            gy(c, ocol);
  }
}

template <class S>
void avg_pool_forward(const LayerSpec& l, const Batch<S>& in, Batch<S>& out) {
  const Shape os = layer_output_shape(l, in.shape());
  out = Batch<S>::zeros(os.channels, os.height, os.width, in.count);
  const S norm = S(1) / (S(l.kernel) * S(l.kernel));
#pragma omp parallel for schedule(static)
  for (int b = 0; b < in.count; ++b) {
    const auto x = in.sample(b);
    auto y = out.sample(b);
    for (int c = 0; c < in.channels; ++c)
      for (int oy = 0; oy < os.height; ++oy)
        for (int ox = 0; ox < os.width; ++ox) {
          S acc = S(0);
          for (int dy = 0; dy < l.kernel; ++dy)
            for (int dx = 0; dx < l.kernel; ++dx)
              acc += x(c, static_cast<Eigen::Index>(oy * l.stride + dy) *
                                  in.width +
                              (ox * l.stride + dx));
          y(c, static_cast<Eigen::Index>(oy) * os.width + ox) = acc * norm;
        }
  }
}

template <class S>
void avg_pool_backward(const LayerSpec& l, const Batch<S>& in,
                       const Batch<S>& grad_out, Batch<S>& grad_in) {
  grad_in = Batch<S>::zeros(in.channels, in.height, in.width, in.count);
  const S norm = S(1) / (S(l.kernel) * S(l.kernel));
#pragma omp parallel for schedule(static)
  for (int b = 0; b < in.count; ++b) {
    auto gx = grad_in.sample(b);
    const auto gy = grad_out.sample(b);
    for (int c = 0; c < in.channels; ++c)
      for (int oy = 0; oy < grad_out.height; ++oy)
        for (int ox = 0; ox < grad_out.width; ++ox) {
          const S g =
              gy(c, static_cast<Eigen::Index>(oy) * grad_out.width + ox) * norm;
          for (int dy = 0; dy < l.kernel; ++dy)
            for (int dx = 0; dx < l.kernel; ++dx)
              gx(c, static_cast<Eigen::Index>(oy * l.stride + dy) * in.width +
                        (ox * l.stride + dx)) += g;
        }
  }
}

template <class S>
void upsample_forward(const LayerSpec& l, const Batch<S>& in, Batch<S>& out) {
  const Shape os = layer_output_shape(l, in.shape());
  out = Batch<S>::zeros(os.channels, os.height, os.width, in.count);
  const int f = l.kernel;
#pragma omp parallel for schedule(static)
  for (int b = 0; b < in.count; ++b) {
    const auto x = in.sample(b);
    auto y = out.sample(b);
    for (int c = 0; c < in.channels; ++c)
      for (int oy = 0; oy < os.height; ++oy)
        for (int ox = 0; ox < os.width; ++ox)
          y(c, static_cast<Eigen::Index>(oy) * os.width + ox) =
              x(c, static_cast<Eigen::Index>(oy / f) * in.width + (ox / f));
  }
}

template <class S>
void upsample_backward(const LayerSpec& l, const Batch<S>& in,
                       const Batch<S>& grad_out, Batch<S>& grad_in) {
  grad_in = Batch<S>::zeros(in.channels, in.height, in.width, in.count);
  const int f = l.kernel;
#pragma omp parallel for schedule(static)
  for (int b = 0; b < in.count; ++b) {
    auto gx = grad_in.sample(b);
    const auto gy = grad_out.sample(b);
    for (int c = 0; c < in.channels; ++c)
      for (int oy = 0; oy < grad_out.height; ++oy)
        for (int ox = 0; ox < grad_out.width; ++ox)
          gx(c, static_cast<Eigen::Index>(oy / f) * in.width + (ox / f)) +=
              gy(c, static_cast<Eigen::Index>(oy) * grad_out.width + ox);
  }
}

/// Training mode normalizes with batch statistics (population variance) and
/// folds them into the running estimates; eval mode uses the running pair.
template <class S>
void batchnorm_forward(Batch<S>& x, NetParams<S>& params, std::size_t si,
                       std::size_t li, bool training, LayerCache<S>* cache) {
  const Vec<S> gamma = params.gamma(si, li);
  const Vec<S> beta = params.beta(si, li);
  if (training) {
    const Vec<S> mean = x.data.rowwise().mean();
    Mat<S> centered = x.data.colwise() - mean;
    const Vec<S> var = centered.array().square().rowwise().mean().matrix();
    const Vec<S> inv_std = (var.array() + S(kBnEps)).rsqrt().matrix();
    Mat<S> xhat = inv_std.asDiagonal() * centered;
    x.data = gamma.asDiagonal() * xhat;
    x.data.colwise() += beta;
    auto run_mean = params.run_mean(si, li);
    auto run_var = params.run_var(si, li);
    run_mean = (S(1) - S(kBnMomentum)) * run_mean + S(kBnMomentum) * mean;
    run_var = (S(1) - S(kBnMomentum)) * run_var + S(kBnMomentum) * var;
    if (cache) {
      cache->bn_mean = mean;
      cache->bn_inv_std = inv_std;
      cache->bn_xhat = std::move(xhat);
    }
  } else {
    const Vec<S> mean = params.run_mean(si, li);
    const Vec<S> inv_std =
        (params.run_var(si, li).array() + S(kBnEps)).rsqrt().matrix();
    Mat<S> centered = x.data.colwise() - mean;
    x.data = (gamma.array() * inv_std.array()).matrix().asDiagonal() * centered;
    x.data.colwise() += beta;
  }
}

template <class S>
void batchnorm_backward(const NetParams<S>& params, std::size_t si,
                        std::size_t li, const LayerCache<S>& cache,
                        Mat<S>& grad /*in: dY, out: dX*/, VecMap<S> dgamma,
                        VecMap<S> dbeta) {
  const Vec<S> gamma = params.gamma(si, li);
  const Eigen::Index n = grad.cols();
  dgamma += (grad.array() * cache.bn_xhat.array()).rowwise().sum().matrix();
  dbeta += grad.rowwise().sum();
  // dX = inv_std/N * (N*dXhat - sum(dXhat) - xhat * sum(dXhat*xhat))
  Mat<S> dxhat = gamma.asDiagonal() * grad;
  const Vec<S> sum_dxhat = dxhat.rowwise().sum();
  const Vec<S> sum_dxhat_xhat =
      (dxhat.array() * cache.bn_xhat.array()).rowwise().sum().matrix();
  grad = dxhat * S(n);
  grad.colwise() -= sum_dxhat;
  grad -= sum_dxhat_xhat.asDiagonal() * cache.bn_xhat;
  grad = (cache.bn_inv_std.array() / S(n)).matrix().asDiagonal() * grad;
}

template <class S>
void apply_activation(Act act, Mat<S>& x) {
  switch (act) {
    case Act::none:
      break;
    case Act::relu:
      x = x.array().max(S(0)).matrix();
      break;
    case Act::sigmoid:
      x = (S(1) / (S(1) + (-x.array()).exp())).matrix();
      break;
  }
}

template <class S>
void activation_backward(Act act, const Mat<S>& out, Mat<S>& grad) {
  switch (act) {
    case Act::none:
      break;
    case Act::relu:
      grad.array() *= (out.array() > S(0)).template cast<S>();
      break;
    case Act::sigmoid:
      grad.array() *= out.array() * (S(1) - out.array());
      break;
  }
}

template <class S>
void layer_forward(const LayerSpec& l, NetParams<S>& params, std::size_t si,
                   std::size_t li, const Batch<S>& x, Batch<S>& y,
                   bool training, LayerCache<S>* cache) {
  switch (l.kind) {
    case LayerKind::conv:
      conv_forward<S>(l, params.weight(si, li), params.bias(si, li, l.out_ch),
                      x, y);
      break;
    case LayerKind::conv_transpose:
      tconv_forward<S>(l, params.weight(si, li), params.bias(si, li, l.out_ch),
                       x, y);
      break;
    case LayerKind::max_pool: {
      LayerCache<S> scratch;
      max_pool_forward(l, x, y, cache ? *cache : scratch);
      break;
    }
    case LayerKind::avg_pool:
      avg_pool_forward(l, x, y);
      break;
    case LayerKind::upsample:
      upsample_forward(l, x, y);
      break;
  }
  if (l.norm) batchnorm_forward(y, params, si, li, training, cache);
  apply_activation(l.act, y.data);
}

}  // namespace detail

/// Runs a layer sequence. With `cache` non-null every intermediate needed by
/// seq_backward is retained; inference passes may leave it null (residual
/// sources are then kept internally).
template <class S>
Batch<S> seq_forward(const LayerSeq& seq, NetParams<S>& params, std::size_t si,
                     const Batch<S>& input, bool training, SeqCache<S>* cache) {
  Batch<S> x = input;
  std::vector<Batch<S>> kept;
  if (cache) {
    cache->input = input;
    cache->outputs.clear();
    cache->outputs.reserve(seq.size());
    cache->layers.assign(seq.size(), LayerCache<S>{});
  } else {
    kept.resize(seq.size());
  }
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const LayerSpec& l = seq[i];
    Batch<S> y;
    LayerCache<S> scratch;
    LayerCache<S>& lc = cache ? cache->layers[i] : scratch;
    detail::layer_forward(l, params, si, i, x, y, training, &lc);
    if (l.residual_from >= 0) {
      const auto src = static_cast<std::size_t>(l.residual_from);
      if (cache) {
        lc.post = y.data;
        y.data += cache->outputs[src].data;
      } else {
        y.data += kept[src].data;
      }
    }
    if (cache) {
      cache->outputs.push_back(y);
    } else {
      // keep only outputs some later residual link needs
      for (std::size_t j = i + 1; j < seq.size(); ++j)
        if (seq[j].residual_from == static_cast<int>(i)) {
          kept[i] = y;
          break;
        }
    }
    x = std::move(y);
  }
  return x;
}

/// Backpropagates through a cached forward pass. Parameter gradients are
/// accumulated into `grads` (same layout as params) when non-null; the
/// returned batch is the gradient with respect to the sequence input (empty
/// when want_input_grad is false).
template <class S>
Batch<S> seq_backward(const LayerSeq& seq, const NetParams<S>& params,
                      std::size_t si, const SeqCache<S>& cache,
                      const Batch<S>& grad_output, NetParams<S>* grads,
                      bool want_input_grad = true) {
  if (seq.empty()) return grad_output;
  std::vector<Mat<S>> pending(seq.size());
  pending.back() = grad_output.data;
  Batch<S> grad_in;
  for (int i = static_cast<int>(seq.size()) - 1; i >= 0; --i) {
    const auto ui = static_cast<std::size_t>(i);
    const LayerSpec& l = seq[ui];
    const LayerCache<S>& lc = cache.layers[ui];
    const Batch<S>& input = i == 0 ? cache.input : cache.outputs[ui - 1];
    const Batch<S>& output = cache.outputs[ui];

    Mat<S> grad = std::move(pending[ui]);
    if (l.residual_from >= 0) {
      // the add forked the graph: identity branch to the source, main branch
      // continues into this layer
      Mat<S>& res_pending = pending[static_cast<std::size_t>(l.residual_from)];
      if (res_pending.size() == 0)
        res_pending = grad;
      else
        res_pending += grad;
    }
    const Mat<S>& act_out = l.residual_from >= 0 ? lc.post : output.data;
    detail::activation_backward(l.act, act_out, grad);
    if (l.norm) {
      if (grads) {
        detail::batchnorm_backward(params, si, ui, lc, grad,
                                   grads->gamma(si, ui), grads->beta(si, ui));
      } else {
        Vec<S> scratch_g = Vec<S>::Zero(l.out_ch);
        Vec<S> scratch_b = Vec<S>::Zero(l.out_ch);
        detail::batchnorm_backward(params, si, ui, lc, grad,
                                   VecMap<S>(scratch_g.data(), l.out_ch),
                                   VecMap<S>(scratch_b.data(), l.out_ch));
      }
    }

    Batch<S> grad_batch;
    grad_batch.channels = output.channels;
    grad_batch.height = output.height;
    grad_batch.width = output.width;
    grad_batch.count = output.count;
    grad_batch.data = std::move(grad);

    const bool need_input_grad = i > 0 || want_input_grad;
    Batch<S> gin;
    switch (l.kind) {
      case LayerKind::conv:
      case LayerKind::conv_transpose: {
        MatMap<S> dw = grads ? grads->weight(si, ui) : MatMap<S>(nullptr, 0, 0);
        VecMap<S> db = grads ? grads->bias(si, ui, l.out_ch)
                             : VecMap<S>(nullptr, 0);
        if (l.kind == LayerKind::conv)
          detail::conv_backward<S>(l, params.weight(si, ui), input, grad_batch,
                                   need_input_grad ? &gin : nullptr,
                                   grads ? &dw : nullptr,
                                   grads ? &db : nullptr);
        else
          detail::tconv_backward<S>(l, params.weight(si, ui), input, grad_batch,
                                    need_input_grad ? &gin : nullptr,
                                    grads ? &dw : nullptr,
                                    grads ? &db : nullptr);
        break;
      }
      case LayerKind::max_pool:
        detail::max_pool_backward(input, grad_batch, lc, gin);
        break;
      case LayerKind::avg_pool:
        detail::avg_pool_backward(l, input, grad_batch, gin);
        break;
      case LayerKind::upsample:
        detail::upsample_backward(l, input, grad_batch, gin);
        break;
    }
    if (i == 0) {
      grad_in = std::move(gin);
    } else {
      Mat<S>& prev = pending[ui - 1];
      if (prev.size() == 0)
        prev = std::move(gin.data);
      else
        prev += gin.data;
    }
  }
  return grad_in;
}

}  // namespace racegan::net
