#pragma once

#include "racegan/image.hpp"
#include "racegan/net/layers.hpp"
#include "racegan/net/params.hpp"
#include "racegan/net/spec.hpp"
#include "racegan/rng.hpp"

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace racegan::net {

/// Two-branch generator: trunk features feed a full-resolution local branch
/// and a pooled global branch; their 1-channel projections are fused by a
/// learned per-pixel weight and squashed to [0,1].
template <class S>
class Generator {
 public:
  Generator() = default;

  Generator(GeneratorSpec spec, Rng& rng) : spec_(std::move(spec)) {
    init_params(params_, seqs(), rng);
  }

  const GeneratorSpec& spec() const { return spec_; }
  NetParams<S>& params() { return params_; }
  const NetParams<S>& params() const { return params_; }

  std::vector<const LayerSeq*> seqs() const {
    return {&spec_.trunk, &spec_.local_branch, &spec_.global_branch,
            &spec_.weight_head};
  }

  struct Trace {
    SeqCache<S> trunk, local, global, head;
    Batch<S> local_pre, global_pre, weight, fused, out;
  };

  /// `force_weight`, when set, replaces the learned fusion weight map with a
  /// constant (test hook for the convex-combination contract).
  Batch<S> forward(const Batch<S>& input, bool training, Trace* trace,
                   std::optional<S> force_weight = std::nullopt) {
    if (input.channels != spec_.trunk.front().in_ch)
      throw std::invalid_argument("generator: wrong input channel count");
    const int factor = generator_downsample_factor(spec_);
    if (input.height % factor || input.width % factor)
      throw std::invalid_argument(
          "generator: input dims must be divisible by " +
          std::to_string(factor));

    Batch<S> trunk_out, local_pre, global_pre;
    if (trace) {
      trunk_out = seq_forward(spec_.trunk, params_, 0, input, training,
                              &trace->trunk);
      local_pre = seq_forward(spec_.local_branch, params_, 1, trunk_out,
                              training, &trace->local);
      global_pre = seq_forward(spec_.global_branch, params_, 2, trunk_out,
                               training, &trace->global);
    } else {
      trunk_out = seq_forward(spec_.trunk, params_, 0, input, training,
                              static_cast<SeqCache<S>*>(nullptr));
      local_pre = seq_forward(spec_.local_branch, params_, 1, trunk_out,
                              training, static_cast<SeqCache<S>*>(nullptr));
      global_pre = seq_forward(spec_.global_branch, params_, 2, trunk_out,
                               training, static_cast<SeqCache<S>*>(nullptr));
    }

    Batch<S> head_in = Batch<S>::zeros(2, input.height, input.width, input.count);
    head_in.data.row(0) = local_pre.data.row(0);
    head_in.data.row(1) = global_pre.data.row(0);
    Batch<S> weight;
    if (trace)
      weight = seq_forward(spec_.weight_head, params_, 3, head_in, training,
                           &trace->head);
    else
      weight = seq_forward(spec_.weight_head, params_, 3, head_in, training,
                           static_cast<SeqCache<S>*>(nullptr));
    if (force_weight) weight.data.setConstant(*force_weight);

    Batch<S> fused = weight;
    fused.data.array() = weight.data.array() * local_pre.data.array() +
                         (S(1) - weight.data.array()) * global_pre.data.array();
    Batch<S> out = fused;
    detail::apply_activation(Act::sigmoid, out.data);

    if (trace) {
      trace->local_pre = local_pre;
      trace->global_pre = global_pre;
      trace->weight = weight;
      trace->fused = std::move(fused);
      trace->out = out;
    }
    return out;
  }

  /// Accumulates parameter gradients for a cached forward pass; the input
  /// gradient is not needed by any caller, so it is not produced.
  void backward(const Trace& trace, const Batch<S>& grad_out,
                NetParams<S>& grads) {
    // through the output sigmoid
    Mat<S> dfused = grad_out.data;
    detail::activation_backward(Act::sigmoid, trace.out.data, dfused);

    // fused = w*local + (1-w)*global
    Mat<S> dweight =
        (dfused.array() *
         (trace.local_pre.data.array() - trace.global_pre.data.array()))
            .matrix();
    Batch<S> dlocal = trace.local_pre;
    dlocal.data.array() = dfused.array() * trace.weight.data.array();
    Batch<S> dglobal = trace.global_pre;
    dglobal.data.array() = dfused.array() * (S(1) - trace.weight.data.array());

    Batch<S> dw_batch = trace.weight;
    dw_batch.data = std::move(dweight);
    Batch<S> dhead_in =
        seq_backward(spec_.weight_head, params_, 3, trace.head, dw_batch,
                     &grads, true);
    dlocal.data.row(0) += dhead_in.data.row(0);
    dglobal.data.row(0) += dhead_in.data.row(1);

    Batch<S> dtrunk_local = seq_backward(spec_.local_branch, params_, 1,
                                         trace.local, dlocal, &grads, true);
    Batch<S> dtrunk_global = seq_backward(spec_.global_branch, params_, 2,
                                          trace.global, dglobal, &grads, true);
    dtrunk_local.data += dtrunk_global.data;
    seq_backward(spec_.trunk, params_, 0, trace.trunk, dtrunk_local, &grads,
                 false);
  }

 private:
  GeneratorSpec spec_;
  NetParams<S> params_;
};

/// Per-pixel critic: a score in (0,1) for every input pixel.
template <class S>
class Discriminator {
 public:
  Discriminator() = default;

  Discriminator(DiscriminatorSpec spec, Rng& rng) : spec_(std::move(spec)) {
    init_params(params_, seqs(), rng);
  }

  const DiscriminatorSpec& spec() const { return spec_; }
  NetParams<S>& params() { return params_; }
  const NetParams<S>& params() const { return params_; }

  std::vector<const LayerSeq*> seqs() const { return {&spec_.layers}; }

  Batch<S> forward(const Batch<S>& mask, bool training, SeqCache<S>* cache) {
    if (mask.channels != spec_.layers.front().in_ch)
      throw std::invalid_argument("discriminator: wrong input channel count");
    const int factor = downsample_factor(spec_.layers);
    if (mask.height % factor || mask.width % factor)
      throw std::invalid_argument(
          "discriminator: input dims must be divisible by " +
          std::to_string(factor));
    return seq_forward(spec_.layers, params_, 0, mask, training, cache);
  }

  /// Returns d(loss)/d(input); parameter gradients only when grads != null.
  Batch<S> backward(const SeqCache<S>& cache, const Batch<S>& grad_out,
                    NetParams<S>* grads, bool want_input_grad) {
    return seq_backward(spec_.layers, params_, 0, cache, grad_out, grads,
                        want_input_grad);
  }

 private:
  DiscriminatorSpec spec_;
  NetParams<S> params_;
};

template <class S>
struct Model {
  NetworkSpec spec;
  Generator<S> generator;
  Discriminator<S> discriminator;

  Model() = default;

  Model(NetworkSpec s, std::uint64_t seed) : spec(std::move(s)) {
    Rng rng(seed);
    generator = Generator<S>(spec.generator, rng);
    discriminator = Discriminator<S>(spec.discriminator, rng);
  }
};

/// Packs (image, guess) into the generator input layout. Byte-mode images
/// are normalized to [0,1].
template <class S>
Batch<S> pack_generator_input(const RasterImage<S>& img,
                              const ProbMask<S>& guess) {
  if (guess.rows() != img.height() || guess.cols() != img.width())
    throw std::invalid_argument("generator input: image and guess dims differ");
  const int h = static_cast<int>(img.height());
  const int w = static_cast<int>(img.width());
  Batch<S> in = Batch<S>::zeros(4, h, w, 1);
  const S inv = S(1) / img.scale();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Eigen::Index col = static_cast<Eigen::Index>(y) * w + x;
      in.data(0, col) = img.r(y, x) * inv;
      in.data(1, col) = img.g(y, x) * inv;
      in.data(2, col) = img.b(y, x) * inv;
      in.data(3, col) = guess(y, x);
    }
  return in;
}

template <class S>
ProbMask<S> unpack_mask(const Batch<S>& out, int sample_index = 0) {
  ProbMask<S> m(out.height, out.width);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      m(y, x) = out.data(0, static_cast<Eigen::Index>(sample_index) *
                                    out.pixels() +
                                static_cast<Eigen::Index>(y) * out.width + x);
  return m;
}

template <class S>
Batch<S> pack_mask(const ProbMask<S>& m) {
  const int h = static_cast<int>(m.rows());
  const int w = static_cast<int>(m.cols());
  Batch<S> b = Batch<S>::zeros(1, h, w, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      b.data(0, static_cast<Eigen::Index>(y) * w + x) = m(y, x);
  return b;
}

/// Single-image inference entry point (running-statistic normalization).
template <class S>
ProbMask<S> generator_forward(const RasterImage<S>& img,
                              const ProbMask<S>& guess, Generator<S>& gen) {
  Batch<S> in = pack_generator_input(img, guess);
  Batch<S> out = gen.forward(in, false, nullptr);
  return unpack_mask(out);
}

/// Single-mask critic scores at input resolution.
template <class S>
ProbMask<S> discriminator_forward(const ProbMask<S>& mask,
                                  Discriminator<S>& disc) {
  Batch<S> in = pack_mask(mask);
  Batch<S> out = disc.forward(in, false, nullptr);
  return unpack_mask(out);
}

template <class S>
S image_score(const ProbMask<S>& score_map) {
  return score_map.mean();
}

}  // namespace racegan::net
