#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace racegan::net {

enum class LayerKind { conv, conv_transpose, max_pool, avg_pool, upsample };
enum class Act { none, relu, sigmoid };

struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  int in_ch = 0, out_ch = 0;
  int kernel = 1, stride = 1, padding = 0;
  bool norm = false;
  Act act = Act::none;
  int residual_from = -1;  // index of an earlier layer in the same sequence

  bool has_weights() const {
    return kind == LayerKind::conv || kind == LayerKind::conv_transpose;
  }
};

using LayerSeq = std::vector<LayerSpec>;

/// Trunk extracts deep features from the 4-channel (image, initial guess)
/// stack; the local branch keeps full resolution, the global branch runs a
/// downsample/conv/upsample pyramid, and the weight head turns the two
/// branch outputs into the per-pixel fusion weight.
struct GeneratorSpec {
  LayerSeq trunk;
  LayerSeq local_branch;   // ends with a 1-channel linear projection
  LayerSeq global_branch;  // ditto
  LayerSeq weight_head;    // 2 -> 1 channels, sigmoid
};

struct DiscriminatorSpec {
  LayerSeq layers;  // ends with a 1-channel sigmoid score map
  bool condition_on_image = false;
};

struct NetworkSpec {
  GeneratorSpec generator;
  DiscriminatorSpec discriminator;
  std::string init_scheme = "gaussian_0.02";
  std::int64_t param_budget = 1590000;
};

struct Shape {
  int channels = 0, height = 0, width = 0;
  bool operator==(const Shape&) const = default;
};

inline Shape layer_output_shape(const LayerSpec& l, const Shape& in) {
  Shape out = in;
  switch (l.kind) {
    case LayerKind::conv: {
      if (l.in_ch != in.channels)
        throw std::invalid_argument("conv in_ch does not match input");
      const int eh = in.height + 2 * l.padding - l.kernel;
      const int ew = in.width + 2 * l.padding - l.kernel;
      if (eh < 0 || ew < 0 || eh % l.stride || ew % l.stride)
        throw std::invalid_argument("conv geometry does not tile the input");
      out = {l.out_ch, eh / l.stride + 1, ew / l.stride + 1};
      break;
    }
    case LayerKind::conv_transpose: {
      if (l.in_ch != in.channels)
        throw std::invalid_argument("conv_transpose in_ch does not match input");
      out = {l.out_ch, (in.height - 1) * l.stride + l.kernel - 2 * l.padding,
             (in.width - 1) * l.stride + l.kernel - 2 * l.padding};
      if (out.height < 1 || out.width < 1)
        throw std::invalid_argument("conv_transpose output collapsed");
      break;
    }
    case LayerKind::max_pool:
    case LayerKind::avg_pool: {
      const int eh = in.height - l.kernel;
      const int ew = in.width - l.kernel;
      if (eh < 0 || ew < 0 || eh % l.stride || ew % l.stride)
        throw std::invalid_argument("pool geometry does not tile the input");
      out = {in.channels, eh / l.stride + 1, ew / l.stride + 1};
      break;
    }
    case LayerKind::upsample:
      out = {in.channels, in.height * l.kernel, in.width * l.kernel};
      break;
  }
  return out;
}

inline Shape sequence_output_shape(const LayerSeq& seq, Shape in,
                                   const char* what) {
  std::vector<Shape> shapes;
  shapes.reserve(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const LayerSpec& l = seq[i];
    Shape out;
    try {
      out = layer_output_shape(l, in);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string(what) + " layer " +
                                  std::to_string(i) + ": " + e.what());
    }
    if (l.residual_from >= 0) {
      if (l.residual_from >= static_cast<int>(i))
        throw std::invalid_argument(std::string(what) + " layer " +
                                    std::to_string(i) +
                                    ": residual_from must point backwards");
      if (!(shapes[static_cast<std::size_t>(l.residual_from)] == out))
        throw std::invalid_argument(std::string(what) + " layer " +
                                    std::to_string(i) +
                                    ": residual link connects unequal shapes");
    }
    shapes.push_back(out);
    in = out;
  }
  return in;
}

/// Product of all stride-induced downsampling, for the input-divisibility
/// precondition of the forward passes.
inline int downsample_factor(const LayerSeq& seq) {
  int factor = 1;
  for (const LayerSpec& l : seq)
    if (l.kind == LayerKind::max_pool || l.kind == LayerKind::avg_pool ||
        (l.kind == LayerKind::conv && l.stride > 1))
      factor *= l.stride;
  return factor;
}

inline int generator_downsample_factor(const GeneratorSpec& g) {
  return downsample_factor(g.global_branch);
}

/// Full shape/link validation at the given input resolution. Throws
/// std::invalid_argument describing the first offending layer.
inline void validate(const NetworkSpec& spec, int height, int width) {
  const auto& g = spec.generator;
  const Shape in{4, height, width};
  const Shape t = sequence_output_shape(g.trunk, in, "generator.trunk");
  const Shape local =
      sequence_output_shape(g.local_branch, t, "generator.local");
  const Shape global =
      sequence_output_shape(g.global_branch, t, "generator.global");
  if (local.channels != 1 || global.channels != 1)
    throw std::invalid_argument("branch outputs must be 1-channel maps");
  if (!(local == global) || local.height != height || local.width != width)
    throw std::invalid_argument("branch outputs must both restore input dims");
  const Shape w = sequence_output_shape(
      g.weight_head, Shape{2, height, width}, "generator.weight_head");
  if (w.channels != 1 || w.height != height || w.width != width)
    throw std::invalid_argument("weight head must emit a 1-channel map");
  if (g.weight_head.empty() || g.weight_head.back().act != Act::sigmoid)
    throw std::invalid_argument("weight head must end in a sigmoid");
  if (!g.local_branch.empty() && g.local_branch.back().act != Act::none)
    throw std::invalid_argument("branch projections must be linear");
  if (!g.global_branch.empty() && g.global_branch.back().act != Act::none)
    throw std::invalid_argument("branch projections must be linear");

  const auto& d = spec.discriminator;
  const int d_in = d.condition_on_image ? 4 : 1;
  const Shape ds = sequence_output_shape(d.layers, Shape{d_in, height, width},
                                         "discriminator");
  if (ds.channels != 1 || ds.height != height || ds.width != width)
    throw std::invalid_argument(
        "discriminator must emit a score per input pixel");
  if (d.layers.empty() || d.layers.back().act != Act::sigmoid)
    throw std::invalid_argument("discriminator must end in a sigmoid");
}

/// Trainable scalars: conv kernels + biases, plus one (gamma, beta) pair per
/// normalized channel.
inline std::int64_t count_params(const LayerSeq& seq) {
  std::int64_t n = 0;
  for (const LayerSpec& l : seq) {
    if (l.has_weights()) {
      n += static_cast<std::int64_t>(l.kernel) * l.kernel * l.in_ch * l.out_ch;
      n += l.out_ch;  // bias
    }
    if (l.norm) n += 2 * static_cast<std::int64_t>(l.out_ch);
  }
  return n;
}

inline std::int64_t count_params(const GeneratorSpec& g) {
  return count_params(g.trunk) + count_params(g.local_branch) +
         count_params(g.global_branch) + count_params(g.weight_head);
}

inline std::int64_t count_params(const DiscriminatorSpec& d) {
  return count_params(d.layers);
}

inline std::int64_t count_params(const NetworkSpec& spec) {
  return count_params(spec.generator) + count_params(spec.discriminator);
}

/// FLOPs convention: 2 x MACs for (transpose) convolutions, with
/// MACs = kernel^2 * Cin * Cout * Hout * Wout (bias excluded); pooling,
/// upsampling, normalization, activations and residual adds count one op per
/// output element. Act::none costs nothing.
inline std::int64_t count_flops(const LayerSeq& seq, Shape in) {
  std::int64_t flops = 0;
  for (const LayerSpec& l : seq) {
    const Shape out = layer_output_shape(l, in);
    const std::int64_t out_elems =
        static_cast<std::int64_t>(out.channels) * out.height * out.width;
    switch (l.kind) {
      case LayerKind::conv:
        flops += 2ll * l.kernel * l.kernel * l.in_ch * l.out_ch * out.height *
                 out.width;
        break;
      case LayerKind::conv_transpose:
        flops += 2ll * l.kernel * l.kernel * l.in_ch * l.out_ch * in.height *
                 in.width;
        break;
      case LayerKind::max_pool:
      case LayerKind::avg_pool:
      case LayerKind::upsample:
        flops += out_elems;
        break;
    }
    if (l.norm) flops += out_elems;
    if (l.act != Act::none) flops += out_elems;
    if (l.residual_from >= 0) flops += out_elems;
    in = out;
  }
  return flops;
}

inline std::int64_t count_flops(const GeneratorSpec& g, int height, int width) {
  const Shape in{4, height, width};
  std::int64_t flops = count_flops(g.trunk, in);
  const Shape t = sequence_output_shape(g.trunk, in, "generator.trunk");
  flops += count_flops(g.local_branch, t);
  flops += count_flops(g.global_branch, t);
  flops += count_flops(g.weight_head, Shape{2, height, width});
  // fusion (two multiplies + add per pixel) and the output sigmoid
  flops += 4ll * height * width;
  return flops;
}

inline std::int64_t count_flops(const DiscriminatorSpec& d, int height,
                                int width) {
  return count_flops(d.layers,
                     Shape{d.condition_on_image ? 4 : 1, height, width});
}

NetworkSpec default_network_spec();
std::string serialize(const NetworkSpec& spec);
NetworkSpec parse_network_spec(std::string_view text);

}  // namespace racegan::net
