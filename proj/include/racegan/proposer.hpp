#pragma once

#include "racegan/image.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace racegan {

/// Knobs for the non-learned initial track guess: regional uniformity at two
/// window scales, gated by a per-image darkness quantile.
struct ProposerConfig {
  int kernel_small = 3;
  int kernel_large = 7;
  double variance_threshold = 0.01;  // on [0,1] luminance
  double dark_quantile = 0.5;
  double blend = 0.5;  // weight of the small-kernel uniformity flag

  void require_valid() const {
    if (kernel_small % 2 == 0 || kernel_large % 2 == 0)
      throw std::invalid_argument("proposer: kernels must be odd");
    if (kernel_small >= kernel_large)
      throw std::invalid_argument("proposer: kernel_small must be < kernel_large");
    if (kernel_small < 1) throw std::invalid_argument("proposer: kernel < 1");
    if (dark_quantile <= 0.0 || dark_quantile >= 1.0)
      throw std::invalid_argument("proposer: dark_quantile outside (0,1)");
    if (blend < 0.0 || blend > 1.0)
      throw std::invalid_argument("proposer: blend outside [0,1]");
    if (variance_threshold < 0.0)
      throw std::invalid_argument("proposer: variance_threshold < 0");
  }
};

template <class Scalar>
struct RegionalStats {
  Plane<Scalar> mean;
  Plane<Scalar> variance;  // population variance over the window
};

namespace detail {
// symmetric reflection with edge repeat: -1 -> 0, -2 -> 1, n -> n-1
inline Eigen::Index reflect_index(Eigen::Index i, Eigen::Index n) {
  if (i < 0) return -i - 1;
  if (i >= n) return 2 * n - 1 - i;
  return i;
}
}  // namespace detail

/// Windowed mean and variance at every pixel, reflect-padded so the output
/// has the input's dimensions.
template <class Scalar>
RegionalStats<Scalar> regional_stats(const GrayImage<Scalar>& g, int kernel) {
  if (kernel < 1 || kernel % 2 == 0)
    throw std::invalid_argument("regional_stats: kernel must be odd and >= 1");
  if (kernel > g.rows() || kernel > g.cols())
    throw std::invalid_argument("regional_stats: kernel larger than image");
  const Eigen::Index h = g.rows(), w = g.cols();
  const int r = kernel / 2;
  const Scalar inv_n = Scalar(1) / (Scalar(kernel) * Scalar(kernel));
  RegionalStats<Scalar> out;
  out.mean.resize(h, w);
  out.variance.resize(h, w);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) {
      Scalar s = 0, s2 = 0;
      for (int dy = -r; dy <= r; ++dy) {
        const Eigen::Index yy = detail::reflect_index(y + dy, h);
        for (int dx = -r; dx <= r; ++dx) {
          const Eigen::Index xx = detail::reflect_index(x + dx, w);
          const Scalar v = g(yy, xx);
          s += v;
          s2 += v * v;
        }
      }
      const Scalar m = s * inv_n;
      out.mean(y, x) = m;
      const Scalar var = s2 * inv_n - m * m;
      out.variance(y, x) = var < Scalar(0) ? Scalar(0) : var;
    }
  return out;
}

/// Luminance value at quantile q: element floor(q*(N-1)) of the sorted pixels.
template <class Scalar>
Scalar luminance_quantile(const GrayImage<Scalar>& g, double q) {
  if (q <= 0.0 || q >= 1.0)
    throw std::invalid_argument("luminance_quantile: q outside (0,1)");
  std::vector<Scalar> vals(g.data(), g.data() + g.size());
  const auto idx = static_cast<std::size_t>(
      q * static_cast<double>(vals.size() - 1));
  std::nth_element(vals.begin(), vals.begin() + idx, vals.end());
  return vals[idx];
}

/// Block-1 heuristic: a pixel scores high when its neighborhood is uniform at
/// both scales and its luminance sits at or below the per-image dark
/// quantile. Scores take values in {0, blend, 1-blend, 1}.
template <class Scalar>
ProbMask<Scalar> initial_guess(const RasterImage<Scalar>& img,
                               const ProposerConfig& cfg) {
  cfg.require_valid();
  const GrayImage<Scalar> g = to_grayscale(img);
  const auto small_stats = regional_stats(g, cfg.kernel_small);
  const auto large_stats = regional_stats(g, cfg.kernel_large);
  const Scalar vt = Scalar(cfg.variance_threshold);
  const Scalar dark_cut = luminance_quantile(g, cfg.dark_quantile);
  const Scalar wb = Scalar(cfg.blend);

  ProbMask<Scalar> score(g.rows(), g.cols());
  for (Eigen::Index y = 0; y < g.rows(); ++y)
    for (Eigen::Index x = 0; x < g.cols(); ++x) {
      const Scalar u_small = small_stats.variance(y, x) < vt ? Scalar(1) : Scalar(0);
      const Scalar u_large = large_stats.variance(y, x) < vt ? Scalar(1) : Scalar(0);
      const Scalar dark = g(y, x) <= dark_cut ? Scalar(1) : Scalar(0);
      score(y, x) = dark * (wb * u_small + (Scalar(1) - wb) * u_large);
    }
  return score;
}

}  // namespace racegan
