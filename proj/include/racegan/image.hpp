#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace racegan {

template <class Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Planef = Plane<float>;
using Planed = Plane<double>;

/// Per-pixel {0,1} track membership, 1 = track.
using BinaryMask = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Luminance in [0,1].
template <class Scalar>
using GrayImage = Plane<Scalar>;

/// Soft track probability in [0,1].
template <class Scalar>
using ProbMask = Plane<Scalar>;

/// Storage convention for RasterImage intensities.
enum class PixelMode {
  bytes,  ///< integers in [0,255], stored as Scalar
  unit    ///< reals in [0,1]
};

template <class Scalar = float>
struct RasterImage {
  Plane<Scalar> r, g, b;
  PixelMode mode = PixelMode::unit;

  Eigen::Index height() const { return r.rows(); }
  Eigen::Index width() const { return r.cols(); }

  static RasterImage constant(Eigen::Index h, Eigen::Index w, Scalar red,
                              Scalar green, Scalar blue,
                              PixelMode mode = PixelMode::unit) {
    RasterImage img;
    img.r = Plane<Scalar>::Constant(h, w, red);
    img.g = Plane<Scalar>::Constant(h, w, green);
    img.b = Plane<Scalar>::Constant(h, w, blue);
    img.mode = mode;
    return img;
  }

  Scalar scale() const {
    return mode == PixelMode::bytes ? Scalar(255) : Scalar(1);
  }

  void require_valid() const {
    if (height() < 1 || width() < 1)
      throw std::invalid_argument("RasterImage: empty image");
    if (g.rows() != r.rows() || g.cols() != r.cols() || b.rows() != r.rows() ||
        b.cols() != r.cols())
      throw std::invalid_argument("RasterImage: channel shape mismatch");
    const Scalar hi = scale();
    for (const Plane<Scalar>* p : {&r, &g, &b}) {
      if ((*p < Scalar(0)).any() || (*p > hi).any())
        throw std::invalid_argument("RasterImage: intensity out of range");
    }
  }
};

using RasterImagef = RasterImage<float>;

template <class Scalar>
RasterImage<Scalar> to_unit(const RasterImage<Scalar>& img) {
  if (img.mode == PixelMode::unit) return img;
  RasterImage<Scalar> out;
  out.r = img.r / Scalar(255);
  out.g = img.g / Scalar(255);
  out.b = img.b / Scalar(255);
  out.mode = PixelMode::unit;
  return out;
}

/// ITU-R 601 luma, normalized to [0,1] regardless of input mode.
template <class Scalar>
GrayImage<Scalar> to_grayscale(const RasterImage<Scalar>& img) {
  const Scalar inv = Scalar(1) / img.scale();
  return ((img.r * Scalar(0.299) + img.g * Scalar(0.587) +
           img.b * Scalar(0.114)) *
          inv)
      .cwiseMin(Scalar(1))
      .cwiseMax(Scalar(0));
}

/// Mean pooling over kernel x kernel windows, no padding: only windows that
/// fit entirely contribute, so output dims are floor((dim-kernel)/stride)+1.
template <class Scalar>
Plane<Scalar> avg_pool(const Plane<Scalar>& in, int kernel, int stride) {
  if (kernel < 1 || stride < 1)
    throw std::invalid_argument("avg_pool: kernel and stride must be >= 1");
  if (kernel > in.rows() || kernel > in.cols())
    throw std::invalid_argument("avg_pool: kernel larger than image");
  if (stride > in.rows() || stride > in.cols())
    throw std::invalid_argument("avg_pool: stride larger than image");
  const Eigen::Index oh = (in.rows() - kernel) / stride + 1;
  const Eigen::Index ow = (in.cols() - kernel) / stride + 1;
  Plane<Scalar> out(oh, ow);
  const Scalar norm = Scalar(1) / (Scalar(kernel) * Scalar(kernel));
  for (Eigen::Index i = 0; i < oh; ++i)
    for (Eigen::Index j = 0; j < ow; ++j)
      out(i, j) = in.block(i * stride, j * stride, kernel, kernel).sum() * norm;
  return out;
}

/// Alpha-blend `color` into `img` wherever mask = 1. Byte-mode images are
/// rounded back to integers so alpha in {0,1} is exact.
template <class Scalar>
RasterImage<Scalar> overlay(const RasterImage<Scalar>& img,
                            const BinaryMask& mask,
                            std::array<int, 3> color_rgb, double alpha) {
  if (mask.rows() != img.height() || mask.cols() != img.width())
    throw std::invalid_argument("overlay: mask dims do not match image");
  if (alpha < 0.0 || alpha > 1.0)
    throw std::invalid_argument("overlay: alpha outside [0,1]");
  RasterImage<Scalar> out = img;
  const Scalar unit = img.scale() / Scalar(255);
  const Scalar cr = Scalar(color_rgb[0]) * unit;
  const Scalar cg = Scalar(color_rgb[1]) * unit;
  const Scalar cb = Scalar(color_rgb[2]) * unit;
  const Scalar a = Scalar(alpha);
  const bool round = img.mode == PixelMode::bytes;
  auto blend = [&](Plane<Scalar>& plane, Scalar c) {
    for (Eigen::Index i = 0; i < plane.rows(); ++i)
      for (Eigen::Index j = 0; j < plane.cols(); ++j)
        if (mask(i, j)) {
          Scalar v = (Scalar(1) - a) * plane(i, j) + a * c;
          plane(i, j) = round ? Scalar(std::lround(double(v))) : v;
        }
  };
  blend(out.r, cr);
  blend(out.g, cg);
  blend(out.b, cb);
  return out;
}

inline BinaryMask complement(const BinaryMask& m) {
  return (m == std::uint8_t(0)).template cast<std::uint8_t>();
}

inline std::int64_t foreground_count(const BinaryMask& m) {
  return static_cast<std::int64_t>(m.template cast<std::int64_t>().sum());
}

inline void require_binary(const BinaryMask& m, const std::string& what) {
  if ((m > std::uint8_t(1)).any())
    throw std::invalid_argument(what + ": mask values must be 0 or 1");
}

}  // namespace racegan
