#pragma once

#include "racegan/image.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace racegan {

/// Odd square binary kernel with its origin at the center cell.
///
/// Dilation: output z is foreground iff the element translated to z overlaps
/// the input foreground; element cells falling outside the image are ignored.
/// Erosion: output z is foreground iff every element cell translated to z
/// lands on input foreground; cells outside the image count as violations.
struct StructuringElement {
  Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> cells;

  int size() const { return static_cast<int>(cells.rows()); }
  int radius() const { return size() / 2; }

  void require_valid() const {
    if (cells.rows() != cells.cols())
      throw std::invalid_argument("StructuringElement: must be square");
    if (cells.rows() < 1 || cells.rows() % 2 == 0)
      throw std::invalid_argument("StructuringElement: side must be odd");
    if (!(cells > std::uint8_t(0)).any())
      throw std::invalid_argument(
          "StructuringElement: needs at least one foreground cell");
  }

  static StructuringElement box(int k) {
    StructuringElement e;
    e.cells.setConstant(k, k, std::uint8_t(1));
    e.require_valid();
    return e;
  }
};

inline StructuringElement reflect(const StructuringElement& e) {
  StructuringElement out;
  out.cells = e.cells.reverse();
  return out;
}

/// Text form: rows of 0/1 separated by '/', e.g. "010/111/010".
inline StructuringElement parse_element(const std::string& text) {
  std::vector<std::string> rows;
  std::string current;
  for (char ch : text) {
    if (ch == '/') {
      rows.push_back(current);
      current.clear();
    } else if (ch == '0' || ch == '1') {
      current.push_back(ch);
    } else if (ch != ' ') {
      throw std::invalid_argument("structuring element: unexpected character");
    }
  }
  rows.push_back(current);
  StructuringElement e;
  const auto n = static_cast<Eigen::Index>(rows.size());
  e.cells.resize(n, n);
  for (Eigen::Index y = 0; y < n; ++y) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(y)].size()) != n)
      throw std::invalid_argument("structuring element: rows must be square");
    for (Eigen::Index x = 0; x < n; ++x)
      e.cells(y, x) = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] == '1';
  }
  e.require_valid();
  return e;
}

inline std::string serialize_element(const StructuringElement& e) {
  std::string out;
  for (Eigen::Index y = 0; y < e.cells.rows(); ++y) {
    if (y) out.push_back('/');
    for (Eigen::Index x = 0; x < e.cells.cols(); ++x)
      out.push_back(e.cells(y, x) ? '1' : '0');
  }
  return out;
}

inline BinaryMask dilate(const BinaryMask& a, const StructuringElement& b) {
  b.require_valid();
  const int h = static_cast<int>(a.rows()), w = static_cast<int>(a.cols());
  const int r = b.radius(), k = b.size();
  BinaryMask out = BinaryMask::Zero(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      bool hit = false;
      for (int dy = 0; dy < k && !hit; ++dy) {
        const int yy = y + dy - r;
        if (yy < 0 || yy >= h) continue;
        for (int dx = 0; dx < k; ++dx) {
          const int xx = x + dx - r;
          if (xx < 0 || xx >= w) continue;
          if (b.cells(dy, dx) && a(yy, xx)) {
            hit = true;
            break;
          }
        }
      }
      out(y, x) = hit ? 1 : 0;
    }
  return out;
}

inline BinaryMask erode(const BinaryMask& a, const StructuringElement& b) {
  b.require_valid();
  const int h = static_cast<int>(a.rows()), w = static_cast<int>(a.cols());
  const int r = b.radius(), k = b.size();
  BinaryMask out = BinaryMask::Zero(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      bool fits = true;
      for (int dy = 0; dy < k && fits; ++dy)
        for (int dx = 0; dx < k; ++dx) {
          if (!b.cells(dy, dx)) continue;
          const int yy = y + dy - r;
          const int xx = x + dx - r;
          if (yy < 0 || yy >= h || xx < 0 || xx >= w || !a(yy, xx)) {
            fits = false;
            break;
          }
        }
      out(y, x) = fits ? 1 : 0;
    }
  return out;
}

struct PostprocessConfig {
  double binarize_threshold = 0.5;
  /// Component-size floor, calibrated at 128x128 and scaled with image area.
  int min_component_size = 64;
  int connectivity = 8;  // 4 or 8
  StructuringElement element = StructuringElement::box(3);

  void require_valid() const {
    if (binarize_threshold <= 0.0 || binarize_threshold >= 1.0)
      throw std::invalid_argument("post: threshold must lie in (0,1)");
    if (min_component_size < 1)
      throw std::invalid_argument("post: min_component_size must be >= 1");
    if (connectivity != 4 && connectivity != 8)
      throw std::invalid_argument("post: connectivity must be 4 or 8");
    element.require_valid();
  }

  int scaled_min_size(Eigen::Index h, Eigen::Index w) const {
    const double area_ratio =
        (static_cast<double>(h) * static_cast<double>(w)) / (128.0 * 128.0);
    const long long s = std::llround(min_component_size * area_ratio);
    return static_cast<int>(s < 1 ? 1 : s);
  }
};

/// Pixel is 1 iff p >= t.
template <class Scalar>
BinaryMask binarize(const ProbMask<Scalar>& p, double t) {
  if (t <= 0.0 || t >= 1.0)
    throw std::invalid_argument("binarize: threshold must lie in (0,1)");
  return (p >= Scalar(t)).template cast<std::uint8_t>();
}

/// Removes every connected foreground component strictly smaller than the
/// (area-scaled) minimum size. Components of exactly the minimum size stay.
inline BinaryMask filter_components(const BinaryMask& m,
                                    const PostprocessConfig& cfg) {
  cfg.require_valid();
  const int h = static_cast<int>(m.rows()), w = static_cast<int>(m.cols());
  const int min_size = cfg.scaled_min_size(h, w);
  BinaryMask out = m;
  Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic> label =
      Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic>::Constant(
          h, w, -1);

  static const int dy8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
  static const int dx8[] = {-1, 0, 1, -1, 1, -1, 0, 1};
  static const int dy4[] = {-1, 0, 0, 1};
  static const int dx4[] = {0, -1, 1, 0};
  const int* dy = cfg.connectivity == 8 ? dy8 : dy4;
  const int* dx = cfg.connectivity == 8 ? dx8 : dx4;
  const int ndir = cfg.connectivity;

  std::vector<std::pair<int, int>> stack, component;
  std::int32_t next_label = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!m(y, x) || label(y, x) >= 0) continue;
      stack.clear();
      component.clear();
      stack.emplace_back(y, x);
      label(y, x) = next_label;
      while (!stack.empty()) {
        auto [cy, cx] = stack.back();
        stack.pop_back();
        component.emplace_back(cy, cx);
        for (int d = 0; d < ndir; ++d) {
          const int ny = cy + dy[d], nx = cx + dx[d];
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          if (!m(ny, nx) || label(ny, nx) >= 0) continue;
          label(ny, nx) = next_label;
          stack.emplace_back(ny, nx);
        }
      }
      if (static_cast<int>(component.size()) < min_size)
        for (auto [cy, cx] : component) out(cy, cx) = 0;
      ++next_label;
    }
  return out;
}

/// Full cleanup chain: threshold, drop small components, then close
/// (dilate followed by erode) with the configured element.
template <class Scalar>
BinaryMask postprocess(const ProbMask<Scalar>& p, const PostprocessConfig& cfg) {
  cfg.require_valid();
  BinaryMask m = binarize(p, cfg.binarize_threshold);
  m = filter_components(m, cfg);
  m = dilate(m, cfg.element);
  m = erode(m, cfg.element);
  return m;
}

}  // namespace racegan
