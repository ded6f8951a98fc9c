#pragma once

#include <array>
#include <cmath>
#include <optional>

#include "cvd/error.hpp"
#include "cvd/geometry.hpp"
#include "cvd/raster.hpp"

namespace cvd {

/// The four taps of a bilinear lookup. Taps with zero weight may alias
/// their neighbour on the last row/column.
struct BilinearFootprint {
  std::array<int, 4> xs{};
  std::array<int, 4> ys{};
  std::array<double, 4> weights{};
};

/// nullopt unless 0 <= p.x <= width-1 and 0 <= p.y <= height-1.
inline std::optional<BilinearFootprint> bilinear_footprint(int width, int height, PixelCoord p) {
  if (!(p.x >= 0.0 && p.y >= 0.0 && p.x <= width - 1 && p.y <= height - 1)) return std::nullopt;
  const int x0 = static_cast<int>(std::floor(p.x));
  const int y0 = static_cast<int>(std::floor(p.y));
  const int x1 = x0 + 1 < width ? x0 + 1 : x0;
  const int y1 = y0 + 1 < height ? y0 + 1 : y0;
  const double ax = p.x - x0;
  const double ay = p.y - y0;
  BilinearFootprint f;
  f.xs = {x0, x1, x0, x1};
  f.ys = {y0, y0, y1, y1};
  f.weights = {(1.0 - ax) * (1.0 - ay), ax * (1.0 - ay), (1.0 - ax) * ay, ax * ay};
  return f;
}

template <class T>
std::optional<T> try_bilinear_sample(const Raster<T>& field, PixelCoord p) {
  const auto f = bilinear_footprint(field.width(), field.height(), p);
  if (!f) return std::nullopt;
  // Zero-weight taps are skipped so integer coordinates return the raster value exactly.
  T acc = field(f->xs[0], f->ys[0]) * f->weights[0];
  for (int k = 1; k < 4; ++k) {
    if (f->weights[k] != 0.0) acc = acc + field(f->xs[k], f->ys[k]) * f->weights[k];
  }
  return acc;
}

/// Throws OutOfBounds outside [0, width-1] x [0, height-1].
template <class T>
T bilinear_sample(const Raster<T>& field, PixelCoord p) {
  auto v = try_bilinear_sample(field, p);
  if (!v) throw Error(ErrorCode::OutOfBounds, "bilinear sample outside the raster");
  return *v;
}

/// Depth at a sub-pixel position, interpolating inverse depth bilinearly
/// (exact on planar surfaces). nullopt when out of bounds or when any tap
/// with nonzero weight is undefined.
inline std::optional<double> sample_depth(const DepthMap& depth, PixelCoord p) {
  const auto f = bilinear_footprint(depth.width(), depth.height(), p);
  if (!f) return std::nullopt;
  if (f->weights[0] == 1.0) {
    const double d = depth(f->xs[0], f->ys[0]);
    return d > 0.0 ? std::optional<double>(d) : std::nullopt;
  }
  double inv = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (f->weights[k] == 0.0) continue;
    const double d = depth(f->xs[k], f->ys[k]);
    if (!(d > 0.0)) return std::nullopt;
    inv += f->weights[k] / d;
  }
  return 1.0 / inv;
}

}  // namespace cvd
