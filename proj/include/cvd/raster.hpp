#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cvd/error.hpp"

namespace cvd {

/// Dense row-major image. Integer coordinates address pixel centers and
/// (0, 0) is the top-left pixel.
template <class T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, const T& fill = T{})
      : width_(width), height_(height), data_(checked_size(width, height), fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool in_bounds(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  bool same_shape(int w, int h) const noexcept { return w == width_ && h == height_; }
  template <class U>
  bool same_shape(const Raster<U>& other) const noexcept {
    return other.width() == width_ && other.height() == height_;
  }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  bool operator==(const Raster& other) const = default;

 private:
  static std::size_t checked_size(int width, int height) {
    if (width < 1 || height < 1) {
      throw Error(ErrorCode::InvalidArgument,
                  "raster dimensions must be positive, got " + std::to_string(width) + "x" +
                      std::to_string(height));
    }
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Depth along the optical axis; 0 marks an undefined pixel.
using DepthMap = Raster<double>;
/// Per-pixel displacement (dx, dy) in pixels.
using FlowField = Raster<Eigen::Vector2d>;
/// Nonzero = valid.
using ValidityMask = Raster<std::uint8_t>;
/// Linear RGB in [0, 1].
using RgbImage = Raster<Eigen::Vector3d>;

inline std::size_t count_valid(const ValidityMask& mask) {
  std::size_t n = 0;
  for (auto v : mask.values()) n += v != 0;
  return n;
}

}  // namespace cvd
