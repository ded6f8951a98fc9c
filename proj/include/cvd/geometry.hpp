#pragma once

#include <optional>

#include <Eigen/Core>

#include "cvd/raster.hpp"

namespace cvd {

/// |z| below this is treated as a point on the camera plane.
inline constexpr double kDegenerateDepth = 1e-12;

struct PixelCoord {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const PixelCoord&) const = default;
};

/// Pinhole intrinsics. A SIMPLE_PINHOLE camera is the fx == fy case; its
/// single focal length is reported by focal().
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  double focal() const noexcept { return fx; }
  Eigen::Matrix3d matrix() const;
  Eigen::Matrix3d inverse() const;
  /// Throws InvalidArgument on fx/fy <= 0 or empty raster size.
  void validate() const;
};

/// Camera-to-world rigid transform: world X = R * c + t.
struct CameraPose {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  static CameraPose identity() { return {}; }
  /// Throws InvalidArgument unless R is a proper rotation within `tol`.
  void validate(double tol = 1e-9) const;
};

struct Camera {
  CameraIntrinsics intrinsics;
  CameraPose pose;
};

PixelCoord perspective_divide(const Eigen::Vector3d& v);

/// c = depth * K^-1 * [x, y, 1]^T. The z component equals depth exactly.
Eigen::Vector3d lift(PixelCoord x, double depth, const CameraIntrinsics& K);

/// Point in `from`'s camera coordinates expressed in `to`'s camera coordinates.
Eigen::Vector3d transform_to_frame(const Eigen::Vector3d& c, const CameraPose& from,
                                   const CameraPose& to);

Eigen::Vector2d project(const Eigen::Vector3d& c, const CameraIntrinsics& K);

struct Reprojection {
  PixelCoord p;
  double z = 0.0;
};

Reprojection reproject(PixelCoord x, double depth, const Camera& from, const Camera& to);
/// Depth is read from `depth` at x (exact at integer coordinates).
Reprojection reproject(PixelCoord x, const DepthMap& depth, const Camera& from, const Camera& to);

/// Precomputed i -> j transfer used by the per-pixel loss loops:
/// c_{i->j} = rotation * c_i + translation.
struct RelativeTransform {
  Eigen::Matrix3d rotation;
  Eigen::Vector3d translation;

  static RelativeTransform between(const CameraPose& from, const CameraPose& to);
};

}  // namespace cvd
