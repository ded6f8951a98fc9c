#include "cvd/geometry.hpp"

#include <cmath>
#include <string>

#include <Eigen/LU>

#include "cvd/sampling.hpp"

namespace cvd {

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d K;
  K << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return K;
}

Eigen::Matrix3d CameraIntrinsics::inverse() const {
  Eigen::Matrix3d Kinv;
  Kinv << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return Kinv;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  }
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument, "image size must be at least 1x1");
  }
  if (!std::isfinite(cx) || !std::isfinite(cy)) {
    throw Error(ErrorCode::InvalidArgument, "principal point must be finite");
  }
}

void CameraPose::validate(double tol) const {
  const double ortho = (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  const double det = R.determinant();
  if (!(ortho <= tol) || !(std::abs(det - 1.0) <= tol)) {
    throw Error(ErrorCode::InvalidArgument,
                "rotation is not orthonormal (max |R^T R - I| = " + std::to_string(ortho) +
                    ", det = " + std::to_string(det) + ")");
  }
  if (!t.allFinite()) throw Error(ErrorCode::InvalidArgument, "translation must be finite");
}

PixelCoord perspective_divide(const Eigen::Vector3d& v) {
  if (!(std::abs(v.z()) >= kDegenerateDepth)) {
    throw Error(ErrorCode::DegenerateProjection, "point lies on the camera plane");
  }
  return {v.x() / v.z(), v.y() / v.z()};
}

Eigen::Vector3d lift(PixelCoord x, double depth, const CameraIntrinsics& K) {
  if (!(depth > 0.0)) {
    throw Error(ErrorCode::NonPositiveDepth, "cannot lift a pixel with depth " +
                                                 std::to_string(depth));
  }
  // Written out so that z == depth exactly.
  return {depth * (x.x - K.cx) / K.fx, depth * (x.y - K.cy) / K.fy, depth};
}

Eigen::Vector3d transform_to_frame(const Eigen::Vector3d& c, const CameraPose& from,
                                   const CameraPose& to) {
  return to.R.transpose() * (from.R * c + from.t - to.t);
}

Eigen::Vector2d project(const Eigen::Vector3d& c, const CameraIntrinsics& K) {
  const PixelCoord n = perspective_divide(c);
  return {K.fx * n.x + K.cx, K.fy * n.y + K.cy};
}

Reprojection reproject(PixelCoord x, double depth, const Camera& from, const Camera& to) {
  const Eigen::Vector3d c = lift(x, depth, from.intrinsics);
  const Eigen::Vector3d cij = transform_to_frame(c, from.pose, to.pose);
  const PixelCoord p = perspective_divide(to.intrinsics.matrix() * cij);
  return {p, cij.z()};
}

Reprojection reproject(PixelCoord x, const DepthMap& depth, const Camera& from, const Camera& to) {
  const auto d = sample_depth(depth, x);
  if (!d) {
    throw Error(ErrorCode::UndefinedDepth, "depth undefined at (" + std::to_string(x.x) + ", " +
                                               std::to_string(x.y) + ")");
  }
  return reproject(x, *d, from, to);
}

RelativeTransform RelativeTransform::between(const CameraPose& from, const CameraPose& to) {
  return {to.R.transpose() * from.R, to.R.transpose() * (from.t - to.t)};
}

}  // namespace cvd
