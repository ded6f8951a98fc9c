#pragma once

#include <span>
#include <vector>

#include "cvd/geometry.hpp"
#include "cvd/raster.hpp"

namespace cvd::calibration {

struct ScaleReport {
  /// (frame id, s_i) for every frame that had overlap, ascending frame id.
  std::vector<std::pair<int, double>> per_frame;
  double global = 1.0;
  std::vector<int> frames_skipped;
};

/// Median of D_nn / D_mvs over pixels where both are defined.
/// Throws NoOverlap when no pixel qualifies, SizeMismatch on differing rasters.
double per_frame_scale(const DepthMap& nn_depth, const DepthMap& mvs_depth);

/// Arithmetic mean. Throws EmptyInput.
double global_scale(std::span<const double> per_frame);

/// Multiplies every translation by s. Throws NonPositiveScale.
std::vector<CameraPose> apply_scale(std::span<const CameraPose> poses, double s);

/// Runs per_frame_scale over all frames (NoOverlap frames are skipped and
/// listed) and reduces with global_scale. Throws EmptyInput when every frame
/// was skipped.
ScaleReport calibrate(std::span<const DepthMap> nn_depths, std::span<const DepthMap> mvs_depths);

}  // namespace cvd::calibration
