#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "cvd/geometry.hpp"
#include "cvd/raster.hpp"

namespace cvd::metrics {

struct TrackObservation {
  int frame = 0;
  PixelCoord position;
};

/// 2D feature track; frames strictly increasing.
struct Track {
  int id = 0;
  std::vector<TrackObservation> observations;
};

struct TrackPoint {
  int frame = 0;
  Eigen::Vector3d world;
};

struct Track3D {
  int id = 0;
  std::vector<TrackPoint> points;
};

/// stereo_disparity ~= scale * predicted_disparity + shift.
struct DisparityAlignment {
  double scale = 1.0;
  double shift = 0.0;
  double inlier_ratio = 0.0;
};

struct RansacOptions {
  int iterations = 1000;
  double inlier_threshold = 1.0;
  std::uint64_t seed = 0;
};

/// RANSAC line fit on pixels where both rasters are finite, pred > 0 and the
/// optional mask is set; least-squares refit on the winning consensus.
/// Throws DegenerateInput for fewer than 2 pixels or constant predictions.
DisparityAlignment align_disparity_ransac(const Raster<double>& predicted_disparity,
                                          const Raster<double>& stereo_disparity,
                                          const RansacOptions& options = {},
                                          const ValidityMask* valid = nullptr);

/// Warps the left image into the right one through the aligned depth
/// (fx * baseline / (scale / D + shift)) and returns the mean squared RGB
/// difference over pixels landing inside the right image. Throws NoValidPixels.
double photometric_error(const RgbImage& left, const RgbImage& right, const DepthMap& left_depth,
                         const Camera& left_camera, const Camera& right_camera,
                         const DisparityAlignment& alignment,
                         const ValidityMask* valid = nullptr);

/// Unprojects each observation with the frame's depth (inverse-depth bilinear
/// lookup). Observations without depth are dropped; fewer than two surviving
/// points throw TrackDegenerate.
Track3D tracks_to_3d(const Track& track, std::span<const DepthMap> depths,
                     std::span<const Camera> cameras);

/// Mean Euclidean distance between consecutive points.
double instability(const Track3D& track);

/// Largest eigenvalue of the population (1/n) covariance of the points.
double drift(const Track3D& track);

struct TrackScore {
  int id = 0;
  std::size_t points = 0;
  double instability = 0.0;
  double drift = 0.0;
};

/// Video-level instability and drift. The percentage values divide the raw
/// means by the median defined depth of the video.
struct TrackMetrics {
  double instability = 0.0;
  double drift = 0.0;
  double scene_scale = 0.0;
  double instability_pct = 0.0;
  double drift_pct = 0.0;
  std::size_t tracks_used = 0;
  std::size_t tracks_dropped = 0;
  std::vector<TrackScore> per_track;
};

/// Throws TrackDegenerate when no track survives.
TrackMetrics evaluate_tracks(std::span<const Track> tracks, std::span<const DepthMap> depths,
                             std::span<const Camera> cameras);

double median_depth(std::span<const DepthMap> depths);

enum class Alignment { None, Median };
enum class Space { Depth, Disparity };

struct DepthErrors {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta1 = 0.0;  ///< fraction with max(p/g, g/p) < 1.25
  double delta2 = 0.0;  ///< ... < 1.25^2
  double delta3 = 0.0;  ///< ... < 1.25^3
  std::size_t n_pixels = 0;
};

/// Standard depth errors over pixels where both maps are defined. Throws
/// NoValidPixels, SizeMismatch.
DepthErrors depth_metrics(const DepthMap& pred, const DepthMap& gt,
                          Alignment alignment = Alignment::Median, Space space = Space::Depth);

}  // namespace cvd::metrics
