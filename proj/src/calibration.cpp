#include "cvd/calibration.hpp"

#include <algorithm>
#include <string>

namespace cvd::calibration {

double per_frame_scale(const DepthMap& nn_depth, const DepthMap& mvs_depth) {
  if (!nn_depth.same_shape(mvs_depth)) {
    throw Error(ErrorCode::SizeMismatch, "learned and MVS depth rasters differ in size");
  }
  std::vector<double> ratios;
  ratios.reserve(nn_depth.size());
  const auto nn = nn_depth.values();
  const auto mvs = mvs_depth.values();
  for (std::size_t k = 0; k < nn.size(); ++k) {
    // Undefined learned depth is a hole, not a ratio sample.
    if (mvs[k] != 0.0 && nn[k] != 0.0) ratios.push_back(nn[k] / mvs[k]);
  }
  if (ratios.empty()) throw Error(ErrorCode::NoOverlap, "no pixel with both depths defined");

  const std::size_t mid = ratios.size() / 2;
  std::nth_element(ratios.begin(), ratios.begin() + mid, ratios.end());
  const double upper = ratios[mid];
  if (ratios.size() % 2 == 1) return upper;
  const double lower = *std::max_element(ratios.begin(), ratios.begin() + mid);
  return 0.5 * (lower + upper);
}

double global_scale(std::span<const double> per_frame) {
  if (per_frame.empty()) throw Error(ErrorCode::EmptyInput, "no per-frame scales to average");
  double sum = 0.0;
  for (double s : per_frame) sum += s;
  return sum / static_cast<double>(per_frame.size());
}

std::vector<CameraPose> apply_scale(std::span<const CameraPose> poses, double s) {
  if (!(s > 0.0)) {
    throw Error(ErrorCode::NonPositiveScale, "scale must be positive, got " + std::to_string(s));
  }
  std::vector<CameraPose> out(poses.begin(), poses.end());
  for (auto& pose : out) pose.t *= s;
  return out;
}

ScaleReport calibrate(std::span<const DepthMap> nn_depths, std::span<const DepthMap> mvs_depths) {
  if (nn_depths.size() != mvs_depths.size()) {
    throw Error(ErrorCode::SizeMismatch, "frame counts of learned and MVS depths differ");
  }
  ScaleReport report;
  std::vector<double> scales;
  for (std::size_t i = 0; i < nn_depths.size(); ++i) {
    try {
      const double s = per_frame_scale(nn_depths[i], mvs_depths[i]);
      report.per_frame.emplace_back(static_cast<int>(i), s);
      scales.push_back(s);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoOverlap) throw;
      report.frames_skipped.push_back(static_cast<int>(i));
    }
  }
  report.global = global_scale(scales);
  return report;
}

}  // namespace cvd::calibration
