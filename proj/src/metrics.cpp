#include "cvd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "cvd/sampling.hpp"

namespace cvd::metrics {

namespace {

struct Line {
  double scale;
  double shift;
};

std::optional<Line> least_squares(std::span<const double> xs, std::span<const double> ys,
                                  std::span<const std::size_t> idx) {
  if (idx.size() < 2) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (auto k : idx) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= static_cast<double>(idx.size());
  my /= static_cast<double>(idx.size());
  double sxx = 0.0, sxy = 0.0;
  for (auto k : idx) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
  }
  if (!(sxx > 0.0)) return std::nullopt;
  const double scale = sxy / sxx;
  return Line{scale, my - scale * mx};
}

std::vector<std::size_t> inliers_of(const Line& line, std::span<const double> xs,
                                    std::span<const double> ys, double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (std::abs(line.scale * xs[k] + line.shift - ys[k]) <= threshold) out.push_back(k);
  }
  return out;
}

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + mid));
}

}  // namespace

DisparityAlignment align_disparity_ransac(const Raster<double>& predicted_disparity,
                                          const Raster<double>& stereo_disparity,
                                          const RansacOptions& options,
                                          const ValidityMask* valid) {
  if (!predicted_disparity.same_shape(stereo_disparity) ||
      (valid && !valid->same_shape(predicted_disparity))) {
    throw Error(ErrorCode::SizeMismatch, "disparity rasters differ in size");
  }
  std::vector<double> xs, ys;
  const auto pred = predicted_disparity.values();
  const auto stereo = stereo_disparity.values();
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (valid && valid->values()[k] == 0) continue;
    if (!(pred[k] > 0.0) || !std::isfinite(pred[k]) || !std::isfinite(stereo[k])) continue;
    xs.push_back(pred[k]);
    ys.push_back(stereo[k]);
  }
  if (xs.size() < 2) throw Error(ErrorCode::DegenerateInput, "fewer than 2 valid pixels");
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  if (*lo == *hi) throw Error(ErrorCode::DegenerateInput, "predicted disparity is constant");

  std::mt19937_64 rng(options.seed);
  const std::size_t n = xs.size();
  std::vector<std::size_t> best;
  for (int it = 0; it < options.iterations; ++it) {
    const std::size_t a = rng() % n;
    const std::size_t b = rng() % n;
    if (xs[a] == xs[b]) continue;
    const double scale = (ys[b] - ys[a]) / (xs[b] - xs[a]);
    const Line line{scale, ys[a] - scale * xs[a]};
    auto inl = inliers_of(line, xs, ys, options.inlier_threshold);
    if (inl.size() > best.size()) best = std::move(inl);
  }
  // Every hypothesis was a repeated sample; fall back to all pixels.
  if (best.size() < 2) {
    best.resize(n);
    for (std::size_t k = 0; k < n; ++k) best[k] = k;
  }
  auto fit = least_squares(xs, ys, best);
  if (!fit) {
    best.resize(n);
    for (std::size_t k = 0; k < n; ++k) best[k] = k;
    fit = least_squares(xs, ys, best);
  }
  const auto final_inliers = inliers_of(*fit, xs, ys, options.inlier_threshold);
  return {fit->scale, fit->shift, static_cast<double>(final_inliers.size()) / n};
}

double photometric_error(const RgbImage& left, const RgbImage& right, const DepthMap& left_depth,
                         const Camera& left_camera, const Camera& right_camera,
                         const DisparityAlignment& alignment, const ValidityMask* valid) {
  if (!left.same_shape(left_depth) || (valid && !valid->same_shape(left))) {
    throw Error(ErrorCode::SizeMismatch, "left image, depth and mask differ in size");
  }
  const double baseline = (right_camera.pose.t - left_camera.pose.t).norm();
  const double focal = left_camera.intrinsics.focal();
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < left.height(); ++y) {
    for (int x = 0; x < left.width(); ++x) {
      if (valid && (*valid)(x, y) == 0) continue;
      const double d = left_depth(x, y);
      if (!(d > 0.0)) continue;
      const double disparity = alignment.scale / d + alignment.shift;
      if (!(disparity > 0.0)) continue;
      const double aligned = focal * baseline / disparity;
      const Eigen::Vector3d c = lift({double(x), double(y)}, aligned, left_camera.intrinsics);
      const Eigen::Vector3d cr = transform_to_frame(c, left_camera.pose, right_camera.pose);
      if (!(cr.z() >= kDegenerateDepth)) continue;
      const Eigen::Vector2d p = project(cr, right_camera.intrinsics);
      const auto color = try_bilinear_sample(right, {p.x(), p.y()});
      if (!color) continue;
      sum += (*color - left(x, y)).squaredNorm() / 3.0;
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::NoValidPixels, "no pixel lands inside the right view");
  return sum / static_cast<double>(count);
}

Track3D tracks_to_3d(const Track& track, std::span<const DepthMap> depths,
                     std::span<const Camera> cameras) {
  Track3D out;
  out.id = track.id;
  for (const auto& obs : track.observations) {
    if (obs.frame < 0 || static_cast<std::size_t>(obs.frame) >= depths.size() ||
        static_cast<std::size_t>(obs.frame) >= cameras.size()) {
      throw Error(ErrorCode::OutOfBounds, "track " + std::to_string(track.id) +
                                              " references frame " + std::to_string(obs.frame));
    }
    const auto d = sample_depth(depths[obs.frame], obs.position);
    if (!d) continue;
    const Camera& cam = cameras[obs.frame];
    const Eigen::Vector3d c = lift(obs.position, *d, cam.intrinsics);
    out.points.push_back({obs.frame, cam.pose.R * c + cam.pose.t});
  }
  if (out.points.size() < 2) {
    throw Error(ErrorCode::TrackDegenerate,
                "track " + std::to_string(track.id) + " has fewer than 2 points with depth");
  }
  return out;
}

double instability(const Track3D& track) {
  if (track.points.size() < 2) throw Error(ErrorCode::TrackDegenerate, "fewer than 2 points");
  double sum = 0.0;
  for (std::size_t k = 1; k < track.points.size(); ++k) {
    sum += (track.points[k].world - track.points[k - 1].world).norm();
  }
  return sum / static_cast<double>(track.points.size() - 1);
}

double drift(const Track3D& track) {
  if (track.points.size() < 2) throw Error(ErrorCode::TrackDegenerate, "fewer than 2 points");
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : track.points) mean += p.world;
  mean /= static_cast<double>(track.points.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : track.points) {
    const Eigen::Vector3d d = p.world - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(track.points.size());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov, Eigen::EigenvaluesOnly);
  return std::max(0.0, solver.eigenvalues().maxCoeff());
}

double median_depth(std::span<const DepthMap> depths) {
  std::vector<double> all;
  for (const auto& d : depths) {
    for (double v : d.values()) {
      if (v > 0.0) all.push_back(v);
    }
  }
  if (all.empty()) throw Error(ErrorCode::NoValidPixels, "no defined depth in the video");
  return median_of(std::move(all));
}

TrackMetrics evaluate_tracks(std::span<const Track> tracks, std::span<const DepthMap> depths,
                             std::span<const Camera> cameras) {
  TrackMetrics m;
  for (const auto& track : tracks) {
    try {
      const Track3D t3 = tracks_to_3d(track, depths, cameras);
      m.per_track.push_back({track.id, t3.points.size(), instability(t3), drift(t3)});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TrackDegenerate) throw;
      ++m.tracks_dropped;
    }
  }
  if (m.per_track.empty()) throw Error(ErrorCode::TrackDegenerate, "no usable track");
  m.tracks_used = m.per_track.size();
  for (const auto& s : m.per_track) {
    m.instability += s.instability;
    m.drift += s.drift;
  }
  m.instability /= static_cast<double>(m.tracks_used);
  m.drift /= static_cast<double>(m.tracks_used);
  m.scene_scale = median_depth(depths);
  m.instability_pct = 100.0 * m.instability / m.scene_scale;
  m.drift_pct = 100.0 * m.drift / m.scene_scale;
  return m;
}

DepthErrors depth_metrics(const DepthMap& pred, const DepthMap& gt, Alignment alignment,
                          Space space) {
  if (!pred.same_shape(gt)) throw Error(ErrorCode::SizeMismatch, "prediction and truth differ");
  std::vector<double> p, g;
  const auto pv = pred.values();
  const auto gv = gt.values();
  for (std::size_t k = 0; k < pv.size(); ++k) {
    if (!(pv[k] > 0.0) || !(gv[k] > 0.0)) continue;
    p.push_back(space == Space::Disparity ? 1.0 / pv[k] : pv[k]);
    g.push_back(space == Space::Disparity ? 1.0 / gv[k] : gv[k]);
  }
  if (p.empty()) throw Error(ErrorCode::NoValidPixels, "no pixel defined in both maps");
  if (alignment == Alignment::Median) {
    const double s = median_of(g) / median_of(p);
    for (double& v : p) v *= s;
  }
  DepthErrors e;
  e.n_pixels = p.size();
  double sq = 0.0, sq_log = 0.0;
  std::size_t d1 = 0, d2 = 0, d3 = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double diff = p[k] - g[k];
    e.abs_rel += std::abs(diff) / g[k];
    e.sq_rel += diff * diff / g[k];
    sq += diff * diff;
    const double ld = std::log(p[k]) - std::log(g[k]);
    sq_log += ld * ld;
    const double ratio = std::max(p[k] / g[k], g[k] / p[k]);
    d1 += ratio < 1.25;
    d2 += ratio < 1.25 * 1.25;
    d3 += ratio < 1.25 * 1.25 * 1.25;
  }
  const double n = static_cast<double>(p.size());
  e.abs_rel /= n;
  e.sq_rel /= n;
  e.rmse = std::sqrt(sq / n);
  e.rmse_log = std::sqrt(sq_log / n);
  e.delta1 = d1 / n;
  e.delta2 = d2 / n;
  e.delta3 = d3 / n;
  return e;
}

}  // namespace cvd::metrics
