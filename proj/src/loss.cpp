#include "cvd/loss.hpp"

#include <cmath>
#include <string>

#include "cvd/sampling.hpp"

namespace cvd::loss {

void LossConfig::validate() const {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
  if (pixel_stride < 1) throw Error(ErrorCode::InvalidArgument, "pixel_stride must be >= 1");
}

namespace {

// Per-pixel quantities shared by the loss and its gradient.
struct PixelEval {
  double spatial = 0.0;
  double disparity = 0.0;
  double d_spatial = 0.0;    // d spatial / d D_i(x), smoothed norm
  double d_disparity = 0.0;  // d disparity / d D_i(x), smoothed norm
  BilinearFootprint taps;
  std::array<double, 4> d_disparity_taps{};  // d disparity / d D_j(tap)
};

enum class PixelStatus { Ok, UndefinedDepth, Degenerate, TargetOutside };

class PairEvaluator {
 public:
  PairEvaluator(const PairInputs& in)
      : in_(in),
        rel_(RelativeTransform::between(in.src_camera.pose, in.dst_camera.pose)),
        ki_(in.src_camera.intrinsics),
        kj_(in.dst_camera.intrinsics) {}

  PixelStatus evaluate(int x, int y, bool with_grad, PixelEval& out) const {
    const double depth = in_.src_depth(x, y);
    if (!(depth > 0.0)) return PixelStatus::UndefinedDepth;

    const Eigen::Vector3d ray((x - ki_.cx) / ki_.fx, (y - ki_.cy) / ki_.fy, 1.0);
    const Eigen::Vector3d a = rel_.rotation * ray;
    const Eigen::Vector3d c = depth * a + rel_.translation;
    const double z = c.z();
    // Points behind frame j are treated like points on its camera plane.
    if (!(z >= kDegenerateDepth)) return PixelStatus::Degenerate;

    const double px = kj_.fx * c.x() / z + kj_.cx;
    const double py = kj_.fy * c.y() / z + kj_.cy;
    const Eigen::Vector2d& flow = in_.flow(x, y);
    const double fx = x + flow.x();
    const double fy = y + flow.y();

    const auto taps = bilinear_footprint(in_.dst_depth.width(), in_.dst_depth.height(), {fx, fy});
    if (!taps) return PixelStatus::TargetOutside;
    double inv_j = 0.0;
    for (int k = 0; k < 4; ++k) {
      if (taps->weights[k] == 0.0) continue;
      const double dj = in_.dst_depth(taps->xs[k], taps->ys[k]);
      if (!(dj > 0.0)) return PixelStatus::UndefinedDepth;
      inv_j += taps->weights[k] / dj;
    }

    const double ex = px - fx;
    const double ey = py - fy;
    const double u = ki_.focal();
    const double w = u * (1.0 / z - inv_j);
    out.spatial = std::sqrt(ex * ex + ey * ey);
    out.disparity = std::abs(w);
    if (!with_grad) return PixelStatus::Ok;

    const double dpx = kj_.fx * (a.x() * z - c.x() * a.z()) / (z * z);
    const double dpy = kj_.fy * (a.y() * z - c.y() * a.z()) / (z * z);
    const double eps2 = kNormSmoothing * kNormSmoothing;
    out.d_spatial = (ex * dpx + ey * dpy) / std::sqrt(ex * ex + ey * ey + eps2);

    const double dabs = w / std::sqrt(w * w + eps2);
    out.d_disparity = -dabs * u * a.z() / (z * z);
    out.taps = *taps;
    for (int k = 0; k < 4; ++k) {
      const double wk = taps->weights[k];
      if (wk == 0.0) {
        out.d_disparity_taps[k] = 0.0;
        continue;
      }
      const double dj = in_.dst_depth(taps->xs[k], taps->ys[k]);
      out.d_disparity_taps[k] = dabs * u * wk / (dj * dj);
    }
    return PixelStatus::Ok;
  }

 private:
  const PairInputs& in_;
  RelativeTransform rel_;
  const CameraIntrinsics& ki_;
  const CameraIntrinsics& kj_;
};

void check_shapes(const PairInputs& in) {
  const DepthMap& di = in.src_depth;
  if (!di.same_shape(in.flow) || !di.same_shape(in.mask)) {
    throw Error(ErrorCode::SizeMismatch, "depth, flow and mask of frame i differ in size");
  }
  if (!di.same_shape(in.src_camera.intrinsics.width, in.src_camera.intrinsics.height) ||
      !in.dst_depth.same_shape(in.dst_camera.intrinsics.width, in.dst_camera.intrinsics.height)) {
    throw Error(ErrorCode::SizeMismatch, "depth raster does not match camera image size");
  }
}

template <class OnPixel>
PairLossBreakdown accumulate(const PairInputs& in, const LossConfig& config, bool with_grad,
                             OnPixel&& on_pixel) {
  config.validate();
  check_shapes(in);
  const PairEvaluator eval(in);
  PairLossBreakdown b;
  PixelEval px;
  const int stride = config.pixel_stride;
  for (int y = 0; y < in.mask.height(); y += stride) {
    for (int x = 0; x < in.mask.width(); x += stride) {
      if (in.mask(x, y) == 0) continue;
      if (eval.evaluate(x, y, with_grad, px) != PixelStatus::Ok) {
        ++b.n_dropped;
        continue;
      }
      b.spatial += px.spatial;
      b.disparity += px.disparity;
      ++b.n_pixels;
      on_pixel(x, y, px);
    }
  }
  if (b.n_pixels == 0) throw Error(ErrorCode::EmptyMask, "no valid pixel in pair");
  const double n = static_cast<double>(b.n_pixels);
  b.spatial /= n;
  b.disparity /= n;
  b.total = b.spatial + config.lambda * b.disparity;
  return b;
}

Eigen::Vector2d flow_at(PixelCoord x, const FlowField& flow) {
  const auto f = try_bilinear_sample(flow, x);
  if (!f) throw Error(ErrorCode::OutOfBounds, "pixel outside the flow field");
  return *f;
}

}  // namespace

PixelCoord flow_displace(PixelCoord x, const FlowField& flow) {
  const Eigen::Vector2d f = flow_at(x, flow);
  return {x.x + f.x(), x.y + f.y()};
}

double spatial_residual(PixelCoord x, const DepthMap& src_depth, const Camera& src,
                        const Camera& dst, const FlowField& flow) {
  const Reprojection r = reproject(x, src_depth, src, dst);
  const PixelCoord f = flow_displace(x, flow);
  return std::hypot(r.p.x - f.x, r.p.y - f.y);
}

double disparity_residual(PixelCoord x, const DepthMap& src_depth, const DepthMap& dst_depth,
                          const Camera& src, const Camera& dst, const FlowField& flow) {
  const Reprojection r = reproject(x, src_depth, src, dst);
  const PixelCoord f = flow_displace(x, flow);
  const auto zj = sample_depth(dst_depth, f);
  if (!zj) throw Error(ErrorCode::UndefinedDepth, "depth of frame j undefined at flow target");
  return src.intrinsics.focal() * std::abs(1.0 / r.z - 1.0 / *zj);
}

PairLossBreakdown pair_loss(const PairInputs& in, const LossConfig& config) {
  return accumulate(in, config, false, [](int, int, const PixelEval&) {});
}

PairGradient pair_loss_grad(const PairInputs& in, const LossConfig& config) {
  PairGradient g{DepthMap(in.src_depth.width(), in.src_depth.height(), 0.0),
                 DepthMap(in.dst_depth.width(), in.dst_depth.height(), 0.0),
                 {}};
  const double lambda = config.lambda;
  g.breakdown = accumulate(in, config, true, [&](int x, int y, const PixelEval& px) {
    g.src(x, y) += px.d_spatial + lambda * px.d_disparity;
    for (int k = 0; k < 4; ++k) {
      if (px.d_disparity_taps[k] != 0.0) {
        g.dst(px.taps.xs[k], px.taps.ys[k]) += lambda * px.d_disparity_taps[k];
      }
    }
  });
  const double inv_n = 1.0 / static_cast<double>(g.breakdown.n_pixels);
  for (double& v : g.src.values()) v *= inv_n;
  for (double& v : g.dst.values()) v *= inv_n;
  return g;
}

}  // namespace cvd::loss
