#pragma once

#include <cstddef>

#include "cvd/geometry.hpp"
#include "cvd/raster.hpp"

namespace cvd::loss {

/// Smoothing radius for |.| in gradient evaluation: |v| -> sqrt(|v|^2 + eps^2) - eps.
inline constexpr double kNormSmoothing = 1e-6;

struct LossConfig {
  double lambda = 0.1;
  int pixel_stride = 1;

  void validate() const;
};

/// Means over the n_pixels pixels that survived masking and dropping.
struct PairLossBreakdown {
  double spatial = 0.0;
  double disparity = 0.0;
  double total = 0.0;
  std::size_t n_pixels = 0;
  /// Masked-in pixels dropped for undefined depth, a degenerate projection, or
  /// a flow target outside frame j.
  std::size_t n_dropped = 0;
};

/// One directed constraint i -> j. References must outlive the call.
struct PairInputs {
  const DepthMap& src_depth;
  const DepthMap& dst_depth;
  const Camera& src_camera;
  const Camera& dst_camera;
  const FlowField& flow;
  const ValidityMask& mask;
};

struct PairGradient {
  DepthMap src;  ///< dL/dD_i per pixel
  DepthMap dst;  ///< dL/dD_j, spread over bilinear taps
  PairLossBreakdown breakdown;
};

/// x + F(x). Throws OutOfBounds when x lies outside the flow raster.
PixelCoord flow_displace(PixelCoord x, const FlowField& flow);

/// |p_{i->j}(x) - f_{i->j}(x)|. Throws UndefinedDepth / DegenerateProjection.
double spatial_residual(PixelCoord x, const DepthMap& src_depth, const Camera& src,
                        const Camera& dst, const FlowField& flow);

/// u_i * |1/z_{i->j}(x) - 1/z_j(f_{i->j}(x))|, with 1/z_j interpolated
/// bilinearly in inverse depth. Throws UndefinedDepth when either depth is
/// missing (including a flow target outside frame j).
double disparity_residual(PixelCoord x, const DepthMap& src_depth, const DepthMap& dst_depth,
                          const Camera& src, const Camera& dst, const FlowField& flow);

/// Throws SizeMismatch on inconsistent rasters and EmptyMask when no pixel survives.
PairLossBreakdown pair_loss(const PairInputs& in, const LossConfig& config);

/// Same value as pair_loss plus the analytic gradient with respect to both depth maps.
PairGradient pair_loss_grad(const PairInputs& in, const LossConfig& config);

}  // namespace cvd::loss
