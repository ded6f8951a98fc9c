#include "cvd/flowcheck.hpp"

namespace cvd::flowcheck {

ValidityMask fb_consistency(const FlowField& forward, const FlowField& backward,
                            double threshold_px) {
  if (!forward.same_shape(backward)) {
    throw Error(ErrorCode::SizeMismatch, "forward and backward flow differ in size");
  }
  ValidityMask mask(forward.width(), forward.height(), 0);
  const double threshold_sq = threshold_px * threshold_px;
  for (int y = 0; y < forward.height(); ++y) {
    for (int x = 0; x < forward.width(); ++x) {
      const Eigen::Vector2d& f = forward(x, y);
      const auto b = try_bilinear_sample(backward, {x + f.x(), y + f.y()});
      if (!b) continue;
      mask(x, y) = (f + *b).squaredNorm() <= threshold_sq ? 255 : 0;
    }
  }
  return mask;
}

double valid_ratio(const ValidityMask& mask) {
  return static_cast<double>(count_valid(mask)) / static_cast<double>(mask.size());
}

bool overlap_accept(const ValidityMask& mask, double min_ratio) {
  // Compare counts rather than the ratio so that exactly min_ratio is not
  // lost to rounding.
  return static_cast<double>(count_valid(mask)) >= min_ratio * static_cast<double>(mask.size());
}

void exclude_dynamic(ValidityMask& mask, const ValidityMask& dynamic) {
  if (!mask.same_shape(dynamic)) {
    throw Error(ErrorCode::SizeMismatch, "dynamic mask differs in size from flow mask");
  }
  auto out = mask.values();
  const auto dyn = dynamic.values();
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (dyn[k] != 0) out[k] = 0;
  }
}

}  // namespace cvd::flowcheck
