#pragma once

#include "cvd/raster.hpp"
#include "cvd/sampling.hpp"

namespace cvd::flowcheck {

inline constexpr double kDefaultThresholdPx = 1.0;
inline constexpr double kDefaultMinOverlap = 0.2;

/// Valid where x + F_fwd(x) lands inside the image and
/// |F_fwd(x) + F_bwd(x + F_fwd(x))| <= threshold_px (backward flow sampled
/// bilinearly). Throws SizeMismatch.
ValidityMask fb_consistency(const FlowField& forward, const FlowField& backward,
                            double threshold_px = kDefaultThresholdPx);

double valid_ratio(const ValidityMask& mask);

/// True iff the valid fraction is at least min_ratio (inclusive).
bool overlap_accept(const ValidityMask& mask, double min_ratio = kDefaultMinOverlap);

/// Clears mask pixels flagged in `dynamic` (nonzero = moving object).
/// Throws SizeMismatch.
void exclude_dynamic(ValidityMask& mask, const ValidityMask& dynamic);

}  // namespace cvd::flowcheck
