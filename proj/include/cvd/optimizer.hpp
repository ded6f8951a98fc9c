#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "cvd/geometry.hpp"
#include "cvd/loss.hpp"
#include "cvd/pairing.hpp"
#include "cvd/raster.hpp"

namespace cvd::optimizer {

inline constexpr int kDefaultGridLongSide = 384;

/// Per-frame log-depth grids. The decoded depth at an image pixel is
/// exp(bilinear(theta)) sampled at the pixel's center mapped into the grid,
/// so depth stays positive for any parameter values.
class DepthField {
 public:
  DepthField() = default;
  DepthField(int n_frames, int image_width, int image_height, int grid_width, int grid_height,
             double fill = 0.0);

  int frames() const noexcept { return n_frames_; }
  int image_width() const noexcept { return image_width_; }
  int image_height() const noexcept { return image_height_; }
  int grid_width() const noexcept { return grid_width_; }
  int grid_height() const noexcept { return grid_height_; }
  std::size_t params_per_frame() const noexcept {
    return static_cast<std::size_t>(grid_width_) * static_cast<std::size_t>(grid_height_);
  }

  /// All frames' parameters, frame-major, row-major within a frame.
  std::span<double> params() noexcept { return theta_; }
  std::span<const double> params() const noexcept { return theta_; }
  std::span<double> frame_params(int frame);
  std::span<const double> frame_params(int frame) const;

  double& at(int frame, int gx, int gy);
  double at(int frame, int gx, int gy) const;

  bool operator==(const DepthField&) const = default;

 private:
  int n_frames_ = 0;
  int image_width_ = 0;
  int image_height_ = 0;
  int grid_width_ = 0;
  int grid_height_ = 0;
  std::vector<double> theta_;
};

/// Grid size whose long side is min(long_side, image long side), aspect preserved.
std::pair<int, int> grid_size_for(int image_width, int image_height, int long_side);

DepthMap decode(const DepthField& field, int frame);

/// Chain rule through decode: adds d L / d theta for `frame` into `grad`
/// (a span over that frame's parameters) given d L / d D and the decoded D.
void backprop_decode(const DepthField& field, const DepthMap& decoded, const DepthMap& grad_depth,
                     std::span<double> grad);

/// Log of the area-downsampled depth; undefined pixels take the value of the
/// nearest defined pixel first. Throws AllUndefined for a frame without depth.
DepthField init_from_depth(std::span<const DepthMap> depths,
                           int grid_long_side = kDefaultGridLongSide);

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step = 0;
  double lr = 4e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_size(std::size_t n, double lr);
};

/// Bias-corrected Adam update in place. Throws ShapeMismatch.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

struct FinetuneConfig {
  int epochs = 20;
  int batch_size = 4;
  double lr = 4e-4;
  loss::LossConfig loss;
  /// Weight of the mean squared difference between neighbouring grid
  /// parameters; 0 disables the term.
  double smooth_weight = 0.0;
  std::uint64_t rng_seed = 0;
  /// Worker threads for pair evaluation within a batch. Results do not depend on it.
  int threads = 1;

  void validate() const;
};

struct FlowConstraint {
  FlowField flow;
  ValidityMask mask;
};

/// Constraints of one sampled pair: i -> j and, when available, j -> i.
struct PairConstraints {
  FramePair pair;
  FlowConstraint forward;
  std::optional<FlowConstraint> backward;
};

struct EpochStats {
  int epoch = 0;
  double mean_total = 0.0;
  double mean_spatial = 0.0;
  double mean_disparity = 0.0;
  std::size_t pairs_evaluated = 0;
  std::size_t pairs_skipped = 0;
};

struct PairLogRow {
  int epoch = 0;
  FramePair pair;
  loss::PairLossBreakdown breakdown;
};

struct FinetuneResult {
  DepthField field;
  std::vector<EpochStats> history;
  std::vector<PairLogRow> pair_log;
};

/// Geometric loss of one pair at the given depths: the mean of the available
/// directions. nullopt when every direction has an empty mask.
std::optional<loss::PairLossBreakdown> evaluate_pair(std::span<const Camera> cameras,
                                                     const PairConstraints& pair,
                                                     std::span<const DepthMap> depths,
                                                     const loss::LossConfig& config);

/// Mean pair loss over all pairs for the decoded field.
loss::PairLossBreakdown mean_loss(std::span<const Camera> cameras,
                                  std::span<const PairConstraints> pairs, const DepthField& field,
                                  const loss::LossConfig& config);

using EpochCallback = std::function<void(const EpochStats&)>;

/// Test-time optimization of `field` against the geometric loss of `pairs`.
/// Each epoch visits every pair once in a seeded shuffled order, in batches of
/// batch_size, with one Adam step per batch. Throws NoAcceptedPairs,
/// NonFiniteLoss (message names the pair).
FinetuneResult finetune(std::span<const Camera> cameras, std::span<const PairConstraints> pairs,
                        DepthField field, const FinetuneConfig& config,
                        const EpochCallback& on_epoch = {});

}  // namespace cvd::optimizer
