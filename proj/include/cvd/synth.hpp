#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cvd/geometry.hpp"
#include "cvd/metrics.hpp"
#include "cvd/optimizer.hpp"
#include "cvd/raster.hpp"

namespace cvd::synth {

enum class PrimitiveKind { Plane, Sphere };

/// Textured plane or sphere. A moving primitive translates by `velocity`
/// world units per frame; its texture moves with it.
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::Plane;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  /// Plane only. axis_u must be orthogonal to normal; half extents of 0 make
  /// the plane unbounded along that axis.
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d axis_u = Eigen::Vector3d::UnitX();
  double half_u = 0.0;
  double half_v = 0.0;
  /// Sphere only.
  double radius = 1.0;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  std::uint64_t texture_seed = 1;
  /// World size of one noise cell.
  double texture_scale = 0.25;

  bool moving() const { return !velocity.isZero(0.0); }
  Eigen::Vector3d center_at(int frame) const { return center + frame * velocity; }
};

struct SceneSpec {
  CameraIntrinsics intrinsics;
  std::vector<CameraPose> trajectory;
  std::vector<Primitive> primitives;
  /// When set, a right camera is rendered at +baseline along each left camera's x axis.
  std::optional<double> stereo_baseline;

  int frames() const { return static_cast<int>(trajectory.size()); }
  void validate() const;
};

struct Hit {
  int primitive = -1;
  double depth = 0.0;
  Eigen::Vector3d world;
};

/// Nearest intersection of the ray through `pixel` of `camera` with the
/// scene as it is at time `frame`.
std::optional<Hit> cast_ray(const SceneSpec& spec, const Camera& camera, int frame,
                            PixelCoord pixel);

struct View {
  std::vector<RgbImage> rgb;
  std::vector<DepthMap> depth;
  /// Primitive index per pixel, -1 where the ray hits nothing.
  std::vector<Raster<int>> ids;
};

struct Rendering {
  View left;
  /// Pixels on moving primitives, per frame.
  std::vector<ValidityMask> dynamic;
  std::optional<View> right;
};

std::vector<Camera> cameras(const SceneSpec& spec);
/// Throws InvalidArgument when the scene has no stereo baseline.
std::vector<Camera> stereo_cameras(const SceneSpec& spec);

/// Throws EmptyScene for a spec without primitives.
Rendering render(const SceneSpec& spec);

struct FlowResult {
  FlowField flow;
  /// Set where the correspondence is visible in the target view and its
  /// bilinear footprint lies on the same primitive.
  ValidityMask visible;
};

/// Ground-truth flow i -> j including object motion. Pixels that hit nothing
/// get zero flow and are not visible.
FlowResult analytic_flow(const SceneSpec& spec, const Rendering& rendering, int i, int j);

/// Left -> right flow of frame `frame`; stereo disparity is -flow.x.
FlowResult stereo_flow(const SceneSpec& spec, const Rendering& rendering, int frame);

enum class PerturbKind { GaussianLog, LowFrequency, Scale };

PerturbKind parse_perturb_kind(const std::string& name);
std::string to_string(PerturbKind kind);

/// GaussianLog adds N(0, magnitude^2) to every log-depth parameter;
/// LowFrequency adds a smooth random log-depth field of standard deviation
/// about `magnitude`; Scale multiplies depth by `magnitude`.
optimizer::DepthField perturb(const optimizer::DepthField& field, PerturbKind kind,
                              double magnitude, std::uint64_t seed);
/// Same on a depth map; undefined pixels stay undefined.
DepthMap perturb(const DepthMap& depth, PerturbKind kind, double magnitude, std::uint64_t seed);

/// Tracks of points on static primitives, projected into every frame where
/// they are visible; each track is the contiguous visible run around its
/// seed frame and has at least two observations.
std::vector<metrics::Track> synth_tracks(const SceneSpec& spec, const Rendering& rendering,
                                         int n_tracks, std::uint64_t seed);

/// Standard normal sample from two engine draws (Box-Muller), identical
/// across standard library implementations.
double standard_normal(std::uint64_t& state);

// Bundled scenes. Cameras wander on a Lissajous path while looking at the scene center.
inline constexpr int kDefaultFrames = 16;

SceneSpec static_plane_scene(int n_frames = kDefaultFrames);
SceneSpec plane_and_sphere_scene(int n_frames = kDefaultFrames);
SceneSpec moving_patch_scene(int n_frames = kDefaultFrames);

struct NamedScene {
  std::string name;
  SceneSpec spec;
};

std::vector<NamedScene> bundled_scenes(int n_frames = kDefaultFrames);
/// Throws InvalidArgument for an unknown name.
SceneSpec bundled_scene(const std::string& name, int n_frames = kDefaultFrames);

/// Same scene seen by cameras with a different pixel grid over the same field of view.
SceneSpec resized(SceneSpec spec, int width, int height);

}  // namespace cvd::synth
