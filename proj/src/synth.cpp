#include "cvd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "cvd/sampling.hpp"

namespace cvd::synth {

namespace {

constexpr double kMinHitDistance = 1e-9;
// Relative depth agreement required for a correspondence to count as visible.
constexpr double kVisibilityTolerance = 1e-6;

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform01(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

double lattice_value(std::int64_t x, std::int64_t y, std::int64_t z, std::uint64_t seed) {
  std::uint64_t h = seed;
  h ^= static_cast<std::uint64_t>(x) * 0x8cb92ba72f3d8dd7ULL;
  h ^= static_cast<std::uint64_t>(y) * 0x9e3779b97f4a7c15ULL;
  h ^= static_cast<std::uint64_t>(z) * 0xc2b2ae3d27d4eb4fULL;
  return uniform01(h);
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

// Trilinear value noise with smoothstep blending, in [0, 1].
double value_noise(const Eigen::Vector3d& p, std::uint64_t seed) {
  const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const auto iz = static_cast<std::int64_t>(fz);
  const double tx = smooth(p.x() - fx), ty = smooth(p.y() - fy), tz = smooth(p.z() - fz);
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        const double w = (dx ? tx : 1.0 - tx) * (dy ? ty : 1.0 - ty) * (dz ? tz : 1.0 - tz);
        acc += w * lattice_value(ix + dx, iy + dy, iz + dz, seed);
      }
    }
  }
  return acc;
}

Eigen::Vector3d texture(const Primitive& prim, const Eigen::Vector3d& local) {
  const Eigen::Vector3d p = local / prim.texture_scale;
  Eigen::Vector3d rgb;
  for (int c = 0; c < 3; ++c) {
    const std::uint64_t s = prim.texture_seed * 3 + c;
    const double v = 0.65 * value_noise(p, s) + 0.35 * value_noise(2.0 * p + Eigen::Vector3d(7.1, 3.3, 1.7), s + 101);
    rgb[c] = 0.1 + 0.8 * v;
  }
  return rgb;
}

std::optional<double> intersect(const Primitive& prim, int frame, const Eigen::Vector3d& origin,
                                const Eigen::Vector3d& dir) {
  const Eigen::Vector3d center = prim.center_at(frame);
  if (prim.kind == PrimitiveKind::Plane) {
    const double denom = prim.normal.dot(dir);
    if (std::abs(denom) < 1e-12) return std::nullopt;
    const double s = prim.normal.dot(center - origin) / denom;
    if (!(s > kMinHitDistance)) return std::nullopt;
    const Eigen::Vector3d local = origin + s * dir - center;
    if (prim.half_u > 0.0 && std::abs(local.dot(prim.axis_u)) > prim.half_u) return std::nullopt;
    const Eigen::Vector3d axis_v = prim.normal.cross(prim.axis_u);
    if (prim.half_v > 0.0 && std::abs(local.dot(axis_v)) > prim.half_v) return std::nullopt;
    return s;
  }
  const Eigen::Vector3d oc = origin - center;
  const double a = dir.squaredNorm();
  const double b = oc.dot(dir);
  const double c = oc.squaredNorm() - prim.radius * prim.radius;
  const double disc = b * b - a * c;
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  const double near = (-b - root) / a;
  if (near > kMinHitDistance) return near;
  const double far = (-b + root) / a;
  if (far > kMinHitDistance) return far;
  return std::nullopt;
}

Camera right_camera(const Camera& left, double baseline) {
  Camera right = left;
  right.pose.t = left.pose.t + left.pose.R.col(0) * baseline;
  return right;
}

View render_view(const SceneSpec& spec, const std::vector<Camera>& cams) {
  View view;
  const int w = spec.intrinsics.width;
  const int h = spec.intrinsics.height;
  for (int f = 0; f < spec.frames(); ++f) {
    RgbImage rgb(w, h, Eigen::Vector3d::Zero());
    DepthMap depth(w, h, 0.0);
    Raster<int> ids(w, h, -1);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const auto hit = cast_ray(spec, cams[f], f, {double(x), double(y)});
        if (!hit) continue;
        const Primitive& prim = spec.primitives[hit->primitive];
        depth(x, y) = hit->depth;
        ids(x, y) = hit->primitive;
        rgb(x, y) = texture(prim, hit->world - prim.center_at(f));
      }
    }
    view.rgb.push_back(std::move(rgb));
    view.depth.push_back(std::move(depth));
    view.ids.push_back(std::move(ids));
  }
  return view;
}

// Where the surface point seen at `pixel` (camera `from`, time `from_frame`)
// appears in camera `to` at time `to_frame`, and whether it is visible there.
struct Correspondence {
  PixelCoord p;
  bool visible = false;
};

std::optional<Correspondence> correspond(const SceneSpec& spec, const Hit& hit, int from_frame,
                                         const Camera& to, int to_frame,
                                         const Raster<int>& to_ids) {
  const Primitive& prim = spec.primitives[hit.primitive];
  const Eigen::Vector3d world = hit.world + (to_frame - from_frame) * prim.velocity;
  const Eigen::Vector3d c = to.pose.R.transpose() * (world - to.pose.t);
  if (!(c.z() > kMinHitDistance)) return std::nullopt;
  const Eigen::Vector2d p = project(c, to.intrinsics);
  Correspondence out{{p.x(), p.y()}, false};
  const auto taps = bilinear_footprint(to_ids.width(), to_ids.height(), out.p);
  if (!taps) return out;
  const auto seen = cast_ray(spec, to, to_frame, out.p);
  if (!seen || seen->primitive != hit.primitive ||
      std::abs(seen->depth - c.z()) > kVisibilityTolerance * c.z()) {
    return out;
  }
  for (int k = 0; k < 4; ++k) {
    if (taps->weights[k] != 0.0 && to_ids(taps->xs[k], taps->ys[k]) != hit.primitive) return out;
  }
  out.visible = true;
  return out;
}

FlowResult flow_between(const SceneSpec& spec, const Camera& from, int from_frame,
                        const Camera& to, int to_frame, const Raster<int>& to_ids) {
  const int w = spec.intrinsics.width;
  const int h = spec.intrinsics.height;
  FlowResult out{FlowField(w, h, Eigen::Vector2d::Zero()), ValidityMask(w, h, 0)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto hit = cast_ray(spec, from, from_frame, {double(x), double(y)});
      if (!hit) continue;
      const auto corr = correspond(spec, *hit, from_frame, to, to_frame, to_ids);
      if (!corr) continue;
      out.flow(x, y) = {corr->p.x - x, corr->p.y - y};
      out.visible(x, y) = corr->visible ? 255 : 0;
    }
  }
  return out;
}

CameraPose look_at(const Eigen::Vector3d& position, const Eigen::Vector3d& target) {
  const Eigen::Vector3d z = (target - position).normalized();
  const Eigen::Vector3d x = Eigen::Vector3d::UnitY().cross(z).normalized();
  const Eigen::Vector3d y = z.cross(x);
  CameraPose pose;
  pose.R.col(0) = x;
  pose.R.col(1) = y;
  pose.R.col(2) = z;
  pose.t = position;
  return pose;
}

SceneSpec orbit_base(int n_frames) {
  if (n_frames < 2) throw Error(ErrorCode::TooFewFrames, "a scene needs at least 2 frames");
  SceneSpec spec;
  spec.intrinsics = {56.0, 56.0, 31.5, 23.5, 64, 48};
  const Eigen::Vector3d target(0.0, 0.0, 5.0);
  // Incommensurate periods (in frames) keep the baseline of every frame gap
  // away from zero, independent of the video length.
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (int k = 0; k < n_frames; ++k) {
    const Eigen::Vector3d position(0.5 * std::sin(kTwoPi * k / 11.3),
                                   0.3 * std::sin(kTwoPi * k / 7.9 + 0.7),
                                   0.25 * std::sin(kTwoPi * k / 17.1 + 1.3));
    spec.trajectory.push_back(look_at(position, target));
  }
  Primitive backdrop;
  backdrop.kind = PrimitiveKind::Plane;
  backdrop.center = {0.0, 0.0, 6.5};
  backdrop.normal = Eigen::Vector3d(0.18, -0.12, -1.0).normalized();
  backdrop.axis_u = Eigen::Vector3d::UnitY().cross(backdrop.normal).normalized();
  backdrop.texture_seed = 11;
  backdrop.texture_scale = 0.3;
  spec.primitives.push_back(backdrop);
  return spec;
}

}  // namespace

void SceneSpec::validate() const {
  intrinsics.validate();
  if (trajectory.size() < 2) throw Error(ErrorCode::TooFewFrames, "a scene needs at least 2 frames");
  for (const auto& pose : trajectory) pose.validate(1e-9);
  if (primitives.empty()) throw Error(ErrorCode::EmptyScene, "scene has no primitives");
  for (const auto& prim : primitives) {
    if (prim.kind == PrimitiveKind::Plane) {
      if (std::abs(prim.normal.norm() - 1.0) > 1e-9 || std::abs(prim.axis_u.norm() - 1.0) > 1e-9 ||
          std::abs(prim.normal.dot(prim.axis_u)) > 1e-9) {
        throw Error(ErrorCode::InvalidArgument, "plane normal/axis_u must be orthonormal");
      }
      if (prim.half_u < 0.0 || prim.half_v < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "plane half extents must be >= 0");
      }
    } else if (!(prim.radius > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "sphere radius must be positive");
    }
    if (!(prim.texture_scale > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "texture_scale must be positive");
    }
  }
  if (stereo_baseline && !(*stereo_baseline > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "stereo baseline must be positive");
  }
}

std::optional<Hit> cast_ray(const SceneSpec& spec, const Camera& camera, int frame,
                            PixelCoord pixel) {
  const CameraIntrinsics& K = camera.intrinsics;
  // Camera-space ray with z = 1, so the ray parameter is the depth.
  const Eigen::Vector3d ray((pixel.x - K.cx) / K.fx, (pixel.y - K.cy) / K.fy, 1.0);
  const Eigen::Vector3d dir = camera.pose.R * ray;
  std::optional<Hit> best;
  for (std::size_t k = 0; k < spec.primitives.size(); ++k) {
    const auto s = intersect(spec.primitives[k], frame, camera.pose.t, dir);
    if (s && (!best || *s < best->depth)) {
      best = Hit{static_cast<int>(k), *s, camera.pose.t + *s * dir};
    }
  }
  return best;
}

std::vector<Camera> cameras(const SceneSpec& spec) {
  std::vector<Camera> out;
  out.reserve(spec.trajectory.size());
  for (const auto& pose : spec.trajectory) out.push_back({spec.intrinsics, pose});
  return out;
}

std::vector<Camera> stereo_cameras(const SceneSpec& spec) {
  if (!spec.stereo_baseline) throw Error(ErrorCode::InvalidArgument, "scene has no stereo baseline");
  auto out = cameras(spec);
  for (auto& cam : out) cam = right_camera(cam, *spec.stereo_baseline);
  return out;
}

Rendering render(const SceneSpec& spec) {
  if (spec.primitives.empty()) throw Error(ErrorCode::EmptyScene, "scene has no primitives");
  spec.validate();
  Rendering r;
  r.left = render_view(spec, cameras(spec));
  for (int f = 0; f < spec.frames(); ++f) {
    const Raster<int>& ids = r.left.ids[f];
    ValidityMask dyn(ids.width(), ids.height(), 0);
    for (int y = 0; y < ids.height(); ++y) {
      for (int x = 0; x < ids.width(); ++x) {
        const int id = ids(x, y);
        if (id >= 0 && spec.primitives[id].moving()) dyn(x, y) = 255;
      }
    }
    r.dynamic.push_back(std::move(dyn));
  }
  if (spec.stereo_baseline) r.right = render_view(spec, stereo_cameras(spec));
  return r;
}

FlowResult analytic_flow(const SceneSpec& spec, const Rendering& rendering, int i, int j) {
  if (i < 0 || j < 0 || i >= spec.frames() || j >= spec.frames()) {
    throw Error(ErrorCode::OutOfBounds, "frame index out of range");
  }
  const auto cams = cameras(spec);
  return flow_between(spec, cams[i], i, cams[j], j, rendering.left.ids[j]);
}

FlowResult stereo_flow(const SceneSpec& spec, const Rendering& rendering, int frame) {
  if (!rendering.right) throw Error(ErrorCode::InvalidArgument, "rendering has no right view");
  if (frame < 0 || frame >= spec.frames()) throw Error(ErrorCode::OutOfBounds, "frame out of range");
  const Camera left{spec.intrinsics, spec.trajectory[frame]};
  const Camera right = right_camera(left, *spec.stereo_baseline);
  return flow_between(spec, left, frame, right, frame, rendering.right->ids[frame]);
}

PerturbKind parse_perturb_kind(const std::string& name) {
  if (name == "gaussian-log") return PerturbKind::GaussianLog;
  if (name == "lowfreq") return PerturbKind::LowFrequency;
  if (name == "scale") return PerturbKind::Scale;
  throw Error(ErrorCode::InvalidArgument, "unknown perturbation kind '" + name + "'");
}

std::string to_string(PerturbKind kind) {
  switch (kind) {
    case PerturbKind::GaussianLog: return "gaussian-log";
    case PerturbKind::LowFrequency: return "lowfreq";
    case PerturbKind::Scale: return "scale";
  }
  return "unknown";
}

double standard_normal(std::uint64_t& state) {
  const double u1 = 1.0 - uniform01(state);  // (0, 1]
  const double u2 = uniform01(state);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

// Smooth log-depth offset: a few random plane waves with wavelengths of at
// least a quarter of the image, normalized to unit variance.
struct LowFrequencyField {
  static constexpr int kWaves = 6;
  std::array<double, kWaves> kx{}, ky{}, phase{};

  LowFrequencyField(std::uint64_t& state, int width, int height) {
    for (int k = 0; k < kWaves; ++k) {
      kx[k] = (uniform01(state) * 4.0 - 2.0) * 2.0 * std::numbers::pi / width;
      ky[k] = (uniform01(state) * 4.0 - 2.0) * 2.0 * std::numbers::pi / height;
      phase[k] = uniform01(state) * 2.0 * std::numbers::pi;
    }
  }
  double operator()(double x, double y) const {
    double v = 0.0;
    for (int k = 0; k < kWaves; ++k) v += std::cos(kx[k] * x + ky[k] * y + phase[k]);
    return v * std::sqrt(2.0 / kWaves);
  }
};

}  // namespace

optimizer::DepthField perturb(const optimizer::DepthField& field, PerturbKind kind,
                              double magnitude, std::uint64_t seed) {
  if (!(magnitude >= 0.0)) throw Error(ErrorCode::InvalidArgument, "magnitude must be >= 0");
  optimizer::DepthField out = field;
  std::uint64_t state = seed;
  switch (kind) {
    case PerturbKind::GaussianLog:
      if (magnitude == 0.0) break;
      for (double& v : out.params()) v += magnitude * standard_normal(state);
      break;
    case PerturbKind::LowFrequency:
      if (magnitude == 0.0) break;
      for (int f = 0; f < out.frames(); ++f) {
        const LowFrequencyField wave(state, out.grid_width(), out.grid_height());
        for (int y = 0; y < out.grid_height(); ++y) {
          for (int x = 0; x < out.grid_width(); ++x) out.at(f, x, y) += magnitude * wave(x, y);
        }
      }
      break;
    case PerturbKind::Scale:
      if (!(magnitude > 0.0)) throw Error(ErrorCode::NonPositiveScale, "scale must be positive");
      if (magnitude == 1.0) break;
      for (double& v : out.params()) v += std::log(magnitude);
      break;
  }
  return out;
}

DepthMap perturb(const DepthMap& depth, PerturbKind kind, double magnitude, std::uint64_t seed) {
  if (!(magnitude >= 0.0)) throw Error(ErrorCode::InvalidArgument, "magnitude must be >= 0");
  DepthMap out = depth;
  std::uint64_t state = seed;
  switch (kind) {
    case PerturbKind::GaussianLog:
      if (magnitude == 0.0) break;
      for (double& v : out.values()) {
        const double n = standard_normal(state);
        if (v > 0.0) v *= std::exp(magnitude * n);
      }
      break;
    case PerturbKind::LowFrequency: {
      if (magnitude == 0.0) break;
      const LowFrequencyField wave(state, out.width(), out.height());
      for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
          if (out(x, y) > 0.0) out(x, y) *= std::exp(magnitude * wave(x, y));
        }
      }
      break;
    }
    case PerturbKind::Scale:
      if (!(magnitude > 0.0)) throw Error(ErrorCode::NonPositiveScale, "scale must be positive");
      for (double& v : out.values()) v *= magnitude;
      break;
  }
  return out;
}

std::vector<metrics::Track> synth_tracks(const SceneSpec& spec, const Rendering& rendering,
                                         int n_tracks, std::uint64_t seed) {
  if (n_tracks < 1) throw Error(ErrorCode::InvalidArgument, "n_tracks must be >= 1");
  const auto cams = cameras(spec);
  const int w = spec.intrinsics.width;
  const int h = spec.intrinsics.height;
  std::uint64_t state = seed;
  std::vector<metrics::Track> tracks;
  const int max_attempts = 1000 * n_tracks;
  for (int attempt = 0; attempt < max_attempts && static_cast<int>(tracks.size()) < n_tracks;
       ++attempt) {
    const int f = static_cast<int>(splitmix64(state) % static_cast<std::uint64_t>(spec.frames()));
    const PixelCoord px{uniform01(state) * (w - 1), uniform01(state) * (h - 1)};
    const auto hit = cast_ray(spec, cams[f], f, px);
    if (!hit || spec.primitives[hit->primitive].moving()) continue;
    // The seed observation must itself be interpolation-safe.
    const auto self = correspond(spec, *hit, f, cams[f], f, rendering.left.ids[f]);
    if (!self || !self->visible) continue;

    auto visible_at = [&](int k) -> std::optional<PixelCoord> {
      const auto c = correspond(spec, *hit, f, cams[k], k, rendering.left.ids[k]);
      if (!c || !c->visible) return std::nullopt;
      return c->p;
    };
    int first = f;
    while (first > 0 && visible_at(first - 1)) --first;
    int last = f;
    while (last + 1 < spec.frames() && visible_at(last + 1)) ++last;
    if (last == first) continue;

    metrics::Track track;
    track.id = static_cast<int>(tracks.size());
    for (int k = first; k <= last; ++k) {
      track.observations.push_back({k, k == f ? px : *visible_at(k)});
    }
    tracks.push_back(std::move(track));
  }
  return tracks;
}

SceneSpec static_plane_scene(int n_frames) { return orbit_base(n_frames); }

SceneSpec plane_and_sphere_scene(int n_frames) {
  SceneSpec spec = orbit_base(n_frames);
  Primitive sphere;
  sphere.kind = PrimitiveKind::Sphere;
  sphere.center = {0.35, 0.15, 4.4};
  sphere.radius = 0.85;
  sphere.texture_seed = 23;
  sphere.texture_scale = 0.2;
  spec.primitives.push_back(sphere);
  return spec;
}

SceneSpec moving_patch_scene(int n_frames) {
  SceneSpec spec = orbit_base(n_frames);
  Primitive patch;
  patch.kind = PrimitiveKind::Plane;
  patch.center = {-0.5, 0.1, 4.0};
  patch.normal = Eigen::Vector3d(0.0, 0.0, -1.0);
  patch.axis_u = Eigen::Vector3d::UnitX();
  patch.half_u = 0.55;
  patch.half_v = 0.45;
  patch.velocity = {1.0 / n_frames, 0.0, 0.0};
  patch.texture_seed = 37;
  patch.texture_scale = 0.15;
  spec.primitives.push_back(patch);
  return spec;
}

std::vector<NamedScene> bundled_scenes(int n_frames) {
  return {{"static_plane", static_plane_scene(n_frames)},
          {"plane_and_sphere", plane_and_sphere_scene(n_frames)},
          {"moving_patch", moving_patch_scene(n_frames)}};
}

SceneSpec bundled_scene(const std::string& name, int n_frames) {
  for (auto& s : bundled_scenes(n_frames)) {
    if (s.name == name) return std::move(s.spec);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown bundled scene '" + name + "'");
}

SceneSpec resized(SceneSpec spec, int width, int height) {
  if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  CameraIntrinsics& k = spec.intrinsics;
  const double sx = double(width) / k.width;
  const double sy = double(height) / k.height;
  k.fx *= sx;
  k.fy *= sy;
  k.cx = (k.cx + 0.5) * sx - 0.5;
  k.cy = (k.cy + 0.5) * sy - 0.5;
  k.width = width;
  k.height = height;
  return spec;
}

}  // namespace cvd::synth
