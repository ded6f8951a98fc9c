#include "cvd/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <future>
#include <map>
#include <random>
#include <string>

namespace cvd::optimizer {

DepthField::DepthField(int n_frames, int image_width, int image_height, int grid_width,
                       int grid_height, double fill)
    : n_frames_(n_frames),
      image_width_(image_width),
      image_height_(image_height),
      grid_width_(grid_width),
      grid_height_(grid_height) {
  if (n_frames < 1 || image_width < 1 || image_height < 1 || grid_width < 1 || grid_height < 1) {
    throw Error(ErrorCode::InvalidArgument, "depth field dimensions must be positive");
  }
  theta_.assign(static_cast<std::size_t>(n_frames) * params_per_frame(), fill);
}

std::span<double> DepthField::frame_params(int frame) {
  if (frame < 0 || frame >= n_frames_) throw Error(ErrorCode::OutOfBounds, "frame out of range");
  return std::span<double>(theta_).subspan(static_cast<std::size_t>(frame) * params_per_frame(),
                                           params_per_frame());
}

std::span<const double> DepthField::frame_params(int frame) const {
  if (frame < 0 || frame >= n_frames_) throw Error(ErrorCode::OutOfBounds, "frame out of range");
  return std::span<const double>(theta_).subspan(
      static_cast<std::size_t>(frame) * params_per_frame(), params_per_frame());
}

double& DepthField::at(int frame, int gx, int gy) {
  return frame_params(frame)[static_cast<std::size_t>(gy) * grid_width_ + gx];
}

double DepthField::at(int frame, int gx, int gy) const {
  return frame_params(frame)[static_cast<std::size_t>(gy) * grid_width_ + gx];
}

std::pair<int, int> grid_size_for(int image_width, int image_height, int long_side) {
  if (long_side < 1) throw Error(ErrorCode::InvalidArgument, "grid long side must be >= 1");
  const int image_long = std::max(image_width, image_height);
  const int target = std::min(long_side, image_long);
  const double ratio = static_cast<double>(target) / image_long;
  const int gw = std::max(1, static_cast<int>(std::lround(image_width * ratio)));
  const int gh = std::max(1, static_cast<int>(std::lround(image_height * ratio)));
  return {gw, gh};
}

namespace {

// Two-tap linear interpolation weights from image pixel centers to grid nodes.
struct AxisTap {
  int i0;
  int i1;
  double w1;
};

std::vector<AxisTap> axis_taps(int image_len, int grid_len) {
  std::vector<AxisTap> taps(image_len);
  const double scale = static_cast<double>(grid_len) / image_len;
  for (int x = 0; x < image_len; ++x) {
    double g = (x + 0.5) * scale - 0.5;
    g = std::clamp(g, 0.0, static_cast<double>(grid_len - 1));
    const int i0 = static_cast<int>(std::floor(g));
    const int i1 = std::min(i0 + 1, grid_len - 1);
    taps[x] = {i0, i1, g - i0};
  }
  return taps;
}

// Fraction of image pixel k covered by grid cell g, for every g.
std::vector<std::vector<std::pair<int, double>>> area_weights(int image_len, int grid_len) {
  std::vector<std::vector<std::pair<int, double>>> cells(grid_len);
  const double cell = static_cast<double>(image_len) / grid_len;
  for (int g = 0; g < grid_len; ++g) {
    const double lo = g * cell;
    const double hi = (g + 1) * cell;
    for (int k = static_cast<int>(std::floor(lo)); k < image_len && k < hi; ++k) {
      const double overlap = std::min(hi, k + 1.0) - std::max(lo, static_cast<double>(k));
      if (overlap > 0.0) cells[g].emplace_back(k, overlap);
    }
  }
  return cells;
}

DepthMap fill_undefined(const DepthMap& depth) {
  DepthMap out = depth;
  const int w = depth.width();
  const int h = depth.height();
  std::deque<std::pair<int, int>> queue;
  Raster<std::uint8_t> known(w, h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (depth(x, y) > 0.0) {
        known(x, y) = 1;
        queue.emplace_back(x, y);
      }
    }
  }
  if (queue.empty()) return out;
  // Multi-source breadth-first fill in chessboard distance, visiting
  // neighbours in a fixed order so ties resolve deterministically.
  while (!queue.empty()) {
    const auto [x, y] = queue.front();
    queue.pop_front();
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx;
        const int ny = y + dy;
        if (!known.in_bounds(nx, ny) || known(nx, ny)) continue;
        known(nx, ny) = 1;
        out(nx, ny) = out(x, y);
        queue.emplace_back(nx, ny);
      }
    }
  }
  return out;
}

}  // namespace

DepthMap decode(const DepthField& field, int frame) {
  const auto theta = field.frame_params(frame);
  const int gw = field.grid_width();
  const auto tx = axis_taps(field.image_width(), gw);
  const auto ty = axis_taps(field.image_height(), field.grid_height());
  DepthMap out(field.image_width(), field.image_height());
  for (int y = 0; y < field.image_height(); ++y) {
    const AxisTap& ay = ty[y];
    const double* row0 = theta.data() + static_cast<std::size_t>(ay.i0) * gw;
    const double* row1 = theta.data() + static_cast<std::size_t>(ay.i1) * gw;
    for (int x = 0; x < field.image_width(); ++x) {
      const AxisTap& ax = tx[x];
      double v = (1.0 - ax.w1) * row0[ax.i0];
      if (ax.w1 != 0.0) v += ax.w1 * row0[ax.i1];
      if (ay.w1 != 0.0) {
        double v1 = (1.0 - ax.w1) * row1[ax.i0];
        if (ax.w1 != 0.0) v1 += ax.w1 * row1[ax.i1];
        v = (1.0 - ay.w1) * v + ay.w1 * v1;
      }
      out(x, y) = std::exp(v);
    }
  }
  return out;
}

void backprop_decode(const DepthField& field, const DepthMap& decoded, const DepthMap& grad_depth,
                     std::span<double> grad) {
  if (!decoded.same_shape(field.image_width(), field.image_height()) ||
      !grad_depth.same_shape(decoded) || grad.size() != field.params_per_frame()) {
    throw Error(ErrorCode::ShapeMismatch, "gradient buffers do not match the depth field");
  }
  const int gw = field.grid_width();
  const auto tx = axis_taps(field.image_width(), gw);
  const auto ty = axis_taps(field.image_height(), field.grid_height());
  for (int y = 0; y < field.image_height(); ++y) {
    const AxisTap& ay = ty[y];
    for (int x = 0; x < field.image_width(); ++x) {
      const double g = grad_depth(x, y);
      if (g == 0.0) continue;
      const double gv = g * decoded(x, y);  // d exp(v) / dv = exp(v)
      const AxisTap& ax = tx[x];
      const std::size_t r0 = static_cast<std::size_t>(ay.i0) * gw;
      const std::size_t r1 = static_cast<std::size_t>(ay.i1) * gw;
      grad[r0 + ax.i0] += gv * (1.0 - ax.w1) * (1.0 - ay.w1);
      grad[r0 + ax.i1] += gv * ax.w1 * (1.0 - ay.w1);
      grad[r1 + ax.i0] += gv * (1.0 - ax.w1) * ay.w1;
      grad[r1 + ax.i1] += gv * ax.w1 * ay.w1;
    }
  }
}

DepthField init_from_depth(std::span<const DepthMap> depths, int grid_long_side) {
  if (depths.empty()) throw Error(ErrorCode::EmptyInput, "no depth maps to initialize from");
  const int w = depths.front().width();
  const int h = depths.front().height();
  const auto [gw, gh] = grid_size_for(w, h, grid_long_side);
  DepthField field(static_cast<int>(depths.size()), w, h, gw, gh);
  const auto cols = area_weights(w, gw);
  const auto rows = area_weights(h, gh);

  for (std::size_t f = 0; f < depths.size(); ++f) {
    const DepthMap& depth = depths[f];
    if (!depth.same_shape(w, h)) {
      throw Error(ErrorCode::SizeMismatch, "frame " + std::to_string(f) + " differs in size");
    }
    bool any = false;
    for (double d : depth.values()) {
      if (d < 0.0 || !std::isfinite(d)) {
        throw Error(ErrorCode::NonPositiveDepth, "frame " + std::to_string(f) +
                                                     " has a negative or non-finite depth");
      }
      any = any || d > 0.0;
    }
    if (!any) {
      throw Error(ErrorCode::AllUndefined, "frame " + std::to_string(f) + " has no defined depth");
    }
    const DepthMap filled = fill_undefined(depth);
    for (int gy = 0; gy < gh; ++gy) {
      for (int gx = 0; gx < gw; ++gx) {
        double sum = 0.0;
        double weight = 0.0;
        for (const auto& [py, wy] : rows[gy]) {
          for (const auto& [px, wx] : cols[gx]) {
            sum += wx * wy * filled(px, py);
            weight += wx * wy;
          }
        }
        field.at(static_cast<int>(f), gx, gy) = std::log(sum / weight);
      }
    }
  }
  return field;
}

AdamState AdamState::for_size(std::size_t n, double lr) {
  AdamState s;
  s.first_moment.assign(n, 0.0);
  s.second_moment.assign(n, 0.0);
  s.lr = lr;
  return s;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "Adam state, parameters and gradients differ in size");
  }
  ++state.step;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double t = static_cast<double>(state.step);
  const double step_size = state.lr / (1.0 - std::pow(b1, t));
  const double v_correction = 1.0 / (1.0 - std::pow(b2, t));
  double* m = state.first_moment.data();
  double* v = state.second_moment.data();
  const std::size_t n = params.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double g = grads[k];
    m[k] = b1 * m[k] + (1.0 - b1) * g;
    v[k] = b2 * v[k] + (1.0 - b2) * g * g;
    params[k] -= step_size * m[k] / (std::sqrt(v[k] * v_correction) + state.eps);
  }
}

void FinetuneConfig::validate() const {
  if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (!(lr > 0.0)) throw Error(ErrorCode::InvalidArgument, "lr must be > 0");
  if (!(smooth_weight >= 0.0)) throw Error(ErrorCode::InvalidArgument, "smooth_weight must be >= 0");
  if (threads < 1) throw Error(ErrorCode::InvalidArgument, "threads must be >= 1");
  loss.validate();
}

namespace {

std::string pair_name(const FramePair& p) {
  return "(" + std::to_string(p.i) + ", " + std::to_string(p.j) + ")";
}

struct DirectionGrad {
  int src;
  int dst;
  loss::PairGradient grad;
};

// Gradient of one pair's loss (mean over its available directions).
struct PairResult {
  std::vector<DirectionGrad> directions;
  std::optional<loss::PairLossBreakdown> breakdown;
};

loss::PairLossBreakdown average(const std::vector<loss::PairLossBreakdown>& parts, double lambda) {
  loss::PairLossBreakdown out;
  for (const auto& b : parts) {
    out.spatial += b.spatial;
    out.disparity += b.disparity;
    out.n_pixels += b.n_pixels;
    out.n_dropped += b.n_dropped;
  }
  out.spatial /= static_cast<double>(parts.size());
  out.disparity /= static_cast<double>(parts.size());
  out.total = out.spatial + lambda * out.disparity;
  return out;
}

PairResult evaluate_pair_grad(std::span<const Camera> cameras, const PairConstraints& pc,
                              const std::map<int, DepthMap>& depths,
                              const loss::LossConfig& config) {
  PairResult result;
  std::vector<loss::PairLossBreakdown> parts;
  auto run = [&](int src, int dst, const FlowConstraint& fc) {
    const loss::PairInputs in{depths.at(src), depths.at(dst), cameras[src], cameras[dst],
                              fc.flow, fc.mask};
    try {
      auto g = loss::pair_loss_grad(in, config);
      parts.push_back(g.breakdown);
      result.directions.push_back({src, dst, std::move(g)});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyMask) throw;
    }
  };
  run(pc.pair.i, pc.pair.j, pc.forward);
  if (pc.backward) run(pc.pair.j, pc.pair.i, *pc.backward);
  if (!parts.empty()) result.breakdown = average(parts, config.lambda);
  return result;
}

void check_inputs(std::span<const Camera> cameras, std::span<const PairConstraints> pairs,
                  const DepthField& field) {
  if (static_cast<int>(cameras.size()) != field.frames()) {
    throw Error(ErrorCode::SizeMismatch, "camera count differs from depth field frame count");
  }
  for (const auto& pc : pairs) {
    if (pc.pair.i < 0 || pc.pair.j < 0 || pc.pair.i >= field.frames() ||
        pc.pair.j >= field.frames() || pc.pair.i == pc.pair.j) {
      throw Error(ErrorCode::InvalidArgument, "pair " + pair_name(pc.pair) + " out of range");
    }
  }
}

void add_smoothness_grad(const DepthField& field, int frame, double weight,
                         std::span<double> grad) {
  const int gw = field.grid_width();
  const int gh = field.grid_height();
  const double edges = static_cast<double>((gw - 1) * gh + gw * (gh - 1));
  if (edges == 0.0) return;
  const auto theta = field.frame_params(frame);
  const double scale = 2.0 * weight / edges;
  for (int y = 0; y < gh; ++y) {
    for (int x = 0; x < gw; ++x) {
      const std::size_t k = static_cast<std::size_t>(y) * gw + x;
      if (x + 1 < gw) {
        const double d = scale * (theta[k] - theta[k + 1]);
        grad[k] += d;
        grad[k + 1] -= d;
      }
      if (y + 1 < gh) {
        const double d = scale * (theta[k] - theta[k + gw]);
        grad[k] += d;
        grad[k + gw] -= d;
      }
    }
  }
}

}  // namespace

std::optional<loss::PairLossBreakdown> evaluate_pair(std::span<const Camera> cameras,
                                                     const PairConstraints& pair,
                                                     std::span<const DepthMap> depths,
                                                     const loss::LossConfig& config) {
  std::vector<loss::PairLossBreakdown> parts;
  auto run = [&](int src, int dst, const FlowConstraint& fc) {
    try {
      parts.push_back(loss::pair_loss(
          {depths[src], depths[dst], cameras[src], cameras[dst], fc.flow, fc.mask}, config));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyMask) throw;
    }
  };
  run(pair.pair.i, pair.pair.j, pair.forward);
  if (pair.backward) run(pair.pair.j, pair.pair.i, *pair.backward);
  if (parts.empty()) return std::nullopt;
  return average(parts, config.lambda);
}

loss::PairLossBreakdown mean_loss(std::span<const Camera> cameras,
                                  std::span<const PairConstraints> pairs, const DepthField& field,
                                  const loss::LossConfig& config) {
  check_inputs(cameras, pairs, field);
  std::vector<DepthMap> depths;
  depths.reserve(field.frames());
  for (int f = 0; f < field.frames(); ++f) depths.push_back(decode(field, f));
  std::vector<loss::PairLossBreakdown> parts;
  for (const auto& pc : pairs) {
    if (auto b = evaluate_pair(cameras, pc, depths, config)) parts.push_back(*b);
  }
  if (parts.empty()) throw Error(ErrorCode::NoAcceptedPairs, "no pair produced a loss");
  return average(parts, config.lambda);
}

FinetuneResult finetune(std::span<const Camera> cameras, std::span<const PairConstraints> pairs,
                        DepthField field, const FinetuneConfig& config,
                        const EpochCallback& on_epoch) {
  config.validate();
  if (pairs.empty()) throw Error(ErrorCode::NoAcceptedPairs, "no accepted frame pairs");
  check_inputs(cameras, pairs, field);

  FinetuneResult result;
  AdamState adam = AdamState::for_size(field.params().size(), config.lr);
  std::vector<double> grad(field.params().size(), 0.0);
  std::mt19937_64 rng(config.rng_seed);
  std::vector<std::size_t> order(pairs.size());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    // Fisher-Yates with raw engine output so the order is identical across
    // standard library implementations.
    for (std::size_t k = order.size(); k > 1; --k) {
      std::swap(order[k - 1], order[rng() % k]);
    }

    EpochStats stats;
    stats.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);

      std::map<int, DepthMap> depths;
      for (std::size_t b = start; b < end; ++b) {
        const FramePair& p = pairs[order[b]].pair;
        for (int f : {p.i, p.j}) {
          if (!depths.contains(f)) depths.emplace(f, decode(field, f));
        }
      }

      std::vector<PairResult> results(end - start);
      if (config.threads > 1) {
        std::vector<std::future<PairResult>> jobs;
        for (std::size_t b = start; b < end; ++b) {
          jobs.push_back(std::async(std::launch::async, [&, b] {
            return evaluate_pair_grad(cameras, pairs[order[b]], depths, config.loss);
          }));
        }
        for (std::size_t b = 0; b < jobs.size(); ++b) results[b] = jobs[b].get();
      } else {
        for (std::size_t b = start; b < end; ++b) {
          results[b - start] = evaluate_pair_grad(cameras, pairs[order[b]], depths, config.loss);
        }
      }

      // Reduction in batch order keeps the floating-point sums reproducible.
      std::size_t evaluated = 0;
      for (std::size_t b = 0; b < results.size(); ++b) {
        const FramePair& p = pairs[order[start + b]].pair;
        if (!results[b].breakdown) {
          ++stats.pairs_skipped;
          continue;
        }
        const auto& bd = *results[b].breakdown;
        if (!std::isfinite(bd.total)) {
          throw Error(ErrorCode::NonFiniteLoss, "non-finite loss at pair " + pair_name(p) +
                                                    " in epoch " + std::to_string(epoch));
        }
        ++evaluated;
        stats.mean_total += bd.total;
        stats.mean_spatial += bd.spatial;
        stats.mean_disparity += bd.disparity;
        result.pair_log.push_back({epoch, p, bd});
      }
      stats.pairs_evaluated += evaluated;
      if (evaluated == 0) continue;

      std::map<int, DepthMap> grad_depth;
      for (const auto& [f, d] : depths) grad_depth.emplace(f, DepthMap(d.width(), d.height(), 0.0));
      for (const auto& r : results) {
        if (!r.breakdown) continue;
        const double w = 1.0 / (static_cast<double>(evaluated) * r.directions.size());
        for (const auto& dir : r.directions) {
          auto gs = grad_depth.at(dir.src).values();
          auto gd = grad_depth.at(dir.dst).values();
          const auto src = dir.grad.src.values();
          const auto dst = dir.grad.dst.values();
          for (std::size_t k = 0; k < gs.size(); ++k) gs[k] += w * src[k];
          for (std::size_t k = 0; k < gd.size(); ++k) gd[k] += w * dst[k];
        }
      }

      std::fill(grad.begin(), grad.end(), 0.0);
      const std::size_t per_frame = field.params_per_frame();
      for (const auto& [f, gdepth] : grad_depth) {
        std::span<double> g(grad.data() + static_cast<std::size_t>(f) * per_frame, per_frame);
        backprop_decode(field, depths.at(f), gdepth, g);
        if (config.smooth_weight > 0.0) add_smoothness_grad(field, f, config.smooth_weight, g);
      }
      adam_step(adam, field.params(), grad);
    }

    if (stats.pairs_evaluated == 0) {
      throw Error(ErrorCode::NoAcceptedPairs, "every pair had an empty mask");
    }
    const double n = static_cast<double>(stats.pairs_evaluated);
    stats.mean_total /= n;
    stats.mean_spatial /= n;
    stats.mean_disparity /= n;
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  result.field = std::move(field);
  return result;
}

}  // namespace cvd::optimizer
