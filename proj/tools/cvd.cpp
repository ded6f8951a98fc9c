#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cvd/calibration.hpp"
#include "cvd/error.hpp"
#include "cvd/flowcheck.hpp"
#include "cvd/io.hpp"
#include "cvd/metrics.hpp"
#include "cvd/optimizer.hpp"
#include "cvd/pairing.hpp"
#include "cvd/synth.hpp"
#include "dataset.hpp"

using nlohmann::json;

namespace cvd::cli {

namespace {

// Errors that mean "the inputs were fine but the computation failed".
bool is_runtime_failure(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::NoAcceptedPairs:
    case ErrorCode::EmptyMask:
    case ErrorCode::NoValidPixels:
    case ErrorCode::TrackDegenerate:
    case ErrorCode::DegenerateInput:
    case ErrorCode::NoOverlap:
      return true;
    default:
      return false;
  }
}

int report(const std::string& code, const std::string& message, int exit_code) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << "\n";
  return exit_code;
}

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<DepthMap> read_depth_dir(const fs::path& dir, int n_frames) {
  std::vector<DepthMap> out;
  for (int f = 0; f < n_frames; ++f) out.push_back(io::read_pfm(dir / frame_name(f, "pfm")));
  return out;
}

void write_depth_dir(const fs::path& dir, std::span<const DepthMap> depths) {
  for (std::size_t f = 0; f < depths.size(); ++f) {
    io::write_pfm(dir / frame_name(static_cast<int>(f), "pfm"), depths[f]);
  }
}

std::vector<DepthMap> decode_all(const optimizer::DepthField& field) {
  std::vector<DepthMap> out;
  for (int f = 0; f < field.frames(); ++f) out.push_back(optimizer::decode(field, f));
  return out;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string spec_path;
  std::string builtin;
  int frames = synth::kDefaultFrames;
  std::string out;
  int tracks = 200;
  std::uint64_t seed = 0;
};

int run_synth(const SynthArgs& a) {
  synth::SceneSpec spec;
  if (!a.spec_path.empty()) {
    spec = io::decode_scene(io::read_file(a.spec_path));
  } else {
    spec = synth::bundled_scene(a.builtin, a.frames);
  }
  const fs::path out(a.out);
  const int n = spec.frames();
  std::cerr << "rendering " << n << " frames\n";
  const auto rendering = synth::render(spec);
  const auto cams = synth::cameras(spec);
  const auto pairs = sample_pairs(n);

  io::write_file(out / "scene.json", io::encode_scene(spec));
  io::write_cameras(out / "cameras.json", cams);
  io::write_file(out / "pairs.txt", encode_pairs(pairs));
  for (int f = 0; f < n; ++f) {
    io::write_ppm(out / "rgb" / frame_name(f, "ppm"), rendering.left.rgb[f]);
    io::write_pfm(out / "depth" / frame_name(f, "pfm"), rendering.left.depth[f]);
    io::write_pgm(out / "dynamic" / frame_name(f, "pgm"), rendering.dynamic[f]);
  }
  std::cerr << "computing flow for " << pairs.size() << " pairs\n";
  for (const auto& p : pairs.pairs) {
    for (const auto& [i, j] : {std::pair{p.i, p.j}, std::pair{p.j, p.i}}) {
      const auto flow = synth::analytic_flow(spec, rendering, i, j);
      io::write_flo(out / "flow" / pair_name(i, j, "flo"), flow.flow);
      io::write_pgm(out / "mask" / pair_name(i, j, "pgm"), flow.visible);
    }
  }
  const auto tracks = synth::synth_tracks(spec, rendering, a.tracks, a.seed);
  io::write_tracks(out / "tracks.txt", tracks);

  if (rendering.right) {
    const fs::path st = out / "stereo";
    io::write_cameras(st / "cameras.json", synth::stereo_cameras(spec));
    for (int f = 0; f < n; ++f) {
      io::write_ppm(st / "rgb" / frame_name(f, "ppm"), rendering.right->rgb[f]);
      const auto flow = synth::stereo_flow(spec, rendering, f);
      DepthMap disparity(flow.flow.width(), flow.flow.height(), 0.0);
      for (int y = 0; y < disparity.height(); ++y) {
        for (int x = 0; x < disparity.width(); ++x) disparity(x, y) = -flow.flow(x, y).x();
      }
      io::write_pfm(st / "disparity" / frame_name(f, "pfm"), disparity);
      io::write_pgm(st / "mask" / frame_name(f, "pgm"), flow.visible);
    }
  }
  std::cerr << "wrote " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- pairs

int run_pairs(int frames) {
  std::cout << encode_pairs(sample_pairs(frames));
  return 0;
}

// ---------------------------------------------------------------- calibrate

struct CalibrateArgs {
  std::string nn_dir;
  std::string mvs_dir;
  std::string cameras;
  std::string out;
};

int run_calibrate(const CalibrateArgs& a) {
  auto cams = io::read_cameras(a.cameras);
  const int n = static_cast<int>(cams.size());
  const auto nn = read_depth_dir(a.nn_dir, n);
  const auto mvs = read_depth_dir(a.mvs_dir, n);
  const auto rep = calibration::calibrate(nn, mvs);

  std::vector<CameraPose> poses;
  for (const auto& c : cams) poses.push_back(c.pose);
  const auto scaled = calibration::apply_scale(poses, rep.global);
  for (int f = 0; f < n; ++f) cams[f].pose = scaled[f];

  json per_frame = json::array();
  for (const auto& [frame, s] : rep.per_frame) per_frame.push_back({{"frame", frame}, {"scale", s}});
  const json doc = {{"per_frame", per_frame},
                    {"global", rep.global},
                    {"frames_skipped", rep.frames_skipped}};
  const fs::path out(a.out);
  io::write_file(out / "scale_report.json", doc.dump(2) + "\n");
  io::write_cameras(out / "cameras.json", cams);
  std::cout << doc.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------- check-flow

struct CheckFlowArgs {
  std::string data;
  std::string out;
  double threshold = flowcheck::kDefaultThresholdPx;
  double min_overlap = flowcheck::kDefaultMinOverlap;
};

int run_check_flow(const CheckFlowArgs& a) {
  if (!(a.threshold >= 0.0)) throw Error(ErrorCode::InvalidArgument, "--threshold must be >= 0");
  if (!(a.min_overlap >= 0.0 && a.min_overlap <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "--min-overlap must lie in [0, 1]");
  }
  const fs::path data(a.data);
  const fs::path out(a.out);
  const auto pairs = decode_pairs(io::read_file(data / "pairs.txt"));
  const bool has_dynamic = fs::exists(data / "dynamic");

  std::ostringstream csv;
  csv << "i,j,valid_ratio_forward,valid_ratio_backward,accepted\n";
  std::size_t accepted = 0;
  for (const auto& p : pairs.pairs) {
    const auto fwd = io::read_flo(data / "flow" / pair_name(p.i, p.j, "flo"));
    const auto bwd = io::read_flo(data / "flow" / pair_name(p.j, p.i, "flo"));
    auto mf = flowcheck::fb_consistency(fwd, bwd, a.threshold);
    auto mb = flowcheck::fb_consistency(bwd, fwd, a.threshold);
    if (has_dynamic) {
      flowcheck::exclude_dynamic(mf, io::read_pgm(data / "dynamic" / frame_name(p.i, "pgm")));
      flowcheck::exclude_dynamic(mb, io::read_pgm(data / "dynamic" / frame_name(p.j, "pgm")));
    }
    const bool ok = flowcheck::overlap_accept(mf, a.min_overlap);
    accepted += ok;
    io::write_pgm(out / "mask" / pair_name(p.i, p.j, "pgm"), mf);
    io::write_pgm(out / "mask" / pair_name(p.j, p.i, "pgm"), mb);
    csv << p.i << "," << p.j << "," << fmt(flowcheck::valid_ratio(mf)) << ","
        << fmt(flowcheck::valid_ratio(mb)) << "," << (ok ? 1 : 0) << "\n";
  }
  io::write_file(out / "check_flow.csv", csv.str());
  std::cout << csv.str();
  std::cerr << accepted << " of " << pairs.size() << " pairs accepted\n";
  return 0;
}

// ---------------------------------------------------------------- finetune

struct PerturbConfig {
  synth::PerturbKind kind = synth::PerturbKind::GaussianLog;
  double magnitude = 0.0;
  std::uint64_t seed = 0;
};

struct RunConfig {
  fs::path cameras;
  std::optional<fs::path> pairs;
  fs::path flow_dir;
  fs::path mask_dir;
  fs::path init_depth_dir;
  std::optional<fs::path> dynamic_dir;
  std::optional<PerturbConfig> perturb;
  int grid_long_side = optimizer::kDefaultGridLongSide;
  optimizer::FinetuneConfig finetune;
};

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::SchemaViolation, path + ": " + what);
}

template <class T>
T get_or(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    config_error(std::string("$.") + key, "wrong type");
  }
}

fs::path path_at(const json& doc, const char* key, const fs::path& base) {
  if (!doc.contains(key) || !doc.at(key).is_string()) config_error(std::string("$.") + key, "missing path");
  return fs::absolute(base / doc.at(key).get<std::string>()).lexically_normal();
}

RunConfig parse_config(const fs::path& config_path) {
  json doc;
  try {
    doc = json::parse(io::read_file(config_path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("$: ") + e.what());
  }
  if (!doc.is_object()) config_error("$", "must be an object");
  static const std::vector<std::string> known = {
      "cameras", "pairs", "flow_dir", "mask_dir", "init_depth_dir", "dynamic_dir", "perturb",
      "grid_long_side", "epochs", "batch_size", "lr", "lambda", "pixel_stride", "smooth_weight",
      "rng_seed", "threads"};
  for (const auto& [key, _] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) config_error("$." + key, "unknown key");
  }
  const fs::path base = config_path.parent_path();
  RunConfig c;
  c.cameras = path_at(doc, "cameras", base);
  if (doc.contains("pairs")) c.pairs = path_at(doc, "pairs", base);
  c.flow_dir = path_at(doc, "flow_dir", base);
  c.mask_dir = path_at(doc, "mask_dir", base);
  c.init_depth_dir = path_at(doc, "init_depth_dir", base);
  if (doc.contains("dynamic_dir")) c.dynamic_dir = path_at(doc, "dynamic_dir", base);
  if (doc.contains("perturb")) {
    const json& p = doc.at("perturb");
    if (!p.is_object()) config_error("$.perturb", "must be an object");
    PerturbConfig pc;
    try {
      pc.kind = synth::parse_perturb_kind(p.value("kind", std::string("gaussian-log")));
    } catch (const Error& e) {
      config_error("$.perturb.kind", e.what());
    }
    pc.magnitude = get_or(p, "magnitude", 0.0);
    pc.seed = get_or<std::uint64_t>(p, "seed", 0);
    c.perturb = pc;
  }
  c.grid_long_side = get_or(doc, "grid_long_side", c.grid_long_side);
  auto& f = c.finetune;
  f.epochs = get_or(doc, "epochs", f.epochs);
  f.batch_size = get_or(doc, "batch_size", f.batch_size);
  f.lr = get_or(doc, "lr", f.lr);
  f.loss.lambda = get_or(doc, "lambda", f.loss.lambda);
  f.loss.pixel_stride = get_or(doc, "pixel_stride", f.loss.pixel_stride);
  f.smooth_weight = get_or(doc, "smooth_weight", f.smooth_weight);
  f.rng_seed = get_or(doc, "rng_seed", f.rng_seed);
  f.threads = get_or(doc, "threads", f.threads);
  if (c.grid_long_side < 1) config_error("$.grid_long_side", "must be >= 1");
  try {
    f.validate();
  } catch (const Error& e) {
    config_error("$", e.what());
  }
  return c;
}

json resolved_config(const RunConfig& c) {
  json doc = {{"cameras", c.cameras.string()},
              {"flow_dir", c.flow_dir.string()},
              {"mask_dir", c.mask_dir.string()},
              {"init_depth_dir", c.init_depth_dir.string()},
              {"grid_long_side", c.grid_long_side},
              {"epochs", c.finetune.epochs},
              {"batch_size", c.finetune.batch_size},
              {"lr", c.finetune.lr},
              {"lambda", c.finetune.loss.lambda},
              {"pixel_stride", c.finetune.loss.pixel_stride},
              {"smooth_weight", c.finetune.smooth_weight},
              {"rng_seed", c.finetune.rng_seed},
              {"threads", c.finetune.threads}};
  if (c.pairs) doc["pairs"] = c.pairs->string();
  if (c.dynamic_dir) doc["dynamic_dir"] = c.dynamic_dir->string();
  if (c.perturb) {
    doc["perturb"] = {{"kind", synth::to_string(c.perturb->kind)},
                      {"magnitude", c.perturb->magnitude},
                      {"seed", c.perturb->seed}};
  }
  return doc;
}

int run_finetune(const std::string& config_path, const std::string& out_dir, int threads) {
  RunConfig c = parse_config(config_path);
  if (threads > 0) c.finetune.threads = threads;
  const fs::path out(out_dir);

  const auto cams = io::read_cameras(c.cameras);
  const int n = static_cast<int>(cams.size());
  const auto pairs = c.pairs ? decode_pairs(io::read_file(*c.pairs)) : sample_pairs(n);
  for (const auto& p : pairs.pairs) {
    if (p.j >= n) throw Error(ErrorCode::SchemaViolation, "pair references frame " + std::to_string(p.j));
  }

  std::vector<optimizer::PairConstraints> constraints;
  std::size_t rejected = 0;
  for (const auto& p : pairs.pairs) {
    auto load = [&](int i, int j) -> std::optional<optimizer::FlowConstraint> {
      const fs::path flow = c.flow_dir / pair_name(i, j, "flo");
      if (!fs::exists(flow)) return std::nullopt;
      optimizer::FlowConstraint fc{io::read_flo(flow), io::read_pgm(c.mask_dir / pair_name(i, j, "pgm"))};
      if (c.dynamic_dir) {
        flowcheck::exclude_dynamic(fc.mask, io::read_pgm(*c.dynamic_dir / frame_name(i, "pgm")));
      }
      return fc;
    };
    auto fwd = load(p.i, p.j);
    if (!fwd) throw Error(ErrorCode::IoError, "missing flow " + pair_name(p.i, p.j, "flo"));
    if (!flowcheck::overlap_accept(fwd->mask)) {
      ++rejected;
      continue;
    }
    constraints.push_back({p, std::move(*fwd), load(p.j, p.i)});
  }
  std::cerr << constraints.size() << " pairs accepted, " << rejected << " rejected\n";

  const auto init_depth = read_depth_dir(c.init_depth_dir, n);
  auto field = optimizer::init_from_depth(init_depth, c.grid_long_side);
  if (c.perturb) field = synth::perturb(field, c.perturb->kind, c.perturb->magnitude, c.perturb->seed);

  const auto result = optimizer::finetune(cams, constraints, field, c.finetune,
                                          [&](const optimizer::EpochStats& s) {
                                            std::cerr << "epoch " << s.epoch << "/" << c.finetune.epochs
                                                      << " loss " << s.mean_total << " spatial "
                                                      << s.mean_spatial << "\n";
                                          });

  write_depth_dir(out / "init_depth", decode_all(field));
  write_depth_dir(out / "depth", decode_all(result.field));

  std::ostringstream history;
  history << "epoch,mean_total,mean_spatial,mean_disparity,pairs_evaluated,pairs_skipped\n";
  for (const auto& s : result.history) {
    history << s.epoch << "," << fmt(s.mean_total) << "," << fmt(s.mean_spatial) << ","
            << fmt(s.mean_disparity) << "," << s.pairs_evaluated << "," << s.pairs_skipped << "\n";
  }
  io::write_file(out / "history.csv", history.str());

  std::ostringstream log;
  log << "epoch,i,j,spatial,disparity,total,n_pixels\n";
  for (const auto& r : result.pair_log) {
    log << r.epoch << "," << r.pair.i << "," << r.pair.j << "," << fmt(r.breakdown.spatial) << ","
        << fmt(r.breakdown.disparity) << "," << fmt(r.breakdown.total) << ","
        << r.breakdown.n_pixels << "\n";
  }
  io::write_file(out / "pair_loss.csv", log.str());
  io::write_file(out / "config.json", resolved_config(c).dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string depth;
  std::string cameras;
  std::string tracks;
  std::string out;
  std::string gt_depth;
  std::string rgb;
  std::string stereo;
  std::uint64_t seed = 0;
};

json errors_json(const metrics::DepthErrors& e) {
  return {{"abs_rel", e.abs_rel}, {"sq_rel", e.sq_rel}, {"rmse", e.rmse},
          {"rmse_log", e.rmse_log}, {"delta1", e.delta1}, {"delta2", e.delta2},
          {"delta3", e.delta3}, {"n_pixels", e.n_pixels}};
}

int run_evaluate(const EvaluateArgs& a) {
  const auto cams = io::read_cameras(a.cameras);
  const int n = static_cast<int>(cams.size());
  const auto depths = read_depth_dir(a.depth, n);
  const auto tracks = io::read_tracks(a.tracks);
  const fs::path out(a.out);

  const auto tm = metrics::evaluate_tracks(tracks, depths, cams);
  json doc = {{"instability", tm.instability},
              {"drift", tm.drift},
              {"scene_scale", tm.scene_scale},
              {"instability_pct", tm.instability_pct},
              {"drift_pct", tm.drift_pct},
              {"tracks_used", tm.tracks_used},
              {"tracks_dropped", tm.tracks_dropped}};

  std::vector<std::optional<metrics::DepthErrors>> per_frame_errors(n);
  if (!a.gt_depth.empty()) {
    const auto gt = read_depth_dir(a.gt_depth, n);
    metrics::DepthErrors sum;
    for (int f = 0; f < n; ++f) {
      per_frame_errors[f] = metrics::depth_metrics(depths[f], gt[f], metrics::Alignment::None);
    }
    // Pool all frames for the video-level numbers.
    std::size_t total = 0;
    for (const auto& e : per_frame_errors) {
      const double w = static_cast<double>(e->n_pixels);
      sum.abs_rel += w * e->abs_rel;
      sum.sq_rel += w * e->sq_rel;
      sum.rmse += w * e->rmse * e->rmse;
      sum.rmse_log += w * e->rmse_log * e->rmse_log;
      sum.delta1 += w * e->delta1;
      sum.delta2 += w * e->delta2;
      sum.delta3 += w * e->delta3;
      total += e->n_pixels;
    }
    const double t = static_cast<double>(total);
    sum.abs_rel /= t;
    sum.sq_rel /= t;
    sum.rmse = std::sqrt(sum.rmse / t);
    sum.rmse_log = std::sqrt(sum.rmse_log / t);
    sum.delta1 /= t;
    sum.delta2 /= t;
    sum.delta3 /= t;
    sum.n_pixels = total;
    doc["depth_errors"] = errors_json(sum);
  }

  std::vector<std::optional<double>> per_frame_ep(n);
  if (!a.stereo.empty()) {
    if (a.rgb.empty()) throw Error(ErrorCode::InvalidArgument, "--stereo needs --rgb");
    const fs::path st(a.stereo);
    const auto right_cams = io::read_cameras(st / "cameras.json");
    if (static_cast<int>(right_cams.size()) != n) {
      throw Error(ErrorCode::SchemaViolation, "stereo cameras do not match the left cameras");
    }
    double sum = 0.0;
    for (int f = 0; f < n; ++f) {
      const auto left = io::read_ppm(fs::path(a.rgb) / frame_name(f, "ppm"));
      const auto right = io::read_ppm(st / "rgb" / frame_name(f, "ppm"));
      const auto stereo_disp = io::read_pfm(st / "disparity" / frame_name(f, "pfm"));
      const auto mask = io::read_pgm(st / "mask" / frame_name(f, "pgm"));
      DepthMap pred_disp(depths[f].width(), depths[f].height(), 0.0);
      for (int y = 0; y < pred_disp.height(); ++y) {
        for (int x = 0; x < pred_disp.width(); ++x) {
          if (depths[f](x, y) > 0.0) pred_disp(x, y) = 1.0 / depths[f](x, y);
        }
      }
      const auto align = metrics::align_disparity_ransac(pred_disp, stereo_disp, {1000, 1.0, a.seed + f}, &mask);
      per_frame_ep[f] = metrics::photometric_error(left, right, depths[f], cams[f], right_cams[f], align);
      sum += *per_frame_ep[f];
    }
    doc["photometric_error"] = sum / n;
  }

  std::ostringstream per_track;
  per_track << "track_id,points,instability,drift\n";
  for (const auto& s : tm.per_track) {
    per_track << s.id << "," << s.points << "," << fmt(s.instability) << "," << fmt(s.drift) << "\n";
  }

  std::ostringstream curves;
  curves << "frame,median_depth,abs_rel,rmse,photometric_error\n";
  for (int f = 0; f < n; ++f) {
    curves << f << "," << fmt(metrics::median_depth(std::span(&depths[f], 1))) << ",";
    if (per_frame_errors[f]) curves << fmt(per_frame_errors[f]->abs_rel) << "," << fmt(per_frame_errors[f]->rmse);
    else curves << ",";
    curves << ",";
    if (per_frame_ep[f]) curves << fmt(*per_frame_ep[f]);
    curves << "\n";
  }

  io::write_file(out / "metrics.json", doc.dump(2) + "\n");
  io::write_file(out / "per_track.csv", per_track.str());
  io::write_file(out / "curves.csv", curves.str());
  std::cout << doc.dump(2) << "\n";
  return 0;
}

}  // namespace

std::string encode_pairs(const FramePairSet& pairs) {
  std::string out;
  for (const auto& p : pairs.pairs) out += std::to_string(p.i) + " " + std::to_string(p.j) + "\n";
  return out;
}

FramePairSet decode_pairs(const std::string& text) {
  FramePairSet set;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    FramePair p;
    std::string rest;
    if (!(ls >> p.i >> p.j) || (ls >> rest) || p.i < 0 || p.j <= p.i) {
      throw Error(ErrorCode::SchemaViolation, "pairs line " + std::to_string(line_no) + ": expected \"i j\" with 0 <= i < j");
    }
    set.pairs.push_back(p);
  }
  return set;
}

int main(int argc, char** argv) {
  CLI::App app{"Geometrically consistent video depth: synthetic data, pair sampling, "
               "calibration, flow filtering, test-time fine-tuning and evaluation."};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads for pair evaluation (0 = from config)")
      ->check(CLI::NonNegativeNumber);

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Render an oracle scene and its flows, masks and tracks");
  auto* spec_opt = synth_cmd->add_option("--spec", synth_args.spec_path, "Scene JSON")->check(CLI::ExistingFile);
  synth_cmd->add_option("--builtin", synth_args.builtin, "Bundled scene name instead of --spec")
      ->excludes(spec_opt);
  synth_cmd->add_option("--frames", synth_args.frames, "Frames for --builtin")->check(CLI::Range(2, 1 << 20));
  synth_cmd->add_option("--out", synth_args.out, "Output directory")->required();
  synth_cmd->add_option("--tracks", synth_args.tracks, "Number of tracks")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--seed", synth_args.seed, "Track seed");

  int pair_frames = 0;
  auto* pairs_cmd = app.add_subcommand("pairs", "Print the sampled frame pairs, one \"i j\" per line");
  pairs_cmd->add_option("--frames", pair_frames, "Number of frames")->required();

  CalibrateArgs cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "Rescale camera translations to the depth maps' scale");
  cal_cmd->add_option("--nn-depth", cal.nn_dir, "Directory of initial depth PFMs")->required()->check(CLI::ExistingDirectory);
  cal_cmd->add_option("--mvs-depth", cal.mvs_dir, "Directory of reconstruction depth PFMs (0 = undefined)")->required()->check(CLI::ExistingDirectory);
  cal_cmd->add_option("--cameras", cal.cameras, "Cameras JSON")->required()->check(CLI::ExistingFile);
  cal_cmd->add_option("--out", cal.out, "Output directory")->required();

  CheckFlowArgs cf;
  auto* cf_cmd = app.add_subcommand("check-flow", "Forward-backward masks and overlap verdicts");
  cf_cmd->add_option("--data", cf.data, "Dataset directory with pairs.txt and flow/")->required()->check(CLI::ExistingDirectory);
  cf_cmd->add_option("--out", cf.out, "Output directory")->required();
  cf_cmd->add_option("--threshold", cf.threshold, "Forward-backward threshold in pixels");
  cf_cmd->add_option("--min-overlap", cf.min_overlap, "Minimum valid fraction for a pair");

  std::string config_path, finetune_out;
  auto* ft_cmd = app.add_subcommand("finetune", "Optimize per-frame depth against the geometric loss");
  ft_cmd->add_option("--config", config_path, "Run configuration JSON")->required()->check(CLI::ExistingFile);
  ft_cmd->add_option("--out", finetune_out, "Output directory")->required();

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Instability, drift, depth errors and photometric error");
  ev_cmd->add_option("--depth", ev.depth, "Directory of depth PFMs")->required()->check(CLI::ExistingDirectory);
  ev_cmd->add_option("--cameras", ev.cameras, "Cameras JSON")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--tracks", ev.tracks, "Tracks text file")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--out", ev.out, "Output directory")->required();
  ev_cmd->add_option("--gt-depth", ev.gt_depth, "Ground-truth depth PFMs")->check(CLI::ExistingDirectory);
  ev_cmd->add_option("--rgb", ev.rgb, "Left RGB PPMs (for --stereo)")->check(CLI::ExistingDirectory);
  ev_cmd->add_option("--stereo", ev.stereo, "Stereo directory (cameras.json, rgb/, disparity/, mask/)")->check(CLI::ExistingDirectory);
  ev_cmd->add_option("--seed", ev.seed, "RANSAC seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("InvalidArgument", e.what(), 1);
  }

  try {
    if (synth_cmd->parsed()) {
      if (synth_args.spec_path.empty() && synth_args.builtin.empty()) {
        throw Error(ErrorCode::InvalidArgument, "synth needs --spec or --builtin");
      }
      return run_synth(synth_args);
    }
    if (pairs_cmd->parsed()) return run_pairs(pair_frames);
    if (cal_cmd->parsed()) return run_calibrate(cal);
    if (cf_cmd->parsed()) return run_check_flow(cf);
    if (ft_cmd->parsed()) return run_finetune(config_path, finetune_out, threads);
    if (ev_cmd->parsed()) return run_evaluate(ev);
  } catch (const Error& e) {
    return report(to_string(e.code()), e.what(), is_runtime_failure(e.code()) ? 2 : 1);
  } catch (const std::exception& e) {
    return report("IoError", e.what(), 2);
  }
  return 0;
}

}  // namespace cvd::cli

int main(int argc, char** argv) { return cvd::cli::main(argc, argv); }
