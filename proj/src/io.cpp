#include "cvd/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace cvd::io {

using nlohmann::json;

namespace {

static_assert(sizeof(float) == 4 && sizeof(std::int32_t) == 4);

template <class T>
void put_le(std::string& out, T value) {
  auto bits = std::bit_cast<std::array<char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  out.append(bits.data(), bits.size());
}

template <class T>
T get_le(const char* p) {
  std::array<char, sizeof(T)> bits;
  std::memcpy(bits.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  return std::bit_cast<T>(bits);
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// Whitespace-separated header tokens of the PNM family. `pos` ends on the
// single whitespace byte that separates the header from the payload.
class HeaderReader {
 public:
  HeaderReader(std::string_view bytes, bool allow_comments)
      : bytes_(bytes), allow_comments_(allow_comments) {}

  std::string_view token() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (allow_comments_ && bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_])) ++pos_;
    if (start == pos_) throw Error(ErrorCode::MalformedHeader, "header ended early");
    return bytes_.substr(start, pos_ - start);
  }

  int positive_int(const char* what) {
    const auto tok = token();
    int v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || v < 1) {
      throw Error(ErrorCode::MalformedHeader, std::string("bad ") + what + " '" +
                                                  std::string(tok) + "'");
    }
    return v;
  }

  /// Offset of the payload after the separator byte.
  std::size_t payload_offset() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw Error(ErrorCode::MalformedHeader, "missing separator after header");
    }
    return pos_ + 1;
  }

 private:
  std::string_view bytes_;
  bool allow_comments_;
  std::size_t pos_ = 0;
};

void check_payload(std::string_view bytes, std::size_t offset, std::size_t expected) {
  const std::size_t available = bytes.size() - offset;
  if (available < expected) {
    throw Error(ErrorCode::TruncatedData, "expected " + std::to_string(expected) +
                                              " payload bytes, found " + std::to_string(available));
  }
  if (available > expected) {
    throw Error(ErrorCode::MalformedHeader,
                std::to_string(available - expected) + " trailing bytes after payload");
  }
}

std::string pnm_header(const char* magic, int w, int h) {
  return std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
}

std::size_t read_pnm_header(HeaderReader& hr, int& w, int& h) {
  w = hr.positive_int("width");
  h = hr.positive_int("height");
  const auto maxval = hr.token();
  if (maxval != "255") {
    throw Error(ErrorCode::UnsupportedFormat, "only maxval 255 is supported, got '" +
                                                  std::string(maxval) + "'");
  }
  return hr.payload_offset();
}

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::SchemaViolation, path + ": " + what);
}

double number_at(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) schema_error(path + "." + key, "missing");
  if (!j.at(key).is_number()) schema_error(path + "." + key, "must be a number");
  return j.at(key).get<double>();
}

int int_at(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) schema_error(path + "." + key, "missing");
  if (!j.at(key).is_number_integer()) schema_error(path + "." + key, "must be an integer");
  return j.at(key).get<int>();
}

std::vector<double> array_at(const json& j, const std::string& key, std::size_t n,
                             const std::string& path) {
  if (!j.contains(key)) schema_error(path + "." + key, "missing");
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != n) {
    schema_error(path + "." + key, "must be an array of " + std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  for (std::size_t k = 0; k < n; ++k) {
    if (!a[k].is_number()) schema_error(path + "." + key + "[" + std::to_string(k) + "]", "not a number");
    out.push_back(a[k].get<double>());
  }
  return out;
}

Eigen::Vector3d vec3_at(const json& j, const std::string& key, const std::string& path) {
  const auto v = array_at(j, key, 3, path);
  return {v[0], v[1], v[2]};
}

json vec3_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json pose_json(const CameraPose& pose) {
  json r = json::array();
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) r.push_back(pose.R(row, col));
  }
  return {{"R", r}, {"t", vec3_json(pose.t)}};
}

CameraPose pose_from(const json& j, const std::string& path, double tol) {
  CameraPose pose;
  const auto r = array_at(j, "R", 9, path);
  for (int k = 0; k < 9; ++k) pose.R(k / 3, k % 3) = r[k];
  pose.t = vec3_at(j, "t", path);
  try {
    pose.validate(tol);
  } catch (const Error& e) {
    schema_error(path + ".R", e.what());
  }
  return pose;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedHeader, std::string("invalid JSON: ") + e.what());
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string encode_pfm(const DepthMap& depth) {
  std::string out = "Pf\n" + std::to_string(depth.width()) + " " +
                    std::to_string(depth.height()) + "\n-1.0\n";
  out.reserve(out.size() + depth.size() * 4);
  for (int y = depth.height() - 1; y >= 0; --y) {
    for (int x = 0; x < depth.width(); ++x) put_le(out, static_cast<float>(depth(x, y)));
  }
  return out;
}

DepthMap decode_pfm(std::string_view bytes) {
  HeaderReader hr(bytes, false);
  const auto magic = hr.token();
  if (magic == "PF") throw Error(ErrorCode::UnsupportedFormat, "color PFM is not a depth map");
  if (magic != "Pf") throw Error(ErrorCode::MalformedHeader, "not a PFM file");
  const int w = hr.positive_int("width");
  const int h = hr.positive_int("height");
  const auto scale_tok = hr.token();
  double scale = 0.0;
  const auto [ptr, ec] = std::from_chars(scale_tok.data(), scale_tok.data() + scale_tok.size(), scale);
  if (ec != std::errc() || ptr != scale_tok.data() + scale_tok.size() || scale == 0.0 ||
      !std::isfinite(scale)) {
    throw Error(ErrorCode::MalformedHeader, "bad PFM scale '" + std::string(scale_tok) + "'");
  }
  if (scale > 0.0) throw Error(ErrorCode::UnsupportedEndianness, "big-endian PFM is not supported");
  const std::size_t offset = hr.payload_offset();
  check_payload(bytes, offset, static_cast<std::size_t>(w) * h * 4);
  DepthMap depth(w, h);
  const char* p = bytes.data() + offset;
  for (int y = h - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x, p += 4) depth(x, y) = get_le<float>(p);
  }
  return depth;
}

std::string encode_flo(const FlowField& flow) {
  std::string out;
  out.reserve(12 + flow.size() * 8);
  put_le(out, kFloMagic);
  put_le(out, static_cast<std::int32_t>(flow.width()));
  put_le(out, static_cast<std::int32_t>(flow.height()));
  for (const auto& v : flow.values()) {
    put_le(out, static_cast<float>(v.x()));
    put_le(out, static_cast<float>(v.y()));
  }
  return out;
}

FlowField decode_flo(std::string_view bytes) {
  if (bytes.size() < 12) throw Error(ErrorCode::TruncatedData, ".flo header is 12 bytes");
  if (get_le<float>(bytes.data()) != kFloMagic) throw Error(ErrorCode::BadMagic, "not a .flo file");
  const auto w = get_le<std::int32_t>(bytes.data() + 4);
  const auto h = get_le<std::int32_t>(bytes.data() + 8);
  if (w < 1 || h < 1) throw Error(ErrorCode::MalformedHeader, "non-positive .flo dimensions");
  check_payload(bytes, 12, static_cast<std::size_t>(w) * h * 8);
  FlowField flow(w, h);
  const char* p = bytes.data() + 12;
  for (auto& v : flow.values()) {
    v = {get_le<float>(p), get_le<float>(p + 4)};
    if (!v.allFinite()) throw Error(ErrorCode::SchemaViolation, "non-finite flow value");
    p += 8;
  }
  return flow;
}

std::string encode_pgm(const ValidityMask& mask) {
  std::string out = pnm_header("P5", mask.width(), mask.height());
  for (auto v : mask.values()) out.push_back(static_cast<char>(v != 0 ? 255 : 0));
  return out;
}

ValidityMask decode_pgm(std::string_view bytes) {
  HeaderReader hr(bytes, true);
  if (hr.token() != "P5") throw Error(ErrorCode::MalformedHeader, "not a binary PGM (P5) file");
  int w = 0, h = 0;
  const std::size_t offset = read_pnm_header(hr, w, h);
  check_payload(bytes, offset, static_cast<std::size_t>(w) * h);
  ValidityMask mask(w, h);
  auto out = mask.values();
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto v = static_cast<std::uint8_t>(bytes[offset + k]);
    if (v != 0 && v != 255) {
      throw Error(ErrorCode::SchemaViolation, "mask value " + std::to_string(v) +
                                                  " at byte " + std::to_string(k) +
                                                  " is neither 0 nor 255");
    }
    out[k] = v;
  }
  return mask;
}

std::string encode_ppm(const RgbImage& rgb) {
  std::string out = pnm_header("P6", rgb.width(), rgb.height());
  for (const auto& c : rgb.values()) {
    for (int k = 0; k < 3; ++k) {
      const double v = std::clamp(c[k], 0.0, 1.0);
      out.push_back(static_cast<char>(static_cast<std::uint8_t>(std::lround(v * 255.0))));
    }
  }
  return out;
}

RgbImage decode_ppm(std::string_view bytes) {
  HeaderReader hr(bytes, true);
  if (hr.token() != "P6") throw Error(ErrorCode::MalformedHeader, "not a binary PPM (P6) file");
  int w = 0, h = 0;
  const std::size_t offset = read_pnm_header(hr, w, h);
  check_payload(bytes, offset, static_cast<std::size_t>(w) * h * 3);
  RgbImage rgb(w, h);
  const auto* p = reinterpret_cast<const std::uint8_t*>(bytes.data() + offset);
  for (auto& c : rgb.values()) {
    c = {p[0] / 255.0, p[1] / 255.0, p[2] / 255.0};
    p += 3;
  }
  return rgb;
}

std::string encode_cameras(std::span<const Camera> cameras) {
  json frames = json::array();
  for (std::size_t k = 0; k < cameras.size(); ++k) {
    const Camera& c = cameras[k];
    json f = pose_json(c.pose);
    f["id"] = k;
    f["fx"] = c.intrinsics.fx;
    f["fy"] = c.intrinsics.fy;
    f["cx"] = c.intrinsics.cx;
    f["cy"] = c.intrinsics.cy;
    f["width"] = c.intrinsics.width;
    f["height"] = c.intrinsics.height;
    frames.push_back(std::move(f));
  }
  const json doc = {{"schema_version", kCameraSchemaVersion},
                    {"convention", kCameraConvention},
                    {"frames", std::move(frames)}};
  return doc.dump(2) + "\n";
}

std::vector<Camera> decode_cameras(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) schema_error("$", "must be an object");
  if (int_at(doc, "schema_version", "$") != kCameraSchemaVersion) {
    schema_error("$.schema_version", "unsupported version");
  }
  if (!doc.contains("convention") || doc.at("convention") != kCameraConvention) {
    schema_error("$.convention", std::string("must be \"") + kCameraConvention + "\"");
  }
  if (!doc.contains("frames") || !doc.at("frames").is_array() || doc.at("frames").empty()) {
    schema_error("$.frames", "must be a non-empty array");
  }
  const json& frames = doc.at("frames");
  std::map<int, Camera> by_id;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const std::string path = "$.frames[" + std::to_string(k) + "]";
    const json& f = frames[k];
    if (!f.is_object()) schema_error(path, "must be an object");
    Camera cam;
    cam.intrinsics.fx = number_at(f, "fx", path);
    cam.intrinsics.fy = number_at(f, "fy", path);
    cam.intrinsics.cx = number_at(f, "cx", path);
    cam.intrinsics.cy = number_at(f, "cy", path);
    cam.intrinsics.width = int_at(f, "width", path);
    cam.intrinsics.height = int_at(f, "height", path);
    try {
      cam.intrinsics.validate();
    } catch (const Error& e) {
      schema_error(path, e.what());
    }
    cam.pose = pose_from(f, path, 1e-6);
    const int id = int_at(f, "id", path);
    if (!by_id.emplace(id, cam).second) schema_error(path + ".id", "duplicate id");
  }
  std::vector<Camera> out;
  for (const auto& [id, cam] : by_id) {
    if (id != static_cast<int>(out.size())) {
      schema_error("$.frames", "ids must be contiguous from 0");
    }
    out.push_back(cam);
  }
  return out;
}

std::string encode_tracks(std::span<const metrics::Track> tracks) {
  std::string out;
  for (const auto& t : tracks) {
    for (const auto& o : t.observations) {
      out += std::to_string(t.id) + " " + std::to_string(o.frame) + " " +
             format_double(o.position.x) + " " + format_double(o.position.y) + "\n";
    }
  }
  return out;
}

std::vector<metrics::Track> decode_tracks(std::string_view text) {
  std::map<int, metrics::Track> by_id;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    const std::string where = "line " + std::to_string(line_no);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream in(line);
    in.imbue(std::locale::classic());
    long long id = 0, frame = 0;
    double x = 0.0, y = 0.0;
    std::string extra;
    if (!(in >> id >> frame >> x >> y) || (in >> extra)) {
      schema_error(where, "expected 'track_id frame x y'");
    }
    if (frame < 0 || id < 0 || !std::isfinite(x) || !std::isfinite(y)) {
      schema_error(where, "negative id/frame or non-finite position");
    }
    metrics::Track& t = by_id[static_cast<int>(id)];
    t.id = static_cast<int>(id);
    if (!t.observations.empty() && t.observations.back().frame >= frame) {
      schema_error(where, "frames of track " + std::to_string(id) + " must strictly increase");
    }
    t.observations.push_back({static_cast<int>(frame), {x, y}});
  }
  std::vector<metrics::Track> out;
  for (auto& [id, t] : by_id) {
    if (t.observations.size() < 2) {
      schema_error("track " + std::to_string(id), "needs at least 2 observations");
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::string encode_scene(const synth::SceneSpec& spec) {
  json prims = json::array();
  for (const auto& p : spec.primitives) {
    json j = {{"type", p.kind == synth::PrimitiveKind::Plane ? "plane" : "sphere"},
              {"center", vec3_json(p.center)},
              {"velocity", vec3_json(p.velocity)},
              {"texture_seed", p.texture_seed},
              {"texture_scale", p.texture_scale}};
    if (p.kind == synth::PrimitiveKind::Plane) {
      j["normal"] = vec3_json(p.normal);
      j["axis_u"] = vec3_json(p.axis_u);
      j["half_extent"] = json::array({p.half_u, p.half_v});
    } else {
      j["radius"] = p.radius;
    }
    prims.push_back(std::move(j));
  }
  json poses = json::array();
  for (const auto& pose : spec.trajectory) poses.push_back(pose_json(pose));
  const auto& K = spec.intrinsics;
  json doc = {{"intrinsics",
               {{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx}, {"cy", K.cy},
                {"width", K.width}, {"height", K.height}}},
              {"poses", std::move(poses)},
              {"primitives", std::move(prims)}};
  if (spec.stereo_baseline) doc["stereo_baseline"] = *spec.stereo_baseline;
  return doc.dump(2) + "\n";
}

synth::SceneSpec decode_scene(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) schema_error("$", "must be an object");
  synth::SceneSpec spec;
  if (doc.contains("builtin")) {
    if (!doc.at("builtin").is_string()) schema_error("$.builtin", "must be a string");
    const int frames = doc.contains("frames") ? int_at(doc, "frames", "$") : synth::kDefaultFrames;
    try {
      spec = synth::bundled_scene(doc.at("builtin").get<std::string>(), frames);
      if (doc.contains("width") || doc.contains("height")) {
        spec = synth::resized(std::move(spec), int_at(doc, "width", "$"), int_at(doc, "height", "$"));
      }
    } catch (const Error& e) {
      schema_error("$.builtin", e.what());
    }
  } else {
    if (!doc.contains("intrinsics") || !doc.at("intrinsics").is_object()) {
      schema_error("$.intrinsics", "missing");
    }
    const json& k = doc.at("intrinsics");
    spec.intrinsics = {number_at(k, "fx", "$.intrinsics"), number_at(k, "fy", "$.intrinsics"),
                       number_at(k, "cx", "$.intrinsics"), number_at(k, "cy", "$.intrinsics"),
                       int_at(k, "width", "$.intrinsics"), int_at(k, "height", "$.intrinsics")};
    if (!doc.contains("poses") || !doc.at("poses").is_array()) schema_error("$.poses", "missing");
    for (std::size_t i = 0; i < doc.at("poses").size(); ++i) {
      spec.trajectory.push_back(
          pose_from(doc.at("poses")[i], "$.poses[" + std::to_string(i) + "]", 1e-9));
    }
    if (!doc.contains("primitives") || !doc.at("primitives").is_array()) {
      schema_error("$.primitives", "missing");
    }
    for (std::size_t i = 0; i < doc.at("primitives").size(); ++i) {
      const std::string path = "$.primitives[" + std::to_string(i) + "]";
      const json& j = doc.at("primitives")[i];
      synth::Primitive p;
      const std::string type = j.value("type", "");
      p.center = vec3_at(j, "center", path);
      if (j.contains("velocity")) p.velocity = vec3_at(j, "velocity", path);
      if (j.contains("texture_seed")) p.texture_seed = j.at("texture_seed").get<std::uint64_t>();
      if (j.contains("texture_scale")) p.texture_scale = number_at(j, "texture_scale", path);
      if (type == "plane") {
        p.kind = synth::PrimitiveKind::Plane;
        p.normal = vec3_at(j, "normal", path);
        p.axis_u = vec3_at(j, "axis_u", path);
        if (j.contains("half_extent")) {
          const auto he = array_at(j, "half_extent", 2, path);
          p.half_u = he[0];
          p.half_v = he[1];
        }
      } else if (type == "sphere") {
        p.kind = synth::PrimitiveKind::Sphere;
        p.radius = number_at(j, "radius", path);
      } else {
        schema_error(path + ".type", "must be \"plane\" or \"sphere\"");
      }
      spec.primitives.push_back(p);
    }
  }
  if (doc.contains("stereo_baseline")) spec.stereo_baseline = number_at(doc, "stereo_baseline", "$");
  try {
    spec.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) schema_error("$", e.what());
    throw;
  }
  return spec;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace cvd::io
