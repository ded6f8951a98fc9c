#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cvd/geometry.hpp"
#include "cvd/metrics.hpp"
#include "cvd/raster.hpp"
#include "cvd/synth.hpp"

// On-disk formats. All binary payloads are little-endian. Readers reject
// malformed input and never repair it.
namespace cvd::io {

inline constexpr int kCameraSchemaVersion = 1;
inline constexpr const char* kCameraConvention = "camera_to_world";
inline constexpr float kFloMagic = 202021.25f;

// PFM grayscale ("Pf"), scale -1.0, rows stored bottom to top. Depth is
// stored as float32.
std::string encode_pfm(const DepthMap& depth);
DepthMap decode_pfm(std::string_view bytes);

// Middlebury .flo: magic, int32 width, int32 height, interleaved (dx, dy) float32.
std::string encode_flo(const FlowField& flow);
FlowField decode_flo(std::string_view bytes);

// Binary PGM (P5) mask, 255 = valid, 0 = invalid.
std::string encode_pgm(const ValidityMask& mask);
ValidityMask decode_pgm(std::string_view bytes);

// Binary PPM (P6), 8 bits per channel; values are quantized to k / 255.
std::string encode_ppm(const RgbImage& rgb);
RgbImage decode_ppm(std::string_view bytes);

/// {"schema_version", "convention": "camera_to_world", "frames": [{"id", "fx",
/// "fy", "cx", "cy", "width", "height", "R": [9, row-major], "t": [3]}]}
std::string encode_cameras(std::span<const Camera> cameras);
std::vector<Camera> decode_cameras(std::string_view json);

/// One "track_id frame x y" line per observation.
std::string encode_tracks(std::span<const metrics::Track> tracks);
std::vector<metrics::Track> decode_tracks(std::string_view text);

/// Scene description; either {"builtin": name, "frames": N} or a full
/// explicit scene. Encoding always writes the explicit form.
std::string encode_scene(const synth::SceneSpec& spec);
synth::SceneSpec decode_scene(std::string_view json);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

inline DepthMap read_pfm(const std::filesystem::path& p) { return decode_pfm(read_file(p)); }
inline void write_pfm(const std::filesystem::path& p, const DepthMap& d) { write_file(p, encode_pfm(d)); }
inline FlowField read_flo(const std::filesystem::path& p) { return decode_flo(read_file(p)); }
inline void write_flo(const std::filesystem::path& p, const FlowField& f) { write_file(p, encode_flo(f)); }
inline ValidityMask read_pgm(const std::filesystem::path& p) { return decode_pgm(read_file(p)); }
inline void write_pgm(const std::filesystem::path& p, const ValidityMask& m) { write_file(p, encode_pgm(m)); }
inline RgbImage read_ppm(const std::filesystem::path& p) { return decode_ppm(read_file(p)); }
inline void write_ppm(const std::filesystem::path& p, const RgbImage& r) { write_file(p, encode_ppm(r)); }
inline std::vector<Camera> read_cameras(const std::filesystem::path& p) { return decode_cameras(read_file(p)); }
inline void write_cameras(const std::filesystem::path& p, std::span<const Camera> c) { write_file(p, encode_cameras(c)); }
inline std::vector<metrics::Track> read_tracks(const std::filesystem::path& p) { return decode_tracks(read_file(p)); }
inline void write_tracks(const std::filesystem::path& p, std::span<const metrics::Track> t) { write_file(p, encode_tracks(t)); }

}  // namespace cvd::io
