#include <bit>
#include <cstring>
#include <filesystem>

#include <gtest/gtest.h>

#include "cvd/io.hpp"

namespace cvd::io {
namespace {

const std::filesystem::path kGolden = CVD_GOLDEN_DIR;

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return ErrorCode::IoError;
}

std::string le_float(float v) {
  std::string s(4, '\0');
  std::memcpy(s.data(), &v, 4);
  return s;
}

std::string le_int(std::int32_t v) {
  std::string s(4, '\0');
  std::memcpy(s.data(), &v, 4);
  return s;
}

static_assert(std::endian::native == std::endian::little);

DepthMap golden_depth() {
  DepthMap d(3, 2);
  const double v[] = {1.5, 2.25, 0.0, 3.5, double(0.001f), 100.125};
  for (int k = 0; k < 6; ++k) d.values()[k] = v[k];
  return d;
}

FlowField golden_flow() {
  FlowField f(3, 2);
  const double v[][2] = {{0.5, -1.25}, {2, 0}, {-3.75, 0.125}, {10.5, -0.0625}, {0, 0}, {double(0.001f), 7}};
  for (int k = 0; k < 6; ++k) f.values()[k] = {v[k][0], v[k][1]};
  return f;
}

std::vector<Camera> golden_cameras() {
  Camera a{{56, 56, 31.5, 23.5, 64, 48}, CameraPose::identity()};
  Camera b{{50.5, 49.25, 30, 22, 64, 48}, {}};
  b.pose.R << 0.6, -0.8, 0, 0.8, 0.6, 0, 0, 0, 1;
  b.pose.t = {0.25, -1.5, 2};
  return {a, b};
}

std::vector<metrics::Track> golden_tracks() {
  return {{0, {{0, {1.5, 2.25}}, {1, {2.5, 3}}, {2, {3.75, 0.1}}}},
          {4, {{3, {10, 20.5}}, {5, {11.125, 19}}}}};
}

TEST(Golden, DepthPfm) {
  const auto bytes = read_file(kGolden / "depth_3x2.pfm");
  EXPECT_EQ(decode_pfm(bytes), golden_depth());
  EXPECT_EQ(encode_pfm(golden_depth()), bytes);
}

TEST(Golden, FlowFlo) {
  const auto bytes = read_file(kGolden / "flow_3x2.flo");
  EXPECT_EQ(bytes.size(), 12u + 8u * 6u);
  EXPECT_EQ(decode_flo(bytes), golden_flow());
  EXPECT_EQ(encode_flo(golden_flow()), bytes);
}

TEST(Golden, MaskPgm) {
  const auto bytes = read_file(kGolden / "mask_4x3.pgm");
  ValidityMask m(4, 3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 4; ++x) m(x, y) = (x + y) % 2 == 0 ? 255 : 0;
  EXPECT_EQ(decode_pgm(bytes), m);
  EXPECT_EQ(encode_pgm(m), bytes);
}

TEST(Golden, RgbPpm) {
  const auto bytes = read_file(kGolden / "rgb_2x2.ppm");
  RgbImage img(2, 2);
  const int v[][3] = {{0, 255, 128}, {17, 34, 51}, {200, 100, 50}, {255, 255, 0}};
  for (int k = 0; k < 4; ++k) img.values()[k] = {v[k][0] / 255.0, v[k][1] / 255.0, v[k][2] / 255.0};
  EXPECT_EQ(decode_ppm(bytes), img);
  EXPECT_EQ(encode_ppm(img), bytes);
}

TEST(Golden, Cameras) {
  const auto bytes = read_file(kGolden / "cameras.json");
  const auto cams = decode_cameras(bytes);
  const auto want = golden_cameras();
  ASSERT_EQ(cams.size(), 2u);
  for (int k = 0; k < 2; ++k) {
    EXPECT_EQ(cams[k].pose.R, want[k].pose.R);
    EXPECT_EQ(cams[k].pose.t, want[k].pose.t);
    EXPECT_EQ(cams[k].intrinsics.fx, want[k].intrinsics.fx);
    EXPECT_EQ(cams[k].intrinsics.fy, want[k].intrinsics.fy);
    EXPECT_EQ(cams[k].intrinsics.cx, want[k].intrinsics.cx);
    EXPECT_EQ(cams[k].intrinsics.cy, want[k].intrinsics.cy);
    EXPECT_EQ(cams[k].intrinsics.width, 64);
    EXPECT_EQ(cams[k].intrinsics.height, 48);
  }
  EXPECT_EQ(encode_cameras(want), bytes);
}

TEST(Golden, Tracks) {
  const auto bytes = read_file(kGolden / "tracks.txt");
  const auto tracks = decode_tracks(bytes);
  const auto want = golden_tracks();
  ASSERT_EQ(tracks.size(), want.size());
  for (std::size_t t = 0; t < want.size(); ++t) {
    EXPECT_EQ(tracks[t].id, want[t].id);
    ASSERT_EQ(tracks[t].observations.size(), want[t].observations.size());
    for (std::size_t k = 0; k < want[t].observations.size(); ++k) {
      EXPECT_EQ(tracks[t].observations[k].frame, want[t].observations[k].frame);
      EXPECT_EQ(tracks[t].observations[k].position, want[t].observations[k].position);
    }
  }
  EXPECT_EQ(encode_tracks(want), bytes);
}

TEST(Pfm, RoundTripAndLayout) {
  DepthMap d(5, 3);
  for (std::size_t k = 0; k < d.size(); ++k) d.values()[k] = 0.25 * k;
  const auto bytes = encode_pfm(d);
  EXPECT_EQ(bytes.substr(0, 12), "Pf\n5 3\n-1.0\n");
  EXPECT_EQ(bytes.size(), 12u + 4u * 15u);
  // First stored row is the bottom image row.
  float first;
  std::memcpy(&first, bytes.data() + 12, 4);
  EXPECT_EQ(first, float(d(0, 2)));
  EXPECT_EQ(decode_pfm(bytes), d);
}

TEST(Pfm, Errors) {
  const std::string payload = le_float(1.0f);
  EXPECT_EQ(code_of([&] { decode_pfm("Pf\n1 1\n1.0\n" + payload); }), ErrorCode::UnsupportedEndianness);
  EXPECT_EQ(code_of([&] { decode_pfm("PF\n1 1\n-1.0\n" + payload); }), ErrorCode::UnsupportedFormat);
  EXPECT_EQ(code_of([&] { decode_pfm("P5\n1 1\n-1.0\n" + payload); }), ErrorCode::MalformedHeader);
  EXPECT_EQ(code_of([&] { decode_pfm("Pf\n1 x\n-1.0\n" + payload); }), ErrorCode::MalformedHeader);
  EXPECT_EQ(code_of([&] { decode_pfm("Pf\n2 1\n-1.0\n" + payload); }), ErrorCode::TruncatedData);
  EXPECT_EQ(code_of([&] { decode_pfm("Pf\n1 1\n-1.0\n" + payload + payload); }), ErrorCode::MalformedHeader);
  EXPECT_EQ(code_of([&] { decode_pfm(""); }), ErrorCode::MalformedHeader);
}

TEST(Flo, RoundTripAndErrors) {
  FlowField f(4, 2);
  for (std::size_t k = 0; k < f.size(); ++k) f.values()[k] = {0.5 * k, -0.25 * k};
  const auto bytes = encode_flo(f);
  EXPECT_EQ(bytes.size(), 12u + 8u * 8u);
  EXPECT_EQ(decode_flo(bytes), f);
  std::string bad = bytes;
  bad[0] ^= 1;
  EXPECT_EQ(code_of([&] { decode_flo(bad); }), ErrorCode::BadMagic);
  EXPECT_EQ(code_of([&] { decode_flo(bytes.substr(0, bytes.size() - 1)); }), ErrorCode::TruncatedData);
  EXPECT_EQ(code_of([&] { decode_flo(bytes.substr(0, 8)); }), ErrorCode::TruncatedData);
  const std::string zero = le_float(kFloMagic) + le_int(0) + le_int(2);
  EXPECT_EQ(code_of([&] { decode_flo(zero); }), ErrorCode::MalformedHeader);
}

TEST(Pnm, RoundTripAndErrors) {
  ValidityMask m(3, 2, 0);
  m(1, 1) = 255;
  EXPECT_EQ(decode_pgm(encode_pgm(m)), m);
  EXPECT_EQ(code_of([&] { decode_pgm(std::string("P5\n1 1\n65535\n") + '\0' + '\0'); }),
            ErrorCode::UnsupportedFormat);
  EXPECT_EQ(code_of([&] { decode_pgm(std::string("P5\n2 1\n255\n") + '\xff'); }), ErrorCode::TruncatedData);
  EXPECT_EQ(code_of([&] { decode_pgm(std::string("P2\n1 1\n255\n") + '\xff'); }), ErrorCode::MalformedHeader);
  EXPECT_EQ(code_of([&] { decode_pgm(std::string("P5\n1 1\n255\n") + '\x07'); }), ErrorCode::SchemaViolation);
  // Comments in the header are allowed.
  EXPECT_EQ(decode_pgm(std::string("P5\n# hi\n1 1\n255\n") + '\xff')(0, 0), 255);

  RgbImage img(2, 1);
  img(0, 0) = {1.0, 0.0, 0.5};
  img(1, 0) = {0.2, 0.4, 0.6};
  const auto back = decode_ppm(encode_ppm(img));
  for (int x = 0; x < 2; ++x)
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(back(x, 0)[c], img(x, 0)[c], 0.5 / 255.0);
  EXPECT_EQ(code_of([&] { decode_ppm(encode_pgm(m)); }), ErrorCode::MalformedHeader);
}

TEST(Cameras, RoundTripExact) {
  auto cams = golden_cameras();
  cams[0].pose.t = {0.1, 1.0 / 3.0, -2e-7};
  const auto back = decode_cameras(encode_cameras(cams));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].pose.t, cams[0].pose.t);
  EXPECT_EQ(back[1].pose.R, cams[1].pose.R);
}

TEST(Cameras, SchemaErrors) {
  const auto good = read_file(kGolden / "cameras.json");
  auto replace = [&](const std::string& from, const std::string& to) {
    std::string s = good;
    const auto pos = s.find(from);
    EXPECT_NE(pos, std::string::npos) << from;
    return s.replace(pos, from.size(), to);
  };
  EXPECT_EQ(code_of([&] { decode_cameras(replace("\"schema_version\": 1", "\"schema_version\": 2")); }),
            ErrorCode::SchemaViolation);
  EXPECT_EQ(code_of([&] { decode_cameras(replace("camera_to_world", "world_to_camera")); }),
            ErrorCode::SchemaViolation);
  // Non-orthonormal rotation.
  EXPECT_EQ(code_of([&] { decode_cameras(replace("0.6,", "0.7,")); }), ErrorCode::SchemaViolation);
  EXPECT_EQ(code_of([&] { decode_cameras(replace("\"fx\": 50.5", "\"fx\": -50.5")); }),
            ErrorCode::SchemaViolation);
  EXPECT_EQ(code_of([&] { decode_cameras(replace("\"id\": 1", "\"id\": 0")); }), ErrorCode::SchemaViolation);
  EXPECT_EQ(code_of([&] { decode_cameras(replace("\"id\": 1", "\"id\": 2")); }), ErrorCode::SchemaViolation);
  EXPECT_EQ(code_of([&] { decode_cameras("{not json"); }), ErrorCode::MalformedHeader);
  EXPECT_EQ(code_of([&] { decode_cameras("[]"); }), ErrorCode::SchemaViolation);
}

TEST(Tracks, Errors) {
  EXPECT_EQ(code_of([&] { decode_tracks("0 1 1 1\n0 0 2 2\n"); }), ErrorCode::SchemaViolation);
  EXPECT_EQ(code_of([&] { decode_tracks("0 1 1 1\n0 1 2 2\n"); }), ErrorCode::SchemaViolation);
  EXPECT_EQ(code_of([&] { decode_tracks("0 0 1\n"); }), ErrorCode::SchemaViolation);
  EXPECT_EQ(code_of([&] { decode_tracks("0 0 1 1 extra\n0 1 1 1\n"); }), ErrorCode::SchemaViolation);
  EXPECT_EQ(code_of([&] { decode_tracks("0 0 1 1\n"); }), ErrorCode::SchemaViolation);
  EXPECT_EQ(code_of([&] { decode_tracks("0 -1 1 1\n0 1 1 1\n"); }), ErrorCode::SchemaViolation);
  // Comments and blank lines are skipped; interleaved tracks are grouped by id.
  const auto t = decode_tracks("# header\n\n3 0 1 1\n1 0 5 5\n3 2 2 2\n1 4 6 6\n");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].id, 1);
  EXPECT_EQ(t[1].observations[1].frame, 2);
}

TEST(Scene, RoundTripAndBuiltin) {
  const auto spec = synth::plane_and_sphere_scene(3);
  const auto back = decode_scene(encode_scene(spec));
  EXPECT_EQ(encode_scene(back), encode_scene(spec));
  EXPECT_EQ(back.frames(), 3);
  const auto b = decode_scene(R"({"builtin": "moving_patch", "frames": 4, "width": 32, "height": 24})");
  EXPECT_EQ(b.frames(), 4);
  EXPECT_EQ(b.intrinsics.width, 32);
  EXPECT_EQ(code_of([&] { decode_scene(R"({"builtin": "nope"})"); }), ErrorCode::SchemaViolation);
  EXPECT_EQ(code_of([&] { decode_scene(R"({"builtin": "static_plane", "width": 32})"); }),
            ErrorCode::SchemaViolation);
}

TEST(Files, MissingFileIsIoError) {
  EXPECT_EQ(code_of([&] { read_file("/nonexistent/dir/file.pfm"); }), ErrorCode::IoError);
}

}  // namespace
}  // namespace cvd::io
