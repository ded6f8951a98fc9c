#pragma once

// Directory layout shared by the cvd subcommands.
//
//   <dir>/cameras.json            cameras of the left view
//   <dir>/pairs.txt               "i j" per line
//   <dir>/rgb/frame_NNNN.ppm
//   <dir>/depth/frame_NNNN.pfm
//   <dir>/flow/IIII_JJJJ.flo      flow from frame I to frame J
//   <dir>/mask/IIII_JJJJ.pgm      validity of that flow
//   <dir>/dynamic/frame_NNNN.pgm  moving-object pixels
//   <dir>/tracks.txt
//   <dir>/stereo/...              right view, when the scene has a baseline

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "cvd/pairing.hpp"

namespace cvd::cli {

namespace fs = std::filesystem;

inline std::string frame_name(int frame, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04d.%s", frame, ext);
  return buf;
}

inline std::string pair_name(int i, int j, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d_%04d.%s", i, j, ext);
  return buf;
}

std::string encode_pairs(const FramePairSet& pairs);
/// Throws SchemaViolation on malformed lines.
FramePairSet decode_pairs(const std::string& text);

}  // namespace cvd::cli
