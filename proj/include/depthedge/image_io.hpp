#pragma once

#include "depthedge/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace depthedge {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

Bytes read_file_bytes(const std::filesystem::path& path);
/// Writes through a sibling temporary file and renames, so readers never see a partial file.
void write_file_bytes(const std::filesystem::path& path, ByteView bytes);

// KITTI convention: depth = raw / 256 m, raw 0 marks an invalid pixel.
DepthMap read_depth_png16(ByteView bytes);
Bytes write_depth_png16(const DepthMap& depth);
SparseDepth read_sparse_png16(ByteView bytes);
Bytes write_sparse_png16(const SparseDepth& depth);

/// Grayscale PFM ("Pf"). Non-finite or non-positive values become invalid pixels.
DepthMap read_pfm(ByteView bytes);
/// Raw grayscale PFM field with no validity interpretation (gradients, angles).
ImageF read_pfm_field(ByteView bytes);
Bytes write_pfm(const ImageF& field, bool little_endian = true);
/// Invalid pixels are written as 0.
Bytes write_pfm(const DepthMap& depth, bool little_endian = true);

// 8-bit single channel, 255 = edge. On read any value >= 128 is an edge.
EdgeMap read_edge_png8(ByteView bytes);
Bytes write_edge_png8(const EdgeMap& edges);

// 16-bit single channel, prob = value / 65535.
EdgeProbMap read_prob_png16(ByteView bytes);
Bytes write_prob_png16(const EdgeProbMap& probs);

/// Decoded PNG of any supported layout; samples widened to 16 bits.
struct RawPng {
  int height = 0;
  int width = 0;
  int channels = 0;
  int bit_depth = 0;
  bool palette = false;  // expanded to RGB on decode
  std::vector<std::uint16_t> samples;  // row-major, interleaved channels

  std::uint16_t at(int row, int col, int channel) const {
    return samples[(static_cast<std::size_t>(row) * width + col) * channels + channel];
  }
};

RawPng decode_png(ByteView bytes);
/// Deterministic encoder: fixed zlib level, no filtering, no ancillary chunks.
/// channels in {1, 2}; bit_depth in {8, 16}.
Bytes encode_png(const RawPng& img);

/// Format sniffing for depth inputs that may be PNG16 or PFM.
DepthMap read_depth_any(ByteView bytes);

}  // namespace depthedge
