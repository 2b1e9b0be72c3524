#pragma once

// Per-pixel measurement frames and depth maps. On disk a frame is
//   uint32 width, uint32 height, uint32 m   (little-endian)
//   width * height * 2m float32 (little-endian), row-major pixels, each pixel
//   its stacked real view (m real parts, then m imaginary parts).

#include <cstdint>
#include <string>
#include <vector>

#include "sra/lut.hpp"

namespace sra {

struct Frame {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t m = 0;
  std::vector<float> data;  ///< width * height * 2m

  Frame() = default;
  Frame(std::uint32_t w, std::uint32_t h, std::uint32_t freqs);

  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  const float* pixel(std::size_t p) const { return data.data() + p * 2 * m; }
  float* pixel(std::size_t p) { return data.data() + p * 2 * m; }
  /// Throws std::invalid_argument if the data length disagrees with the size.
  void validate() const;
};

std::vector<std::uint8_t> encode_frame(const Frame& f);
Frame decode_frame(const std::vector<std::uint8_t>& bytes);
void write_frame(const Frame& f, const std::string& path);
Frame read_frame(const std::string& path);

struct DepthMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<float> depth;  ///< cm; 0 where invalid
  std::vector<std::uint8_t> valid;
  bool operator==(const DepthMap&) const = default;
};

/// Queries every pixel; rows are split into contiguous blocks across
/// `workers` threads. Output does not depend on the worker count.
DepthMap process_frame(const Lut& lut, const Frame& frame, unsigned workers = 1);

struct StageTimes {
  double canonicalize_ms = 0.0;
  double quantize_ms = 0.0;
  double fetch_ms = 0.0;
};

/// Single-threaded pass that runs the query stages separately over the whole
/// frame and times each. The map it produces equals process_frame's.
DepthMap process_frame_staged(const Lut& lut, const Frame& frame, StageTimes& times);

/// Synthetic frame of random multipath scenes with noise; deterministic in
/// `seed`. Each pixel gets 1 to 3 returns in the lut's physical range.
Frame synthetic_frame(const Lut& lut, std::uint32_t width, std::uint32_t height, double noise_sigma,
                      std::uint64_t seed);

}  // namespace sra
