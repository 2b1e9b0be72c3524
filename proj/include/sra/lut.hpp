#pragma once

// Lookup table over canonical coordinates. Every measurement is reduced to
// 2m - 2 real numbers in [-1, 1]; the table stores the depth (relative to the
// canonical shift) recovered by the full solver at each cell center.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sra/canonical.hpp"

namespace sra {

struct LutConfig {
  FrequencyConfig freq = FrequencyConfig::default_config();
  DistanceGrid grid = DistanceGrid::default_grid();  ///< physical range
  std::size_t k = 0;
  std::uint32_t cells_per_dim = 32;
  double epsilon = 0.05;
  /// Per channel, relative to a unit-norm measurement. Must also cover the
  /// quantization error of a cell center, about 1 / (L sqrt 3) per coordinate.
  double noise_sigma = 0.03;
  double noise_allowance = 0.5;
  double peak_threshold = kDefaultPeakThreshold;
  double confidence_threshold = kDefaultConfidenceThreshold;

  /// Defaults with k at the shortest half-wavelength.
  static LutConfig defaults();
  void validate() const;

  std::size_t dims() const { return 2 * freq.size() - 2; }
  std::uint64_t cell_count() const;
  DistanceGrid extended_grid() const { return extend_grid(grid, freq, k); }
  CanonicalPipelineConfig pipeline_config() const;
};

struct LutCell {
  float relative_depth = 0.0f;  ///< cm, canonical frame
  float confidence = 0.0f;
  std::uint8_t valid = 0;
  bool operator==(const LutCell&) const = default;
};

class LutFormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// FNV-1a over the configuration and the extended dictionary.
std::uint64_t lut_fingerprint(const LutConfig& cfg);

/// Center of cell `i` along one axis.
inline double cell_center(std::uint32_t i, std::uint32_t cells) {
  return -1.0 + (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(cells);
}

/// Nearest-center cell along one axis, clamped to the table.
inline std::uint32_t quantize(double c, std::uint32_t cells) {
  const double t = (c + 1.0) * 0.5 * static_cast<double>(cells);
  if (!(t > 0.0)) return 0;
  if (t >= static_cast<double>(cells)) return cells - 1;
  return static_cast<std::uint32_t>(t);
}

/// Cell center coordinates in row-major order (first coordinate slowest).
std::vector<double> cell_coordinates(const LutConfig& cfg, std::uint64_t index);

/// True when the cell box meets the closed unit ball; such cells can hold
/// real measurements and are solved, the others are left invalid.
bool cell_reachable(const LutConfig& cfg, std::uint64_t index);
std::uint64_t count_reachable_cells(const LutConfig& cfg);
/// Cells whose center satisfies sum c^2 <= 1.
std::uint64_t count_centers_inside_ball(const LutConfig& cfg);

/// Solves the cells [begin, end). Centers outside the ball are projected
/// radially onto the sphere first. Deterministic.
std::vector<LutCell> build_cells(const CanonicalPipeline& pipeline, const LutConfig& cfg, std::uint64_t begin,
                                 std::uint64_t end);

struct LutBuildOptions {
  unsigned workers = 1;
  std::uint64_t chunk_cells = 4096;
  /// Called after each finished chunk with (chunk begin, its cells).
  std::function<void(std::uint64_t, std::span<const LutCell>)> on_chunk;
  /// Chunks already available (from a previous run), keyed by begin index.
  std::function<bool(std::uint64_t, std::vector<LutCell>&)> restore_chunk;
};

class Lut {
public:
  Lut(LutConfig cfg, std::vector<LutCell> cells);

  const LutConfig& config() const { return cfg_; }
  std::span<const LutCell> cells() const { return cells_; }
  std::uint64_t fingerprint() const { return fingerprint_; }

  std::uint64_t cell_index(std::span<const double> reduced) const;

  /// Full query: canonicalize, quantize, fetch, add the shift back.
  DepthEstimate query(const MeasurementVector& v) const;
  /// Allocation-free variant on a stacked real view of length 2m.
  template <typename T>
  DepthEstimate query_raw(const T* real_view) const;

  bool operator==(const Lut& o) const { return fingerprint_ == o.fingerprint_ && cells_ == o.cells_; }

private:
  LutConfig cfg_;
  std::vector<LutCell> cells_;
  std::uint64_t fingerprint_ = 0;
  std::vector<double> lambda_ratio_;  // lambda_k / lambda_j
};

Lut build_lut(const LutConfig& cfg, const LutBuildOptions& options = {});

std::vector<std::uint8_t> serialize(const Lut& lut);
/// Throws LutFormatError on truncation, bad magic or version, or a fingerprint
/// that does not match the header's configuration.
Lut deserialize(std::span<const std::uint8_t> bytes);
/// As above, and additionally refuses a table built for a different config.
Lut deserialize(std::span<const std::uint8_t> bytes, const LutConfig& expected);

void save_lut(const Lut& lut, const std::string& path);
Lut load_lut(const std::string& path);

}  // namespace sra
