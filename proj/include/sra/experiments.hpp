#pragma once

// Synthetic experiments: three-path and diffuse error tables, the two-path
// error heatmap and the frame throughput benchmark. All are deterministic in
// the scenario seed and independent of the worker count.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "sra/frame.hpp"
#include "sra/scenario.hpp"

namespace sra {

struct RunOptions {
  unsigned workers = 1;
  bool baselines = true;  ///< also evaluate ML two-path and Opt-Single
};

/// Noise sigma per real channel giving `snr` for a direct return of
/// amplitude x1: sigma = x1 / (sqrt(2m) snr). Infinite snr gives 0.
double noise_sigma_for_snr(double x1, double snr, std::size_t frequency_count);

struct ErrorStats {
  double median = 0.0;
  double mean = 0.0;
  int count = 0;    ///< valid estimates
  int invalid = 0;  ///< invalidated or failed
  static ErrorStats from(std::vector<double> errors, int invalid);
};

struct ErrorRow {
  double snr = 0.0;
  int trials = 0;
  ErrorStats sra, ml, single;
  /// Median signed shift of the recovered peak nearest to each true spike.
  std::vector<double> peak_shift;
};

std::vector<ErrorRow> run_three_path(const Scenario& sc, const RunOptions& opt = {});
std::vector<ErrorRow> run_diffuse_specular(const Scenario& sc, const RunOptions& opt = {});

struct HeatCell {
  double strength = 0.0;
  double snr = 0.0;
  ErrorStats sra, ml, single;  ///< mean field is the MAE
};

struct Heatmap {
  std::vector<double> strengths;
  std::vector<double> snrs;
  int per_cell = 0;
  std::vector<HeatCell> cells;  ///< strength-major
  const HeatCell& at(std::size_t strength, std::size_t snr) const { return cells[strength * snrs.size() + snr]; }
};

Heatmap run_two_path_grid(const Scenario& sc, const RunOptions& opt = {});

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct BenchReport {
  std::uint32_t width = 0, height = 0;
  unsigned workers = 1;
  int repeats = 0;
  double mean_ms = 0.0;
  double p95_ms = 0.0;
  StageTimes stages;
  double valid_fraction = 0.0;
  bool worker_invariant = true;  ///< 1 worker and `workers` gave equal maps
  double query_ns_per_pixel = 0.0;
  double direct_us_per_pixel = 0.0;  ///< full solver on a sample of pixels
  double speed_ratio = 0.0;
};

BenchReport bench_frame(const Lut& lut, const Frame& frame, unsigned workers, int repeats, int direct_samples = 50);
/// Same on a synthetic frame.
BenchReport bench_frame(const Lut& lut, std::uint32_t width, std::uint32_t height, unsigned workers, int repeats,
                        double frame_noise, std::uint64_t seed, int direct_samples = 50);

void write_csv(std::ostream& out, const Scenario& sc, const std::string& title, const std::vector<ErrorRow>& rows);
void write_csv(std::ostream& out, const Scenario& sc, const Heatmap& map);
void write_report(std::ostream& out, const BenchReport& r);

}  // namespace sra
