#pragma once

// Text scenario files: one `key = value` per line, '#' starts a comment,
// list values are comma separated. Unknown keys are errors.
//
//   frequencies_mhz = 120, 80, 16
//   grid = 20, 450, 1                # d_min, d_max, step (cm)
//   epsilon = 0.05
//   noise_allowance = 0.5
//   spike = 100, 1                   # distance (cm), amplitude; repeatable
//   lobe = 0.001, 2, 0.1, 10         # A, alpha, beta (1/cm), onset offset (cm)
//   snr = inf, 20, 10, 5
//   trials = 1000
//   seed = 1
//   peak_threshold = 0.01
//   confidence_threshold = 0.9
//   strengths = 0.6, 1.1, ...        # two-path sweep
//   d1_range = 20, 380
//   separation_range = 40, 250
//   instances = 5184
//   cells_per_dim = 32               # lookup table
//   lut_noise_sigma = 0.03
//   reference_index = auto           # or a frequency index
//   frame_size = 424, 512            # width, height
//   repeats = 10
//   frame_noise = 0.02

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sra/lut.hpp"
#include "sra/measurement_model.hpp"

namespace sra {

class ScenarioError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Scenario {
  FrequencyConfig freq = FrequencyConfig::default_config();
  DistanceGrid grid = DistanceGrid::default_grid();
  double epsilon = 0.05;
  double noise_allowance = 0.5;
  std::vector<Spike> spikes;
  std::optional<DiffuseLobe> lobe;
  std::vector<double> snrs;  ///< infinity allowed
  int trials = 1000;
  std::uint64_t seed = 1;
  double peak_threshold = 0.01;
  double confidence_threshold = 0.9;

  std::vector<double> strengths;
  double d1_min = 20.0, d1_max = 380.0;
  double sep_min = 40.0, sep_max = 250.0;
  int instances = 5184;

  std::uint32_t cells_per_dim = 32;
  double lut_noise_sigma = 0.03;
  std::optional<std::size_t> reference_index;

  std::uint32_t frame_width = 424, frame_height = 512;
  int repeats = 10;
  double frame_noise = 0.02;

  LutConfig lut_config() const;
  /// Stable one-line-per-key rendering used in CSV headers.
  std::vector<std::string> describe() const;
};

/// Parses scenario text. Errors carry the line number.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

/// Defaults for the built-in experiments.
Scenario three_path_scenario();
Scenario two_path_scenario();
Scenario diffuse_scenario();

std::string format_snr(double snr);

}  // namespace sra
