#pragma once

// Normalization and phase alignment of measurements. Scaling a measurement
// and rotating every component by the phase of a common distance shift leaves
// the recovered backscattering unchanged up to a relabelling of distances, so
// a measurement can be reduced to 2m - 2 real coordinates.

#include <cstddef>
#include <vector>

#include "sra/depth.hpp"
#include "sra/measurement_model.hpp"
#include "sra/solver.hpp"

namespace sra {

/// v_k -> s * exp(-2 pi i delta / lambda_k) * v_k for every component.
MeasurementVector f_transform(const MeasurementVector& v, double s, double delta, const FrequencyConfig& freq);

/// The same transform applied to every column of the dictionary. The result
/// keeps the original grid labels.
DictionaryMatrix f_transform(const DictionaryMatrix& phi, double s, double delta);

struct CanonicalForm {
  /// Real parts of the components other than k (ascending index), followed by
  /// their imaginary parts.
  std::vector<double> reduced;
  std::size_t k = 0;
  double delta = 0.0;  ///< cm, in [0, lambda_k)
  double scale = 0.0;  ///< 1 / |v|_2
};

/// Throws InvalidPixel when v or its k-th component is zero.
CanonicalForm to_canonical(const MeasurementVector& v, std::size_t k, const FrequencyConfig& freq);

/// Rebuilds the unit-norm, phase-aligned measurement. Sums of squares up to
/// 1 + 1e-9 are clamped; anything larger throws std::invalid_argument.
MeasurementVector from_canonical(const CanonicalForm& c);

/// [d_min - lambda_k, d_max] with the same step.
DistanceGrid extend_grid(const DistanceGrid& grid, const FrequencyConfig& freq, std::size_t k);

struct CanonicalPipelineConfig {
  FrequencyConfig freq = FrequencyConfig::default_config();
  DistanceGrid grid = DistanceGrid::default_grid();  ///< physical range
  std::size_t k = 0;                                 ///< reference component
  double epsilon = 0.05;
  /// Per-channel noise level relative to a unit-norm measurement.
  double noise_sigma = 0.01;
  double noise_allowance = 0.5;
  double peak_threshold = kDefaultPeakThreshold;
  double confidence_threshold = kDefaultConfidenceThreshold;

  /// Defaults with k set to the shortest half-wavelength.
  static CanonicalPipelineConfig defaults();
};

/// Depth recovery in the canonical domain: canonicalize, solve on the
/// extended grid, pick the first credible peak and add the shift back.
class CanonicalPipeline {
public:
  explicit CanonicalPipeline(CanonicalPipelineConfig cfg);

  const CanonicalPipelineConfig& config() const { return cfg_; }
  const DistanceGrid& extended_grid() const { return solver_.dictionary().grid(); }
  const DictionaryMatrix& extended_dictionary() const { return solver_.dictionary(); }
  const NoiseModel& relative_noise() const { return noise_; }

  /// Depth relative to the canonical frame for a unit-norm, phase-aligned
  /// measurement. Solver failures give an invalid estimate.
  DepthEstimate estimate_canonical(const MeasurementVector& rho) const;

  /// Full pipeline; depths outside the physical grid range are invalid.
  DepthEstimate estimate(const MeasurementVector& v) const;

private:
  CanonicalPipelineConfig cfg_;
  SraSolver solver_;
  NoiseModel noise_;
};

}  // namespace sra
