#pragma once

#include <cstddef>
#include <vector>

#include "sra/measurement_model.hpp"

namespace sra {

inline constexpr double kDefaultPeakThreshold = 0.01;
inline constexpr double kDefaultConfidenceThreshold = 0.9;

struct DepthEstimate {
  double depth = 0.0;  ///< cm
  bool valid = false;
  double confidence = 0.0;
  std::size_t peak_index = 0;

  static DepthEstimate invalid() { return {}; }
};

struct Peak {
  std::size_t index;  ///< grid index of the cluster centroid
  double amplitude;   ///< total amplitude of the cluster
};

/// Peaks in ascending distance order.
struct PeakList {
  std::vector<Peak> peaks;
  bool empty() const { return peaks.empty(); }
  std::size_t size() const { return peaks.size(); }
};

/// Runs of consecutive bins above rel_threshold * max(x); each run becomes a
/// single peak at its amplitude-weighted centroid.
PeakList find_peaks(const Backscattering& x, double rel_threshold = kDefaultPeakThreshold);

/// Distance of the first peak; invalid when x has no peak.
DepthEstimate extract_depth(const Backscattering& x, double rel_threshold = kDefaultPeakThreshold);

/// Bonferroni-corrected two-sided Gaussian tail of |amplitude| for an
/// estimate with the given standard deviation. A zero spread gives 0 for a
/// nonzero amplitude; an infinite spread gives 1.
double tail_probability(double amplitude, double spread, std::size_t bins);

/// Probability that pure noise yields a matched-filter amplitude of at least
/// |amplitude| on `column`, Bonferroni-corrected over `bins` columns. Clamped
/// to [machine epsilon, 1].
double noise_tail_probability(double amplitude, const Eigen::VectorXd& column, const NoiseModel& noise,
                              std::size_t bins);

/// Chains per-peak noise probabilities: peak i is the true return with
/// probability prod_{l<i} P_l (1 - P_i), where P_l is the chance that peak l
/// is noise. Every peak column enters one weighted least-squares fit of v;
/// a peak's observed amplitude is the smaller of its LP amplitude and its
/// fitted coefficient, judged against that coefficient's standard deviation.
/// Peaks the fit cannot separate count as noise. Returns the first
/// peak whose probability reaches `threshold`, else an invalid estimate.
DepthEstimate invalidate(const PeakList& peaks, const MeasurementVector& v, const DictionaryMatrix& phi,
                         const NoiseModel& noise, double threshold = kDefaultConfidenceThreshold);

}  // namespace sra
