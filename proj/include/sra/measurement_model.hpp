#pragma once

// Forward model of an amplitude-modulated time-of-flight pixel: modulation
// frequencies, the distance grid, the stacked cosine/sine dictionary and the
// synthetic backscattering generators used by the experiments.

#include <complex>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sra {

/// Speed of light in cm/s.
inline constexpr double kSpeedOfLight = 29'979'245'800.0;

class FrequencyConfig {
public:
  /// Throws std::invalid_argument on an empty list, non-positive or repeated
  /// frequencies.
  explicit FrequencyConfig(std::vector<double> frequencies_hz);

  /// 120, 80 and 16 MHz.
  static FrequencyConfig default_config();

  std::size_t size() const { return frequencies_.size(); }
  double frequency(std::size_t k) const { return frequencies_.at(k); }
  /// lambda_k = c / (2 f_k), in cm.
  double half_wavelength(std::size_t k) const { return half_wavelengths_.at(k); }
  std::span<const double> frequencies() const { return frequencies_; }
  std::span<const double> half_wavelengths() const { return half_wavelengths_; }

  /// Index of the smallest half-wavelength (highest frequency).
  std::size_t shortest_half_wavelength_index() const;

  bool operator==(const FrequencyConfig&) const = default;

private:
  std::vector<double> frequencies_;
  std::vector<double> half_wavelengths_;
};

/// Uniform grid of candidate path lengths d_j = d_min + j * step, j < size().
class DistanceGrid {
public:
  DistanceGrid(double d_min, double d_max, double step);

  /// 20 cm to 450 cm in 1 cm steps (431 points).
  static DistanceGrid default_grid();

  double d_min() const { return d_min_; }
  double d_max() const { return d_max_; }
  double step() const { return step_; }
  std::size_t size() const { return count_; }
  double distance(std::size_t j) const { return d_min_ + static_cast<double>(j) * step_; }

  bool contains(double d) const;
  /// Nearest grid index; exact midpoints go to the smaller index.
  /// Throws std::out_of_range when d lies outside [d_min, d_max].
  std::size_t nearest_index(double d) const;

  bool operator==(const DistanceGrid&) const = default;

private:
  double d_min_;
  double d_max_;
  double step_;
  std::size_t count_;
};

/// Nonnegative amplitude profile over a distance grid.
class Backscattering {
public:
  Backscattering(DistanceGrid grid, Eigen::VectorXd amplitudes);
  static Backscattering zero(const DistanceGrid& grid);

  const DistanceGrid& grid() const { return grid_; }
  const Eigen::VectorXd& amplitudes() const { return amplitudes_; }
  std::size_t size() const { return static_cast<std::size_t>(amplitudes_.size()); }
  double operator[](std::size_t j) const { return amplitudes_[static_cast<Eigen::Index>(j)]; }

  /// Indices of entries strictly above `threshold`.
  std::vector<std::size_t> support(double threshold = 0.0) const;

private:
  DistanceGrid grid_;
  Eigen::VectorXd amplitudes_;
};

/// A per-pixel measurement. Stored in the stacked real form (real parts of
/// all m components followed by the imaginary parts).
class MeasurementVector {
public:
  MeasurementVector() = default;
  explicit MeasurementVector(Eigen::VectorXd real_view);
  static MeasurementVector from_complex(std::span<const std::complex<double>> values);

  std::size_t frequency_count() const { return static_cast<std::size_t>(real_.size()) / 2; }
  const Eigen::VectorXd& real_view() const { return real_; }
  std::vector<std::complex<double>> complex_view() const;
  std::complex<double> component(std::size_t k) const;

  double norm_l1() const { return real_.lpNorm<1>(); }
  double norm_l2() const { return real_.norm(); }
  bool is_zero() const { return real_.isZero(0.0); }

  MeasurementVector scaled(double s) const { return MeasurementVector(real_ * s); }

private:
  Eigen::VectorXd real_;
};

/// Stacked real dictionary: row k holds cos(2 pi d_j / lambda_k) and row k + m
/// holds sin(2 pi d_j / lambda_k).
class DictionaryMatrix {
public:
  DictionaryMatrix(DistanceGrid grid, FrequencyConfig freq, Eigen::MatrixXd entries);

  const Eigen::MatrixXd& entries() const { return entries_; }
  const DistanceGrid& grid() const { return grid_; }
  const FrequencyConfig& frequencies() const { return freq_; }
  std::size_t rows() const { return static_cast<std::size_t>(entries_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(entries_.cols()); }

private:
  DistanceGrid grid_;
  FrequencyConfig freq_;
  Eigen::MatrixXd entries_;
};

/// Diagonal noise covariance over the 2m real channels.
class NoiseModel {
public:
  /// Variances must be finite and nonnegative. `paired` is derived from the
  /// data: C_jj == C_{j+m,j+m} for all j < m.
  explicit NoiseModel(Eigen::VectorXd variances);

  /// sigma^2 * I over 2m channels.
  static NoiseModel white(std::size_t frequency_count, double sigma);

  const Eigen::VectorXd& variances() const { return variances_; }
  std::size_t channels() const { return static_cast<std::size_t>(variances_.size()); }
  bool paired() const { return paired_; }
  bool positive_definite() const { return variances_.minCoeff() > 0.0; }
  /// Diagonal of C^{-1/2}; throws std::domain_error when any variance is zero.
  Eigen::VectorXd inverse_sqrt() const;

private:
  Eigen::VectorXd variances_;
  bool paired_ = false;
};

DictionaryMatrix build_phi(const DistanceGrid& grid, const FrequencyConfig& freq);

/// Phi * x. Throws std::invalid_argument on a grid/size mismatch.
MeasurementVector synthesize(const Backscattering& x, const DictionaryMatrix& phi);

Backscattering make_two_path(double d1, double d2, double x1, double x2, const DistanceGrid& grid);

struct Spike {
  double distance;
  double amplitude;
};

Backscattering make_multi_path(std::span<const Spike> spikes, const DistanceGrid& grid);

struct DiffuseLobe {
  double amplitude;  ///< A
  double alpha;
  double beta;       ///< 1/cm
  double delta;      ///< onset offset past the direct return, cm
};

/// Direct spike plus the discretized lobe A c^alpha e^{-beta c}, where c is
/// the distance past the onset d1 + delta. Lobe samples are weighted by the
/// grid step and the tail is cut once it drops below 1e-6 * A.
Backscattering make_diffuse(Spike direct, const DiffuseLobe& lobe, const DistanceGrid& grid);

/// Adds zero-mean Gaussian noise with the model's per-channel variances.
MeasurementVector add_noise(const MeasurementVector& v, const NoiseModel& noise, std::uint64_t seed);

struct CompressibilityProfile {
  std::vector<double> sorted;  ///< descending
  double scale = 0.0;          ///< R in x_(i) ~ R i^{-1/r}
  double exponent = 0.0;       ///< r; 0 when fewer than two nonzeros
};

CompressibilityProfile compressibility_profile(const Backscattering& x);

}  // namespace sra
