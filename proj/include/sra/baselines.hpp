#pragma once

// Competitors without multipath sparsity: exhaustive two-path maximum
// likelihood and the best single-path fit. Both minimize the whitened L2
// residual |C^{-1/2}(Phi x - v)| with nonnegative amplitudes.

#include <cstddef>
#include <optional>

#include "sra/depth.hpp"
#include "sra/measurement_model.hpp"

namespace sra {

struct TwoPathFit {
  std::size_t i = 0;  ///< grid index of the nearer path, i < j
  std::size_t j = 0;
  double d1 = 0.0;    ///< cm
  double d2 = 0.0;
  double x1 = 0.0;
  double x2 = 0.0;
  double residual = 0.0;  ///< whitened L2 norm
  /// Distance of the nearest path with nonzero amplitude.
  double depth() const { return x1 > 0.0 || x2 == 0.0 ? d1 : d2; }
};

struct SingleFit {
  std::size_t index = 0;
  double depth = 0.0;
  double amplitude = 0.0;
  double residual = 0.0;
};

/// Precomputes the whitened dictionary and its Gram matrix so that each pixel
/// costs O(n^2) scalar work. Immutable; fit() is safe to call concurrently.
class Baselines {
public:
  /// `noise` defaults to the identity weighting.
  explicit Baselines(DictionaryMatrix phi, std::optional<NoiseModel> noise = std::nullopt);

  const DictionaryMatrix& dictionary() const { return phi_; }

  /// All pairs i < j with separation of at least one grid step; each pair's
  /// two-variable NNLS is solved in closed form. The first pair in
  /// lexicographic order wins ties. Throws std::invalid_argument for v = 0.
  TwoPathFit two_path(const MeasurementVector& v) const;

  /// Best single column; if no column correlates positively with v the
  /// amplitude is 0 and the first column is reported.
  SingleFit single(const MeasurementVector& v) const;

private:
  Eigen::VectorXd whiten(const MeasurementVector& v) const;

  DictionaryMatrix phi_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd gram_;  // A^T A with A = W Phi
  Eigen::MatrixXd whitened_;
};

TwoPathFit ml_two_path(const MeasurementVector& v, const DictionaryMatrix& phi,
                       std::optional<NoiseModel> noise = std::nullopt);

/// Depth of the best single-path fit. Always valid with confidence 1; no
/// invalidation is applied.
DepthEstimate opt_single(const MeasurementVector& v, const DictionaryMatrix& phi,
                         std::optional<NoiseModel> noise = std::nullopt);

}  // namespace sra
