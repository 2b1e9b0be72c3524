#include "sra/depth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sra {

PeakList find_peaks(const Backscattering& x, double rel_threshold) {
  PeakList out;
  const Eigen::VectorXd& a = x.amplitudes();
  if (a.size() == 0) return out;
  const double peak = a.maxCoeff();
  if (!(peak > 0.0)) return out;
  const double cut = rel_threshold * peak;

  Eigen::Index j = 0;
  while (j < a.size()) {
    if (a[j] <= cut) {
      ++j;
      continue;
    }
    double mass = 0.0;
    double moment = 0.0;
    for (; j < a.size() && a[j] > cut; ++j) {
      mass += a[j];
      moment += a[j] * static_cast<double>(j);
    }
    const auto centroid = static_cast<std::size_t>(std::lround(moment / mass));
    out.peaks.push_back({centroid, mass});
  }
  return out;
}

DepthEstimate extract_depth(const Backscattering& x, double rel_threshold) {
  const PeakList peaks = find_peaks(x, rel_threshold);
  if (peaks.empty()) return DepthEstimate::invalid();
  const std::size_t i = peaks.peaks.front().index;
  return {x.grid().distance(i), true, 1.0, i};
}

double tail_probability(double amplitude, double spread, std::size_t bins) {
  double p = 1.0;
  if (spread == 0.0) {
    p = amplitude == 0.0 ? 1.0 : 0.0;
  } else if (std::isfinite(spread)) {
    p = std::erfc(std::abs(amplitude) / (spread * std::sqrt(2.0))) * static_cast<double>(std::max<std::size_t>(bins, 1));
  }
  return std::clamp(p, std::numeric_limits<double>::epsilon(), 1.0);
}

double noise_tail_probability(double amplitude, const Eigen::VectorXd& column, const NoiseModel& noise,
                              std::size_t bins) {
  // Matched-filter estimate a = phi^T C^{-1} eta / (phi^T C^{-1} phi) has
  // variance 1 / (phi^T C^{-1} phi) under eta ~ N(0, C).
  const double info = column.cwiseAbs2().cwiseQuotient(noise.variances()).sum();
  return tail_probability(amplitude, std::isfinite(info) ? 1.0 / std::sqrt(info) : 0.0, bins);
}

DepthEstimate invalidate(const PeakList& peaks, const MeasurementVector& v, const DictionaryMatrix& phi,
                         const NoiseModel& noise, double threshold) {
  if (noise.channels() != phi.rows()) throw std::invalid_argument("invalidate: noise model channel count");
  if (static_cast<std::size_t>(v.real_view().size()) != phi.rows()) {
    throw std::invalid_argument("invalidate: measurement length does not match the dictionary");
  }
  const auto count = static_cast<Eigen::Index>(peaks.peaks.size());
  const auto rows = static_cast<Eigen::Index>(phi.rows());
  if (count == 0) return DepthEstimate::invalid();

  Eigen::VectorXd observed(count);
  Eigen::VectorXd spread(count);  // standard deviation of each amplitude under noise
  for (Eigen::Index i = 0; i < count; ++i) observed[i] = peaks.peaks[static_cast<std::size_t>(i)].amplitude;

  if (!noise.positive_definite()) {
    spread.setZero();
  } else {
    const Eigen::VectorXd w = noise.inverse_sqrt();
    Eigen::MatrixXd a(rows, count);
    for (Eigen::Index i = 0; i < count; ++i) {
      a.col(i) = w.cwiseProduct(phi.entries().col(static_cast<Eigen::Index>(peaks.peaks[static_cast<std::size_t>(i)].index)));
    }
    const Eigen::VectorXd b = w.cwiseProduct(v.real_view());
    // Joint weighted fit over all peaks: a peak that only helps its neighbours
    // fit is nearly collinear with them and gets a wide spread.
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double floor = 1e-8 * sv[0];
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) inv[i] = sv[i] > floor ? 1.0 / sv[i] : 0.0;
    const Eigen::VectorXd fit = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * b;
    const Eigen::MatrixXd vi = svd.matrixV() * inv.asDiagonal();
    for (Eigen::Index i = 0; i < count; ++i) {
      const bool resolved = (svd.matrixV().row(i).cwiseAbs().array() * (inv.array() == 0.0).cast<double>().transpose()).maxCoeff() < 1e-6;
      spread[i] = resolved ? vi.row(i).norm() : std::numeric_limits<double>::infinity();
      observed[i] = std::min(observed[i], std::abs(fit[i]));
    }
  }

  double all_noise_so_far = 1.0;
  for (Eigen::Index i = 0; i < count; ++i) {
    const Peak& pk = peaks.peaks[static_cast<std::size_t>(i)];
    const double p_noise = tail_probability(observed[i], spread[i], phi.cols());
    const double p_true = all_noise_so_far * (1.0 - p_noise);
    if (p_true >= threshold) return {phi.grid().distance(pk.index), true, p_true, pk.index};
    all_noise_so_far *= p_noise;
  }
  return DepthEstimate::invalid();
}

}  // namespace sra
