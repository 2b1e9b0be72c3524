#include "sra/measurement_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace sra {

FrequencyConfig::FrequencyConfig(std::vector<double> frequencies_hz)
    : frequencies_(std::move(frequencies_hz)) {
  if (frequencies_.empty()) {
    throw std::invalid_argument("FrequencyConfig: at least one frequency is required");
  }
  for (std::size_t i = 0; i < frequencies_.size(); ++i) {
    const double f = frequencies_[i];
    if (!(f > 0.0) || !std::isfinite(f)) {
      throw std::invalid_argument("FrequencyConfig: frequencies must be positive and finite");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (frequencies_[j] == f) {
        throw std::invalid_argument("FrequencyConfig: duplicate frequency " + std::to_string(f));
      }
    }
    half_wavelengths_.push_back(kSpeedOfLight / (2.0 * f));
  }
}

FrequencyConfig FrequencyConfig::default_config() { return FrequencyConfig({120e6, 80e6, 16e6}); }

std::size_t FrequencyConfig::shortest_half_wavelength_index() const {
  return static_cast<std::size_t>(
      std::min_element(half_wavelengths_.begin(), half_wavelengths_.end()) - half_wavelengths_.begin());
}

DistanceGrid::DistanceGrid(double d_min, double d_max, double step)
    : d_min_(d_min), d_max_(d_max), step_(step) {
  if (!std::isfinite(d_min) || !std::isfinite(d_max) || !std::isfinite(step)) {
    throw std::invalid_argument("DistanceGrid: non-finite parameter");
  }
  if (!(d_min < d_max) || !(step > 0.0)) {
    throw std::invalid_argument("DistanceGrid: need d_min < d_max and step > 0");
  }
  // Relative slack so that e.g. (450 - 20) / 1 does not floor to 429.
  const double span = (d_max - d_min) / step;
  count_ = static_cast<std::size_t>(std::floor(span + 1e-9 * std::max(1.0, span))) + 1;
}

DistanceGrid DistanceGrid::default_grid() { return DistanceGrid(20.0, 450.0, 1.0); }

bool DistanceGrid::contains(double d) const {
  const double tol = 1e-9 * step_;
  return d >= d_min_ - tol && d <= d_max_ + tol;
}

std::size_t DistanceGrid::nearest_index(double d) const {
  if (!contains(d)) {
    throw std::out_of_range("DistanceGrid: distance " + std::to_string(d) + " cm outside [" +
                            std::to_string(d_min_) + ", " + std::to_string(d_max_) + "]");
  }
  const double pos = (d - d_min_) / step_;
  const double lower = std::floor(pos);
  // Ties go to the smaller index.
  std::size_t j = static_cast<std::size_t>(std::max(0.0, pos - lower > 0.5 ? lower + 1.0 : lower));
  return std::min(j, count_ - 1);
}

Backscattering::Backscattering(DistanceGrid grid, Eigen::VectorXd amplitudes)
    : grid_(std::move(grid)), amplitudes_(std::move(amplitudes)) {
  if (static_cast<std::size_t>(amplitudes_.size()) != grid_.size()) {
    throw std::invalid_argument("Backscattering: amplitude count does not match the grid");
  }
  for (Eigen::Index j = 0; j < amplitudes_.size(); ++j) {
    if (!(amplitudes_[j] >= 0.0) || !std::isfinite(amplitudes_[j])) {
      throw std::invalid_argument("Backscattering: amplitudes must be finite and nonnegative");
    }
  }
}

Backscattering Backscattering::zero(const DistanceGrid& grid) {
  return Backscattering(grid, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size())));
}

std::vector<std::size_t> Backscattering::support(double threshold) const {
  std::vector<std::size_t> out;
  for (Eigen::Index j = 0; j < amplitudes_.size(); ++j) {
    if (amplitudes_[j] > threshold) out.push_back(static_cast<std::size_t>(j));
  }
  return out;
}

MeasurementVector::MeasurementVector(Eigen::VectorXd real_view) : real_(std::move(real_view)) {
  if (real_.size() == 0 || real_.size() % 2 != 0) {
    throw std::invalid_argument("MeasurementVector: real view must have even, nonzero length");
  }
}

MeasurementVector MeasurementVector::from_complex(std::span<const std::complex<double>> values) {
  const auto m = static_cast<Eigen::Index>(values.size());
  Eigen::VectorXd real(2 * m);
  for (Eigen::Index k = 0; k < m; ++k) {
    real[k] = values[static_cast<std::size_t>(k)].real();
    real[k + m] = values[static_cast<std::size_t>(k)].imag();
  }
  return MeasurementVector(std::move(real));
}

std::vector<std::complex<double>> MeasurementVector::complex_view() const {
  const std::size_t m = frequency_count();
  std::vector<std::complex<double>> out(m);
  for (std::size_t k = 0; k < m; ++k) out[k] = component(k);
  return out;
}

std::complex<double> MeasurementVector::component(std::size_t k) const {
  const auto m = static_cast<Eigen::Index>(frequency_count());
  const auto i = static_cast<Eigen::Index>(k);
  if (i >= m) throw std::out_of_range("MeasurementVector: component index");
  return {real_[i], real_[i + m]};
}

DictionaryMatrix::DictionaryMatrix(DistanceGrid grid, FrequencyConfig freq, Eigen::MatrixXd entries)
    : grid_(std::move(grid)), freq_(std::move(freq)), entries_(std::move(entries)) {
  if (static_cast<std::size_t>(entries_.rows()) != 2 * freq_.size() ||
      static_cast<std::size_t>(entries_.cols()) != grid_.size()) {
    throw std::invalid_argument("DictionaryMatrix: shape must be 2m x n");
  }
}

NoiseModel::NoiseModel(Eigen::VectorXd variances) : variances_(std::move(variances)) {
  if (variances_.size() == 0 || variances_.size() % 2 != 0) {
    throw std::invalid_argument("NoiseModel: need 2m channel variances");
  }
  for (Eigen::Index i = 0; i < variances_.size(); ++i) {
    if (!(variances_[i] >= 0.0) || !std::isfinite(variances_[i])) {
      throw std::invalid_argument("NoiseModel: variances must be finite and nonnegative");
    }
  }
  const Eigen::Index m = variances_.size() / 2;
  paired_ = true;
  for (Eigen::Index j = 0; j < m; ++j) paired_ = paired_ && variances_[j] == variances_[j + m];
}

NoiseModel NoiseModel::white(std::size_t frequency_count, double sigma) {
  return NoiseModel(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(2 * frequency_count), sigma * sigma));
}

Eigen::VectorXd NoiseModel::inverse_sqrt() const {
  if (!positive_definite()) {
    throw std::domain_error("NoiseModel: covariance is singular");
  }
  return variances_.cwiseSqrt().cwiseInverse();
}

DictionaryMatrix build_phi(const DistanceGrid& grid, const FrequencyConfig& freq) {
  const auto m = static_cast<Eigen::Index>(freq.size());
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd phi(2 * m, n);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double lambda = freq.half_wavelength(static_cast<std::size_t>(k));
    for (Eigen::Index j = 0; j < n; ++j) {
      const double angle = 2.0 * std::numbers::pi * grid.distance(static_cast<std::size_t>(j)) / lambda;
      phi(k, j) = std::cos(angle);
      phi(k + m, j) = std::sin(angle);
    }
  }
  return DictionaryMatrix(grid, freq, std::move(phi));
}

MeasurementVector synthesize(const Backscattering& x, const DictionaryMatrix& phi) {
  if (!(x.grid() == phi.grid())) {
    throw std::invalid_argument("synthesize: backscattering grid differs from the dictionary grid");
  }
  return MeasurementVector(phi.entries() * x.amplitudes());
}

Backscattering make_two_path(double d1, double d2, double x1, double x2, const DistanceGrid& grid) {
  if (!(d1 < d2)) throw std::invalid_argument("make_two_path: need d1 < d2");
  if (!(x1 > 0.0) || !(x2 > 0.0)) throw std::invalid_argument("make_two_path: amplitudes must be positive");
  const Spike spikes[] = {{d1, x1}, {d2, x2}};
  return make_multi_path(spikes, grid);
}

Backscattering make_multi_path(std::span<const Spike> spikes, const DistanceGrid& grid) {
  Eigen::VectorXd amps = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  for (const Spike& s : spikes) {
    if (!(s.amplitude > 0.0) || !std::isfinite(s.amplitude)) {
      throw std::invalid_argument("make_multi_path: spike amplitudes must be positive");
    }
    amps[static_cast<Eigen::Index>(grid.nearest_index(s.distance))] += s.amplitude;
  }
  return Backscattering(grid, std::move(amps));
}

Backscattering make_diffuse(Spike direct, const DiffuseLobe& lobe, const DistanceGrid& grid) {
  if (!(lobe.amplitude >= 0.0) || !(lobe.beta > 0.0) || !(lobe.delta >= 0.0) || !std::isfinite(lobe.alpha)) {
    throw std::invalid_argument("make_diffuse: need A >= 0, beta > 0, delta >= 0");
  }
  Eigen::VectorXd amps = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  amps[static_cast<Eigen::Index>(grid.nearest_index(direct.distance))] += direct.amplitude;

  if (lobe.amplitude > 0.0) {
    const double onset = direct.distance + lobe.delta;
    const double mode = std::max(0.0, lobe.alpha / lobe.beta);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double c = grid.distance(j) - onset;
      if (c <= 0.0) continue;
      const double shape = std::pow(c, lobe.alpha) * std::exp(-lobe.beta * c);
      if (!std::isfinite(shape)) {
        throw std::invalid_argument("make_diffuse: lobe parameters produce non-finite values");
      }
      if (c > mode && shape < 1e-6) break;
      amps[static_cast<Eigen::Index>(j)] += lobe.amplitude * shape * grid.step();
    }
  }
  return Backscattering(grid, std::move(amps));
}

MeasurementVector add_noise(const MeasurementVector& v, const NoiseModel& noise, std::uint64_t seed) {
  if (noise.channels() != static_cast<std::size_t>(v.real_view().size())) {
    throw std::invalid_argument("add_noise: channel count mismatch");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd out = v.real_view();
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    // Draw unconditionally so that the stream does not depend on zeros.
    out[i] += std::sqrt(noise.variances()[i]) * normal(rng);
  }
  return MeasurementVector(std::move(out));
}

CompressibilityProfile compressibility_profile(const Backscattering& x) {
  CompressibilityProfile out;
  out.sorted.assign(x.amplitudes().data(), x.amplitudes().data() + x.amplitudes().size());
  std::sort(out.sorted.begin(), out.sorted.end(), std::greater<>());
  if (out.sorted.empty() || out.sorted.front() <= 0.0) {
    throw std::invalid_argument("compressibility_profile: backscattering is all zero");
  }
  const auto nonzero = static_cast<std::size_t>(
      std::find_if(out.sorted.begin(), out.sorted.end(), [](double a) { return a <= 0.0; }) - out.sorted.begin());
  if (nonzero < 2) {
    out.scale = out.sorted.front();
    return out;
  }
  // log x_(i) = log R - (1/r) log i
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < nonzero; ++i) {
    const double lx = std::log(static_cast<double>(i + 1));
    const double ly = std::log(out.sorted[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double count = static_cast<double>(nonzero);
  const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / count;
  out.scale = std::exp(intercept);
  out.exponent = slope < 0.0 ? -1.0 / slope : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace sra
