#include "sra/canonical.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace sra {

namespace {

std::complex<double> shift_factor(double s, double delta, double lambda) {
  return std::polar(s, -2.0 * std::numbers::pi * delta / lambda);
}

SraConfig solver_config(const CanonicalPipelineConfig& cfg) {
  SraConfig out = SraConfig::white(cfg.freq.size(), cfg.noise_sigma, cfg.epsilon);
  out.noise_allowance = cfg.noise_allowance;
  return out;
}

}  // namespace

MeasurementVector f_transform(const MeasurementVector& v, double s, double delta, const FrequencyConfig& freq) {
  if (!(s > 0.0)) throw std::invalid_argument("f_transform: scale must be positive");
  if (v.frequency_count() != freq.size()) throw std::invalid_argument("f_transform: frequency count mismatch");
  std::vector<std::complex<double>> out = v.complex_view();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= shift_factor(s, delta, freq.half_wavelength(k));
  return MeasurementVector::from_complex(out);
}

DictionaryMatrix f_transform(const DictionaryMatrix& phi, double s, double delta) {
  if (!(s > 0.0)) throw std::invalid_argument("f_transform: scale must be positive");
  const auto m = static_cast<Eigen::Index>(phi.frequencies().size());
  Eigen::MatrixXd out(phi.entries().rows(), phi.entries().cols());
  for (Eigen::Index k = 0; k < m; ++k) {
    const std::complex<double> f = shift_factor(s, delta, phi.frequencies().half_wavelength(static_cast<std::size_t>(k)));
    const auto re = phi.entries().row(k);
    const auto im = phi.entries().row(k + m);
    out.row(k) = f.real() * re - f.imag() * im;
    out.row(k + m) = f.real() * im + f.imag() * re;
  }
  return DictionaryMatrix(phi.grid(), phi.frequencies(), std::move(out));
}

CanonicalForm to_canonical(const MeasurementVector& v, std::size_t k, const FrequencyConfig& freq) {
  const std::size_t m = v.frequency_count();
  if (m != freq.size()) throw std::invalid_argument("to_canonical: frequency count mismatch");
  if (k >= m) throw std::out_of_range("to_canonical: reference index");
  const double norm = v.norm_l2();
  const std::complex<double> ref = v.component(k);
  if (!(norm > 0.0) || ref == 0.0) throw InvalidPixel("to_canonical: zero measurement or reference component");

  double phase = std::arg(ref);
  if (phase < 0.0) phase += 2.0 * std::numbers::pi;
  if (phase >= 2.0 * std::numbers::pi) phase = 0.0;

  CanonicalForm out;
  out.k = k;
  out.scale = 1.0 / norm;
  out.delta = freq.half_wavelength(k) * phase / (2.0 * std::numbers::pi);
  if (out.delta >= freq.half_wavelength(k)) out.delta = 0.0;

  const std::vector<std::complex<double>> rho = f_transform(v, out.scale, out.delta, freq).complex_view();
  out.reduced.resize(2 * (m - 1));
  std::size_t slot = 0;
  for (std::size_t j = 0; j < m; ++j) {
    if (j == k) continue;
    out.reduced[slot] = rho[j].real();
    out.reduced[slot + m - 1] = rho[j].imag();
    ++slot;
  }
  return out;
}

MeasurementVector from_canonical(const CanonicalForm& c) {
  if (c.reduced.size() % 2 != 0) throw std::invalid_argument("from_canonical: odd reduced length");
  const std::size_t others = c.reduced.size() / 2;
  const std::size_t m = others + 1;
  if (c.k >= m) throw std::out_of_range("from_canonical: reference index");

  double sum = 0.0;
  for (double r : c.reduced) sum += r * r;
  if (sum > 1.0 + 1e-9) throw std::invalid_argument("from_canonical: coordinates exceed the unit ball");
  const double ref = std::sqrt(std::max(0.0, 1.0 - sum));

  std::vector<std::complex<double>> values(m);
  std::size_t slot = 0;
  for (std::size_t j = 0; j < m; ++j) {
    if (j == c.k) {
      values[j] = ref;
    } else {
      values[j] = {c.reduced[slot], c.reduced[slot + others]};
      ++slot;
    }
  }
  return MeasurementVector::from_complex(values);
}

DistanceGrid extend_grid(const DistanceGrid& grid, const FrequencyConfig& freq, std::size_t k) {
  return DistanceGrid(grid.d_min() - freq.half_wavelength(k), grid.d_max(), grid.step());
}

CanonicalPipelineConfig CanonicalPipelineConfig::defaults() {
  CanonicalPipelineConfig cfg;
  cfg.k = cfg.freq.shortest_half_wavelength_index();
  return cfg;
}

CanonicalPipeline::CanonicalPipeline(CanonicalPipelineConfig cfg)
    : cfg_(std::move(cfg)),
      solver_(build_phi(extend_grid(cfg_.grid, cfg_.freq, cfg_.k), cfg_.freq), solver_config(cfg_)),
      noise_(NoiseModel::white(cfg_.freq.size(), cfg_.noise_sigma)) {
  if (cfg_.k >= cfg_.freq.size()) throw std::invalid_argument("CanonicalPipeline: reference index out of range");
  if (!(cfg_.noise_sigma > 0.0)) throw std::invalid_argument("CanonicalPipeline: noise sigma must be positive");
}

DepthEstimate CanonicalPipeline::estimate_canonical(const MeasurementVector& rho) const {
  Backscattering x = Backscattering::zero(extended_grid());
  try {
    x = solver_.solve(rho);
  } catch (const SolverError&) {
    return DepthEstimate::invalid();
  } catch (const InvalidPixel&) {
    return DepthEstimate::invalid();
  }
  return invalidate(find_peaks(x, cfg_.peak_threshold), rho, solver_.dictionary(), noise_,
                    cfg_.confidence_threshold);
}

DepthEstimate CanonicalPipeline::estimate(const MeasurementVector& v) const {
  CanonicalForm c;
  try {
    c = to_canonical(v, cfg_.k, cfg_.freq);
  } catch (const InvalidPixel&) {
    return DepthEstimate::invalid();
  }
  DepthEstimate est = estimate_canonical(from_canonical(c));
  if (!est.valid) return est;
  est.depth += c.delta;
  const double tol = 1e-9 * cfg_.grid.step();
  if (est.depth < cfg_.grid.d_min() - tol || est.depth > cfg_.grid.d_max() + tol) return DepthEstimate::invalid();
  return est;
}

}  // namespace sra
