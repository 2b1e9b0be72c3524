#include "sra/baselines.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sra {

Baselines::Baselines(DictionaryMatrix phi, std::optional<NoiseModel> noise) : phi_(std::move(phi)) {
  if (noise) {
    if (noise->channels() != phi_.rows()) throw std::invalid_argument("Baselines: noise channel count");
    weights_ = noise->inverse_sqrt();
  } else {
    weights_ = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(phi_.rows()));
  }
  whitened_ = weights_.asDiagonal() * phi_.entries();
  gram_ = whitened_.transpose() * whitened_;
}

Eigen::VectorXd Baselines::whiten(const MeasurementVector& v) const {
  if (static_cast<std::size_t>(v.real_view().size()) != phi_.rows()) {
    throw std::invalid_argument("Baselines: measurement length does not match the dictionary");
  }
  if (v.is_zero()) throw std::invalid_argument("Baselines: zero measurement");
  return weights_.cwiseProduct(v.real_view());
}

TwoPathFit Baselines::two_path(const MeasurementVector& v) const {
  const Eigen::VectorXd b = whiten(v);
  const Eigen::VectorXd c = whitened_.transpose() * b;
  const double bb = b.squaredNorm();
  const Eigen::Index n = c.size();
  if (n < 2) throw std::invalid_argument("ml_two_path: grid needs at least two points");

  // Explained energy of the best single-column fit, per column.
  Eigen::VectorXd single(n);
  for (Eigen::Index k = 0; k < n; ++k) single[k] = c[k] > 0.0 ? c[k] * c[k] / gram_(k, k) : 0.0;

  double best_gain = -1.0;
  Eigen::Index bi = 0, bj = 1;
  double ba = 0.0, bb2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double gii = gram_(i, i);
    const double ci = c[i];
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double gjj = gram_(j, j);
      const double gij = gram_(i, j);
      const double cj = c[j];
      const double det = gii * gjj - gij * gij;
      double a = 0.0, e = 0.0, gain = 0.0;
      bool interior = false;
      if (det > 1e-12 * gii * gjj) {
        a = (gjj * ci - gij * cj) / det;
        e = (gii * cj - gij * ci) / det;
        if (a > 0.0 && e > 0.0) {
          gain = a * ci + e * cj;
          interior = true;
        }
      }
      if (!interior) {
        // NNLS optimum lies on a face: one of the single-column fits or zero.
        if (single[i] >= single[j]) {
          gain = single[i];
          a = ci > 0.0 ? ci / gii : 0.0;
          e = 0.0;
        } else {
          gain = single[j];
          a = 0.0;
          e = cj / gjj;
        }
      }
      if (gain > best_gain) {
        best_gain = gain;
        bi = i;
        bj = j;
        ba = a;
        bb2 = e;
      }
    }
  }
  TwoPathFit out;
  out.i = static_cast<std::size_t>(bi);
  out.j = static_cast<std::size_t>(bj);
  out.d1 = phi_.grid().distance(out.i);
  out.d2 = phi_.grid().distance(out.j);
  out.x1 = ba;
  out.x2 = bb2;
  out.residual = std::sqrt(std::max(0.0, bb - best_gain));
  return out;
}

SingleFit Baselines::single(const MeasurementVector& v) const {
  const Eigen::VectorXd b = whiten(v);
  const Eigen::VectorXd c = whitened_.transpose() * b;
  double best_gain = 0.0;
  Eigen::Index best = 0;
  double amp = 0.0;
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    if (c[k] <= 0.0) continue;
    const double gain = c[k] * c[k] / gram_(k, k);
    if (gain > best_gain) {
      best_gain = gain;
      best = k;
      amp = c[k] / gram_(k, k);
    }
  }
  SingleFit out;
  out.index = static_cast<std::size_t>(best);
  out.depth = phi_.grid().distance(out.index);
  out.amplitude = amp;
  out.residual = std::sqrt(std::max(0.0, b.squaredNorm() - best_gain));
  return out;
}

TwoPathFit ml_two_path(const MeasurementVector& v, const DictionaryMatrix& phi, std::optional<NoiseModel> noise) {
  return Baselines(phi, std::move(noise)).two_path(v);
}

DepthEstimate opt_single(const MeasurementVector& v, const DictionaryMatrix& phi, std::optional<NoiseModel> noise) {
  const SingleFit fit = Baselines(phi, std::move(noise)).single(v);
  return {fit.depth, true, 1.0, fit.index};
}

}  // namespace sra
