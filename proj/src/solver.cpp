#include "sra/solver.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace sra {

SraConfig SraConfig::defaults(std::size_t frequency_count, double epsilon) {
  SraConfig cfg;
  cfg.epsilon = epsilon;
  cfg.noise = NoiseModel::white(frequency_count, 1.0);
  return cfg;
}

SraConfig SraConfig::white(std::size_t frequency_count, double sigma, double epsilon) {
  SraConfig cfg;
  cfg.epsilon = epsilon;
  cfg.noise = NoiseModel::white(frequency_count, sigma);
  return cfg;
}

void SraConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("SraConfig: epsilon must lie in [0, 1), got " + std::to_string(epsilon));
  }
  if (!noise.positive_definite() && !noiseless()) {
    throw std::invalid_argument("SraConfig: covariance must be positive definite or zero");
  }
  if (!noise.paired()) throw std::invalid_argument("SraConfig: covariance must be paired");
  if (max_escalations < 0) throw std::invalid_argument("SraConfig: max_escalations must be nonnegative");
  if (!(noise_allowance >= 0.0) || !std::isfinite(noise_allowance)) {
    throw std::invalid_argument("SraConfig: noise allowance must be finite and nonnegative");
  }
}

double SraConfig::expected_noise_l1() const {
  return static_cast<double>(noise.channels()) * std::sqrt(2.0 / std::numbers::pi);
}

double SraConfig::expected_noise_l2() const { return std::sqrt(static_cast<double>(noise.channels())); }

Eigen::VectorXd SraConfig::whitening() const {
  if (noiseless()) return Eigen::VectorXd::Ones(noise.variances().size());
  return noise.inverse_sqrt();
}

SignConstraintMatrix build_q_matrix(int l) {
  if (l < 1 || l > 16) throw std::invalid_argument("build_q_matrix: l must lie in [1, 16]");
  const Eigen::Index rows = Eigen::Index{1} << l;
  SignConstraintMatrix out{Eigen::MatrixXd(rows, l)};
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (int c = 0; c < l; ++c) {
      out.q(i, c) = ((i >> (l - 1 - c)) & 1) ? 1.0 : -1.0;
    }
  }
  return out;
}

SraSolver::SraSolver(DictionaryMatrix phi, SraConfig cfg) : phi_(std::move(phi)), cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.noise.channels() != phi_.rows()) {
    throw std::invalid_argument("SraSolver: weighting has " + std::to_string(cfg_.noise.channels()) +
                                " channels, dictionary has " + std::to_string(phi_.rows()) + " rows");
  }
  weights_ = cfg_.whitening();
  q_ = build_q_matrix(static_cast<int>(phi_.rows())).q;
  constraint_ = q_ * (weights_.asDiagonal() * phi_.entries());
}

LinearProgram SraSolver::assemble(const MeasurementVector& v, double budget) const {
  if (static_cast<std::size_t>(v.real_view().size()) != phi_.rows()) {
    throw std::invalid_argument("assemble_l1l1: measurement length does not match the dictionary");
  }
  const double norm1 = v.norm_l1();
  if (!(norm1 > 0.0)) throw InvalidPixel("assemble_l1l1: zero measurement");
  LinearProgram lp;
  lp.objective = Eigen::VectorXd::Ones(constraint_.cols());
  lp.inequality = constraint_;
  lp.bound = q_ * weights_.cwiseProduct(v.real_view()) +
             Eigen::VectorXd::Constant(q_.rows(), budget);
  return lp;
}

SraSolver::Result SraSolver::solve_detailed(const MeasurementVector& v) const {
  LinearProgram lp = assemble(v);
  const double fixed = cfg_.budget(v.norm_l1(), 0.0);
  double allowance = cfg_.noiseless() ? 0.0 : cfg_.noise_allowance * cfg_.expected_noise_l1();
  const Eigen::VectorXd base = lp.bound.array() - (fixed + allowance);
  for (int round = 0;; ++round) {
    const LpSolution sol = solve_lp(lp);
    if (sol.status == LpStatus::optimal) {
      return {Backscattering(phi_.grid(), sol.x), fixed + allowance, round, sol.iterations};
    }
    if (sol.status != LpStatus::infeasible || round >= cfg_.max_escalations || allowance == 0.0) {
      throw SolverError("solve_sra: linear program finished with status " + std::string(to_string(sol.status)));
    }
    allowance *= 2.0;
    lp.bound = base.array() + (fixed + allowance);
  }
}

double SraSolver::weighted_residual_l1(const Backscattering& x, const MeasurementVector& v) const {
  return weights_.cwiseProduct(phi_.entries() * x.amplitudes() - v.real_view()).lpNorm<1>();
}

LinearProgram assemble_l1l1(const MeasurementVector& v, const DictionaryMatrix& phi, const SraConfig& cfg) {
  return SraSolver(phi, cfg).assemble(v);
}

Backscattering solve_sra(const MeasurementVector& v, const DictionaryMatrix& phi, const SraConfig& cfg) {
  return SraSolver(phi, cfg).solve(v);
}

Backscattering l0_oracle(const MeasurementVector& v, const DictionaryMatrix& phi, const SraConfig& cfg) {
  constexpr std::size_t kMaxGrid = 25;
  constexpr int kMaxSupport = 3;
  if (phi.cols() > kMaxGrid) throw std::invalid_argument("l0_oracle: grid larger than 25 points");
  cfg.validate();

  const Eigen::VectorXd w = cfg.whitening();
  const Eigen::MatrixXd a = w.asDiagonal() * phi.entries();
  const Eigen::VectorXd b = w.cwiseProduct(v.real_view());
  const double limit = cfg.budget(v.norm_l2(), cfg.expected_noise_l2());
  // Relative slack so that exact fits pass in the noiseless limit.
  const double budget = limit * limit + 1e-20 * b.squaredNorm();
  const int n = static_cast<int>(phi.cols());

  if (b.squaredNorm() <= budget) return Backscattering::zero(phi.grid());

  for (int size = 1; size <= kMaxSupport; ++size) {
    double best_residual = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best;
    std::vector<int> idx(static_cast<std::size_t>(size));
    // Lexicographic enumeration of size-subsets of {0..n-1}.
    for (int i = 0; i < size; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
      Eigen::MatrixXd cols(a.rows(), size);
      for (int i = 0; i < size; ++i) cols.col(i) = a.col(idx[static_cast<std::size_t>(i)]);
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(cols);
      if (qr.rank() == size) {
        const Eigen::VectorXd coef = qr.solve(b);
        // Nonpositive coefficients mean the NNLS optimum lies on a smaller
        // support, which was already rejected.
        if (coef.minCoeff() > 0.0) {
          const double residual = (cols * coef - b).squaredNorm();
          if (residual <= budget && residual < best_residual) {
            best_residual = residual;
            best = Eigen::VectorXd::Zero(n);
            for (int i = 0; i < size; ++i) best[idx[static_cast<std::size_t>(i)]] = coef[i];
          }
        }
      }
      int pos = size - 1;
      while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - size + pos) --pos;
      if (pos < 0) break;
      ++idx[static_cast<std::size_t>(pos)];
      for (int i = pos + 1; i < size; ++i) idx[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(i - 1)] + 1;
    }
    if (best.size() > 0) return Backscattering(phi.grid(), best);
  }
  throw SolverError("l0_oracle: no support of size <= 3 meets the residual budget");
}

}  // namespace sra
