// Reference solver for the quadratically constrained L1 problem.
//
// For a multiplier mu > 0 the penalized problem
//   min_{x >= 0} 1^T x + (mu / 2) |A x - b|^2,   A = W Phi, b = W v,
// has the dual
//   min_y 1/2 |y + mu b|^2   s.t.  a_j^T y >= -1  for every column a_j,
// a strictly convex QP in 2m variables. It is solved exactly with the
// Goldfarb-Idnani dual active-set method; the constraint multipliers u give
// x = u / mu and the residual is |y| / mu. The residual is nonincreasing in
// mu, so mu is bisected until the residual meets the budget.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sra/solver.hpp"

namespace sra {
namespace {

struct PenalizedSolution {
  Eigen::VectorXd x;
  double residual = 0.0;
};

class DualActiveSet {
public:
  explicit DualActiveSet(const Eigen::MatrixXd& a)
      : a_(a), dim_(a.rows()), max_col_norm_(a.colwise().norm().maxCoeff()) {}

  // Projects `target` onto {y : a_j^T y >= -1}. Returns the multipliers
  // (length n, zero off the active set) and the projected point.
  void solve(const Eigen::VectorXd& target, Eigen::VectorXd& y, Eigen::VectorXd& multipliers) const {
    const Eigen::Index n = a_.cols();
    y = target;
    std::vector<Eigen::Index> active;
    std::vector<double> u;
    const int max_steps = 50 * static_cast<int>(n + dim_);
    int steps = 0;

    for (;;) {
      const Eigen::VectorXd slack = (a_.transpose() * y).array() + 1.0;
      Eigen::Index p = 0;
      const double worst = slack.minCoeff(&p);
      // Roundoff in a_j^T y grows with |y|.
      const double tol = kFeasTol * (1.0 + y.norm() * max_col_norm_);
      if (worst >= -tol) break;

      double s_p = worst;
      double u_p = 0.0;
      for (;;) {
        if (++steps > max_steps) throw SolverError("reference solver: active-set iteration limit");
        const auto q = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(dim_, dim_);
        Eigen::MatrixXd r_factor;
        if (q > 0) {
          Eigen::MatrixXd nmat(dim_, q);
          for (Eigen::Index i = 0; i < q; ++i) nmat.col(i) = a_.col(active[static_cast<std::size_t>(i)]);
          Eigen::HouseholderQR<Eigen::MatrixXd> qr(nmat);
          basis = qr.householderQ();
          r_factor = qr.matrixQR().topLeftCorner(q, q).triangularView<Eigen::Upper>();
        }
        const Eigen::VectorXd d = basis.transpose() * a_.col(p);
        const Eigen::VectorXd z = basis.rightCols(dim_ - q) * d.tail(dim_ - q);
        Eigen::VectorXd r;
        if (q > 0) r = r_factor.triangularView<Eigen::Upper>().solve(d.head(q));

        double t1 = std::numeric_limits<double>::infinity();
        Eigen::Index drop = -1;
        for (Eigen::Index i = 0; i < q; ++i) {
          if (r[i] > kZeroTol) {
            const double ratio = u[static_cast<std::size_t>(i)] / r[i];
            if (ratio < t1) {
              t1 = ratio;
              drop = i;
            }
          }
        }
        const double zz = z.dot(a_.col(p));
        const double t2 = zz > kZeroTol * a_.col(p).squaredNorm() ? -s_p / zz
                                                                  : std::numeric_limits<double>::infinity();
        const double t = std::min(t1, t2);
        if (!std::isfinite(t)) throw SolverError("reference solver: dual problem is infeasible");

        for (Eigen::Index i = 0; i < q; ++i) u[static_cast<std::size_t>(i)] -= t * r[i];
        u_p += t;
        if (std::isfinite(t2)) y += t * z;

        if (t == t2) {
          active.push_back(p);
          u.push_back(u_p);
          break;
        }
        active.erase(active.begin() + drop);
        u.erase(u.begin() + drop);
        s_p = a_.col(p).dot(y) + 1.0;
        if (s_p >= -tol) {
          // Dropping alone restored feasibility of p.
          if (u_p > 0.0) {
            active.push_back(p);
            u.push_back(u_p);
          }
          break;
        }
      }
    }

    multipliers = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < active.size(); ++i) multipliers[active[i]] = std::max(0.0, u[i]);
  }

private:
  static constexpr double kFeasTol = 1e-11;
  static constexpr double kZeroTol = 1e-13;
  const Eigen::MatrixXd& a_;
  Eigen::Index dim_;
  double max_col_norm_;
};

}  // namespace

Backscattering solve_sra_l2_reference(const MeasurementVector& v, const DictionaryMatrix& phi,
                                      const SraConfig& cfg, const ReferenceOptions& options) {
  cfg.validate();
  if (static_cast<std::size_t>(v.real_view().size()) != phi.rows()) {
    throw std::invalid_argument("solve_sra_l2_reference: measurement length does not match the dictionary");
  }
  const double v_norm = v.norm_l2();
  if (!(v_norm > 0.0)) throw InvalidPixel("solve_sra_l2_reference: zero measurement");

  const Eigen::VectorXd w = cfg.whitening();
  const Eigen::MatrixXd a = w.asDiagonal() * phi.entries();
  const Eigen::VectorXd b = w.cwiseProduct(v.real_view());

  const double fixed = cfg.budget(v_norm, 0.0);
  double allowance = cfg.noiseless() ? 0.0 : cfg.noise_allowance * cfg.expected_noise_l2();
  if (fixed + allowance == 0.0) {
    // Equality-constrained basis pursuit as a two-sided LP.
    LinearProgram lp;
    lp.objective = Eigen::VectorXd::Ones(a.cols());
    lp.inequality.resize(2 * a.rows(), a.cols());
    lp.inequality << a, -a;
    lp.bound.resize(2 * b.size());
    lp.bound << b, -b;
    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal) {
      throw SolverError("solve_sra_l2_reference: equality problem finished with status " +
                        std::string(to_string(sol.status)));
    }
    return Backscattering(phi.grid(), sol.x);
  }
  const DualActiveSet dual(a);
  int evaluations = 0;
  auto evaluate = [&](double mu) {
    if (++evaluations > options.max_iterations) {
      throw SolverError("solve_sra_l2_reference: no convergence within " +
                        std::to_string(options.max_iterations) + " iterations");
    }
    Eigen::VectorXd y, u;
    dual.solve(-mu * b, y, u);
    return PenalizedSolution{u / mu, y.norm() / mu};
  };

  // Same escalation as the LP path: noise can leave v outside the cone.
  double budget = fixed + allowance;
  double lo = 0.0;
  double hi = 0.0;
  PenalizedSolution at_hi;
  for (int round = 0;; ++round) {
    if (b.norm() <= budget) return Backscattering::zero(phi.grid());
    lo = 0.0;
    hi = 1.0 / budget;
    at_hi = evaluate(hi);
    while (at_hi.residual > budget && hi < 1e10 / budget) {
      lo = hi;
      hi *= 8.0;
      at_hi = evaluate(hi);
    }
    if (at_hi.residual <= budget) break;
    if (round >= cfg.max_escalations || allowance == 0.0) {
      throw SolverError("solve_sra_l2_reference: residual budget cannot be met");
    }
    allowance *= 2.0;
    budget = fixed + allowance;
  }
  if (lo == 0.0) {
    lo = hi / 4.0;
    while (evaluate(lo).residual <= budget) {
      hi = lo;
      lo /= 4.0;
    }
    at_hi = evaluate(hi);
  }
  while (hi / lo - 1.0 > options.relative_tolerance) {
    const double mid = std::sqrt(lo * hi);
    if (mid <= lo || mid >= hi) break;
    PenalizedSolution at_mid = evaluate(mid);
    if (at_mid.residual > budget) {
      lo = mid;
    } else {
      hi = mid;
      at_hi = std::move(at_mid);
    }
  }
  return Backscattering(phi.grid(), at_hi.x);
}

}  // namespace sra
