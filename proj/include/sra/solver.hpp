#pragma once

// Sparse reflections analysis: recover a nonnegative, sparse backscattering
// from a measurement by L1 minimization under a residual budget.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sra/lp.hpp"
#include "sra/measurement_model.hpp"

namespace sra {

enum class SraVariant { l1l1, l1l2_reference };

/// Residual budget and noise covariance of the SRA problem.
///
/// The whitened residual |C^{-1/2}(Phi x - v)| is bounded by
///   epsilon |v| + noise_allowance * E|C^{-1/2} eta|,
/// with C in the measurement's own units and eta ~ N(0, C). The second term
/// keeps measurements pushed outside the cone of Phi by noise feasible. A zero
/// covariance is the noiseless limit: the budget is zero and v must be matched
/// exactly.
struct SraConfig {
  double epsilon = 0.05;
  NoiseModel noise = NoiseModel::white(3, 1.0);
  SraVariant variant = SraVariant::l1l1;
  double noise_allowance = 0.5;
  /// Times the allowance is doubled when the LP is infeasible.
  int max_escalations = 4;

  /// C = I for `frequency_count` frequencies.
  static SraConfig defaults(std::size_t frequency_count, double epsilon = 0.05);
  /// C = sigma^2 I; sigma = 0 selects the noiseless limit.
  static SraConfig white(std::size_t frequency_count, double sigma, double epsilon = 0.05);

  /// Throws std::invalid_argument unless 0 <= epsilon < 1, the allowance is
  /// nonnegative and C is paired and either positive definite or zero.
  void validate() const;

  bool noiseless() const { return noise.variances().isZero(0.0); }
  /// Diagonal of C^{-1/2}, or ones in the noiseless limit.
  Eigen::VectorXd whitening() const;
  /// Residual budget for a measurement of the given norm, where `norm` and
  /// `noise_norm` are the L1 (L1L1) or L2 (reference) norms of v and of the
  /// expected whitened noise.
  double budget(double norm, double noise_norm) const {
    return noiseless() ? 0.0 : epsilon * norm + noise_allowance * noise_norm;
  }
  /// E|eta|_1 and sqrt(E|eta|_2^2) for whitened noise in 2m channels.
  double expected_noise_l1() const;
  double expected_noise_l2() const;
};

/// Thrown when a measurement cannot be processed (zero vector).
class InvalidPixel : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Thrown when the solver fails on an input it should handle.
class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// All sign patterns {-1,+1}^l, one per row, in binary counting order
/// (bit i of the row index set means +1 in column l-1-i).
struct SignConstraintMatrix {
  Eigen::MatrixXd q;
};

SignConstraintMatrix build_q_matrix(int l);

/// min 1^T x  s.t.  Q W Phi x <= Q W v + budget 1,  x >= 0,
/// with W = C^{-1/2}. Throws InvalidPixel for a zero measurement.
LinearProgram assemble_l1l1(const MeasurementVector& v, const DictionaryMatrix& phi, const SraConfig& cfg);

/// Reusable L1L1 solver: the constraint matrix Q W Phi is formed once and
/// only the right-hand side depends on the measurement. solve() is const and
/// safe to call concurrently.
class SraSolver {
public:
  SraSolver(DictionaryMatrix phi, SraConfig cfg);

  const DictionaryMatrix& dictionary() const { return phi_; }
  const SraConfig& config() const { return cfg_; }

  struct Result {
    Backscattering x;
    double budget = 0.0;  ///< residual budget the solution satisfies
    int escalations = 0;
    int iterations = 0;
  };

  LinearProgram assemble(const MeasurementVector& v) const { return assemble(v, budget_l1(v)); }
  LinearProgram assemble(const MeasurementVector& v, double budget) const;

  /// Noise can push v outside the cone spanned by Phi; when the LP is
  /// infeasible the noise allowance is doubled, up to max_escalations times.
  Result solve_detailed(const MeasurementVector& v) const;
  Backscattering solve(const MeasurementVector& v) const { return solve_detailed(v).x; }

  /// |W (Phi x - v)|_1 and its nominal budget.
  double weighted_residual_l1(const Backscattering& x, const MeasurementVector& v) const;
  double budget_l1(const MeasurementVector& v) const { return cfg_.budget(v.norm_l1(), cfg_.expected_noise_l1()); }

private:
  DictionaryMatrix phi_;
  SraConfig cfg_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd q_;
  Eigen::MatrixXd constraint_;  // Q W Phi
};

/// Solves the L1L1 problem as a linear program. Throws InvalidPixel for a
/// zero measurement and SolverError if the LP is not solved to optimality.
Backscattering solve_sra(const MeasurementVector& v, const DictionaryMatrix& phi, const SraConfig& cfg);

struct ReferenceOptions {
  int max_iterations = 500;
  double relative_tolerance = 1e-12;
};

/// Quadratically constrained problem
///   min 1^T x  s.t.  |C^{-1/2} (Phi x - v)|_2 <= budget,  x >= 0,
/// solved through its Lagrangian: for a multiplier mu the penalized problem is
/// solved exactly by a dual active-set method, and mu is bisected until the
/// residual meets the budget. Validation path only.
Backscattering solve_sra_l2_reference(const MeasurementVector& v, const DictionaryMatrix& phi,
                                      const SraConfig& cfg, const ReferenceOptions& options = {});

/// Exhaustive sparsest solution under the quadratic residual budget, over
/// supports of size <= 3 on grids of at most 25 points. Test oracle.
Backscattering l0_oracle(const MeasurementVector& v, const DictionaryMatrix& phi, const SraConfig& cfg);

}  // namespace sra
