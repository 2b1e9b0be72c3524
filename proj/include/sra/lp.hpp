#pragma once

// Dense two-phase simplex for small linear programs of the form
//
//   minimize  c^T x   subject to  A x <= b,  x >= 0.
//
// The solver is deterministic: pivot choices break ties on variable index,
// and a run of degenerate pivots switches to Bland's rule until progress
// resumes.

#include <optional>
#include <string_view>

#include <Eigen/Dense>

namespace sra {

struct LinearProgram {
  Eigen::VectorXd objective;   ///< c, length n
  Eigen::MatrixXd inequality;  ///< A, r x n
  Eigen::VectorXd bound;       ///< b, length r

  std::size_t variables() const { return static_cast<std::size_t>(objective.size()); }
  std::size_t constraints() const { return static_cast<std::size_t>(bound.size()); }

  /// Throws std::invalid_argument on inconsistent shapes or non-finite data.
  void validate() const;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

std::string_view to_string(LpStatus status);

struct LpSolution {
  Eigen::VectorXd x;
  double objective_value = 0.0;
  LpStatus status = LpStatus::iteration_limit;
  int iterations = 0;
};

/// Unset fields take their defaults: tol_feas = 1e-8 (1 + |b|_inf),
/// tol_opt = 1e-8 and max_iter = 10 (n + r).
struct LpOptions {
  std::optional<double> tol_feas;
  std::optional<double> tol_opt;
  std::optional<int> max_iter;
};

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options = {});

}  // namespace sra
