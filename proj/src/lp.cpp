#include "sra/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sra {

std::string_view to_string(LpStatus status) {
  switch (status) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

void LinearProgram::validate() const {
  if (inequality.rows() != bound.size() || inequality.cols() != objective.size()) {
    throw std::invalid_argument("LinearProgram: inconsistent dimensions");
  }
  if (!objective.allFinite() || !inequality.allFinite() || !bound.allFinite()) {
    throw std::invalid_argument("LinearProgram: non-finite entries");
  }
}

namespace {

constexpr double kPivotTol = 1e-9;
// Consecutive degenerate pivots tolerated before switching to Bland's rule.
constexpr int kDegenerateRunLimit = 32;

// Tableau over r constraint rows, the phase-2 objective row and the phase-1
// objective row. Columns are the n nonbasic slots, one artificial column and
// the right-hand side. Variable ids: structural 0..n-1, slacks n..n+r-1,
// artificial -1.
class Tableau {
public:
  explicit Tableau(const LinearProgram& lp)
      : rows_(static_cast<int>(lp.constraints())),
        cols_(static_cast<int>(lp.variables())),
        width_(cols_ + 2),
        data_(static_cast<std::size_t>(rows_ + 2) * static_cast<std::size_t>(width_), 0.0),
        basic_(static_cast<std::size_t>(rows_)),
        nonbasic_(static_cast<std::size_t>(cols_) + 1) {
    for (int i = 0; i < rows_; ++i) {
      double* row = at(i);
      for (int j = 0; j < cols_; ++j) row[j] = lp.inequality(i, j);
      row[cols_] = -1.0;
      row[cols_ + 1] = lp.bound[i];
      basic_[static_cast<std::size_t>(i)] = cols_ + i;
    }
    for (int j = 0; j < cols_; ++j) {
      at(rows_)[j] = lp.objective[j];
      nonbasic_[static_cast<std::size_t>(j)] = j;
    }
    nonbasic_[static_cast<std::size_t>(cols_)] = -1;
    at(rows_ + 1)[cols_] = 1.0;
  }

  LpStatus run(double tol_feas, double tol_opt, int max_iter, int& iterations) {
    iterations_ = 0;
    max_iter_ = max_iter;
    tol_opt_ = tol_opt;

    int start = 0;
    for (int i = 1; i < rows_; ++i) {
      if (rhs(i) < rhs(start)) start = i;
    }
    if (rows_ > 0 && rhs(start) < -tol_feas) {
      pivot(start, cols_);
      const LpStatus phase1 = simplex(true);
      iterations = iterations_;
      if (phase1 == LpStatus::iteration_limit) return phase1;
      if (at(rows_ + 1)[cols_ + 1] < -tol_feas) return LpStatus::infeasible;
      drive_out_artificial();
    }
    const LpStatus status = simplex(false);
    iterations = iterations_;
    return status;
  }

  Eigen::VectorXd solution() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(cols_);
    for (int i = 0; i < rows_; ++i) {
      const int var = basic_[static_cast<std::size_t>(i)];
      if (var >= 0 && var < cols_) x[var] = rhs(i);
    }
    return x;
  }

private:
  double* at(int i) { return data_.data() + static_cast<std::ptrdiff_t>(i) * width_; }
  const double* at(int i) const { return data_.data() + static_cast<std::ptrdiff_t>(i) * width_; }
  double rhs(int i) const { return at(i)[cols_ + 1]; }

  void pivot(int r, int s) {
    double* prow = at(r);
    const double inv = 1.0 / prow[s];
    for (int i = 0; i < rows_ + 2; ++i) {
      if (i == r) continue;
      double* row = at(i);
      const double factor = row[s] * inv;
      if (std::abs(row[s]) <= 1e-14) {
        row[s] = -factor;
        continue;
      }
      for (int j = 0; j < width_; ++j) row[j] -= prow[j] * factor;
      row[s] = -factor;
    }
    for (int j = 0; j < width_; ++j) prow[j] *= inv;
    prow[s] = inv;
    std::swap(basic_[static_cast<std::size_t>(r)], nonbasic_[static_cast<std::size_t>(s)]);
    ++iterations_;
  }

  // The auxiliary pass drives the artificial variable to zero; the main pass
  // optimizes the real objective with the artificial column frozen.
  LpStatus simplex(bool auxiliary) {
    const int obj = auxiliary ? rows_ + 1 : rows_;
    int degenerate_run = 0;
    bool bland = false;
    for (;;) {
      if (iterations_ >= max_iter_) return LpStatus::iteration_limit;
      const double* orow = at(obj);
      int s = -1;
      for (int j = 0; j <= cols_; ++j) {
        const int var = nonbasic_[static_cast<std::size_t>(j)];
        if (!auxiliary && var == -1) continue;
        if (orow[j] >= -tol_opt_) continue;
        if (s == -1) {
          s = j;
        } else if (bland) {
          if (var < nonbasic_[static_cast<std::size_t>(s)]) s = j;
        } else if (orow[j] < orow[s] ||
                   (orow[j] == orow[s] && var < nonbasic_[static_cast<std::size_t>(s)])) {
          s = j;
        }
      }
      if (s == -1) return LpStatus::optimal;

      int r = -1;
      double best = 0.0;
      for (int i = 0; i < rows_; ++i) {
        const double a = at(i)[s];
        if (a <= kPivotTol) continue;
        const double ratio = std::max(0.0, rhs(i)) / a;
        if (r == -1 || ratio < best ||
            (ratio == best && basic_[static_cast<std::size_t>(i)] < basic_[static_cast<std::size_t>(r)])) {
          r = i;
          best = ratio;
        }
      }
      if (r == -1) return LpStatus::unbounded;

      if (best <= 0.0) {
        if (++degenerate_run > kDegenerateRunLimit) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }
      pivot(r, s);
    }
  }

  void drive_out_artificial() {
    for (int i = 0; i < rows_; ++i) {
      if (basic_[static_cast<std::size_t>(i)] != -1) continue;
      const double* row = at(i);
      int s = -1;
      for (int j = 0; j <= cols_; ++j) {
        if (nonbasic_[static_cast<std::size_t>(j)] == -1) continue;
        if (std::abs(row[j]) > kPivotTol && (s == -1 || std::abs(row[j]) > std::abs(row[s]))) s = j;
      }
      // A row without a usable pivot is redundant; the artificial stays basic
      // at level zero and never re-enters.
      if (s != -1) pivot(i, s);
    }
  }

  int rows_;
  int cols_;
  int width_;
  std::vector<double> data_;
  std::vector<int> basic_;
  std::vector<int> nonbasic_;
  int iterations_ = 0;
  int max_iter_ = 0;
  double tol_opt_ = 0.0;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options) {
  lp.validate();
  const auto n = static_cast<int>(lp.variables());
  const auto r = static_cast<int>(lp.constraints());
  const double b_inf = r > 0 ? lp.bound.lpNorm<Eigen::Infinity>() : 0.0;
  const double tol_feas = options.tol_feas.value_or(1e-8 * (1.0 + b_inf));
  const double tol_opt = options.tol_opt.value_or(1e-8);
  const int max_iter = options.max_iter.value_or(10 * (n + r));

  LpSolution out;
  Tableau tableau(lp);
  out.status = tableau.run(tol_feas, tol_opt, max_iter, out.iterations);
  if (out.status == LpStatus::optimal) {
    out.x = tableau.solution().cwiseMax(0.0);
    out.objective_value = lp.objective.dot(out.x);
  } else {
    out.x = Eigen::VectorXd::Zero(n);
    out.objective_value = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace sra
