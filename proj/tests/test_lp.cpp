#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "sra/lp.hpp"

using namespace sra;

namespace {

LinearProgram one_var(double c, std::initializer_list<std::pair<double, double>> rows) {
  LinearProgram lp;
  lp.objective = Eigen::VectorXd::Constant(1, c);
  lp.inequality.resize(static_cast<Eigen::Index>(rows.size()), 1);
  lp.bound.resize(static_cast<Eigen::Index>(rows.size()));
  Eigen::Index i = 0;
  for (auto [a, b] : rows) {
    lp.inequality(i, 0) = a;
    lp.bound[i++] = b;
  }
  return lp;
}

// Bounded random LP: r random rows plus a cap on sum(x).
LinearProgram random_lp(std::mt19937_64& rng, int r, int n) {
  std::normal_distribution<double> g;
  LinearProgram lp;
  lp.objective.resize(n);
  for (int j = 0; j < n; ++j) lp.objective[j] = g(rng);
  lp.inequality.resize(r + 1, n);
  lp.bound.resize(r + 1);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < n; ++j) lp.inequality(i, j) = g(rng);
    lp.bound[i] = g(rng) + 0.5;
  }
  lp.inequality.row(r).setOnes();
  lp.bound[r] = 10.0;
  return lp;
}

}  // namespace

TEST_CASE("trivial programs") {
  SUBCASE("lower bound through a negated row") {
    const LpSolution s = solve_lp(one_var(1.0, {{-1.0, -2.0}}));
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.x[0] == doctest::Approx(2.0));
    CHECK(s.objective_value == doctest::Approx(2.0));
  }
  SUBCASE("empty region") {
    CHECK(solve_lp(one_var(1.0, {{1.0, -1.0}})).status == LpStatus::infeasible);
  }
  SUBCASE("unbounded") {
    CHECK(solve_lp(one_var(-1.0, {{-1.0, 3.0}})).status == LpStatus::unbounded);
  }
  SUBCASE("origin optimal") {
    const LpSolution s = solve_lp(one_var(1.0, {{1.0, 4.0}}));
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.x[0] == 0.0);
  }
  SUBCASE("iteration limit is reported") {
    std::mt19937_64 rng(3);
    LpOptions opt;
    opt.max_iter = 1;
    const LpSolution s = solve_lp(random_lp(rng, 6, 20), opt);
    CHECK((s.status == LpStatus::iteration_limit || s.status == LpStatus::optimal));
  }
}

TEST_CASE("malformed programs are rejected") {
  LinearProgram lp = one_var(1.0, {{1.0, 1.0}});
  lp.bound.resize(2);
  CHECK_THROWS_AS(solve_lp(lp), std::invalid_argument);
  lp = one_var(1.0, {{std::nan(""), 1.0}});
  CHECK_THROWS_AS(solve_lp(lp), std::invalid_argument);
}

TEST_CASE("random 6x20 programs match vertex enumeration") {
  std::mt19937_64 rng(42);
  int optimal = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const LinearProgram lp = random_lp(rng, 6, 20);
    const oracle::VertexResult ref = oracle::vertex_enumeration(lp.objective, lp.inequality, lp.bound);
    const LpSolution s = solve_lp(lp);
    if (!ref.feasible) {
      CHECK(s.status == LpStatus::infeasible);
      continue;
    }
    REQUIRE(s.status == LpStatus::optimal);
    ++optimal;
    CHECK(std::abs(s.objective_value - ref.value) <= 1e-6 * (1.0 + std::abs(ref.value)));
    const double tol = 1e-8 * (1.0 + lp.bound.cwiseAbs().maxCoeff());
    CHECK(((lp.inequality * s.x - lp.bound).maxCoeff() <= tol));
    CHECK(s.x.minCoeff() >= -tol);
  }
  CHECK(optimal > 10);
}

TEST_CASE("first-order optimality probe") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const LinearProgram lp = random_lp(rng, 8, 15);
    const LpSolution s = solve_lp(lp);
    if (s.status != LpStatus::optimal) continue;
    // Move along each coordinate as far as feasibility allows (small step).
    for (Eigen::Index j = 0; j < lp.objective.size(); ++j) {
      for (double step : {1e-4, -1e-4}) {
        Eigen::VectorXd x = s.x;
        x[j] += step;
        if (x[j] < 0.0) continue;
        if ((lp.inequality * x - lp.bound).maxCoeff() > 1e-9) continue;
        CHECK(lp.objective.dot(x) >= s.objective_value - 1e-8);
      }
    }
  }
}

TEST_CASE("positive homogeneity in the bound") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  // min 1^T x s.t. A x <= b with b = A x0 + slack, so the problem is feasible.
  Eigen::MatrixXd a(12, 30);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(30);
  x0[3] = 1.0;
  x0[17] = 2.0;
  LinearProgram lp;
  lp.objective = Eigen::VectorXd::Ones(30);
  lp.inequality = a;
  lp.bound = a * x0 + Eigen::VectorXd::Constant(12, 0.1);
  const LpSolution base = solve_lp(lp);
  REQUIRE(base.status == LpStatus::optimal);
  for (double s : {0.01, 3.0, 250.0}) {
    LinearProgram scaled = lp;
    scaled.bound *= s;
    const LpSolution r = solve_lp(scaled);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective_value == doctest::Approx(s * base.objective_value).epsilon(1e-6));
  }
}

TEST_CASE("degenerate program terminates") {
  // Many redundant tight constraints at the optimum.
  LinearProgram lp;
  lp.objective = -Eigen::VectorXd::Ones(3);
  lp.inequality.resize(9, 3);
  lp.bound.resize(9);
  int row = 0;
  for (int i = 0; i < 3; ++i) {
    for (double s : {1.0, 2.0, 3.0}) {
      lp.inequality.row(row) = Eigen::RowVector3d::Ones() * s;
      lp.inequality(row, i) += s;
      lp.bound[row++] = 4.0 * s;
    }
  }
  const LpSolution s = solve_lp(lp);
  REQUIRE(s.status == LpStatus::optimal);
  const oracle::VertexResult ref = oracle::vertex_enumeration(lp.objective, lp.inequality, lp.bound);
  CHECK(s.objective_value == doctest::Approx(ref.value));
}

TEST_CASE("solver is deterministic") {
  std::mt19937_64 rng(99);
  const LinearProgram lp = random_lp(rng, 20, 60);
  const LpSolution a = solve_lp(lp);
  const LpSolution b = solve_lp(lp);
  CHECK(a.status == b.status);
  CHECK(a.x == b.x);
  CHECK(a.iterations == b.iterations);
}
