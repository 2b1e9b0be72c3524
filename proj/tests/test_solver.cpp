#include <doctest.h>

#include <algorithm>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include "oracles.hpp"
#include "sra/depth.hpp"
#include "sra/solver.hpp"

using namespace sra;

namespace {

const DictionaryMatrix& default_phi() {
  static const DictionaryMatrix phi = build_phi(DistanceGrid::default_grid(), FrequencyConfig::default_config());
  return phi;
}

MeasurementVector spikes(const std::vector<Spike>& s, const DictionaryMatrix& phi) {
  return synthesize(make_multi_path(s, phi.grid()), phi);
}

std::vector<std::size_t> peak_indices(const Backscattering& x) {
  std::vector<std::size_t> out;
  for (const Peak& p : find_peaks(x).peaks) out.push_back(p.index);
  return out;
}

}  // namespace

TEST_CASE("sign matrix") {
  const auto q1 = build_q_matrix(1).q;
  REQUIRE(q1.rows() == 2);
  CHECK(q1(0, 0) == -1.0);
  CHECK(q1(1, 0) == 1.0);

  const auto q6 = build_q_matrix(6).q;
  REQUIRE(q6.rows() == 64);
  REQUIRE(q6.cols() == 6);
  std::set<std::string> seen;
  for (Eigen::Index i = 0; i < q6.rows(); ++i) {
    std::string key;
    for (Eigen::Index j = 0; j < 6; ++j) key += q6(i, j) > 0 ? '+' : '-';
    seen.insert(key);
    // Negation is also a row: binary complement of the index.
    CHECK((q6.row(63 - i) + q6.row(i)).isZero());
  }
  CHECK(seen.size() == 64);
  // |y|_1 = max over rows of q^T y.
  const Eigen::VectorXd y = (Eigen::VectorXd(6) << 0.5, -2, 1, 0, -0.25, 3).finished();
  CHECK((q6 * y).maxCoeff() == doctest::Approx(y.lpNorm<1>()));
  CHECK_THROWS_AS(build_q_matrix(0), std::invalid_argument);
  CHECK_THROWS_AS(build_q_matrix(17), std::invalid_argument);
}

TEST_CASE("assemble follows the L1L1 formulas") {
  const DictionaryMatrix& phi = default_phi();
  const MeasurementVector v = spikes({{100, 1}, {200, 2}}, phi);
  SraConfig cfg = SraConfig::defaults(3);
  cfg.noise_allowance = 0.0;
  const LinearProgram lp = assemble_l1l1(v, phi, cfg);
  CHECK(lp.inequality.rows() == 64);
  CHECK(lp.inequality.cols() == 431);
  CHECK(lp.bound.size() == 64);
  const auto q = build_q_matrix(6).q;
  CHECK((lp.inequality - q * phi.entries()).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::VectorXd expect = q * v.real_view() + Eigen::VectorXd::Constant(64, 0.05 * v.norm_l1());
  CHECK((lp.bound - expect).cwiseAbs().maxCoeff() < 1e-12);

  SUBCASE("scaling v scales b") {
    const LinearProgram scaled = assemble_l1l1(v.scaled(3.0), phi, cfg);
    CHECK(scaled.inequality == lp.inequality);
    CHECK((scaled.bound - 3.0 * lp.bound).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("whitening enters both sides") {
    SraConfig white = SraConfig::white(3, 0.5);
    white.noise_allowance = 0.0;
    const LinearProgram w = assemble_l1l1(v, phi, white);
    CHECK((w.inequality - 2.0 * lp.inequality).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("allowance adds the expected whitened noise") {
    SraConfig with = SraConfig::white(3, 0.5);
    const LinearProgram w = assemble_l1l1(v, phi, with);
    const double fixed = 0.05 * v.norm_l1();  // unwhitened |v|_1
    const double allowance = 0.5 * 6.0 * std::sqrt(2.0 / std::numbers::pi);
    CHECK((w.bound - 2.0 * q * v.real_view()).array().mean() == doctest::Approx(fixed + allowance));
  }
  CHECK_THROWS_AS(assemble_l1l1(MeasurementVector(Eigen::VectorXd::Zero(6)), phi, cfg), InvalidPixel);
}

TEST_CASE("config validation") {
  SraConfig cfg = SraConfig::defaults(3);
  CHECK_NOTHROW(cfg.validate());
  cfg.epsilon = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SraConfig::defaults(3);
  Eigen::VectorXd var = Eigen::VectorXd::Ones(6);
  var[2] = 0.0;
  cfg.noise = NoiseModel(var);
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  var[2] = 1.0;
  var[5] = 2.0;
  cfg.noise = NoiseModel(var);
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SraConfig::white(3, 0.0);
  CHECK(cfg.noiseless());
  CHECK_NOTHROW(cfg.validate());
  cfg.noise_allowance = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("noiseless recovery") {
  const DictionaryMatrix& phi = default_phi();
  const SraConfig cfg = SraConfig::white(3, 0.0);
  const SraSolver solver(phi, cfg);
  SUBCASE("single path") {
    for (double d : {20.0, 77.0, 250.0, 450.0}) {
      const Backscattering x = solver.solve(spikes({{d, 1.0}}, phi));
      const DepthEstimate e = extract_depth(x);
      REQUIRE(e.valid);
      CHECK(e.depth == d);
    }
  }
  SUBCASE("three paths are exact") {
    const Backscattering x = solver.solve(spikes({{100, 1}, {200, 2}, {300, 3}}, phi));
    CHECK(peak_indices(x) == std::vector<std::size_t>{80, 180, 280});
    CHECK(x[80] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(x[280] == doctest::Approx(3.0).epsilon(1e-6));
  }
  SUBCASE("light weighting on a clean input is still exact") {
    for (double sigma : {0.005, 0.02}) {
      const SraSolver light(phi, SraConfig::white(3, sigma));
      for (double d : {20.0, 143.0, 450.0}) CHECK(extract_depth(light.solve(spikes({{d, 1.0}}, phi))).depth == d);
    }
  }
}

TEST_CASE("three paths at SNR 5 keep their peaks close") {
  const DictionaryMatrix& phi = default_phi();
  const Backscattering truth = make_multi_path(std::vector<Spike>{{100, 1}, {200, 2}, {300, 3}}, phi.grid());
  const MeasurementVector clean = synthesize(truth, phi);
  const double sigma = 1.0 / (std::sqrt(6.0) * 5.0);
  const SraSolver solver(phi, SraConfig::white(3, sigma));
  std::vector<double> first;
  for (std::uint64_t t = 0; t < 60; ++t) {
    const Backscattering x = solver.solve(add_noise(clean, NoiseModel::white(3, sigma), 1000 + t));
    const DepthEstimate e = extract_depth(x);
    REQUIRE(e.valid);
    first.push_back(std::abs(e.depth - 100.0));
  }
  std::nth_element(first.begin(), first.begin() + 30, first.end());
  CHECK(first[30] <= 12.0);
}

TEST_CASE("feasibility holds on every solve") {
  const DictionaryMatrix& phi = default_phi();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(20, 450), a(0.2, 3.0), s(0.005, 0.2);
  for (int t = 0; t < 40; ++t) {
    const MeasurementVector clean = spikes({{d(rng), a(rng)}, {d(rng), a(rng)}}, phi);
    const double sigma = s(rng);
    const SraSolver solver(phi, SraConfig::white(3, sigma));
    const MeasurementVector v = add_noise(clean, NoiseModel::white(3, sigma), static_cast<std::uint64_t>(t));
    const SraSolver::Result r = solver.solve_detailed(v);
    CHECK(r.x.amplitudes().minCoeff() >= -1e-9);
    CHECK(solver.weighted_residual_l1(r.x, v) <= r.budget * (1.0 + 1e-7) + 1e-9);
    CHECK(r.budget >= solver.budget_l1(v));
  }
}

TEST_CASE("escalation recovers from an infeasible budget") {
  const DictionaryMatrix& phi = default_phi();
  // The 16 MHz sine row is nonnegative over the whole grid, so a negative
  // entry there lies outside the cone of the columns.
  Eigen::VectorXd raw = spikes({{30, 1.0}}, phi).real_view();
  raw[5] = -0.05;
  const MeasurementVector v(raw);
  SraConfig cfg = SraConfig::white(3, 0.05);
  cfg.epsilon = 0.0;
  cfg.noise_allowance = 0.2;
  const SraSolver solver(phi, cfg);
  const SraSolver::Result r = solver.solve_detailed(v);
  CHECK(r.escalations > 0);
  CHECK(solver.weighted_residual_l1(r.x, v) <= r.budget * (1.0 + 1e-7));
  cfg.max_escalations = 0;
  CHECK_THROWS_AS(SraSolver(phi, cfg).solve(v), SolverError);
}

TEST_CASE("scale invariance") {
  const DictionaryMatrix& phi = default_phi();
  const MeasurementVector clean = spikes({{120, 1}, {260, 1.5}}, phi);
  const double sigma = 0.05;
  const MeasurementVector v = add_noise(clean, NoiseModel::white(3, sigma), 77);
  const Backscattering base = SraSolver(phi, SraConfig::white(3, sigma)).solve(v);
  SUBCASE("relative budget alone: exact") {
    SraConfig cfg = SraConfig::white(3, sigma);
    cfg.noise_allowance = 0.0;
    // Noisy v can sit outside the cone, and without the allowance nothing absorbs it.
    const Backscattering ref = SraSolver(phi, cfg).solve(clean);
    for (double s : {0.1, 4.0}) {
      const Backscattering x = SraSolver(phi, cfg).solve(clean.scaled(s));
      CHECK((x.amplitudes() - s * ref.amplitudes()).cwiseAbs().maxCoeff() <= 1e-9 * s * ref.amplitudes().maxCoeff());
      CHECK(extract_depth(x).depth == extract_depth(ref).depth);
    }
  }
  SUBCASE("with the noise allowance the covariance must scale too") {
    const NoiseModel noise = NoiseModel::white(3, sigma);
    const DepthEstimate d0 = invalidate(find_peaks(base), v, phi, noise);
    for (double s : {0.1, 4.0}) {
      const Backscattering x = SraSolver(phi, SraConfig::white(3, sigma * s)).solve(v.scaled(s));
      const DepthEstimate d = invalidate(find_peaks(x), v.scaled(s), phi, NoiseModel::white(3, sigma * s));
      CHECK(d.valid == d0.valid);
      CHECK(std::abs(d.depth - d0.depth) <= 1.0);
    }
  }
}

TEST_CASE("larger epsilon never increases the objective") {
  const DictionaryMatrix& phi = default_phi();
  const MeasurementVector v = add_noise(spikes({{90, 1}, {170, 2}}, phi), NoiseModel::white(3, 0.05), 5);
  double last = std::numeric_limits<double>::infinity();
  for (double eps : {0.0, 0.02, 0.05, 0.1, 0.3}) {
    SraConfig cfg = SraConfig::white(3, 0.05, eps);
    const double norm = SraSolver(phi, cfg).solve(v).amplitudes().sum();
    CHECK(norm <= last + 1e-9);
    last = norm;
  }
}

TEST_CASE("zero measurement is an invalid pixel") {
  const MeasurementVector zero(Eigen::VectorXd::Zero(6));
  CHECK_THROWS_AS(solve_sra(zero, default_phi(), SraConfig::defaults(3)), InvalidPixel);
  CHECK_THROWS_AS(solve_sra_l2_reference(zero, default_phi(), SraConfig::defaults(3)), InvalidPixel);
}

TEST_CASE("reference solver") {
  const DictionaryMatrix& phi = default_phi();
  SUBCASE("noiseless sparse input: same support as the LP") {
    const SraConfig cfg = SraConfig::white(3, 0.0);
    const MeasurementVector v = spikes({{60, 1}, {180, 2}, {330, 1.5}}, phi);
    const Backscattering ref = solve_sra_l2_reference(v, phi, cfg);
    const Backscattering lp = solve_sra(v, phi, cfg);
    CHECK(ref.support(1e-6) == lp.support(1e-6));
  }
  SUBCASE("single path depth agrees with the LP") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> d(20, 450);
    for (int t = 0; t < 10; ++t) {
      const double sigma = 0.02;
      const SraConfig cfg = SraConfig::white(3, sigma);
      const MeasurementVector v = add_noise(spikes({{d(rng), 1.0}}, phi), NoiseModel::white(3, sigma), 40 + t);
      const NoiseModel noise = NoiseModel::white(3, sigma);
      const Backscattering ref = solve_sra_l2_reference(v, phi, cfg);
      const DepthEstimate a = invalidate(find_peaks(ref), v, phi, noise);
      const DepthEstimate b = invalidate(find_peaks(solve_sra(v, phi, cfg)), v, phi, noise);
      REQUIRE(a.valid);
      REQUIRE(b.valid);
      CHECK(std::abs(a.depth - b.depth) <= 1.0);
    }
  }
  SUBCASE("residual meets the quadratic budget") {
    const double sigma = 0.05;
    const SraConfig cfg = SraConfig::white(3, sigma);
    const MeasurementVector v = add_noise(spikes({{100, 1}, {210, 2}}, phi), NoiseModel::white(3, sigma), 3);
    const Backscattering x = solve_sra_l2_reference(v, phi, cfg);
    const double resid = ((phi.entries() * x.amplitudes() - v.real_view()) / sigma).norm();
    const double budget = cfg.budget(v.norm_l2(), cfg.expected_noise_l2());
    CHECK(resid <= budget * (1.0 + 1e-9));
    CHECK(resid >= budget * (1.0 - 1e-6));  // active at the optimum
  }
}

TEST_CASE("l0 oracle") {
  const FrequencyConfig f = FrequencyConfig::default_config();
  const DictionaryMatrix small = build_phi(DistanceGrid(20, 400, 20), f);
  REQUIRE(small.cols() == 20);
  const SraConfig cfg = SraConfig::white(3, 0.0);
  SUBCASE("2-sparse support") {
    const MeasurementVector v = spikes({{80, 1}, {200, 0.7}}, small);
    CHECK(l0_oracle(v, small, cfg).support() == std::vector<std::size_t>{3, 9});
  }
  SUBCASE("single spike") {
    CHECK(l0_oracle(spikes({{260, 2}}, small), small, cfg).support().size() == 1);
  }
  SUBCASE("zero input") {
    CHECK(l0_oracle(MeasurementVector(Eigen::VectorXd::Zero(6)), small, cfg).support().empty());
  }
  CHECK_THROWS_AS(l0_oracle(spikes({{100, 1}}, default_phi()), default_phi(), cfg), std::invalid_argument);
}

TEST_CASE("LP support matches the l0 oracle on k-sparse inputs") {
  // Compact grid: over a wide span the long-wavelength rows alias and the
  // relaxation gap shows up already at k = 2.
  const FrequencyConfig f = FrequencyConfig::default_config();
  const DictionaryMatrix small = build_phi(DistanceGrid(20, 260, 10), f);
  REQUIRE(small.cols() == 25);
  const SraConfig cfg = SraConfig::white(3, 0.0);
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> pick(0, 24), count(1, 3);
  std::uniform_real_distribution<double> amp(0.3, 3.0);
  int checked = 0;
  int gaps = 0;
  while (checked < 60) {
    std::vector<int> idx;
    const int k = count(rng);
    while (static_cast<int>(idx.size()) < k) {
      const int j = pick(rng);
      bool ok = true;
      for (int i : idx) ok = ok && std::abs(i - j) >= 4;  // 40 cm
      if (ok) idx.push_back(j);
    }
    std::vector<Spike> s;
    for (int j : idx) s.push_back({small.grid().distance(static_cast<std::size_t>(j)), amp(rng)});
    const MeasurementVector v = spikes(s, small);
    const Backscattering sparsest = l0_oracle(v, small, cfg);
    const Backscattering lp = solve_sra(v, small, cfg);
    if (lp.support(1e-7) != sparsest.support()) {
      // Only acceptable when L1 genuinely prefers a denser solution.
      CHECK(lp.amplitudes().sum() < sparsest.amplitudes().sum() - 1e-9);
      ++gaps;
    }
    ++checked;
  }
  CHECK(gaps <= 2);
}
