#include "sra/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

#include "sra/baselines.hpp"
#include "sra/parallel.hpp"
#include "sra/random.hpp"
#include "sra/solver.hpp"

namespace sra {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// SRA as used in the experiments: the solver sees the true noise covariance
// and the first credible peak is reported.
class SraDepth {
public:
  SraDepth(const DictionaryMatrix& phi, const Scenario& sc, double sigma)
      : phi_(phi), noise_(NoiseModel::white(phi.frequencies().size(), sigma)), solver_(phi, config(sc, sigma)),
        peak_threshold_(sc.peak_threshold), confidence_threshold_(sc.confidence_threshold) {}

  DepthEstimate estimate(const MeasurementVector& v, PeakList* peaks = nullptr) const {
    try {
      const PeakList found = find_peaks(solver_.solve(v), peak_threshold_);
      if (peaks) *peaks = found;
      return invalidate(found, v, phi_, noise_, confidence_threshold_);
    } catch (const SolverError&) {
      return DepthEstimate::invalid();
    } catch (const InvalidPixel&) {
      return DepthEstimate::invalid();
    }
  }

private:
  static SraConfig config(const Scenario& sc, double sigma) {
    SraConfig cfg = SraConfig::white(sc.freq.size(), sigma, sc.epsilon);
    cfg.noise_allowance = sc.noise_allowance;
    return cfg;
  }

  const DictionaryMatrix& phi_;
  NoiseModel noise_;
  SraSolver solver_;
  double peak_threshold_;
  double confidence_threshold_;
};

double median_of(std::vector<double> v) {
  if (v.empty()) return kNan;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

struct TrialOutcome {
  double sra = kNan, ml = kNan, single = kNan;  // NaN marks invalid
  std::vector<double> shifts;                   // NaN where no peak was found
};

ErrorStats collect(const std::vector<TrialOutcome>& trials, double TrialOutcome::*field) {
  std::vector<double> errors;
  int invalid = 0;
  for (const auto& t : trials) {
    if (std::isnan(t.*field)) {
      ++invalid;
    } else {
      errors.push_back(t.*field);
    }
  }
  return ErrorStats::from(std::move(errors), invalid);
}

std::vector<ErrorRow> run_error_table(const Scenario& sc, const Backscattering& truth, const RunOptions& opt) {
  if (sc.spikes.empty()) throw ScenarioError("scenario needs at least one spike");
  if (sc.snrs.empty()) throw ScenarioError("scenario needs at least one snr");
  const DictionaryMatrix phi = build_phi(sc.grid, sc.freq);
  const Baselines baselines(phi);
  const MeasurementVector clean = synthesize(truth, phi);

  std::vector<Spike> spikes = sc.spikes;
  std::sort(spikes.begin(), spikes.end(), [](const Spike& a, const Spike& b) { return a.distance < b.distance; });
  const double d_true = sc.grid.distance(sc.grid.nearest_index(spikes.front().distance));
  const double x1 = spikes.front().amplitude;

  std::vector<ErrorRow> rows;
  for (std::size_t s = 0; s < sc.snrs.size(); ++s) {
    const double snr = sc.snrs[s];
    const double sigma = noise_sigma_for_snr(x1, snr, sc.freq.size());
    const int trials = sigma == 0.0 ? 1 : sc.trials;
    const SraDepth sra(phi, sc, sigma);
    const NoiseModel noise = NoiseModel::white(sc.freq.size(), sigma);
    const std::uint64_t row_seed = derive_seed(sc.seed, s);

    std::vector<TrialOutcome> out(static_cast<std::size_t>(trials));
    parallel_for(out.size(), opt.workers, [&](std::size_t t) {
      const MeasurementVector v = sigma == 0.0 ? clean : add_noise(clean, noise, derive_seed(row_seed, t));
      TrialOutcome& o = out[t];
      PeakList peaks;
      const DepthEstimate e = sra.estimate(v, &peaks);
      if (e.valid) o.sra = std::abs(e.depth - d_true);
      for (const Spike& sp : spikes) {
        double best = kNan;
        for (const Peak& p : peaks.peaks) {
          const double shift = sc.grid.distance(p.index) - sp.distance;
          if (std::isnan(best) || std::abs(shift) < std::abs(best)) best = shift;
        }
        o.shifts.push_back(best);
      }
      if (opt.baselines && !v.is_zero()) {
        o.ml = std::abs(baselines.two_path(v).depth() - d_true);
        o.single = std::abs(baselines.single(v).depth - d_true);
      }
    });

    ErrorRow row;
    row.snr = snr;
    row.trials = trials;
    row.sra = collect(out, &TrialOutcome::sra);
    row.ml = collect(out, &TrialOutcome::ml);
    row.single = collect(out, &TrialOutcome::single);
    for (std::size_t k = 0; k < spikes.size(); ++k) {
      std::vector<double> shifts;
      for (const auto& t : out) {
        if (!std::isnan(t.shifts[k])) shifts.push_back(t.shifts[k]);
      }
      row.peak_shift.push_back(median_of(std::move(shifts)));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

void header(std::ostream& out, const Scenario& sc, const std::string& title) {
  out << "# " << title << '\n';
  for (const std::string& line : sc.describe()) out << "# " << line << '\n';
}

}  // namespace

double noise_sigma_for_snr(double x1, double snr, std::size_t frequency_count) {
  if (!(snr > 0.0)) throw std::invalid_argument("noise_sigma_for_snr: snr must be positive");
  if (std::isinf(snr)) return 0.0;
  return x1 / (std::sqrt(2.0 * static_cast<double>(frequency_count)) * snr);
}

ErrorStats ErrorStats::from(std::vector<double> errors, int invalid) {
  ErrorStats s;
  s.count = static_cast<int>(errors.size());
  s.invalid = invalid;
  s.mean = errors.empty() ? kNan : std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
  s.median = median_of(std::move(errors));
  return s;
}

std::vector<ErrorRow> run_three_path(const Scenario& sc, const RunOptions& opt) {
  return run_error_table(sc, make_multi_path(sc.spikes, sc.grid), opt);
}

std::vector<ErrorRow> run_diffuse_specular(const Scenario& sc, const RunOptions& opt) {
  if (sc.spikes.size() != 1) throw ScenarioError("diffuse scenario needs exactly one spike (the direct return)");
  if (!sc.lobe) throw ScenarioError("diffuse scenario needs a lobe");
  return run_error_table(sc, make_diffuse(sc.spikes.front(), *sc.lobe, sc.grid), opt);
}

Heatmap run_two_path_grid(const Scenario& sc, const RunOptions& opt) {
  if (sc.strengths.empty() || sc.snrs.empty()) throw ScenarioError("two-path sweep needs strengths and snrs");
  if (!(sc.d1_min >= sc.grid.d_min() && sc.d1_max <= sc.grid.d_max() && sc.d1_min <= sc.d1_max)) {
    throw ScenarioError("d1_range must lie inside the grid");
  }
  if (!(sc.sep_min > 0.0 && sc.sep_min <= sc.sep_max)) throw ScenarioError("invalid separation_range");
  if (sc.d1_max + sc.sep_min > sc.grid.d_max()) throw ScenarioError("d1_range plus the minimum separation leaves the grid");

  const DictionaryMatrix phi = build_phi(sc.grid, sc.freq);
  const Baselines baselines(phi);
  const std::size_t m = sc.freq.size();
  const std::size_t cells = sc.strengths.size() * sc.snrs.size();

  Heatmap map;
  map.strengths = sc.strengths;
  map.snrs = sc.snrs;
  map.per_cell = static_cast<int>((static_cast<std::size_t>(sc.instances) + cells - 1) / cells);

  // Instance geometry and the unit noise draw are shared by all cells, so the
  // cells differ only in strength and noise level.
  struct Instance {
    double d1, d2;
    Eigen::VectorXd z;
  };
  std::vector<Instance> inst;
  for (int i = 0; i < map.per_cell; ++i) {
    std::mt19937_64 rng(derive_seed(sc.seed, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double d1 = sc.grid.distance(sc.grid.nearest_index(sc.d1_min + unit(rng) * (sc.d1_max - sc.d1_min)));
    const double hi = std::min(sc.sep_max, sc.grid.d_max() - d1);
    const double d2 = sc.grid.distance(sc.grid.nearest_index(d1 + sc.sep_min + unit(rng) * (hi - sc.sep_min)));
    Eigen::VectorXd z(static_cast<Eigen::Index>(2 * m));
    for (Eigen::Index c = 0; c < z.size(); ++c) z[c] = normal(rng);
    inst.push_back({d1, d2, std::move(z)});
  }

  for (std::size_t a = 0; a < sc.strengths.size(); ++a) {
    for (std::size_t b = 0; b < sc.snrs.size(); ++b) {
      const double strength = sc.strengths[a];
      const double sigma = noise_sigma_for_snr(1.0, sc.snrs[b], m);
      const SraDepth sra(phi, sc, sigma);
      std::vector<TrialOutcome> out(inst.size());
      parallel_for(inst.size(), opt.workers, [&](std::size_t i) {
        const Instance& in = inst[i];
        const MeasurementVector clean = synthesize(make_two_path(in.d1, in.d2, 1.0, strength, sc.grid), phi);
        const MeasurementVector v(clean.real_view() + sigma * in.z);
        const DepthEstimate e = sra.estimate(v);
        if (e.valid) out[i].sra = std::abs(e.depth - in.d1);
        if (opt.baselines) {
          out[i].ml = std::abs(baselines.two_path(v).depth() - in.d1);
          out[i].single = std::abs(baselines.single(v).depth - in.d1);
        }
      });
      HeatCell cell;
      cell.strength = strength;
      cell.snr = sc.snrs[b];
      cell.sra = collect(out, &TrialOutcome::sra);
      cell.ml = collect(out, &TrialOutcome::ml);
      cell.single = collect(out, &TrialOutcome::single);
      map.cells.push_back(cell);
    }
  }
  return map;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman: need two equal-length samples");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
      i = j + 1;
    }
    return r;
  };
  const std::vector<double> rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxx > 0 && syy > 0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

BenchReport bench_frame(const Lut& lut, std::uint32_t width, std::uint32_t height, unsigned workers, int repeats,
                        double frame_noise, std::uint64_t seed, int direct_samples) {
  return bench_frame(lut, synthetic_frame(lut, width, height, frame_noise, seed), workers, repeats, direct_samples);
}

BenchReport bench_frame(const Lut& lut, const Frame& frame, unsigned workers, int repeats, int direct_samples) {
  if (repeats < 1) throw std::invalid_argument("bench_frame: repeats must be positive");
  using clock = std::chrono::steady_clock;
  BenchReport r;
  r.width = frame.width;
  r.height = frame.height;
  r.workers = std::max(1u, workers);
  r.repeats = repeats;
  const double pixels = static_cast<double>(frame.pixels());

  const DepthMap reference = process_frame(lut, frame, 1);
  const DepthMap parallel = process_frame(lut, frame, r.workers);
  const DepthMap staged = process_frame_staged(lut, frame, r.stages);
  r.worker_invariant = reference == parallel && reference == staged;
  r.valid_fraction =
      pixels > 0 ? static_cast<double>(std::count(reference.valid.begin(), reference.valid.end(), 1)) / pixels : 0.0;

  std::vector<double> times;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = clock::now();
    const DepthMap map = process_frame(lut, frame, r.workers);
    times.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
    if (!(map == reference)) r.worker_invariant = false;
  }
  r.mean_ms = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
  std::sort(times.begin(), times.end());
  r.p95_ms = times[static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(times.size()))) - 1];

  const auto t0 = clock::now();
  const DepthMap single = process_frame(lut, frame, 1);
  const double single_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  r.query_ns_per_pixel = pixels > 0 ? single_ms * 1e6 / pixels : 0.0;

  const CanonicalPipeline pipeline(lut.config().pipeline_config());
  const std::size_t samples = std::min<std::size_t>(static_cast<std::size_t>(std::max(direct_samples, 1)), frame.pixels());
  const auto t1 = clock::now();
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t p = i * frame.pixels() / samples;
    Eigen::VectorXd rv(2 * frame.m);
    for (std::uint32_t c = 0; c < 2 * frame.m; ++c) rv[c] = frame.pixel(p)[c];
    (void)pipeline.estimate(MeasurementVector(std::move(rv)));
  }
  r.direct_us_per_pixel =
      samples > 0 ? std::chrono::duration<double, std::micro>(clock::now() - t1).count() / static_cast<double>(samples) : 0.0;
  r.speed_ratio = r.query_ns_per_pixel > 0 ? r.direct_us_per_pixel * 1e3 / r.query_ns_per_pixel : 0.0;
  return r;
}

void write_csv(std::ostream& out, const Scenario& sc, const std::string& title, const std::vector<ErrorRow>& rows) {
  header(out, sc, title);
  out << "snr,trials,sra_median_cm,ml_median_cm,single_median_cm,sra_mean_cm,ml_mean_cm,single_mean_cm,"
         "sra_invalid_fraction,peak_shift_cm\n";
  for (const ErrorRow& r : rows) {
    out << format_snr(r.snr) << ',' << r.trials << ',' << num(r.sra.median) << ',' << num(r.ml.median) << ','
        << num(r.single.median) << ',' << num(r.sra.mean) << ',' << num(r.ml.mean) << ',' << num(r.single.mean) << ','
        << num(static_cast<double>(r.sra.invalid) / r.trials) << ',';
    for (std::size_t k = 0; k < r.peak_shift.size(); ++k) out << (k ? ";" : "") << num(r.peak_shift[k]);
    out << '\n';
  }
}

void write_csv(std::ostream& out, const Scenario& sc, const Heatmap& map) {
  header(out, sc, "two-path mean absolute depth error");
  out << "# instances_per_cell = " << map.per_cell << '\n';
  out << "strength,snr,instances,sra_mae_cm,sra_invalid_fraction,ml_mae_cm,single_mae_cm\n";
  for (const HeatCell& c : map.cells) {
    const int n = c.sra.count + c.sra.invalid;
    out << num(c.strength) << ',' << format_snr(c.snr) << ',' << n << ',' << num(c.sra.mean) << ','
        << num(n ? static_cast<double>(c.sra.invalid) / n : 0.0) << ',' << num(c.ml.mean) << ','
        << num(c.single.mean) << '\n';
  }
}

void write_report(std::ostream& out, const BenchReport& r) {
  out << "frame " << r.width << "x" << r.height << ", workers " << r.workers << ", repeats " << r.repeats << '\n'
      << "ms_per_frame_mean " << num(r.mean_ms) << '\n'
      << "ms_per_frame_p95 " << num(r.p95_ms) << '\n'
      << "stage_canonicalize_ms " << num(r.stages.canonicalize_ms) << '\n'
      << "stage_quantize_ms " << num(r.stages.quantize_ms) << '\n'
      << "stage_fetch_ms " << num(r.stages.fetch_ms) << '\n'
      << "valid_fraction " << num(r.valid_fraction) << '\n'
      << "worker_invariant " << (r.worker_invariant ? "yes" : "no") << '\n'
      << "query_ns_per_pixel " << num(r.query_ns_per_pixel) << '\n'
      << "direct_us_per_pixel " << num(r.direct_us_per_pixel) << '\n'
      << "speed_ratio " << num(r.speed_ratio) << '\n';
}

}  // namespace sra
