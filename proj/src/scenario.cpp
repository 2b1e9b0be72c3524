#include "sra/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sra {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "inf" || s == "infinity" || s == "Inf") return std::numeric_limits<double>::infinity();
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) throw ScenarioError("not a number: '" + s + "'");
  return out;
}

std::vector<double> to_list(const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(item));
  if (out.empty()) throw ScenarioError("empty list");
  return out;
}

std::vector<double> expect(const std::string& value, std::size_t n) {
  std::vector<double> v = to_list(value);
  if (v.size() != n) throw ScenarioError("expected " + std::to_string(n) + " values, got " + std::to_string(v.size()));
  return v;
}

double one(const std::string& value) { return expect(value, 1)[0]; }

long long integer(const std::string& value) {
  const double d = one(value);
  if (!std::isfinite(d) || std::floor(d) != d) throw ScenarioError("expected an integer");
  return static_cast<long long>(d);
}

std::string fmt(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream o;
  o.precision(10);
  o << x;
  return o.str();
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
  return out;
}

}  // namespace

std::string format_snr(double snr) { return fmt(snr); }

Scenario parse_scenario(const std::string& text) {
  Scenario sc;
  std::stringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    try {
      if (eq == std::string::npos) throw ScenarioError("expected 'key = value'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key == "frequencies_mhz") {
        std::vector<double> f = to_list(value);
        for (double& x : f) x *= 1e6;
        sc.freq = FrequencyConfig(std::move(f));
      } else if (key == "grid") {
        const auto g = expect(value, 3);
        sc.grid = DistanceGrid(g[0], g[1], g[2]);
      } else if (key == "epsilon") {
        sc.epsilon = one(value);
      } else if (key == "noise_allowance") {
        sc.noise_allowance = one(value);
      } else if (key == "spike") {
        const auto s = expect(value, 2);
        sc.spikes.push_back({s[0], s[1]});
      } else if (key == "lobe") {
        const auto l = expect(value, 4);
        sc.lobe = DiffuseLobe{l[0], l[1], l[2], l[3]};
      } else if (key == "snr") {
        sc.snrs = to_list(value);
        for (double s : sc.snrs) {
          if (!(s > 0.0)) throw ScenarioError("snr values must be positive");
        }
      } else if (key == "trials") {
        sc.trials = static_cast<int>(integer(value));
      } else if (key == "seed") {
        sc.seed = static_cast<std::uint64_t>(integer(value));
      } else if (key == "peak_threshold") {
        sc.peak_threshold = one(value);
      } else if (key == "confidence_threshold") {
        sc.confidence_threshold = one(value);
      } else if (key == "strengths") {
        sc.strengths = to_list(value);
      } else if (key == "d1_range") {
        const auto r = expect(value, 2);
        sc.d1_min = r[0];
        sc.d1_max = r[1];
      } else if (key == "separation_range") {
        const auto r = expect(value, 2);
        sc.sep_min = r[0];
        sc.sep_max = r[1];
      } else if (key == "instances") {
        sc.instances = static_cast<int>(integer(value));
      } else if (key == "cells_per_dim") {
        sc.cells_per_dim = static_cast<std::uint32_t>(integer(value));
      } else if (key == "lut_noise_sigma") {
        sc.lut_noise_sigma = one(value);
      } else if (key == "reference_index") {
        if (value == "auto") {
          sc.reference_index.reset();
        } else {
          sc.reference_index = static_cast<std::size_t>(integer(value));
        }
      } else if (key == "frame_size") {
        const auto s = expect(value, 2);
        sc.frame_width = static_cast<std::uint32_t>(s[0]);
        sc.frame_height = static_cast<std::uint32_t>(s[1]);
      } else if (key == "repeats") {
        sc.repeats = static_cast<int>(integer(value));
      } else if (key == "frame_noise") {
        sc.frame_noise = one(value);
      } else {
        throw ScenarioError("unknown key '" + key + "'");
      }
    } catch (const ScenarioError& e) {
      throw ScenarioError("line " + std::to_string(number) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ScenarioError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  if (sc.trials < 1) throw ScenarioError("trials must be at least 1");
  if (sc.instances < 1) throw ScenarioError("instances must be at least 1");
  if (sc.repeats < 1) throw ScenarioError("repeats must be at least 1");
  if (!(sc.epsilon >= 0.0 && sc.epsilon < 1.0)) throw ScenarioError("epsilon must lie in [0, 1)");
  if (sc.reference_index && *sc.reference_index >= sc.freq.size()) throw ScenarioError("reference_index out of range");
  for (const Spike& s : sc.spikes) {
    if (!sc.grid.contains(s.distance) || !(s.amplitude > 0.0)) {
      throw ScenarioError("spike at " + fmt(s.distance) + " cm is outside the grid or has nonpositive amplitude");
    }
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

LutConfig Scenario::lut_config() const {
  LutConfig cfg;
  cfg.freq = freq;
  cfg.grid = grid;
  cfg.k = reference_index.value_or(freq.shortest_half_wavelength_index());
  cfg.cells_per_dim = cells_per_dim;
  cfg.epsilon = epsilon;
  cfg.noise_sigma = lut_noise_sigma;
  cfg.noise_allowance = noise_allowance;
  cfg.peak_threshold = peak_threshold;
  cfg.confidence_threshold = confidence_threshold;
  return cfg;
}

std::vector<std::string> Scenario::describe() const {
  std::vector<double> mhz;
  for (double f : freq.frequencies()) mhz.push_back(f / 1e6);
  std::vector<std::string> out = {
      "frequencies_mhz = " + join(mhz),
      "grid = " + join({grid.d_min(), grid.d_max(), grid.step()}),
      "epsilon = " + fmt(epsilon),
      "noise_allowance = " + fmt(noise_allowance),
  };
  for (const Spike& s : spikes) out.push_back("spike = " + join({s.distance, s.amplitude}));
  if (lobe) out.push_back("lobe = " + join({lobe->amplitude, lobe->alpha, lobe->beta, lobe->delta}));
  if (!snrs.empty()) out.push_back("snr = " + join(snrs));
  out.push_back("trials = " + std::to_string(trials));
  out.push_back("seed = " + std::to_string(seed));
  out.push_back("peak_threshold = " + fmt(peak_threshold));
  out.push_back("confidence_threshold = " + fmt(confidence_threshold));
  if (!strengths.empty()) {
    out.push_back("strengths = " + join(strengths));
    out.push_back("d1_range = " + join({d1_min, d1_max}));
    out.push_back("separation_range = " + join({sep_min, sep_max}));
    out.push_back("instances = " + std::to_string(instances));
  }
  return out;
}

Scenario three_path_scenario() {
  Scenario sc;
  sc.spikes = {{100.0, 1.0}, {200.0, 2.0}, {300.0, 3.0}};
  sc.snrs = {std::numeric_limits<double>::infinity(), 20.0, 10.0, 5.0};
  return sc;
}

Scenario two_path_scenario() {
  Scenario sc;
  sc.strengths = {0.6, 1.1, 1.7, 2.2, 2.8, 3.3, 3.9, 4.4, 5.0};
  sc.snrs = {std::numeric_limits<double>::infinity(), 25.5, 12.7, 8.5, 6.4, 5.1, 4.2, 3.6, 3.2};
  return sc;
}

Scenario diffuse_scenario() {
  Scenario sc;
  // Lobe integral A * Gamma(alpha + 1) / beta^(alpha + 1) = 2 for the unit direct return.
  sc.spikes = {{150.0, 1.0}};
  sc.lobe = DiffuseLobe{1.25e-4, 2.0, 0.05, 20.0};
  sc.snrs = {std::numeric_limits<double>::infinity(), 20.0, 10.0, 5.0};
  sc.trials = 500;
  return sc;
}

}  // namespace sra
