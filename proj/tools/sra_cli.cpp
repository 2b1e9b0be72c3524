// Experiment driver: error tables, the two-path heatmap, lookup-table builds
// and the frame benchmark.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "sra/experiments.hpp"

namespace {

using namespace sra;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "scenario file (key = value)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "random seed (overrides the scenario)");
  cmd->add_option("--trials", c.trials, "trials per SNR (overrides the scenario)")->check(CLI::PositiveNumber);
  cmd->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "output path (default: stdout)");
}

Scenario resolve(const Common& c, Scenario fallback) {
  Scenario sc = c.config.empty() ? std::move(fallback) : load_scenario(c.config);
  if (c.config.empty()) return sc;
  // Experiment-specific lists missing from the file come from the defaults.
  if (sc.snrs.empty()) sc.snrs = fallback.snrs;
  if (sc.strengths.empty()) sc.strengths = fallback.strengths;
  if (sc.spikes.empty()) sc.spikes = fallback.spikes;
  if (!sc.lobe) sc.lobe = fallback.lobe;
  return sc;
}

Scenario with_overrides(Scenario sc, const Common& c) {
  if (c.seed) sc.seed = *c.seed;
  if (c.trials) sc.trials = *c.trials;
  return sc;
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + c.out);
  f << text;
}

// Resume file: fingerprint, then (begin, count, cells) records.
class ChunkJournal {
public:
  ChunkJournal(std::string path, std::uint64_t fingerprint) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    std::uint64_t stored = 0;
    if (in && read(in, stored) && stored == fingerprint) {
      std::uint64_t begin = 0, count = 0;
      while (read(in, begin) && read(in, count)) {
        std::vector<LutCell> cells(count);
        bool ok = true;
        for (auto& cell : cells) {
          std::uint32_t d = 0, c = 0;
          std::uint8_t v = 0;
          ok = ok && read(in, d) && read(in, c) && in.read(reinterpret_cast<char*>(&v), 1);
          cell.relative_depth = std::bit_cast<float>(d);
          cell.confidence = std::bit_cast<float>(c);
          cell.valid = v;
        }
        if (!ok) break;  // torn final record
        chunks_[begin] = std::move(cells);
      }
    }
    out_.open(path_, std::ios::binary | std::ios::trunc);
    write(fingerprint);
    for (const auto& [begin, cells] : chunks_) append(begin, cells);
  }

  std::size_t restored() const { return chunks_.size(); }

  bool restore(std::uint64_t begin, std::vector<LutCell>& cells) const {
    const auto it = chunks_.find(begin);
    if (it == chunks_.end()) return false;
    cells = it->second;
    return true;
  }

  void append(std::uint64_t begin, std::span<const LutCell> cells) {
    write(begin);
    write(static_cast<std::uint64_t>(cells.size()));
    for (const auto& c : cells) {
      write(std::bit_cast<std::uint32_t>(c.relative_depth));
      write(std::bit_cast<std::uint32_t>(c.confidence));
      out_.put(static_cast<char>(c.valid));
    }
    out_.flush();
  }

  void finish() {
    out_.close();
    std::filesystem::remove(path_);
  }

private:
  template <typename T>
  static bool read(std::istream& in, T& x) {
    unsigned char b[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) return false;
    x = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) x |= static_cast<T>(static_cast<T>(b[i]) << (8 * i));
    return true;
  }
  template <typename T>
  void write(T x) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.put(static_cast<char>((x >> (8 * i)) & 0xff));
  }

  std::string path_;
  std::map<std::uint64_t, std::vector<LutCell>> chunks_;
  std::ofstream out_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse multipath recovery for time-of-flight measurements"};
  app.require_subcommand(1);

  Common three, two, diffuse, bench, build;

  auto* three_cmd = app.add_subcommand("three-path", "median depth error table for a multi-path scene");
  add_common(three_cmd, three);
  bool three_no_baselines = false;
  three_cmd->add_flag("--no-baselines", three_no_baselines, "skip ML and Opt-Single");

  auto* two_cmd = app.add_subcommand("two-path-grid", "MAE heatmap over multipath strength and SNR");
  add_common(two_cmd, two);
  std::optional<int> instances;
  bool full_scale = false;
  bool two_no_baselines = false;
  two_cmd->add_option("--instances", instances, "total instances over all cells")->check(CLI::PositiveNumber);
  two_cmd->add_flag("--full-scale", full_scale, "261,000 instances");
  two_cmd->add_flag("--no-baselines", two_no_baselines, "skip ML and Opt-Single");

  auto* diffuse_cmd = app.add_subcommand("diffuse", "error table for a direct return plus a diffuse lobe");
  add_common(diffuse_cmd, diffuse);

  auto* bench_cmd = app.add_subcommand("bench-frame", "frame throughput through the lookup table");
  add_common(bench_cmd, bench);
  std::string lut_path, frame_path;
  std::vector<std::uint32_t> frame_size;
  std::optional<int> repeats;
  bench_cmd->add_option("--lut", lut_path, "lookup table file")->required();
  bench_cmd->add_option("--frame", frame_path, "frame file (default: synthetic)")->check(CLI::ExistingFile);
  bench_cmd->add_option("--frame-size", frame_size, "width height")->expected(2);
  bench_cmd->add_option("--repeats", repeats, "timed repetitions")->check(CLI::PositiveNumber);

  auto* build_cmd = app.add_subcommand("build-lut", "compile the lookup table");
  add_common(build_cmd, build);
  std::optional<std::uint32_t> cells_per_dim;
  std::uint64_t chunk_cells = 4096;
  bool no_resume = false;
  build_cmd->add_option("--cells", cells_per_dim, "cells per dimension")->check(CLI::Range(2u, 256u));
  build_cmd->add_option("--chunk", chunk_cells, "cells per resumable chunk")->check(CLI::PositiveNumber);
  build_cmd->add_flag("--no-resume", no_resume, "ignore an existing partial build");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*three_cmd) {
      const Scenario sc = with_overrides(resolve(three, three_path_scenario()), three);
      RunOptions opt{three.workers, !three_no_baselines};
      std::ostringstream out;
      write_csv(out, sc, "three-path median absolute depth error", run_three_path(sc, opt));
      emit(three, out.str());
    } else if (*two_cmd) {
      Scenario sc = with_overrides(resolve(two, two_path_scenario()), two);
      if (instances) sc.instances = *instances;
      if (full_scale) sc.instances = 261000;
      RunOptions opt{two.workers, !two_no_baselines};
      std::ostringstream out;
      write_csv(out, sc, run_two_path_grid(sc, opt));
      emit(two, out.str());
    } else if (*diffuse_cmd) {
      const Scenario sc = with_overrides(resolve(diffuse, diffuse_scenario()), diffuse);
      RunOptions opt{diffuse.workers, true};
      std::ostringstream out;
      write_csv(out, sc, "diffuse plus specular absolute depth error", run_diffuse_specular(sc, opt));
      emit(diffuse, out.str());
    } else if (*bench_cmd) {
      Scenario sc = with_overrides(resolve(bench, Scenario{}), bench);
      if (!std::filesystem::exists(lut_path)) throw std::runtime_error("lookup table not found: " + lut_path);
      const Lut lut = load_lut(lut_path);
      if (frame_size.size() == 2) {
        sc.frame_width = frame_size[0];
        sc.frame_height = frame_size[1];
      }
      if (repeats) sc.repeats = *repeats;
      const BenchReport report =
          frame_path.empty()
              ? bench_frame(lut, sc.frame_width, sc.frame_height, bench.workers, sc.repeats, sc.frame_noise, sc.seed)
              : bench_frame(lut, read_frame(frame_path), bench.workers, sc.repeats);
      std::ostringstream out;
      write_report(out, report);
      emit(bench, out.str());
    } else if (*build_cmd) {
      if (build.out.empty()) throw std::runtime_error("build-lut needs --out");
      Scenario sc = with_overrides(resolve(build, Scenario{}), build);
      if (cells_per_dim) sc.cells_per_dim = *cells_per_dim;
      const LutConfig cfg = sc.lut_config();
      cfg.validate();
      const std::string partial = build.out + ".partial";
      if (no_resume) std::filesystem::remove(partial);
      ChunkJournal journal(partial, lut_fingerprint(cfg));

      std::cerr << "cells " << cfg.cell_count() << ", reachable " << count_reachable_cells(cfg)
                << ", centers inside ball " << count_centers_inside_ball(cfg) << ", resumed chunks "
                << journal.restored() << '\n';
      LutBuildOptions opt;
      opt.workers = build.workers;
      opt.chunk_cells = chunk_cells;
      opt.restore_chunk = [&](std::uint64_t begin, std::vector<LutCell>& cells) {
        return journal.restore(begin, cells);
      };
      std::uint64_t done = 0;
      opt.on_chunk = [&](std::uint64_t begin, std::span<const LutCell> cells) {
        journal.append(begin, cells);
        done += cells.size();
        if ((done / chunk_cells) % 16 == 0) std::cerr << "  " << done << " cells built\n";
      };
      const auto t0 = std::chrono::steady_clock::now();
      const Lut lut = build_lut(cfg, opt);
      save_lut(lut, build.out);
      journal.finish();
      std::size_t valid = 0;
      for (const auto& c : lut.cells()) valid += c.valid;
      std::cerr << "wrote " << build.out << ": " << valid << " valid cells, fingerprint " << std::hex
                << lut.fingerprint() << std::dec << ", "
                << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
