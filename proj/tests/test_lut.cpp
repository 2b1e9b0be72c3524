#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "sra/frame.hpp"
#include "sra/lut.hpp"

using namespace sra;

namespace {

LutConfig small_config(std::uint32_t cells) {
  LutConfig cfg = LutConfig::defaults();
  cfg.cells_per_dim = cells;
  return cfg;
}

// Built once and shared by the tests below.
const Lut& small_lut() {
  // Coarse cells need a noise level that covers their quantization error.
  static const Lut lut = [] {
    LutConfig cfg = small_config(8);
    cfg.noise_sigma = 0.08;
    return build_lut(cfg);
  }();
  return lut;
}

MeasurementVector path(const std::vector<Spike>& s) {
  static const DictionaryMatrix phi = build_phi(DistanceGrid::default_grid(), FrequencyConfig::default_config());
  return synthesize(make_multi_path(s, phi.grid()), phi);
}

std::uint64_t brute_reachable(std::uint32_t cells, bool centers_only) {
  // Independent count over a 4-d grid of cells.
  std::uint64_t n = 0;
  const double h = 1.0 / cells;
  for (std::uint32_t a = 0; a < cells; ++a)
    for (std::uint32_t b = 0; b < cells; ++b)
      for (std::uint32_t c = 0; c < cells; ++c)
        for (std::uint32_t d = 0; d < cells; ++d) {
          double sum = 0.0;
          for (std::uint32_t i : {a, b, c, d}) {
            const double center = -1.0 + (2.0 * i + 1.0) * h;
            const double x = centers_only ? std::abs(center) : std::max(0.0, std::abs(center) - h);
            sum += x * x;
          }
          n += sum <= 1.0 ? 1 : 0;
        }
  return n;
}

}  // namespace

TEST_CASE("lut config") {
  const LutConfig cfg = small_config(2);
  CHECK(cfg.k == 0);
  CHECK(cfg.dims() == 4);
  CHECK(cfg.cell_count() == 16);
  CHECK(cfg.extended_grid().d_min() == doctest::Approx(20.0 - cfg.freq.half_wavelength(0)));
  LutConfig bad = cfg;
  bad.cells_per_dim = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.k = 3;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.noise_sigma = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("quantization and cell indexing") {
  CHECK(quantize(-1.0, 32) == 0);
  CHECK(quantize(-2.0, 32) == 0);
  CHECK(quantize(1.0, 32) == 31);
  CHECK(quantize(0.0, 32) == 16);
  CHECK(quantize(-1e-12, 32) == 15);
  CHECK(quantize(std::nan(""), 32) == 0);
  for (std::uint32_t i = 0; i < 32; ++i) CHECK(quantize(cell_center(i, 32), 32) == i);

  const LutConfig cfg = small_config(5);
  const Lut lut(cfg, std::vector<LutCell>(cfg.cell_count()));
  for (std::uint64_t idx : {0ULL, 1ULL, 5ULL, 127ULL, 624ULL}) {
    CHECK(lut.cell_index(cell_coordinates(cfg, idx)) == idx);
  }
  const std::vector<double> c = cell_coordinates(cfg, 1);  // last coordinate fastest
  CHECK(c[3] == doctest::Approx(cell_center(1, 5)));
  CHECK(c[0] == doctest::Approx(cell_center(0, 5)));
}

TEST_CASE("reachable cell counts") {
  for (std::uint32_t cells : {2u, 5u, 8u, 12u}) {
    const LutConfig cfg = small_config(cells);
    CHECK(count_reachable_cells(cfg) == brute_reachable(cells, false));
    CHECK(count_centers_inside_ball(cfg) == brute_reachable(cells, true));
  }
  const LutConfig big = small_config(32);
  CHECK(count_centers_inside_ball(big) < big.cell_count());
}

TEST_CASE("smallest table builds") {
  const Lut lut = build_lut(small_config(2));
  CHECK(lut.cells().size() == 16);
  // Every L = 2 cell box touches the unit ball.
  CHECK(count_reachable_cells(small_config(2)) == 16);
}

TEST_CASE("build is deterministic across runs and worker counts") {
  const LutConfig cfg = small_config(6);
  LutBuildOptions one;
  one.chunk_cells = 97;
  LutBuildOptions three = one;
  three.workers = 3;
  const Lut a = build_lut(cfg, one);
  const Lut b = build_lut(cfg, three);
  CHECK(serialize(a) == serialize(b));
  CHECK(a == b);
}

TEST_CASE("unreachable cells stay invalid") {
  const Lut& lut = small_lut();
  const LutConfig& cfg = lut.config();
  std::size_t valid = 0;
  for (std::uint64_t i = 0; i < cfg.cell_count(); ++i) {
    const LutCell& c = lut.cells()[i];
    if (!cell_reachable(cfg, i)) CHECK(c.valid == 0);
    if (c.valid) {
      ++valid;
      CHECK(c.relative_depth >= cfg.extended_grid().d_min());
      CHECK(c.relative_depth <= cfg.extended_grid().d_max());
      CHECK(c.confidence >= cfg.confidence_threshold);
    }
  }
  CHECK(valid > 0);
}

TEST_CASE("cell value equals the direct solve at its center") {
  const Lut& lut = small_lut();
  const LutConfig& cfg = lut.config();
  const CanonicalPipeline pipe(cfg.pipeline_config());
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::uint64_t> pick(0, cfg.cell_count() - 1);
  int checked = 0;
  while (checked < 25) {
    const std::uint64_t i = pick(rng);
    if (!cell_reachable(cfg, i)) continue;
    const std::vector<LutCell> cell = build_cells(pipe, cfg, i, i + 1);
    CHECK(cell[0] == lut.cells()[i]);
    ++checked;
  }
}

TEST_CASE("cell near a canonical single path stores that path") {
  // Odd L puts a center at 0. A path at a multiple of lambda_k has reduced
  // coordinates (1/sqrt3, 1/sqrt3, 0, 0) and canonical distance 0.
  LutConfig cfg = small_config(63);
  const CanonicalPipeline pipe(cfg.pipeline_config());
  const double r = 1.0 / std::sqrt(3.0);
  CanonicalForm exact;
  exact.k = cfg.k;
  exact.reduced = {r, r, 0.0, 0.0};
  const DepthEstimate direct = pipe.estimate_canonical(from_canonical(exact));
  REQUIRE(direct.valid);
  CHECK(std::abs(direct.depth) <= 1.0);

  const Lut probe(cfg, std::vector<LutCell>(cfg.cell_count()));
  const std::uint64_t idx = probe.cell_index(exact.reduced);
  const std::vector<LutCell> cell = build_cells(pipe, cfg, idx, idx + 1);
  REQUIRE(cell[0].valid);
  CHECK(std::abs(cell[0].relative_depth) <= 1.0);
}

TEST_CASE("query") {
  const Lut& lut = small_lut();
  CHECK_FALSE(lut.query(MeasurementVector(Eigen::VectorXd::Zero(6))).valid);
  // Coarse table, single paths: the shift carries most of the depth.
  int close = 0;
  for (double d = 30.0; d < 450.0; d += 20.0) {
    const DepthEstimate e = lut.query(path({{d, 1.0}}));
    if (e.valid && std::abs(e.depth - d) <= 25.0) ++close;
  }
  CHECK(close >= 15);
  const MeasurementVector at200 = path({{200, 1.0}});
  const std::vector<double> raw(at200.real_view().data(), at200.real_view().data() + 6);
  const std::vector<float> rawf(raw.begin(), raw.end());
  CHECK(lut.query_raw(raw.data()).valid == lut.query(path({{200, 1.0}})).valid);
  CHECK(lut.query_raw(raw.data()).depth == lut.query(path({{200, 1.0}})).depth);
  CHECK(std::abs(lut.query_raw(rawf.data()).depth - lut.query_raw(raw.data()).depth) <= 25.0);
  CHECK_THROWS_AS(lut.query(MeasurementVector(Eigen::VectorXd::Ones(4))), std::invalid_argument);
}

TEST_CASE("serialization") {
  const Lut& lut = small_lut();
  const std::vector<std::uint8_t> bytes = serialize(lut);
  REQUIRE(bytes.size() > lut.cells().size() * 9);
  CHECK(std::string(bytes.begin(), bytes.begin() + 6) == "SRALUT");

  SUBCASE("round trip is byte exact") {
    const Lut back = deserialize(bytes);
    CHECK(back == lut);
    CHECK(serialize(back) == bytes);
    CHECK_NOTHROW(deserialize(bytes, lut.config()));
  }
  SUBCASE("truncated") {
    CHECK_THROWS_AS(deserialize(std::span(bytes.data(), bytes.size() - 1)), LutFormatError);
    CHECK_THROWS_AS(deserialize(std::span(bytes.data(), 20)), LutFormatError);
    CHECK_THROWS_AS(deserialize(std::span<const std::uint8_t>()), LutFormatError);
  }
  SUBCASE("trailing bytes") {
    std::vector<std::uint8_t> longer = bytes;
    longer.push_back(0);
    CHECK_THROWS_AS(deserialize(longer), LutFormatError);
  }
  SUBCASE("bad magic and version") {
    std::vector<std::uint8_t> b = bytes;
    b[0] = 'X';
    CHECK_THROWS_AS(deserialize(b), LutFormatError);
    b = bytes;
    b[8] = 9;
    CHECK_THROWS_AS(deserialize(b), LutFormatError);
  }
  SUBCASE("fingerprint mismatch") {
    std::vector<std::uint8_t> b = bytes;
    b[bytes.size() - lut.cells().size() * 9 - 16] ^= 1;
    CHECK_THROWS_AS(deserialize(b), LutFormatError);
    LutConfig other = lut.config();
    other.epsilon = 0.1;
    CHECK_THROWS_AS(deserialize(bytes, other), LutFormatError);
  }
  SUBCASE("corrupt validity flag") {
    std::vector<std::uint8_t> b = bytes;
    b.back() = 7;
    CHECK_THROWS_AS(deserialize(b), LutFormatError);
  }
  SUBCASE("file round trip") {
    const std::string file = (std::filesystem::temp_directory_path() / "sra_test_lut.bin").string();
    save_lut(lut, file);
    CHECK(load_lut(file) == lut);
    std::filesystem::remove(file);
    CHECK_THROWS(load_lut(file));
  }
}

TEST_CASE("frame codec") {
  Frame f(3, 2, 3);
  for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] = static_cast<float>(i) * 0.25f - 1.0f;
  const std::vector<std::uint8_t> bytes = encode_frame(f);
  CHECK(bytes.size() == 12 + 36 * 4);
  CHECK(bytes[0] == 3);
  CHECK(bytes[4] == 2);
  CHECK(bytes[8] == 3);
  const Frame back = decode_frame(bytes);
  CHECK(back.width == 3);
  CHECK(back.data == f.data);
  std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 1);
  CHECK_THROWS_AS(decode_frame(cut), std::invalid_argument);
  CHECK_THROWS_AS(decode_frame({1, 2}), std::invalid_argument);

  const std::string file = (std::filesystem::temp_directory_path() / "sra_test_frame.bin").string();
  write_frame(f, file);
  CHECK(read_frame(file).data == f.data);
  std::filesystem::remove(file);
}

TEST_CASE("process_frame") {
  const Lut& lut = small_lut();
  SUBCASE("zero frame is all invalid") {
    const DepthMap map = process_frame(lut, Frame(4, 3, 3));
    for (auto v : map.valid) CHECK(v == 0);
  }
  SUBCASE("constant frame gives a constant map") {
    Frame f(5, 4, 3);
    const MeasurementVector v = path({{180, 1.0}});
    for (std::size_t p = 0; p < f.pixels(); ++p)
      for (int i = 0; i < 6; ++i) f.pixel(p)[i] = static_cast<float>(v.real_view()[i]);
    const DepthMap map = process_frame(lut, f);
    for (std::size_t p = 0; p < f.pixels(); ++p) {
      CHECK(map.valid[p] == map.valid[0]);
      CHECK(map.depth[p] == map.depth[0]);
    }
  }
  SUBCASE("worker count and staging do not change the result") {
    const Frame f = synthetic_frame(lut, 37, 23, 0.02, 5);
    const DepthMap one = process_frame(lut, f, 1);
    CHECK(process_frame(lut, f, 4) == one);
    StageTimes t;
    CHECK(process_frame_staged(lut, f, t) == one);
    CHECK(t.fetch_ms >= 0.0);
  }
  SUBCASE("1x1 frame") { CHECK(process_frame(lut, synthetic_frame(lut, 1, 1, 0.0, 1)).depth.size() == 1); }
  SUBCASE("synthetic frames are seed deterministic") {
    CHECK(synthetic_frame(lut, 8, 8, 0.02, 3).data == synthetic_frame(lut, 8, 8, 0.02, 3).data);
    CHECK(synthetic_frame(lut, 8, 8, 0.02, 3).data != synthetic_frame(lut, 8, 8, 0.02, 4).data);
  }
  CHECK_THROWS_AS(process_frame(lut, Frame(2, 2, 2)), std::invalid_argument);
}
