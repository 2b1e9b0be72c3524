#include "sra/frame.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

#include "sra/random.hpp"

namespace sra {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t at) {
  std::uint32_t x = 0;
  for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(in[at + static_cast<std::size_t>(i)]) << (8 * i);
  return x;
}

void store(DepthMap& map, std::size_t p, const DepthEstimate& e) {
  map.valid[p] = e.valid ? 1 : 0;
  map.depth[p] = e.valid ? static_cast<float>(e.depth) : 0.0f;
}

DepthMap empty_map(const Frame& frame) {
  DepthMap map;
  map.width = frame.width;
  map.height = frame.height;
  map.depth.assign(frame.pixels(), 0.0f);
  map.valid.assign(frame.pixels(), 0);
  return map;
}

void check(const Lut& lut, const Frame& frame) {
  frame.validate();
  if (frame.m != lut.config().freq.size()) {
    throw std::invalid_argument("process_frame: frame has " + std::to_string(frame.m) + " frequencies, table has " +
                                std::to_string(lut.config().freq.size()));
  }
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Frame::Frame(std::uint32_t w, std::uint32_t h, std::uint32_t freqs)
    : width(w), height(h), m(freqs), data(static_cast<std::size_t>(w) * h * 2 * freqs, 0.0f) {}

void Frame::validate() const {
  if (m == 0) throw std::invalid_argument("frame: m must be positive");
  if (data.size() != pixels() * 2 * m) {
    throw std::invalid_argument("frame: " + std::to_string(data.size()) + " values for a " + std::to_string(width) +
                                "x" + std::to_string(height) + " frame with m = " + std::to_string(m));
  }
}

std::vector<std::uint8_t> encode_frame(const Frame& f) {
  f.validate();
  std::vector<std::uint8_t> out;
  out.reserve(12 + f.data.size() * 4);
  put_u32(out, f.width);
  put_u32(out, f.height);
  put_u32(out, f.m);
  for (float x : f.data) put_u32(out, std::bit_cast<std::uint32_t>(x));
  return out;
}

Frame decode_frame(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12) throw std::invalid_argument("frame: truncated header");
  Frame f;
  f.width = get_u32(bytes, 0);
  f.height = get_u32(bytes, 4);
  f.m = get_u32(bytes, 8);
  if (f.m == 0 || f.m > 16) throw std::invalid_argument("frame: unsupported frequency count");
  const std::size_t values = f.pixels() * 2 * f.m;
  if (bytes.size() != 12 + values * 4) {
    throw std::invalid_argument("frame: expected " + std::to_string(12 + values * 4) + " bytes, got " +
                                std::to_string(bytes.size()));
  }
  f.data.resize(values);
  for (std::size_t i = 0; i < values; ++i) f.data[i] = std::bit_cast<float>(get_u32(bytes, 12 + 4 * i));
  return f;
}

void write_frame(const Frame& f, const std::string& path) {
  const std::vector<std::uint8_t> bytes = encode_frame(f);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_frame: cannot open " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Frame read_frame(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_frame: cannot open " + path);
  return decode_frame(std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

DepthMap process_frame(const Lut& lut, const Frame& frame, unsigned workers) {
  check(lut, frame);
  DepthMap map = empty_map(frame);
  const std::size_t rows = frame.height;
  const std::size_t cols = frame.width;
  const unsigned used = static_cast<unsigned>(std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(rows, 1)));

  auto run = [&](std::size_t row_begin, std::size_t row_end) {
    for (std::size_t p = row_begin * cols; p < row_end * cols; ++p) store(map, p, lut.query_raw(frame.pixel(p)));
  };
  if (used == 1) {
    run(0, rows);
    return map;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < used; ++t) {
    const std::size_t b = rows * t / used;
    const std::size_t e = rows * (t + 1) / used;
    pool.emplace_back(run, b, e);
  }
  for (auto& t : pool) t.join();
  return map;
}

DepthMap process_frame_staged(const Lut& lut, const Frame& frame, StageTimes& times) {
  check(lut, frame);
  const LutConfig& cfg = lut.config();
  const std::size_t m = cfg.freq.size();
  const std::size_t dims = cfg.dims();
  const std::size_t n = frame.pixels();
  DepthMap map = empty_map(frame);

  // Stage 1: reduced coordinates and shift per pixel.
  auto t0 = std::chrono::steady_clock::now();
  std::vector<double> reduced(n * dims);
  std::vector<double> delta(n);
  std::vector<std::uint8_t> usable(n);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double lk = cfg.freq.half_wavelength(cfg.k);
  for (std::size_t p = 0; p < n; ++p) {
    const float* rv = frame.pixel(p);
    double norm2 = 0.0;
    for (std::size_t i = 0; i < 2 * m; ++i) norm2 += static_cast<double>(rv[i]) * rv[i];
    const double re_k = rv[cfg.k];
    const double im_k = rv[cfg.k + m];
    usable[p] = norm2 > 0.0 && std::isfinite(norm2) && (re_k != 0.0 || im_k != 0.0);
    if (!usable[p]) continue;
    double phase = std::atan2(im_k, re_k);
    if (phase < 0.0) phase += two_pi;
    if (phase >= two_pi) phase = 0.0;
    delta[p] = lk * phase / two_pi;
    if (delta[p] >= lk) delta[p] = 0.0;
    const double s = 1.0 / std::sqrt(norm2);
    std::size_t slot = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == cfg.k) continue;
      const double angle = -phase * lk / cfg.freq.half_wavelength(j);
      const double c = std::cos(angle);
      const double sn = std::sin(angle);
      reduced[p * dims + slot] = s * (rv[j] * c - rv[j + m] * sn);
      reduced[p * dims + slot + m - 1] = s * (rv[j] * sn + rv[j + m] * c);
      ++slot;
    }
  }
  times.canonicalize_ms = ms_since(t0);

  // Stage 2: cell index.
  t0 = std::chrono::steady_clock::now();
  std::vector<std::uint64_t> index(n);
  for (std::size_t p = 0; p < n; ++p) {
    if (usable[p]) index[p] = lut.cell_index(std::span<const double>(reduced.data() + p * dims, dims));
  }
  times.quantize_ms = ms_since(t0);

  // Stage 3: table fetch and shift back.
  t0 = std::chrono::steady_clock::now();
  const DistanceGrid& g = cfg.grid;
  const double tol = 1e-6 * g.step();
  for (std::size_t p = 0; p < n; ++p) {
    if (!usable[p]) continue;
    const LutCell& cell = lut.cells()[index[p]];
    if (!cell.valid) continue;
    const double depth = static_cast<double>(cell.relative_depth) + delta[p];
    if (depth < g.d_min() - tol || depth > g.d_max() + tol) continue;
    map.valid[p] = 1;
    map.depth[p] = static_cast<float>(depth);
  }
  times.fetch_ms = ms_since(t0);
  return map;
}

Frame synthetic_frame(const Lut& lut, std::uint32_t width, std::uint32_t height, double noise_sigma,
                      std::uint64_t seed) {
  const LutConfig& cfg = lut.config();
  const auto m = static_cast<std::uint32_t>(cfg.freq.size());
  Frame f(width, height, m);
  const double lo = cfg.grid.d_min();
  const double hi = cfg.grid.d_max();
  for (std::size_t p = 0; p < f.pixels(); ++p) {
    std::mt19937_64 rng(derive_seed(seed, p));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, noise_sigma);
    const int returns = 1 + static_cast<int>(unit(rng) * 3.0) % 3;
    double d = lo + unit(rng) * (hi - lo) * 0.6;
    double amp = 0.5 + unit(rng);
    float* rv = f.pixel(p);
    for (int r = 0; r < returns && d <= hi; ++r) {
      for (std::uint32_t k = 0; k < m; ++k) {
        const double ph = 2.0 * std::numbers::pi * d / cfg.freq.half_wavelength(k);
        rv[k] += static_cast<float>(amp * std::cos(ph));
        rv[k + m] += static_cast<float>(amp * std::sin(ph));
      }
      d += 40.0 + unit(rng) * 150.0;
      amp = 0.2 + 2.0 * unit(rng);
    }
    for (std::uint32_t i = 0; i < 2 * m; ++i) rv[i] += static_cast<float>(gauss(rng));
  }
  return f;
}

}  // namespace sra
