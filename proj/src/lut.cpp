#include "sra/lut.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <mutex>
#include <numbers>
#include <thread>

namespace sra {

namespace {

constexpr char kMagic[8] = {'S', 'R', 'A', 'L', 'U', 'T', '\0', '\1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kCellBytes = 9;

class Writer {
public:
  void u8(std::uint8_t x) { out.push_back(x); }
  void u32(std::uint32_t x) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
  }
  void u64(std::uint64_t x) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
  }
  void f32(float x) { u32(std::bit_cast<std::uint32_t>(x)); }
  void f64(double x) { u64(std::bit_cast<std::uint64_t>(x)); }
  std::vector<std::uint8_t> out;
};

class Reader {
public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw LutFormatError("lut: truncated stream");
  }
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return x;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return x;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t remaining() const { return in_.size() - pos_; }

private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

// Configuration fields in header order.
void write_config(Writer& w, const LutConfig& cfg) {
  w.u32(static_cast<std::uint32_t>(cfg.freq.size()));
  w.u32(cfg.cells_per_dim);
  w.u32(static_cast<std::uint32_t>(cfg.k));
  w.f64(cfg.grid.d_min());
  w.f64(cfg.grid.d_max());
  w.f64(cfg.grid.step());
  for (double f : cfg.freq.frequencies()) w.f64(f);
  w.f64(cfg.epsilon);
  w.f64(cfg.noise_sigma);
  w.f64(cfg.noise_allowance);
  w.f64(cfg.peak_threshold);
  w.f64(cfg.confidence_threshold);
}

LutConfig read_config(Reader& r) {
  const std::uint32_t m = r.u32();
  if (m < 2 || m > 8) throw LutFormatError("lut: unsupported frequency count " + std::to_string(m));
  LutConfig cfg;
  cfg.cells_per_dim = r.u32();
  cfg.k = r.u32();
  const double d_min = r.f64();
  const double d_max = r.f64();
  const double step = r.f64();
  std::vector<double> freqs(m);
  for (double& f : freqs) f = r.f64();
  cfg.epsilon = r.f64();
  cfg.noise_sigma = r.f64();
  cfg.noise_allowance = r.f64();
  cfg.peak_threshold = r.f64();
  cfg.confidence_threshold = r.f64();
  try {
    cfg.grid = DistanceGrid(d_min, d_max, step);
    cfg.freq = FrequencyConfig(std::move(freqs));
    cfg.validate();
  } catch (const std::exception& e) {
    throw LutFormatError(std::string("lut: invalid configuration in header: ") + e.what());
  }
  return cfg;
}

void fnv(std::uint64_t& h, std::span<const std::uint8_t> bytes) {
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

LutConfig LutConfig::defaults() {
  LutConfig cfg;
  cfg.k = cfg.freq.shortest_half_wavelength_index();
  return cfg;
}

void LutConfig::validate() const {
  if (freq.size() < 2) throw std::invalid_argument("LutConfig: at least two frequencies are required");
  if (k >= freq.size()) throw std::invalid_argument("LutConfig: reference index out of range");
  if (cells_per_dim < 2) throw std::invalid_argument("LutConfig: cells_per_dim must be at least 2");
  const double total = std::pow(static_cast<double>(cells_per_dim), static_cast<double>(dims()));
  if (total > 4.0e9) throw std::invalid_argument("LutConfig: table too large");
  if (!(noise_sigma > 0.0)) throw std::invalid_argument("LutConfig: noise sigma must be positive");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw std::invalid_argument("LutConfig: epsilon must lie in [0, 1)");
}

std::uint64_t LutConfig::cell_count() const {
  std::uint64_t n = 1;
  for (std::size_t d = 0; d < dims(); ++d) n *= cells_per_dim;
  return n;
}

CanonicalPipelineConfig LutConfig::pipeline_config() const {
  CanonicalPipelineConfig p;
  p.freq = freq;
  p.grid = grid;
  p.k = k;
  p.epsilon = epsilon;
  p.noise_sigma = noise_sigma;
  p.noise_allowance = noise_allowance;
  p.peak_threshold = peak_threshold;
  p.confidence_threshold = confidence_threshold;
  return p;
}

std::uint64_t lut_fingerprint(const LutConfig& cfg) {
  Writer w;
  write_config(w, cfg);
  const DictionaryMatrix phi = build_phi(cfg.extended_grid(), cfg.freq);
  for (Eigen::Index j = 0; j < phi.entries().cols(); ++j) {
    for (Eigen::Index i = 0; i < phi.entries().rows(); ++i) w.f64(phi.entries()(i, j));
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  fnv(h, w.out);
  return h;
}

std::vector<double> cell_coordinates(const LutConfig& cfg, std::uint64_t index) {
  const std::size_t dims = cfg.dims();
  std::vector<double> c(dims);
  for (std::size_t d = dims; d-- > 0;) {
    c[d] = cell_center(static_cast<std::uint32_t>(index % cfg.cells_per_dim), cfg.cells_per_dim);
    index /= cfg.cells_per_dim;
  }
  return c;
}

bool cell_reachable(const LutConfig& cfg, std::uint64_t index) {
  const double half = 1.0 / static_cast<double>(cfg.cells_per_dim);
  double nearest = 0.0;
  for (double c : cell_coordinates(cfg, index)) {
    const double gap = std::max(0.0, std::abs(c) - half);
    nearest += gap * gap;
  }
  return nearest <= 1.0;
}

std::uint64_t count_reachable_cells(const LutConfig& cfg) {
  std::uint64_t n = 0;
  for (std::uint64_t i = 0; i < cfg.cell_count(); ++i) n += cell_reachable(cfg, i) ? 1 : 0;
  return n;
}

std::uint64_t count_centers_inside_ball(const LutConfig& cfg) {
  std::uint64_t n = 0;
  for (std::uint64_t i = 0; i < cfg.cell_count(); ++i) {
    double sum = 0.0;
    for (double c : cell_coordinates(cfg, i)) sum += c * c;
    n += sum <= 1.0 ? 1 : 0;
  }
  return n;
}

std::vector<LutCell> build_cells(const CanonicalPipeline& pipeline, const LutConfig& cfg, std::uint64_t begin,
                                 std::uint64_t end) {
  std::vector<LutCell> out;
  out.reserve(static_cast<std::size_t>(end - begin));
  for (std::uint64_t i = begin; i < end; ++i) {
    LutCell cell;
    if (cell_reachable(cfg, i)) {
      CanonicalForm form;
      form.k = cfg.k;
      form.scale = 1.0;
      form.reduced = cell_coordinates(cfg, i);
      double sum = 0.0;
      for (double c : form.reduced) sum += c * c;
      if (sum > 1.0) {
        const double shrink = 1.0 / std::sqrt(sum);
        for (double& c : form.reduced) c *= shrink;
      }
      const DepthEstimate est = pipeline.estimate_canonical(from_canonical(form));
      if (est.valid) {
        cell.relative_depth = static_cast<float>(est.depth);
        cell.confidence = static_cast<float>(est.confidence);
        cell.valid = 1;
      }
    }
    out.push_back(cell);
  }
  return out;
}

Lut build_lut(const LutConfig& cfg, const LutBuildOptions& options) {
  cfg.validate();
  const CanonicalPipeline pipeline(cfg.pipeline_config());
  const std::uint64_t total = cfg.cell_count();
  const std::uint64_t chunk = std::max<std::uint64_t>(1, options.chunk_cells);
  const std::uint64_t chunks = (total + chunk - 1) / chunk;
  std::vector<LutCell> cells(static_cast<std::size_t>(total));
  std::atomic<std::uint64_t> next{0};
  std::mutex callback_mutex;

  auto work = [&] {
    for (;;) {
      const std::uint64_t c = next.fetch_add(1);
      if (c >= chunks) return;
      const std::uint64_t begin = c * chunk;
      const std::uint64_t end = std::min(total, begin + chunk);
      std::vector<LutCell> part;
      bool restored = false;
      if (options.restore_chunk) {
        std::lock_guard lock(callback_mutex);
        restored = options.restore_chunk(begin, part) && part.size() == end - begin;
      }
      if (!restored) part = build_cells(pipeline, cfg, begin, end);
      std::copy(part.begin(), part.end(), cells.begin() + static_cast<std::ptrdiff_t>(begin));
      if (options.on_chunk && !restored) {
        std::lock_guard lock(callback_mutex);
        options.on_chunk(begin, part);
      }
    }
  };
  const unsigned workers = std::max(1u, options.workers);
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return Lut(cfg, std::move(cells));
}

Lut::Lut(LutConfig cfg, std::vector<LutCell> cells) : cfg_(std::move(cfg)), cells_(std::move(cells)) {
  cfg_.validate();
  if (cells_.size() != cfg_.cell_count()) throw std::invalid_argument("Lut: cell count does not match the config");
  fingerprint_ = lut_fingerprint(cfg_);
  const double lk = cfg_.freq.half_wavelength(cfg_.k);
  for (std::size_t j = 0; j < cfg_.freq.size(); ++j) lambda_ratio_.push_back(lk / cfg_.freq.half_wavelength(j));
}

std::uint64_t Lut::cell_index(std::span<const double> reduced) const {
  if (reduced.size() != cfg_.dims()) throw std::invalid_argument("Lut: reduced coordinate count");
  std::uint64_t idx = 0;
  for (double c : reduced) idx = idx * cfg_.cells_per_dim + quantize(c, cfg_.cells_per_dim);
  return idx;
}

template <typename T>
DepthEstimate Lut::query_raw(const T* rv) const {
  const std::size_t m = cfg_.freq.size();
  const std::size_t k = cfg_.k;
  double norm2 = 0.0;
  for (std::size_t i = 0; i < 2 * m; ++i) norm2 += static_cast<double>(rv[i]) * static_cast<double>(rv[i]);
  const double re_k = static_cast<double>(rv[k]);
  const double im_k = static_cast<double>(rv[k + m]);
  if (!(norm2 > 0.0) || (re_k == 0.0 && im_k == 0.0) || !std::isfinite(norm2)) return DepthEstimate::invalid();

  constexpr double two_pi = 2.0 * std::numbers::pi;
  double phase = std::atan2(im_k, re_k);
  if (phase < 0.0) phase += two_pi;
  if (phase >= two_pi) phase = 0.0;
  const double lambda_k = cfg_.freq.half_wavelength(k);
  double delta = lambda_k * phase / two_pi;
  if (delta >= lambda_k) delta = 0.0;
  const double s = 1.0 / std::sqrt(norm2);

  // Real parts occupy the leading m - 1 digits of the row-major index and
  // imaginary parts the trailing ones.
  const std::uint32_t cells = cfg_.cells_per_dim;
  std::uint64_t re_idx = 0;
  std::uint64_t im_idx = 0;
  for (std::size_t j = 0; j < m; ++j) {
    if (j == k) continue;
    const double angle = -phase * lambda_ratio_[j];
    const double c = std::cos(angle);
    const double sn = std::sin(angle);
    const double re = static_cast<double>(rv[j]);
    const double im = static_cast<double>(rv[j + m]);
    re_idx = re_idx * cells + quantize(s * (re * c - im * sn), cells);
    im_idx = im_idx * cells + quantize(s * (re * sn + im * c), cells);
  }
  std::uint64_t shift = 1;
  for (std::size_t j = 1; j < m; ++j) shift *= cells;
  const LutCell& cell = cells_[static_cast<std::size_t>(re_idx * shift + im_idx)];
  if (!cell.valid) return DepthEstimate::invalid();

  const double depth = static_cast<double>(cell.relative_depth) + delta;
  const DistanceGrid& g = cfg_.grid;
  const double tol = 1e-6 * g.step();
  if (depth < g.d_min() - tol || depth > g.d_max() + tol) return DepthEstimate::invalid();
  const auto index = static_cast<std::size_t>(std::max(0L, std::lround((depth - g.d_min()) / g.step())));
  return {depth, true, static_cast<double>(cell.confidence), std::min(index, g.size() - 1)};
}

template DepthEstimate Lut::query_raw<float>(const float*) const;
template DepthEstimate Lut::query_raw<double>(const double*) const;

DepthEstimate Lut::query(const MeasurementVector& v) const {
  if (v.frequency_count() != cfg_.freq.size()) throw std::invalid_argument("Lut::query: frequency count mismatch");
  return query_raw(v.real_view().data());
}

std::vector<std::uint8_t> serialize(const Lut& lut) {
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kVersion);
  write_config(w, lut.config());
  w.u64(lut.fingerprint());
  w.u64(lut.cells().size());
  w.out.reserve(w.out.size() + lut.cells().size() * kCellBytes);
  for (const LutCell& c : lut.cells()) {
    w.f32(c.relative_depth);
    w.f32(c.confidence);
    w.u8(c.valid);
  }
  return std::move(w.out);
}

Lut deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  for (char c : kMagic) {
    if (r.u8() != static_cast<std::uint8_t>(c)) throw LutFormatError("lut: bad magic");
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw LutFormatError("lut: unsupported version " + std::to_string(version));
  const LutConfig cfg = read_config(r);
  const std::uint64_t fingerprint = r.u64();
  const std::uint64_t count = r.u64();
  if (count != cfg.cell_count()) throw LutFormatError("lut: cell count does not match the header");
  if (r.remaining() < count * kCellBytes) throw LutFormatError("lut: truncated stream");
  if (r.remaining() > count * kCellBytes) throw LutFormatError("lut: trailing bytes after the cells");
  if (fingerprint != lut_fingerprint(cfg)) throw LutFormatError("lut: fingerprint mismatch");
  std::vector<LutCell> cells(static_cast<std::size_t>(count));
  for (LutCell& c : cells) {
    c.relative_depth = r.f32();
    c.confidence = r.f32();
    c.valid = r.u8();
    if (c.valid > 1) throw LutFormatError("lut: corrupt validity flag");
  }
  return Lut(cfg, std::move(cells));
}

Lut deserialize(std::span<const std::uint8_t> bytes, const LutConfig& expected) {
  Lut lut = deserialize(bytes);
  if (lut.fingerprint() != lut_fingerprint(expected)) {
    throw LutFormatError("lut: table was built for a different configuration");
  }
  return lut;
}

void save_lut(const Lut& lut, const std::string& path) {
  const std::vector<std::uint8_t> bytes = serialize(lut);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_lut: cannot open " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("save_lut: write failed for " + path);
}

Lut load_lut(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_lut: cannot open " + path);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace sra
