#include "ghfd/spectrum_io.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <thread>

#include "ghfd/scenario.hpp"

namespace ghfd {
namespace {

// Upper bound on grid cells, so a corrupt header cannot request gigabytes.
constexpr std::uint64_t kMaxCells = std::uint64_t{1} << 28;

class Writer {
 public:
  explicit Writer(std::size_t reserve) { bytes_.reserve(reserve); }

  void raw(const char* s, std::size_t n) { bytes_.insert(bytes_.end(), s, s + n); }
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v), 4); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }

  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, std::string origin)
      : bytes_(bytes), origin_(std::move(origin)) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw DataError(origin_ + ": truncated " + what + ": expected " +
                      std::to_string(pos_ + n) + " bytes, got " + std::to_string(bytes_.size()));
    }
  }
  std::string raw(std::size_t n) {
    need(n, "header");
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(le(4))); }
  double f64() { return std::bit_cast<double>(le(8)); }

  std::size_t position() const { return pos_; }
  std::size_t size() const { return bytes_.size(); }
  const std::string& origin() const { return origin_; }

 private:
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n), "header");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::vector<std::uint8_t>& bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

void check_exact_length(const Reader& r, std::uint64_t expected) {
  if (r.size() != expected) {
    throw DataError(r.origin() + ": " + (r.size() < expected ? "truncated" : "oversized") +
                    " payload: expected " + std::to_string(expected) + " bytes, got " +
                    std::to_string(r.size()));
  }
}

AxisRange read_axis(Reader& r) {
  AxisRange a;
  a.min = r.f64();
  a.max = r.f64();
  return a;
}

void check_axis(const AxisRange& a, bool must_increase, const std::string& what) {
  if (!std::isfinite(a.min) || !std::isfinite(a.max)) {
    throw DataError(what + " axis has non-finite bounds");
  }
  if (must_increase && !(a.min < a.max)) throw DataError(what + " axis needs min < max");
}

const char* kind_key(SpecKind kind) {
  switch (kind) {
    case SpecKind::kVa: return "va";
    case SpecKind::kDoa: return "doa";
    case SpecKind::kTof: return "tof";
  }
  return "va";
}

SpecKind kind_from_key(const std::string& key) {
  if (key == "va") return SpecKind::kVa;
  if (key == "doa") return SpecKind::kDoa;
  if (key == "tof") return SpecKind::kTof;
  throw DataError("unknown spectrum kind '" + key + "'");
}

std::vector<float> to_f32(const double* values, std::size_t n) {
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(values[i]);
  return out;
}

}  // namespace

const char* spec_kind_name(SpecKind kind) {
  switch (kind) {
    case SpecKind::kVa: return "VA";
    case SpecKind::kDoa: return "DoA";
    case SpecKind::kTof: return "ToF";
  }
  return "?";
}

void validate_spec_shape(SpecKind kind, std::uint32_t rows, std::uint32_t cols) {
  const auto k = static_cast<unsigned>(kind);
  if (k > 2) throw DataError("unknown SPEC kind " + std::to_string(k));
  const std::string shape = std::to_string(rows) + "x" + std::to_string(cols);
  if (kind == SpecKind::kVa) {
    if (rows < 2 || cols < 2) throw DataError("VA spectrum needs at least 2x2 cells, got " + shape);
  } else if (rows != 1 || cols < 2) {
    throw DataError(std::string(spec_kind_name(kind)) + " spectrum must be 1 x N with N >= 2, got " +
                    shape);
  }
  if (static_cast<std::uint64_t>(rows) * cols > kMaxCells) {
    throw DataError("SPEC grid " + shape + " exceeds the cell limit");
  }
}

std::vector<std::uint8_t> encode_spec(const SpecFile& spec) {
  validate_spec_shape(spec.kind, spec.rows, spec.cols);
  check_axis(spec.row_axis, spec.kind == SpecKind::kVa, "row");
  check_axis(spec.col_axis, true, "column");
  const std::size_t cells = static_cast<std::size_t>(spec.rows) * spec.cols;
  if (spec.payload.size() != cells) {
    throw DataError("SPEC payload has " + std::to_string(spec.payload.size()) + " values for " +
                    std::to_string(cells) + " cells");
  }
  for (std::size_t i = 0; i < cells; ++i) {
    if (!std::isfinite(spec.payload[i])) {
      throw DataError("SPEC payload value " + std::to_string(i) + " is not finite");
    }
  }
  Writer w(kSpecHeaderBytes + 4 * cells);
  w.raw("SPEC", 4);
  w.u16(kSpecVersion);
  w.u8(static_cast<std::uint8_t>(spec.kind));
  w.u32(spec.rows);
  w.u32(spec.cols);
  w.f64(spec.row_axis.min);
  w.f64(spec.row_axis.max);
  w.f64(spec.col_axis.min);
  w.f64(spec.col_axis.max);
  for (float v : spec.payload) w.f32(v);
  return w.take();
}

SpecFile decode_spec(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  Reader r(bytes, origin);
  if (r.raw(4) != "SPEC") throw DataError(origin + ": bad magic, not a SPEC file");
  const std::uint16_t version = r.u16();
  if (version != kSpecVersion) {
    throw DataError(origin + ": unsupported SPEC version " + std::to_string(version));
  }
  SpecFile spec;
  const std::uint8_t kind = r.u8();
  if (kind > 2) throw DataError(origin + ": unknown SPEC kind " + std::to_string(kind));
  spec.kind = static_cast<SpecKind>(kind);
  spec.rows = r.u32();
  spec.cols = r.u32();
  spec.row_axis = read_axis(r);
  spec.col_axis = read_axis(r);
  try {
    validate_spec_shape(spec.kind, spec.rows, spec.cols);
    check_axis(spec.row_axis, spec.kind == SpecKind::kVa, "row");
    check_axis(spec.col_axis, true, "column");
  } catch (const DataError& e) {
    throw DataError(origin + ": " + e.what());
  }
  const std::uint64_t cells = static_cast<std::uint64_t>(spec.rows) * spec.cols;
  check_exact_length(r, kSpecHeaderBytes + 4 * cells);
  spec.payload.resize(cells);
  for (auto& v : spec.payload) {
    v = r.f32();
    if (!std::isfinite(v)) throw DataError(origin + ": non-finite value in payload");
  }
  return spec;
}

void write_spec(const std::filesystem::path& path, const SpecFile& spec) {
  atomic_write(path, encode_spec(spec));
}

SpecFile read_spec(const std::filesystem::path& path) {
  return decode_spec(read_bytes(path), path.string());
}

SpecFile to_spec(const VaSpectrum& spectrum) {
  SpecFile spec;
  spec.kind = SpecKind::kVa;
  spec.rows = static_cast<std::uint32_t>(spectrum.grid.rows());
  spec.cols = static_cast<std::uint32_t>(spectrum.grid.cols());
  spec.row_axis = {spectrum.axes.v_min, spectrum.axes.v_max};
  spec.col_axis = {spectrum.axes.a_min, spectrum.axes.a_max};
  spec.payload.resize(static_cast<std::size_t>(spec.rows) * spec.cols);
  for (std::uint32_t r = 0; r < spec.rows; ++r) {
    for (std::uint32_t c = 0; c < spec.cols; ++c) {
      spec.payload[static_cast<std::size_t>(r) * spec.cols + c] =
          static_cast<float>(spectrum.grid(r, c));
    }
  }
  return spec;
}

SpecFile to_spec(const DoaSpectrum& spectrum) {
  SpecFile spec;
  spec.kind = SpecKind::kDoa;
  spec.rows = 1;
  spec.cols = static_cast<std::uint32_t>(spectrum.grid.size());
  spec.col_axis = {DoaSpectrum::theta_deg(0), DoaSpectrum::theta_deg(spectrum.grid.size() - 1)};
  spec.payload = to_f32(spectrum.grid.data(), spectrum.grid.size());
  return spec;
}

SpecFile to_spec(const TofSpectrum& spectrum) {
  SpecFile spec;
  spec.kind = SpecKind::kTof;
  spec.rows = 1;
  spec.cols = static_cast<std::uint32_t>(spectrum.grid.size());
  spec.col_axis = {0.0, spectrum.tau_s(spectrum.grid.size() - 1)};
  spec.payload = to_f32(spectrum.grid.data(), spectrum.grid.size());
  return spec;
}

VaSpectrum va_from_spec(const SpecFile& spec) {
  if (spec.kind != SpecKind::kVa) {
    throw DataError(std::string("expected a VA spectrum, got ") + spec_kind_name(spec.kind));
  }
  VaSpectrum out;
  out.axes.v_min = spec.row_axis.min;
  out.axes.v_max = spec.row_axis.max;
  out.axes.num_v = spec.rows;
  out.axes.a_min = spec.col_axis.min;
  out.axes.a_max = spec.col_axis.max;
  out.axes.num_a = spec.cols;
  out.grid.resize(spec.rows, spec.cols);
  for (std::uint32_t r = 0; r < spec.rows; ++r) {
    for (std::uint32_t c = 0; c < spec.cols; ++c) out.grid(r, c) = spec.at(r, c);
  }
  return out;
}

DoaSpectrum doa_from_spec(const SpecFile& spec, double d_over_lambda) {
  if (spec.kind != SpecKind::kDoa) {
    throw DataError(std::string("expected a DoA spectrum, got ") + spec_kind_name(spec.kind));
  }
  if (spec.cols != DoaSpectrum::kBins || spec.col_axis.min != -90.0 || spec.col_axis.max != 90.0) {
    throw DataError("DoA spectrum must span -90..90 deg in " +
                    std::to_string(DoaSpectrum::kBins) + " bins");
  }
  DoaSpectrum out;
  out.d_over_lambda = d_over_lambda;
  out.grid.assign(spec.payload.begin(), spec.payload.end());
  return out;
}

TofSpectrum tof_from_spec(const SpecFile& spec) {
  if (spec.kind != SpecKind::kTof) {
    throw DataError(std::string("expected a ToF spectrum, got ") + spec_kind_name(spec.kind));
  }
  if (spec.cols != TofSpectrum::kBins || spec.col_axis.min != 0.0) {
    throw DataError("ToF spectrum must start at 0 with " + std::to_string(TofSpectrum::kBins) +
                    " bins");
  }
  TofSpectrum out;
  const double n = static_cast<double>(TofSpectrum::kBins);
  out.tof_period_s = spec.col_axis.max * n / (n - 1.0);
  out.grid.assign(spec.payload.begin(), spec.payload.end());
  return out;
}

std::vector<std::uint8_t> encode_csi(const CsiRecording& rec) {
  const std::size_t m = rec.num_antennas();
  const std::size_t k = rec.num_subcarriers();
  const std::size_t w = rec.num_frames();
  if (m == 0 || m > 0xFFFF) throw DataError("CSI antenna count must be 1..65535");
  if (k == 0 || w == 0 || k > 0xFFFFFFFFu || w > 0xFFFFFFFFu) {
    throw DataError("CSI needs at least one subcarrier and one frame");
  }
  if (static_cast<std::size_t>(rec.reference.rows()) != k ||
      static_cast<std::size_t>(rec.reference.cols()) != w) {
    throw DataError("CSI reference block must be K x W");
  }
  if (!(rec.frame_period_s > 0.0) || !std::isfinite(rec.frame_period_s)) {
    throw DataError("CSI frame period must be positive");
  }
  Writer w8(kCsiHeaderBytes + 8 * (m + 1) * k * w);
  w8.raw("GHFD", 4);
  w8.u16(kCsiVersion);
  w8.u16(static_cast<std::uint16_t>(m));
  w8.u32(static_cast<std::uint32_t>(k));
  w8.u32(static_cast<std::uint32_t>(w));
  w8.f64(rec.frame_period_s);
  for (const cd& z : rec.surveillance.data()) {
    w8.f32(static_cast<float>(z.real()));
    w8.f32(static_cast<float>(z.imag()));
  }
  for (std::size_t kk = 0; kk < k; ++kk) {
    for (std::size_t t = 0; t < w; ++t) {
      const cd z = rec.reference(static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(t));
      w8.f32(static_cast<float>(z.real()));
      w8.f32(static_cast<float>(z.imag()));
    }
  }
  return w8.take();
}

CsiRecording decode_csi(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  Reader r(bytes, origin);
  if (r.raw(4) != "GHFD") throw DataError(origin + ": bad magic, not a CSI file");
  const std::uint16_t version = r.u16();
  if (version != kCsiVersion) {
    throw DataError(origin + ": unsupported CSI version " + std::to_string(version));
  }
  const std::size_t m = r.u16();
  const std::size_t k = r.u32();
  const std::size_t w = r.u32();
  const double period = r.f64();
  if (m == 0) throw DataError(origin + ": header has M = 0 antennas");
  if (k == 0 || w == 0) throw DataError(origin + ": header has K = 0 or W = 0");
  if (!(period > 0.0) || !std::isfinite(period)) {
    throw DataError(origin + ": frame period must be positive");
  }
  const std::uint64_t cells = static_cast<std::uint64_t>(m + 1) * k * w;
  if (cells > kMaxCells) throw DataError(origin + ": CSI dimensions exceed the cell limit");
  check_exact_length(r, kCsiHeaderBytes + 8 * cells);

  CsiRecording rec;
  rec.frame_period_s = period;
  rec.surveillance = CTensor3(m, k, w);
  for (cd& z : rec.surveillance.data()) {
    const float re = r.f32();
    const float im = r.f32();
    z = cd(re, im);
  }
  rec.reference.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(w));
  for (std::size_t kk = 0; kk < k; ++kk) {
    for (std::size_t t = 0; t < w; ++t) {
      const float re = r.f32();
      const float im = r.f32();
      rec.reference(static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(t)) = cd(re, im);
    }
  }
  rec.config.radio.num_ula_antennas = m;
  rec.config.radio.num_subcarriers = k;
  rec.config.radio.packet_rate_hz = 1.0 / period;
  return rec;
}

std::filesystem::path csi_sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".meta.json");
}

void write_csi(const std::filesystem::path& path, const CsiRecording& recording) {
  atomic_write(path, encode_csi(recording));
  const nlohmann::json meta = recording.config;
  atomic_write_text(csi_sidecar_path(path), meta.dump(2) + "\n");
}

CsiRecording read_csi(const std::filesystem::path& path) {
  CsiRecording rec = decode_csi(read_bytes(path), path.string());
  const auto sidecar = csi_sidecar_path(path);
  if (!std::filesystem::exists(sidecar)) return rec;
  std::ifstream in(sidecar);
  SimConfig config;
  try {
    config = nlohmann::json::parse(in).get<SimConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(sidecar.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw DataError(sidecar.string() + ": " + e.what());
  }
  if (config.radio.num_ula_antennas != rec.num_antennas() ||
      config.radio.num_subcarriers != rec.num_subcarriers()) {
    throw DataError(sidecar.string() + ": radio dimensions disagree with the CSI header");
  }
  rec.config = config;
  return rec;
}

void to_json(nlohmann::json& j, const PairRecord& r) {
  j = {{"noisy_path", r.noisy_path},
       {"expert_path", r.expert_path},
       {"num_targets", r.num_targets},
       {"snr_noisy_db", r.snr_noisy_db},
       {"snr_expert_db", r.snr_expert_db},
       {"seed", r.seed},
       {"kind", kind_key(r.kind)}};
  if (!r.truth_cells.empty()) j["truth_cells"] = r.truth_cells;
}

void from_json(const nlohmann::json& j, PairRecord& r) {
  j.at("noisy_path").get_to(r.noisy_path);
  j.at("expert_path").get_to(r.expert_path);
  j.at("num_targets").get_to(r.num_targets);
  r.snr_noisy_db = j.value("snr_noisy_db", -10.0);
  r.snr_expert_db = j.value("snr_expert_db", 10.0);
  j.at("seed").get_to(r.seed);
  r.kind = kind_from_key(j.value("kind", std::string("va")));
  r.truth_cells.clear();
  if (j.contains("truth_cells")) j.at("truth_cells").get_to(r.truth_cells);
}

std::filesystem::path emit_pair_manifest(const std::filesystem::path& dir,
                                         std::vector<PairRecord> pairs) {
  if (pairs.empty()) throw ConfigError("pair manifest needs at least one pair");
  auto relative = [&](std::string& p) {
    std::filesystem::path path(p);
    if (path.is_absolute()) path = path.lexically_relative(std::filesystem::absolute(dir));
    if (path.empty()) throw DataError("pair path " + p + " is not under " + dir.string());
    p = path.generic_string();
    if (!std::filesystem::exists(dir / path)) {
      throw DataError("pair manifest references missing file " + (dir / path).string());
    }
  };
  for (auto& pair : pairs) {
    relative(pair.noisy_path);
    relative(pair.expert_path);
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const PairRecord& a, const PairRecord& b) { return a.seed < b.seed; });
  std::string text;
  for (const auto& pair : pairs) text += nlohmann::json(pair).dump() + "\n";
  const auto path = dir / kPairManifestName;
  atomic_write_text(path, text);
  return path;
}

std::vector<PairRecord> read_pair_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pair manifest " + path.string());
  const auto dir = path.parent_path();
  std::vector<PairRecord> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    PairRecord rec;
    try {
      rec = nlohmann::json::parse(line).get<PairRecord>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    for (const auto* p : {&rec.noisy_path, &rec.expert_path}) {
      const SpecFile spec = read_spec(dir / *p);
      if (spec.kind != rec.kind) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + *p +
                        " is not a " + spec_kind_name(rec.kind) + " spectrum");
      }
    }
    pairs.push_back(std::move(rec));
  }
  return pairs;
}

void atomic_write(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  static std::atomic<std::uint64_t> counter{0};
  const auto tag = std::hash<std::thread::id>{}(std::this_thread::get_id()) ^ (counter++ << 20);
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(tag);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw DataError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

void atomic_write_text(const std::filesystem::path& path, const std::string& text) {
  atomic_write(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace ghfd
