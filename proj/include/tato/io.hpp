#pragma once

// Binary file formats and text inputs.
//
// Every binary file starts with
//   char[4]  "TATO"
//   u16      format version
//   u64      FNV-1a hash of the canonical geometry record
//   u16      payload kind
//   geometry record: f64 R, f64 R_gamma, f64 x_right, f64 z_right,
//                    u32 n_detectors, u32 n_collocation
// followed by a kind-specific payload. Integers and IEEE-754 doubles are
// little-endian; complex values are (re, im) pairs.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <complex>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

#include "tato/densities.hpp"
#include "tato/error.hpp"
#include "tato/forward.hpp"
#include "tato/geometry.hpp"
#include "tato/image.hpp"
#include "tato/phantom.hpp"
#include "tato/spectral.hpp"

namespace tato::io {

inline constexpr char kMagic[4] = {'T', 'A', 'T', 'O'};
inline constexpr std::uint16_t kVersion = 1;

enum class Kind : std::uint16_t { densities = 1, projections = 2, image = 3, sinogram = 4 };

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::densities: return "densities";
    case Kind::projections: return "projections";
    case Kind::image: return "image";
    case Kind::sinogram: return "sinogram";
  }
  return "unknown";
}

/// Little-endian byte sink.
class Writer {
public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v), 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void c128(std::complex<double> v) {
    f64(v.real());
    f64(v.imag());
  }
  void bytes(const char* p, std::size_t n) { buf_.append(p, n); }
  const std::string& data() const { return buf_; }

private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string buf_;
};

/// Little-endian byte source with bounds checks.
class Reader {
public:
  explicit Reader(std::string data) : buf_(std::move(data)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::complex<double> c128() {
    const double re = f64();
    return {re, f64()};
  }
  void bytes(char* out, std::size_t n) {
    need(n);
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const { return buf_.size() - pos_; }
  void expect_end() const {
    if (remaining() != 0) throw FormatError("trailing bytes after payload");
  }

private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw FormatError("file is truncated");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string buf_;
  std::size_t pos_ = 0;
};

/// Canonical serialization of the acquisition geometry.
inline std::string canonical_geometry(const AcquisitionGeometry& g) {
  Writer w;
  w.f64(g.roi_radius);
  w.f64(g.arc_radius);
  w.f64(g.x_right);
  w.f64(g.z_right);
  w.u32(static_cast<std::uint32_t>(g.n_detectors));
  w.u32(static_cast<std::uint32_t>(g.n_collocation));
  return w.data();
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t geometry_hash(const AcquisitionGeometry& g) { return fnv1a64(canonical_geometry(g)); }

struct Header {
  std::uint16_t version = kVersion;
  std::uint64_t hash = 0;
  Kind kind = Kind::image;
  AcquisitionGeometry geometry;
};

inline void write_header(Writer& w, Kind kind, const AcquisitionGeometry& g) {
  w.bytes(kMagic, 4);
  w.u16(kVersion);
  w.u64(geometry_hash(g));
  w.u16(static_cast<std::uint16_t>(kind));
  const std::string rec = canonical_geometry(g);
  w.bytes(rec.data(), rec.size());
}

inline Header read_header(Reader& r) {
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("not a TATO file (bad magic)");
  Header h;
  h.version = r.u16();
  if (h.version != kVersion) throw FormatError("unsupported format version " + std::to_string(h.version));
  h.hash = r.u64();
  h.kind = static_cast<Kind>(r.u16());
  AcquisitionGeometry& g = h.geometry;
  g.roi_radius = r.f64();
  g.arc_radius = r.f64();
  g.x_right = r.f64();
  g.z_right = r.f64();
  g.n_detectors = static_cast<int>(r.u32());
  g.n_collocation = static_cast<int>(r.u32());
  if (geometry_hash(g) != h.hash) throw FormatError("geometry hash does not match the stored geometry record");
  return h;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error("cannot open " + path.string());
  std::string data(static_cast<std::size_t>(in.tellg()), '\0');
  in.seekg(0);
  in.read(data.data(), static_cast<std::streamsize>(data.size()));
  if (!in) throw Error("cannot read " + path.string());
  return data;
}

/// Writes to a temporary file beside `path`, then renames it into place.
inline void write_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw Error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

inline Header peek_header(const std::filesystem::path& path) {
  Reader r(read_file(path));
  return read_header(r);
}

namespace detail {

inline Reader open(const std::filesystem::path& path, Kind expected, Header& h) {
  Reader r(read_file(path));
  h = read_header(r);
  if (h.kind != expected)
    throw FormatError(path.string() + " holds " + kind_name(h.kind) + ", expected " + kind_name(expected));
  return r;
}

inline std::uint32_t checked_u32(std::size_t v) {
  if (v > 0xffffffffULL) throw FormatError("dimension does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

}  // namespace detail

// Density cache payload:
//   u16 method, f64 K, u32 n_lambda, u32 n_theta, u32 n_detectors,
//   f64 lambdas[n_lambda],
//   for each lambda, each stored theta (theta < pi): c128 rho_J[nd], c128 rho_Y[nd],
//   f64 residuals[n_lambda * n_theta/2], i32 jmax[n_lambda * n_theta/2].

inline std::string encode(const DensitySet& s) {
  Writer w;
  write_header(w, Kind::densities, s.geometry);
  w.u16(static_cast<std::uint16_t>(s.method));
  w.f64(s.K);
  w.u32(detail::checked_u32(s.n_lambda()));
  w.u32(detail::checked_u32(static_cast<std::size_t>(s.n_theta)));
  w.u32(detail::checked_u32(s.n_detectors()));
  for (double l : s.lambdas) w.f64(l);
  for (const cplx& v : s.raw_data()) w.c128(v);
  for (double v : s.raw_residuals()) w.f64(v);
  for (std::int32_t v : s.raw_jmax()) w.i32(v);
  return w.data();
}

inline void write_densities(const std::filesystem::path& path, const DensitySet& s) { write_atomic(path, encode(s)); }

inline DensitySet read_densities(const std::filesystem::path& path) {
  Header h;
  Reader r = detail::open(path, Kind::densities, h);
  const auto method = static_cast<DensityMethod>(r.u16());
  if (method != DensityMethod::svd && method != DensityMethod::exact_series)
    throw FormatError("unknown density method");
  const double K = r.f64();
  const std::uint32_t nl = r.u32();
  const std::uint32_t nt = r.u32();
  const std::uint32_t nd = r.u32();
  if (static_cast<int>(nd) != h.geometry.n_detectors) throw FormatError("detector count disagrees with geometry");
  if (nt < 2 || nt % 2 != 0) throw FormatError("density cache has an odd angle count");
  const std::size_t cells = static_cast<std::size_t>(nl) * (nt / 2);
  if (r.remaining() != nl * 8ULL + cells * (2ULL * nd * 16 + 8 + 4)) throw FormatError("density cache size mismatch");
  std::vector<double> lambdas(nl);
  for (double& l : lambdas) l = r.f64();
  DensitySet s(h.geometry, method, K, std::move(lambdas), static_cast<int>(nt));
  for (cplx& v : s.raw_data()) v = r.c128();
  for (double& v : s.raw_residuals()) v = r.f64();
  for (std::int32_t& v : s.raw_jmax()) v = r.i32();
  r.expect_end();
  return s;
}

// Projections payload:
//   f64 r_step, u32 n_detectors, u32 n_radii, f64 noise_level, u64 noise_seed,
//   f64 values[n_detectors][n_radii] (detector-major).

inline std::string encode(const Projections& p) {
  Writer w;
  write_header(w, Kind::projections, p.geometry);
  w.f64(p.r_step);
  w.u32(detail::checked_u32(static_cast<std::size_t>(p.values.rows())));
  w.u32(detail::checked_u32(static_cast<std::size_t>(p.values.cols())));
  w.f64(p.noise_level);
  w.u64(p.noise_seed);
  for (Eigen::Index k = 0; k < p.values.rows(); ++k)
    for (Eigen::Index m = 0; m < p.values.cols(); ++m) w.f64(p.values(k, m));
  return w.data();
}

inline void write_projections(const std::filesystem::path& path, const Projections& p) {
  write_atomic(path, encode(p));
}

inline Projections read_projections(const std::filesystem::path& path) {
  Header h;
  Reader r = detail::open(path, Kind::projections, h);
  Projections p;
  p.geometry = h.geometry;
  p.r_step = r.f64();
  const std::uint32_t nd = r.u32();
  const std::uint32_t nr = r.u32();
  if (static_cast<int>(nd) != h.geometry.n_detectors) throw FormatError("detector count disagrees with geometry");
  p.noise_level = r.f64();
  p.noise_seed = r.u64();
  if (r.remaining() != 8ULL * nd * nr) throw FormatError("projection payload size mismatch");
  p.values.resize(nd, nr);
  for (Eigen::Index k = 0; k < p.values.rows(); ++k)
    for (Eigen::Index m = 0; m < p.values.cols(); ++m) p.values(k, m) = r.f64();
  r.expect_end();
  return p;
}

// Image payload:
//   u32 n, f64 half_width, u16 filter (0 none, 1 cosine), f64 values[n][n]
//   (row iy along x_2, column ix along x_1).

struct ImageFile {
  AcquisitionGeometry geometry;
  FilterKind filter = FilterKind::none;
  Image image;
};

inline std::string encode(const ImageFile& f) {
  Writer w;
  write_header(w, Kind::image, f.geometry);
  w.u32(detail::checked_u32(static_cast<std::size_t>(f.image.grid.n)));
  w.f64(f.image.grid.half_width);
  w.u16(f.filter == FilterKind::cosine ? 1 : 0);
  for (double v : f.image.values) w.f64(v);
  return w.data();
}

inline void write_image(const std::filesystem::path& path, const ImageFile& f) { write_atomic(path, encode(f)); }

inline ImageFile read_image(const std::filesystem::path& path) {
  Header h;
  Reader r = detail::open(path, Kind::image, h);
  ImageFile f;
  f.geometry = h.geometry;
  GridSpec grid;
  grid.n = static_cast<int>(r.u32());
  grid.half_width = r.f64();
  const std::uint16_t filter = r.u16();
  if (filter > 1) throw FormatError("unknown filter kind");
  f.filter = filter == 1 ? FilterKind::cosine : FilterKind::none;
  if (grid.n < 2 || r.remaining() != 8ULL * grid.size()) throw FormatError("image payload size mismatch");
  f.image = Image(grid);
  for (double& v : f.image.values) v = r.f64();
  r.expect_end();
  return f;
}

// Sinogram payload:
//   u32 n_angles, u32 n_offsets, f64 s_first, f64 s_step, f64 angles[n_angles],
//   f64 values[n_angles][n_offsets].

inline std::string encode(const Sinogram& s, const AcquisitionGeometry& g) {
  Writer w;
  write_header(w, Kind::sinogram, g);
  w.u32(detail::checked_u32(s.n_angles()));
  w.u32(detail::checked_u32(static_cast<std::size_t>(s.n_offsets)));
  w.f64(s.s_first);
  w.f64(s.s_step);
  for (double a : s.angles) w.f64(a);
  for (double v : s.values) w.f64(v);
  return w.data();
}

inline void write_sinogram(const std::filesystem::path& path, const Sinogram& s, const AcquisitionGeometry& g) {
  write_atomic(path, encode(s, g));
}

inline Sinogram read_sinogram(const std::filesystem::path& path) {
  Header h;
  Reader r = detail::open(path, Kind::sinogram, h);
  const std::uint32_t na = r.u32();
  const std::uint32_t no = r.u32();
  const double first = r.f64();
  const double step = r.f64();
  if (r.remaining() != 8ULL * na * (1ULL + no)) throw FormatError("sinogram payload size mismatch");
  std::vector<double> angles(na);
  for (double& a : angles) a = r.f64();
  Sinogram s(std::move(angles), first, step, static_cast<int>(no));
  for (double& v : s.values) v = r.f64();
  r.expect_end();
  return s;
}

/// Display window of an 8-bit preview.
struct Window {
  double min = 0.0;
  double max = 0.0;
};

/// Binary PGM (P5): min -> 0, max -> 255, linear in between; the top image
/// row is the largest x_2. A constant image maps to 0.
inline Window write_pgm(const std::filesystem::path& path, const Image& img) {
  Window win{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (double v : img.values) {
    win.min = std::min(win.min, v);
    win.max = std::max(win.max, v);
  }
  if (img.values.empty()) win = {};
  const double span = win.max - win.min;
  std::string out = "P5\n" + std::to_string(img.grid.n) + " " + std::to_string(img.grid.n) + "\n255\n";
  for (int iy = img.grid.n - 1; iy >= 0; --iy)
    for (int ix = 0; ix < img.grid.n; ++ix) {
      const double t = span > 0 ? (img.at(iy, ix) - win.min) / span : 0.0;
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0))));
    }
  write_atomic(path, out);
  std::ostringstream side;
  side.precision(17);
  side << "min = " << win.min << "\nmax = " << win.max << "\n";
  std::filesystem::path side_path = path;
  side_path += ".window";
  write_atomic(side_path, side.str());
  return win;
}

/// Parses key = value lines. '#' starts a comment; repeated keys accumulate.
inline std::multimap<std::string, std::string> parse_key_values(std::string_view text) {
  std::multimap<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("line " + std::to_string(lineno) + ": expected key = value");
    kv.emplace(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return kv;
}

/// Built-in phantoms: "two-bump", "disks", "half-disks".
inline Phantom builtin_phantom(std::string_view name) {
  if (name == "two-bump") return two_bump_phantom();
  if (name == "disks") return default_disk_phantom();
  if (name == "half-disks") return default_half_disk_phantom();
  throw Error("unknown built-in phantom '" + std::string(name) + "'");
}

/// Phantom description:
///   builtin = two-bump | disks | half-disks
/// or
///   type = smooth          with lines   bump = cx cy r
///   type = disk            with lines   disk = cx cy r amplitude
inline Phantom parse_phantom(std::string_view text) {
  const auto kv = parse_key_values(text);
  if (auto it = kv.find("builtin"); it != kv.end()) return builtin_phantom(it->second);
  const auto type = kv.find("type");
  if (type == kv.end()) throw FormatError("phantom description needs 'type' or 'builtin'");
  auto numbers = [](const std::string& s, std::size_t count) {
    std::istringstream in(s);
    std::vector<double> v;
    double x;
    while (in >> x) v.push_back(x);
    if (v.size() != count || !in.eof()) throw FormatError("expected " + std::to_string(count) + " numbers in '" + s + "'");
    for (double d : v)
      if (!std::isfinite(d)) throw FormatError("non-finite value in '" + s + "'");
    return v;
  };
  if (type->second == "smooth") {
    SmoothPhantom f;
    for (auto [it, end] = kv.equal_range("bump"); it != end; ++it) {
      const auto v = numbers(it->second, 3);
      if (!(v[2] > 0)) throw FormatError("bump radius must be positive");
      f.bumps.push_back({{v[0], v[1]}, v[2]});
    }
    return f;
  }
  if (type->second == "disk") {
    DiskPhantom f;
    for (auto [it, end] = kv.equal_range("disk"); it != end; ++it) {
      const auto v = numbers(it->second, 4);
      if (!(v[2] > 0)) throw FormatError("disk radius must be positive");
      f.disks.push_back({{v[0], v[1]}, v[2], v[3]});
    }
    return f;
  }
  throw FormatError("unknown phantom type '" + type->second + "'");
}

inline Phantom load_phantom(const std::string& spec) {
  if (spec == "two-bump" || spec == "disks" || spec == "half-disks") return builtin_phantom(spec);
  return parse_phantom(read_file(spec));
}

}  // namespace tato::io
