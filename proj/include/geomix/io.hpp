#pragma once

#include "geomix/error.hpp"
#include "geomix/flow_map.hpp"
#include "geomix/flow_models.hpp"
#include "geomix/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace geomix {

enum class DType { f64, i32 };

/// A scalar field on an nx-by-ny grid, row-major (row 0 at y_lo).
struct GridField {
  std::string name;
  int nx = 0;
  int ny = 0;
  Box bounds;
  DType dtype = DType::f64;
  std::vector<double> values;
};

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& tok, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (tok.empty() || end != tok.c_str() + tok.size()) {
    throw Error("cannot parse number '" + tok + "' in " + what);
  }
  return v;
}

/// Next non-empty line split at whitespace; empty when the stream is done.
inline std::vector<std::string> next_tokens(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::vector<std::string> tok;
    std::string t;
    while (ss >> t) tok.push_back(t);
    if (!tok.empty()) return tok;
  }
  return {};
}

inline std::vector<std::string> expect_key(std::istream& in, const std::string& key, std::size_t n) {
  auto tok = next_tokens(in);
  if (tok.empty() || tok[0] != key || tok.size() != n + 1) {
    throw Error("field file: expected '" + key + "' with " + std::to_string(n) + " value(s)");
  }
  return tok;
}

inline int parse_count(const std::string& tok, const std::string& what) {
  const double v = parse_double(tok, what);
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e9) throw Error("invalid " + what + " '" + tok + "'");
  return static_cast<int>(v);
}

}  // namespace detail

inline void write_grid_field(std::ostream& os, const GridField& f) {
  if (static_cast<std::size_t>(f.nx) * f.ny != f.values.size()) {
    throw Error("grid field '" + f.name + "': value count != nx*ny");
  }
  os << "field " << f.name << "\n";
  os << "nx " << f.nx << "\n";
  os << "ny " << f.ny << "\n";
  os << "bounds " << detail::fmt17(f.bounds.x_lo) << ' ' << detail::fmt17(f.bounds.x_hi) << ' '
     << detail::fmt17(f.bounds.y_lo) << ' ' << detail::fmt17(f.bounds.y_hi) << "\n";
  os << "dtype " << (f.dtype == DType::f64 ? "f64" : "i32") << "\n";
  os << "layout row-major\n";
  std::string row;
  for (int j = 0; j < f.ny; ++j) {
    row.clear();
    for (int i = 0; i < f.nx; ++i) {
      if (i) row += ' ';
      const double v = f.values[static_cast<std::size_t>(j) * f.nx + i];
      row += f.dtype == DType::f64 ? detail::fmt17(v) : std::to_string(static_cast<long long>(v));
    }
    row += '\n';
    os << row;
  }
}

/// Read one field block; the stream is left after its last row.
inline GridField read_grid_field(std::istream& in) {
  GridField f;
  auto tok = detail::next_tokens(in);
  if (tok.size() != 2 || tok[0] != "field") throw Error("field file: expected 'field <name>'");
  f.name = tok[1];
  f.nx = detail::parse_count(detail::expect_key(in, "nx", 1)[1], "nx");
  f.ny = detail::parse_count(detail::expect_key(in, "ny", 1)[1], "ny");
  tok = detail::expect_key(in, "bounds", 4);
  f.bounds = {detail::parse_double(tok[1], "bounds"), detail::parse_double(tok[2], "bounds"),
              detail::parse_double(tok[3], "bounds"), detail::parse_double(tok[4], "bounds")};
  tok = detail::expect_key(in, "dtype", 1);
  if (tok[1] == "f64") {
    f.dtype = DType::f64;
  } else if (tok[1] == "i32") {
    f.dtype = DType::i32;
  } else {
    throw Error("field file: unknown dtype '" + tok[1] + "'");
  }
  tok = detail::expect_key(in, "layout", 1);
  if (tok[1] != "row-major") throw Error("field file: unsupported layout '" + tok[1] + "'");
  f.values.reserve(static_cast<std::size_t>(f.nx) * f.ny);
  for (int j = 0; j < f.ny; ++j) {
    tok = detail::next_tokens(in);
    if (static_cast<int>(tok.size()) != f.nx) {
      throw Error("field '" + f.name + "': row " + std::to_string(j) + " has " +
                  std::to_string(tok.size()) + " values, expected " + std::to_string(f.nx));
    }
    for (const auto& t : tok) f.values.push_back(detail::parse_double(t, "field '" + f.name + "'"));
  }
  return f;
}

inline void save_grid_field(const std::string& path, const GridField& f) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_grid_field(os, f);
  if (!os) throw Error("write to '" + path + "' failed");
}

inline GridField load_grid_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_grid_field(in);
}

/// "index eigenvalue" lines, 1-based, 15 significant digits.
inline void write_spectrum(std::ostream& os, const std::vector<double>& lambda) {
  char buf[64];
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu %.15g\n", i + 1, lambda[i]);
    os << buf;
  }
}

inline std::vector<double> read_spectrum(std::istream& in) {
  std::vector<double> out;
  for (auto tok = detail::next_tokens(in); !tok.empty(); tok = detail::next_tokens(in)) {
    if (tok.size() != 2) throw Error("spectrum file: expected 'index eigenvalue'");
    out.push_back(detail::parse_double(tok[1], "spectrum"));
  }
  return out;
}

// ---- velocity data -------------------------------------------------------

/// Header
///   nx <n>, ny <n>, nt <n>, bounds <xmin xmax ymin ymax>, times <t_1 .. t_nt>,
///   optional periodic <0|1> <0|1>
/// then per instant a field block "u" and a field block "v".
inline VelocitySamples read_velocity_data(std::istream& in) {
  VelocitySamples s;
  s.nx = detail::parse_count(detail::expect_key(in, "nx", 1)[1], "nx");
  s.ny = detail::parse_count(detail::expect_key(in, "ny", 1)[1], "ny");
  const int nt = detail::parse_count(detail::expect_key(in, "nt", 1)[1], "nt");
  auto tok = detail::expect_key(in, "bounds", 4);
  s.bounds = {detail::parse_double(tok[1], "bounds"), detail::parse_double(tok[2], "bounds"),
              detail::parse_double(tok[3], "bounds"), detail::parse_double(tok[4], "bounds")};
  tok = detail::next_tokens(in);
  if (tok.empty() || tok[0] != "times") throw Error("velocity data: expected 'times'");
  if (static_cast<int>(tok.size()) != nt + 1) {
    throw Error("velocity data: 'times' lists " + std::to_string(tok.size() - 1) +
                " values, nt = " + std::to_string(nt));
  }
  for (int k = 0; k < nt; ++k) s.times.push_back(detail::parse_double(tok[k + 1], "times"));
  const std::streampos mark = in.tellg();
  tok = detail::next_tokens(in);
  if (!tok.empty() && tok[0] == "periodic") {
    if (tok.size() != 3) throw Error("velocity data: 'periodic' needs two flags");
    s.periodic = {tok[1] == "1", tok[2] == "1"};
  } else {
    in.clear();
    in.seekg(mark);
  }
  for (int k = 0; k < nt; ++k) {
    for (const char* comp : {"u", "v"}) {
      const GridField f = read_grid_field(in);
      if (f.name != comp) {
        throw Error("velocity data: block " + std::to_string(k) + " expected field '" + comp +
                    "', found '" + f.name + "'");
      }
      if (f.nx != s.nx || f.ny != s.ny) {
        throw Error("velocity data: block " + std::to_string(k) + " field '" + comp +
                    "' has shape " + std::to_string(f.nx) + "x" + std::to_string(f.ny) +
                    ", header says " + std::to_string(s.nx) + "x" + std::to_string(s.ny));
      }
      (std::string(comp) == "u" ? s.u : s.v).push_back(f.values);
    }
  }
  validate(s);
  return s;
}

inline void write_velocity_data(std::ostream& os, const VelocitySamples& s) {
  validate(s);
  os << "nx " << s.nx << "\nny " << s.ny << "\nnt " << s.times.size() << "\n";
  os << "bounds " << detail::fmt17(s.bounds.x_lo) << ' ' << detail::fmt17(s.bounds.x_hi) << ' '
     << detail::fmt17(s.bounds.y_lo) << ' ' << detail::fmt17(s.bounds.y_hi) << "\n";
  os << "times";
  for (double t : s.times) os << ' ' << detail::fmt17(t);
  os << "\nperiodic " << (s.periodic[0] ? 1 : 0) << ' ' << (s.periodic[1] ? 1 : 0) << "\n";
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    write_grid_field(os, {"u", s.nx, s.ny, s.bounds, DType::f64, s.u[k]});
    write_grid_field(os, {"v", s.nx, s.ny, s.bounds, DType::f64, s.v[k]});
  }
}

inline FlowModel parse_velocity_data(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open velocity data '" + path + "'");
  return make_sampled_model(read_velocity_data(in), "velocity_data");
}

// ---- flow map manifest ----------------------------------------------------

inline std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// One line per instant: index, time, FNV-1a 64 checksum over the
/// 17-digit text of every node's position and Jacobian at that instant.
inline void write_flowmap_manifest(std::ostream& os, const FlowMapSample& s) {
  os << "# instant time checksum nodes=" << s.num_nodes << "\n";
  char buf[96];
  for (int k = 0; k < s.num_times(); ++k) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int node = 0; node < s.num_nodes; ++node) {
      const Vec2& x = s.position(node, k);
      const Mat2& j = s.jacobian(node, k);
      std::string rec;
      for (double v : {x.x(), x.y(), j(0, 0), j(0, 1), j(1, 0), j(1, 1)}) {
        rec += detail::fmt17(v);
        rec += ' ';
      }
      h = fnv1a64(rec, h);
    }
    std::snprintf(buf, sizeof buf, "%d %.17g %016llx\n", k, s.times[k],
                  static_cast<unsigned long long>(h));
    os << buf;
  }
}

// ---- raster output --------------------------------------------------------

enum class Colormap { gray, viridis, coolwarm };

inline Colormap parse_colormap(const std::string& s) {
  if (s == "gray") return Colormap::gray;
  if (s == "viridis") return Colormap::viridis;
  if (s == "coolwarm") return Colormap::coolwarm;
  throw Error("unknown colormap '" + s + "'");
}

inline std::array<unsigned char, 3> colormap_rgb(Colormap cm, double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto lerp_table = [t](const auto& table) {
    const double s = t * (table.size() - 1);
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(s), table.size() - 2);
    const double f = s - i;
    std::array<unsigned char, 3> rgb{};
    for (int c = 0; c < 3; ++c) {
      rgb[c] = static_cast<unsigned char>(std::lround(table[i][c] * (1 - f) + table[i + 1][c] * f));
    }
    return rgb;
  };
  switch (cm) {
    case Colormap::gray: {
      const auto g = static_cast<unsigned char>(std::lround(255.0 * t));
      return {g, g, g};
    }
    case Colormap::viridis: {
      static constexpr std::array<std::array<double, 3>, 9> kTable{{{68, 1, 84},
                                                                     {71, 44, 122},
                                                                     {59, 81, 139},
                                                                     {44, 113, 142},
                                                                     {33, 144, 141},
                                                                     {39, 173, 129},
                                                                     {92, 200, 99},
                                                                     {170, 220, 50},
                                                                     {253, 231, 37}}};
      return lerp_table(kTable);
    }
    case Colormap::coolwarm: {
      static constexpr std::array<std::array<double, 3>, 5> kTable{{{59, 76, 192},
                                                                     {141, 176, 254},
                                                                     {221, 221, 221},
                                                                     {244, 154, 123},
                                                                     {180, 4, 38}}};
      return lerp_table(kTable);
    }
  }
  return {0, 0, 0};
}

/// Binary PPM (P6), one pixel per grid value, top row = largest y. Colors are
/// linear over [min, max] of the field, or over `clip` when given.
inline std::string render_heatmap(const GridField& f, Colormap cm,
                                  std::optional<std::pair<double, double>> clip = std::nullopt) {
  if (f.dtype != DType::f64) throw Error("render: field '" + f.name + "' is not f64");
  if (static_cast<std::size_t>(f.nx) * f.ny != f.values.size()) throw Error("render: bad field shape");
  for (int j = 0; j < f.ny; ++j) {
    for (int i = 0; i < f.nx; ++i) {
      if (std::isnan(f.values[static_cast<std::size_t>(j) * f.nx + i])) {
        throw Error("render: NaN in field '" + f.name + "' at (i=" + std::to_string(i) +
                    ", j=" + std::to_string(j) + ")");
      }
    }
  }
  double lo = *std::min_element(f.values.begin(), f.values.end());
  double hi = *std::max_element(f.values.begin(), f.values.end());
  if (clip) {
    lo = clip->first;
    hi = clip->second;
    if (!(hi > lo)) throw Error("render: empty clip range");
  }
  std::string out = "P6\n" + std::to_string(f.nx) + " " + std::to_string(f.ny) + "\n255\n";
  out.reserve(out.size() + 3 * f.values.size());
  for (int row = 0; row < f.ny; ++row) {
    const int j = f.ny - 1 - row;
    for (int i = 0; i < f.nx; ++i) {
      const double v = f.values[static_cast<std::size_t>(j) * f.nx + i];
      const double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
      const auto rgb = colormap_rgb(cm, t);
      out.append(reinterpret_cast<const char*>(rgb.data()), 3);
    }
  }
  return out;
}

inline void save_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error("write to '" + path + "' failed");
}

}  // namespace geomix
