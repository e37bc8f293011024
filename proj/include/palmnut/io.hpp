#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "palmnut/errors.hpp"
#include "palmnut/solvers.hpp"
#include "palmnut/vector.hpp"

namespace palmnut {

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class FormatError : public IoError {
public:
  using IoError::IoError;
};

struct VectorHeader {
  std::string type; // "cvec" or "rvec"
  std::size_t n = 0;
  std::size_t w = 0;
  std::size_t h = 0;
};

using AnyVector = std::variant<RealVector, ComplexVector>;

namespace detail {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

inline void put_f64_le(std::string &out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
}

inline double get_f64_le(const char *p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

inline std::string header_line(const VectorHeader &h) {
  nlohmann::ordered_json j;
  j["type"] = h.type;
  j["n"] = h.n;
  j["w"] = h.w;
  j["h"] = h.h;
  return j.dump() + "\n";
}

inline void write_bytes(const std::filesystem::path &path, const std::string &bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw IoError("cannot open for writing: " + path.string());
  }
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) {
    throw IoError("write failed: " + path.string());
  }
}

inline std::string read_bytes(const std::filesystem::path &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw IoError("cannot open for reading: " + path.string());
  }
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline VectorHeader parse_header(const std::string &line, const std::string &path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(path + ": malformed header: " + e.what());
  }
  VectorHeader h;
  try {
    h.type = j.at("type").get<std::string>();
    h.n = j.at("n").get<std::size_t>();
    h.w = j.at("w").get<std::size_t>();
    h.h = j.at("h").get<std::size_t>();
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(path + ": malformed header: " + e.what());
  }
  if (h.type != "cvec" && h.type != "rvec") {
    throw FormatError(path + ": unknown vector type '" + h.type + "'");
  }
  if (h.n == 0) {
    throw FormatError(path + ": header n must be positive");
  }
  return h;
}

} // namespace detail

inline void write_vector(const std::filesystem::path &path, const RealVector &v,
                         std::size_t w = 0, std::size_t h = 0) {
  if (w == 0 && h == 0) {
    w = v.size();
    h = 1;
  }
  detail::require_same_size(v.size(), w * h, "write_vector");
  std::string out = detail::header_line({"rvec", v.size(), w, h});
  out.reserve(out.size() + 8 * v.size());
  for (double x : v.values()) {
    detail::put_f64_le(out, x);
  }
  detail::write_bytes(path, out);
}

inline void write_vector(const std::filesystem::path &path, const ComplexVector &v,
                         std::size_t w = 0, std::size_t h = 0) {
  if (w == 0 && h == 0) {
    w = v.size();
    h = 1;
  }
  detail::require_same_size(v.size(), w * h, "write_vector");
  std::string out = detail::header_line({"cvec", v.size(), w, h});
  out.reserve(out.size() + 16 * v.size());
  for (std::size_t n = 0; n < v.size(); ++n) {
    detail::put_f64_le(out, v.re()[n]);
    detail::put_f64_le(out, v.im()[n]);
  }
  detail::write_bytes(path, out);
}

/// Reads either vector type; the header decides which.
inline AnyVector read_vector(const std::filesystem::path &path,
                             VectorHeader *header_out = nullptr) {
  const std::string bytes = detail::read_bytes(path);
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) {
    throw FormatError(path.string() + ": missing header line");
  }
  const VectorHeader h = detail::parse_header(bytes.substr(0, nl), path.string());
  if (h.w * h.h != h.n) {
    throw FormatError(path.string() + ": w*h does not match n");
  }
  const std::size_t per = h.type == "cvec" ? 16 : 8;
  const std::size_t payload = bytes.size() - nl - 1;
  if (payload != per * h.n) {
    throw FormatError(path.string() + ": payload has " + std::to_string(payload) +
                      " bytes, expected " + std::to_string(per * h.n));
  }
  if (header_out) {
    *header_out = h;
  }
  const char *p = bytes.data() + nl + 1;
  if (h.type == "rvec") {
    std::vector<double> vals(h.n);
    for (std::size_t n = 0; n < h.n; ++n) {
      vals[n] = detail::get_f64_le(p + 8 * n);
    }
    RealVector v(h.n);
    std::copy(vals.begin(), vals.end(), v.values().begin());
    return v;
  }
  ComplexVector v(h.n);
  for (std::size_t n = 0; n < h.n; ++n) {
    v.re()[n] = detail::get_f64_le(p + 16 * n);
    v.im()[n] = detail::get_f64_le(p + 16 * n + 8);
  }
  return v;
}

inline RealVector read_rvec(const std::filesystem::path &path) {
  auto v = read_vector(path);
  if (!std::holds_alternative<RealVector>(v)) {
    throw FormatError(path.string() + ": expected rvec");
  }
  return std::get<RealVector>(std::move(v));
}

inline ComplexVector read_cvec(const std::filesystem::path &path) {
  auto v = read_vector(path);
  if (!std::holds_alternative<ComplexVector>(v)) {
    throw FormatError(path.string() + ": expected cvec");
  }
  return std::get<ComplexVector>(std::move(v));
}

/// Min-max scaling to 16-bit; a constant image maps to 32768.
inline std::vector<std::uint16_t> pgm_samples(const RealVector &values) {
  std::vector<std::uint16_t> out(values.size(), 32768);
  if (values.size() == 0) {
    return out;
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.values().begin(), values.values().end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) {
    return out;
  }
  for (std::size_t n = 0; n < values.size(); ++n) {
    const double t = (values[n] - lo) / (hi - lo);
    out[n] = static_cast<std::uint16_t>(std::lround(t * 65535.0));
  }
  return out;
}

inline void export_pgm(const RealVector &values, std::size_t width, std::size_t height,
                       const std::filesystem::path &path) {
  detail::require_same_size(values.size(), width * height, "export_pgm");
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n65535\n";
  for (std::uint16_t s : pgm_samples(values)) {
    out.push_back(static_cast<char>(s >> 8));
    out.push_back(static_cast<char>(s & 0xFF));
  }
  detail::write_bytes(path, out);
}

/// Reads back a 16-bit P5 file written by export_pgm.
inline std::vector<std::uint16_t> read_pgm(const std::filesystem::path &path,
                                           std::size_t &width, std::size_t &height) {
  const std::string bytes = detail::read_bytes(path);
  std::istringstream in(bytes);
  std::string magic;
  int maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (magic != "P5" || maxval != 65535) {
    throw FormatError(path.string() + ": not a 16-bit P5 file");
  }
  in.get();
  const auto offset = static_cast<std::size_t>(in.tellg());
  if (bytes.size() - offset != 2 * width * height) {
    throw FormatError(path.string() + ": truncated PGM payload");
  }
  std::vector<std::uint16_t> out(width * height);
  for (std::size_t n = 0; n < out.size(); ++n) {
    out[n] = static_cast<std::uint16_t>(
        (static_cast<unsigned char>(bytes[offset + 2 * n]) << 8) |
        static_cast<unsigned char>(bytes[offset + 2 * n + 1]));
  }
  return out;
}

// Shortest round-trip decimal form.
inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

/// Trace CSV. Leaving seconds blank (with_timing = false) makes files a pure
/// function of the inputs.
inline std::string trace_csv(const SolverTrace &trace, bool with_timing = true,
                             const std::string &variant = {}) {
  std::ostringstream os;
  if (!variant.empty()) {
    os << "variant,";
  }
  os << "iter,seconds,objective,nrmse\n";
  for (const auto &r : trace.records) {
    if (!variant.empty()) {
      os << variant << ',';
    }
    os << r.k << ',';
    if (with_timing) {
      os << format_double(r.seconds);
    }
    os << ',' << format_double(r.objective) << ',';
    if (r.nrmse) {
      os << format_double(*r.nrmse);
    }
    os << '\n';
  }
  return os.str();
}

inline void write_trace_csv(const std::filesystem::path &path, const SolverTrace &trace,
                            bool with_timing = true) {
  detail::write_bytes(path, trace_csv(trace, with_timing));
}

struct TraceRow {
  std::string variant;
  int iter = 0;
  std::optional<double> seconds;
  double objective = 0.0;
  std::optional<double> nrmse;
};

/// Parses a trace CSV (with or without the leading variant column).
inline std::vector<TraceRow> read_trace_csv(const std::filesystem::path &path) {
  std::istringstream in(detail::read_bytes(path));
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError(path.string() + ": empty trace");
  }
  const bool has_variant = line.rfind("variant,", 0) == 0;
  const std::string expected = has_variant ? "variant,iter,seconds,objective,nrmse"
                                           : "iter,seconds,objective,nrmse";
  if (line != expected) {
    throw FormatError(path.string() + ": unexpected trace header '" + line + "'");
  }
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) {
      cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
      cells.emplace_back();
    }
    const std::size_t off = has_variant ? 1 : 0;
    if (cells.size() != 4 + off) {
      throw FormatError(path.string() + ": malformed trace row '" + line + "'");
    }
    TraceRow row;
    try {
      if (has_variant) {
        row.variant = cells[0];
      }
      row.iter = std::stoi(cells[off]);
      if (!cells[off + 1].empty()) {
        row.seconds = std::stod(cells[off + 1]);
      }
      row.objective = std::stod(cells[off + 2]);
      if (!cells[off + 3].empty()) {
        row.nrmse = std::stod(cells[off + 3]);
      }
    } catch (const std::exception &) {
      throw FormatError(path.string() + ": malformed trace row '" + line + "'");
    }
    rows.push_back(row);
  }
  return rows;
}

} // namespace palmnut
