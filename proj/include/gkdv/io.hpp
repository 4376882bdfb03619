#pragma once

#include "gkdv/errors.hpp"
#include "gkdv/evolution.hpp"
#include "gkdv/grid.hpp"
#include "gkdv/model.hpp"

#include "json.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace gkdv {

namespace fs = std::filesystem;
using nlohmann::json;

// Shortest decimal that round-trips to the same double; nan/inf spelled out.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw IoError("parse_double: bad number '" + std::string(s) + "'");
  return v;
}

// Comma-separated table with a header row.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(const std::vector<double>& row) {
    if (row.size() != header_.size()) throw IoError("csv: row width does not match header");
    rows_.push_back(row);
  }

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }

  std::string str() const {
    std::string out;
    for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
    out += '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + format_double(r[i]);
      out += '\n';
    }
    return out;
  }

  static CsvTable parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw IoError("csv: empty input");
    auto split = [](const std::string& l) {
      std::vector<std::string> out;
      std::string cell;
      std::istringstream ls(l);
      while (std::getline(ls, cell, ',')) out.push_back(cell);
      return out;
    };
    CsvTable t(split(line));
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<double> row;
      for (const auto& c : split(line)) row.push_back(parse_double(c));
      t.add_row(row);
    }
    return t;
  }

  std::vector<double> column(const std::string& name) const {
    for (std::size_t i = 0; i < header_.size(); ++i)
      if (header_[i] == name) {
        std::vector<double> out;
        for (const auto& r : rows_) out.push_back(r[i]);
        return out;
      }
    throw IoError("csv: no column '" + name + "'");
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// JSON forms of the core value types

inline json to_json_value(const GridSpec& g) {
  return {{"num_points", g.num_points}, {"domain_length", g.domain_length}, {"origin", g.origin}};
}

inline json to_json_value(const ModelSpec& m) {
  return {{"family", std::string(to_string(m.family))},
          {"p", m.p},
          {"mu", m.mu},
          {"nls_sign", m.nls_sign == NlsSign::printed ? "printed" : "conventional"}};
}

inline json to_json_value(const StepperConfig& s) {
  return {{"dt", s.dt}, {"scheme", s.scheme == Scheme::etdrk4 ? "etdrk4" : "ifrk4"}, {"substep_safety", s.substep_safety}};
}

inline NlsSign nls_sign_from_string(std::string_view s) {
  if (s == "printed") return NlsSign::printed;
  if (s == "conventional") return NlsSign::conventional;
  throw ValidationError("unknown nls_sign '" + std::string(s) + "'");
}

inline Scheme scheme_from_string(std::string_view s) {
  if (s == "etdrk4") return Scheme::etdrk4;
  if (s == "ifrk4") return Scheme::ifrk4;
  throw ValidationError("unknown scheme '" + std::string(s) + "'");
}

inline GridSpec grid_from_json(const json& j) {
  return {j.at("num_points").get<std::size_t>(), j.at("domain_length").get<double>(), j.at("origin").get<double>()};
}

inline ModelSpec model_from_json(const json& j) {
  ModelSpec m;
  m.family = family_from_string(j.at("family").get<std::string>());
  m.p = j.at("p").get<double>();
  m.mu = j.at("mu").get<double>();
  m.nls_sign = nls_sign_from_string(j.value("nls_sign", std::string("printed")));
  return m;
}

inline StepperConfig stepper_from_json(const json& j) {
  StepperConfig s;
  s.dt = j.at("dt").get<double>();
  s.scheme = scheme_from_string(j.value("scheme", std::string("etdrk4")));
  s.substep_safety = j.value("substep_safety", 2.0);
  return s;
}

// ---------------------------------------------------------------------------
// Field snapshots: <stem>.json sidecar plus <stem>.bin holding num_points
// little-endian (re, im) float64 pairs.

struct Snapshot {
  Field field;
  double time = 0.0;
  ModelSpec model;
};

namespace detail {

inline std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

}  // namespace detail

inline void save_field(const fs::path& stem, const Field& f, double time, const ModelSpec& model) {
  json side = to_json_value(f.grid());
  side["time"] = time;
  side["is_real"] = f.is_real();
  side["model"] = to_json_value(model);
  write_text(fs::path(stem).concat(".json"), side.dump(2) + "\n");
  std::string bytes(f.size() * 16, '\0');
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double parts[2] = {f[i].real(), f[i].imag()};
    for (int c = 0; c < 2; ++c) {
      std::uint64_t u = std::bit_cast<std::uint64_t>(parts[c]);
      u = detail::to_little_endian(u);
      std::memcpy(bytes.data() + 16 * i + 8 * c, &u, 8);
    }
  }
  write_text(fs::path(stem).concat(".bin"), bytes);
}

inline Snapshot load_field(const fs::path& stem) {
  json side;
  try {
    side = json::parse(read_text(fs::path(stem).concat(".json")));
  } catch (const json::exception& e) {
    throw IoError("load_field: bad sidecar for " + stem.string() + ": " + e.what());
  }
  const GridSpec g = grid_from_json(side);
  const std::string bytes = read_text(fs::path(stem).concat(".bin"));
  if (bytes.size() != g.num_points * 16)
    throw IoError("load_field: " + stem.string() + ".bin has " + std::to_string(bytes.size()) + " bytes, expected " +
                  std::to_string(g.num_points * 16));
  std::vector<cplx> v(g.num_points);
  for (std::size_t i = 0; i < g.num_points; ++i) {
    double parts[2];
    for (int c = 0; c < 2; ++c) {
      std::uint64_t u;
      std::memcpy(&u, bytes.data() + 16 * i + 8 * c, 8);
      parts[c] = std::bit_cast<double>(detail::to_little_endian(u));
    }
    v[i] = cplx(parts[0], parts[1]);
  }
  const bool is_real = side.at("is_real").get<bool>();
  if (is_real)
    for (const auto& z : v)
      if (z.imag() != 0.0) throw IoError("load_field: real field with nonzero imaginary part");
  return {Field(g, std::move(v), is_real), side.at("time").get<double>(), model_from_json(side.at("model"))};
}

// ---------------------------------------------------------------------------
// Trajectory directory: manifest.json plus snapshot_<i>.{json,bin}.

inline std::string snapshot_stem(std::size_t i) {
  std::string s = std::to_string(i);
  return "snapshot_" + std::string(s.size() < 6 ? 6 - s.size() : 0, '0') + s;
}

inline void save_trajectory(const fs::path& dir, const Trajectory& traj, const StepperConfig& stepper) {
  traj.validate();
  fs::create_directories(dir);
  json m;
  m["model"] = to_json_value(traj.model);
  m["grid"] = to_json_value(traj.grid);
  m["stepper"] = to_json_value(stepper);
  m["sample_dt"] = traj.sample_dt;
  m["times"] = traj.times;
  m["first_wrap_time"] = std::isfinite(traj.first_wrap_time) ? json(traj.first_wrap_time) : json(nullptr);
  m["initial_tail_mass"] = traj.initial_tail_mass;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
  for (std::size_t i = 0; i < traj.size(); ++i)
    save_field(dir / snapshot_stem(i), traj.snapshots[i], traj.times[i], traj.model);
}

inline Trajectory load_trajectory(const fs::path& dir) {
  json m;
  try {
    m = json::parse(read_text(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw IoError("load_trajectory: bad manifest in " + dir.string() + ": " + e.what());
  }
  Trajectory t;
  t.model = model_from_json(m.at("model"));
  t.grid = grid_from_json(m.at("grid"));
  t.sample_dt = m.at("sample_dt").get<double>();
  t.times = m.at("times").get<std::vector<double>>();
  t.first_wrap_time = m.at("first_wrap_time").is_null() ? std::numeric_limits<double>::infinity()
                                                        : m.at("first_wrap_time").get<double>();
  t.initial_tail_mass = m.at("initial_tail_mass").get<double>();
  for (std::size_t i = 0; i < t.times.size(); ++i) {
    auto s = load_field(dir / snapshot_stem(i));
    if (s.time != t.times[i]) throw IoError("load_trajectory: snapshot time mismatch at index " + std::to_string(i));
    t.snapshots.push_back(std::move(s.field));
  }
  t.validate();
  return t;
}

}  // namespace gkdv
