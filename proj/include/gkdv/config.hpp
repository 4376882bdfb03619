#pragma once

#include "gkdv/diagnostics.hpp"
#include "gkdv/embedding.hpp"
#include "gkdv/errors.hpp"
#include "gkdv/io.hpp"
#include "gkdv/profiles.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace gkdv {

enum class Experiment { simulate, diagnose, embed, gram_scan, norms };

inline std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::simulate: return "simulate";
    case Experiment::diagnose: return "diagnose";
    case Experiment::embed: return "embed";
    case Experiment::gram_scan: return "gram_scan";
    case Experiment::norms: return "norms";
  }
  return "?";
}

// Accepts the config spelling (gram_scan) and the subcommand spelling (gram-scan).
inline Experiment experiment_from_string(std::string_view s) {
  if (s == "simulate") return Experiment::simulate;
  if (s == "diagnose") return Experiment::diagnose;
  if (s == "embed") return Experiment::embed;
  if (s == "gram_scan" || s == "gram-scan") return Experiment::gram_scan;
  if (s == "norms") return Experiment::norms;
  throw ValidationError("experiment: unknown value '" + std::string(s) + "'");
}

struct GramScanConfig {
  std::vector<double> p_list{std::sqrt(3.0), 2.0, 5.0};
  double resolution = 0.01;
  bool operator==(const GramScanConfig&) const = default;
};

// Seeded Gaussian ensemble under the Airy flow. Members draw amplitude, width
// and centre uniformly from the ranges below.
struct NormsConfig {
  std::size_t ensemble_size = 20;
  double amplitude_min = 0.5, amplitude_max = 1.5;
  double width_min = 0.7, width_max = 1.5;
  double center_min = -5.0, center_max = 5.0;
  // Time and space exponents of the L^r_x L^q_t norm.
  double q = 10.0;
  double r = 5.0;
  bool resolution_check = true;
  bool operator==(const NormsConfig&) const = default;
};

struct DiagnoseConfig {
  std::vector<double> dispersion_windows;
  bool operator==(const DiagnoseConfig&) const = default;
};

struct RunConfig {
  Experiment experiment = Experiment::simulate;
  ModelSpec model = ModelSpec::gkdv(5.0, 1.0);
  ProfileSpec profile;
  GridSpec grid{1024, 80.0, -40.0};
  StepperConfig stepper;
  double t_final = 1.0;
  double sample_dt = 0.1;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  KVariant k_variant = KVariant::corrected;
  std::map<std::string, std::string> flags;
  DiagnoseConfig diagnose;
  EmbeddingConfig embedding;
  GramScanConfig gram_scan;
  NormsConfig norms;

  bool flag(const std::string& name, bool fallback) const {
    auto it = flags.find(name);
    if (it == flags.end()) return fallback;
    return it->second == "true" || it->second == "1" || it->second == "yes";
  }

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

// ---------------------------------------------------------------------------
// JSON form

inline json to_json_value(const ProfileSpec& p) {
  return {{"kind", std::string(to_string(p.kind))}, {"p", p.p}, {"amplitude", p.amplitude},
          {"width", p.width}, {"center", p.center}, {"N", p.N}};
}

inline json to_json_value(const EmbeddingConfig& c) {
  return {{"nls_initial", to_json_value(c.nls_initial)},
          {"mu", c.mu},
          {"N_list", c.N_list},
          {"T", c.T},
          {"sample_dt", c.sample_dt},
          {"nls_grid", to_json_value(c.nls_grid)},
          {"nls_dt", c.nls_dt},
          {"gkdv_dt", c.gkdv_dt},
          {"gkdv_phase_step", c.gkdv_phase_step},
          {"max_num_points", c.max_num_points},
          {"focusing_mass_margin", c.focusing_mass_margin}};
}

inline json to_json_value(const RunConfig& c) {
  return {{"experiment", std::string(to_string(c.experiment))},
          {"model", to_json_value(c.model)},
          {"profile", to_json_value(c.profile)},
          {"grid", to_json_value(c.grid)},
          {"stepper", to_json_value(c.stepper)},
          {"t_final", c.t_final},
          {"sample_dt", c.sample_dt},
          {"seed", c.seed},
          {"out_dir", c.out_dir},
          {"k_variant", std::string(to_string(c.k_variant))},
          {"flags", c.flags},
          {"diagnose", {{"dispersion_windows", c.diagnose.dispersion_windows}}},
          {"embedding", to_json_value(c.embedding)},
          {"gram_scan", {{"p_list", c.gram_scan.p_list}, {"resolution", c.gram_scan.resolution}}},
          {"norms",
           {{"ensemble_size", c.norms.ensemble_size},
            {"amplitude_min", c.norms.amplitude_min},
            {"amplitude_max", c.norms.amplitude_max},
            {"width_min", c.norms.width_min},
            {"width_max", c.norms.width_max},
            {"center_min", c.norms.center_min},
            {"center_max", c.norms.center_max},
            {"q", c.norms.q},
            {"r", c.norms.r},
            {"resolution_check", c.norms.resolution_check}}}};
}

namespace detail {

// Reads an object against a fixed key set, recording unknown keys with their
// full path. Missing keys keep the default already stored in the target.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path, std::vector<std::string>& unknown)
      : j_(j), path_(std::move(path)), unknown_(unknown) {
    if (!j_.is_object()) throw ValidationError(where() + "must be an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ValidationError(child(key) + ": wrong type");
    }
  }

  template <class F>
  void read_with(const char* key, F&& f) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it != j_.end()) f(*it, child(key));
  }

  void finish() {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) unknown_.push_back(child(it.key()));
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "config: " : path_ + ": "; }

  const json& j_;
  std::string path_;
  std::vector<std::string>& unknown_;
  std::set<std::string> seen_;
};

template <class T>
T parse_enum(const json& v, const std::string& path, T (*conv)(std::string_view)) {
  if (!v.is_string()) throw ValidationError(path + ": expected a string");
  try {
    return conv(v.get<std::string>());
  } catch (const Error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

inline void read_grid(const json& j, const std::string& path, GridSpec& g, std::vector<std::string>& unknown) {
  ObjectReader r(j, path, unknown);
  r.read("num_points", g.num_points);
  r.read("domain_length", g.domain_length);
  r.read("origin", g.origin);
  r.finish();
}

inline void read_profile(const json& j, const std::string& path, ProfileSpec& p, std::vector<std::string>& unknown) {
  ObjectReader r(j, path, unknown);
  r.read_with("kind", [&](const json& v, const std::string& at) { p.kind = parse_enum(v, at, profile_kind_from_string); });
  r.read("p", p.p);
  r.read("amplitude", p.amplitude);
  r.read("width", p.width);
  r.read("center", p.center);
  r.read("N", p.N);
  r.finish();
}

}  // namespace detail

inline void RunConfig::validate() const {
  auto wrap = [](const std::string& path, auto&& fn) {
    try {
      fn();
    } catch (const ValidationError&) {
      throw;
    } catch (const Error& e) {
      const std::string msg = e.what();
      throw ValidationError(msg.rfind(path, 0) == 0 ? msg : path + ": " + msg);
    }
  };
  if (!(model.p > 1.0) || !std::isfinite(model.p))
    throw ValidationError("model.p: must exceed 1, got " + format_double(model.p));
  if (model.mu != -1.0 && model.mu != 0.0 && model.mu != 1.0)
    throw ValidationError("model.mu: must be -1, 0 or +1, got " + format_double(model.mu));
  wrap("model", [&] { model.validate(); });
  wrap("grid", [&] { grid.validate(); });
  profile.validate();
  if (!(stepper.dt > 0.0)) throw ValidationError("stepper.dt: must be positive");
  if (!(stepper.substep_safety > 0.0)) throw ValidationError("stepper.substep_safety: must be positive");
  if (!(t_final > 0.0)) throw ValidationError("t_final: must be positive");
  if (!(sample_dt > 0.0) || sample_dt > t_final) throw ValidationError("sample_dt: must lie in (0, t_final]");
  const double ratio = t_final / sample_dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
    throw ValidationError("sample_dt: t_final must be an integer multiple of sample_dt");
  if (out_dir.empty()) throw ValidationError("out_dir: must not be empty");
  for (double w : diagnose.dispersion_windows)
    if (!(w > 0.0) || w > t_final * (1.0 + 1e-12))
      throw ValidationError("diagnose.dispersion_windows: windows must lie in (0, t_final]");
  if (experiment == Experiment::embed) embedding.validate();
  if (experiment == Experiment::gram_scan) {
    if (gram_scan.p_list.empty()) throw ValidationError("gram_scan.p_list: must not be empty");
    for (double p : gram_scan.p_list)
      if (!(p > 1.0)) throw ValidationError("gram_scan.p_list: p must exceed 1");
    if (!(gram_scan.resolution > 0.0) || gram_scan.resolution > 0.1)
      throw ValidationError("gram_scan.resolution: must lie in (0, 0.1]");
  }
  if (experiment == Experiment::norms) {
    if (model.family != Family::airy) throw ValidationError("model.family: the norms experiment evolves under airy");
    if (norms.ensemble_size < 1) throw ValidationError("norms.ensemble_size: must be at least 1");
    if (!(norms.amplitude_min <= norms.amplitude_max) || !(norms.width_min > 0.0) ||
        !(norms.width_min <= norms.width_max) || !(norms.center_min <= norms.center_max))
      throw ValidationError("norms: ranges must satisfy min <= max with positive widths");
    if (!(norms.q >= 1.0) || !(norms.r >= 1.0)) throw ValidationError("norms.q, norms.r: must be >= 1");
  }
}

// Parses a JSON config. A run manifest (with its "config" object) is accepted
// too, so any run can be repeated from its manifest. `experiment_override`
// supplies the experiment when the file has none and must agree otherwise.
inline RunConfig parse_config(const std::string& text, std::optional<Experiment> experiment_override = std::nullopt) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: not valid JSON: ") + e.what());
  }
  if (j.is_object() && j.contains("manifest_version") && j.contains("config")) j = j.at("config");
  RunConfig c;
  std::vector<std::string> unknown;
  detail::ObjectReader r(j, "", unknown);
  bool has_experiment = false;
  r.read_with("experiment", [&](const json& v, const std::string& at) {
    c.experiment = detail::parse_enum(v, at, experiment_from_string);
    has_experiment = true;
  });
  r.read_with("model", [&](const json& v, const std::string& at) {
    detail::ObjectReader m(v, at, unknown);
    m.read_with("family", [&](const json& f, const std::string& p) { c.model.family = detail::parse_enum(f, p, family_from_string); });
    m.read("p", c.model.p);
    m.read("mu", c.model.mu);
    m.read_with("nls_sign", [&](const json& f, const std::string& p) { c.model.nls_sign = detail::parse_enum(f, p, nls_sign_from_string); });
    m.finish();
  });
  r.read_with("profile", [&](const json& v, const std::string& at) { detail::read_profile(v, at, c.profile, unknown); });
  r.read_with("grid", [&](const json& v, const std::string& at) { detail::read_grid(v, at, c.grid, unknown); });
  r.read_with("stepper", [&](const json& v, const std::string& at) {
    detail::ObjectReader s(v, at, unknown);
    s.read("dt", c.stepper.dt);
    s.read_with("scheme", [&](const json& f, const std::string& p) { c.stepper.scheme = detail::parse_enum(f, p, scheme_from_string); });
    s.read("substep_safety", c.stepper.substep_safety);
    s.finish();
  });
  r.read("t_final", c.t_final);
  r.read("sample_dt", c.sample_dt);
  r.read("seed", c.seed);
  r.read("out_dir", c.out_dir);
  r.read_with("k_variant", [&](const json& v, const std::string& at) { c.k_variant = detail::parse_enum(v, at, k_variant_from_string); });
  r.read("flags", c.flags);
  r.read_with("diagnose", [&](const json& v, const std::string& at) {
    detail::ObjectReader d(v, at, unknown);
    d.read("dispersion_windows", c.diagnose.dispersion_windows);
    d.finish();
  });
  r.read_with("embedding", [&](const json& v, const std::string& at) {
    detail::ObjectReader e(v, at, unknown);
    auto& ec = c.embedding;
    e.read_with("nls_initial", [&](const json& f, const std::string& p) { detail::read_profile(f, p, ec.nls_initial, unknown); });
    e.read("mu", ec.mu);
    e.read("N_list", ec.N_list);
    e.read("T", ec.T);
    e.read("sample_dt", ec.sample_dt);
    e.read_with("nls_grid", [&](const json& f, const std::string& p) { detail::read_grid(f, p, ec.nls_grid, unknown); });
    e.read("nls_dt", ec.nls_dt);
    e.read("gkdv_dt", ec.gkdv_dt);
    e.read("gkdv_phase_step", ec.gkdv_phase_step);
    e.read("max_num_points", ec.max_num_points);
    e.read("focusing_mass_margin", ec.focusing_mass_margin);
    e.finish();
  });
  r.read_with("gram_scan", [&](const json& v, const std::string& at) {
    detail::ObjectReader g(v, at, unknown);
    g.read("p_list", c.gram_scan.p_list);
    g.read("resolution", c.gram_scan.resolution);
    g.finish();
  });
  r.read_with("norms", [&](const json& v, const std::string& at) {
    detail::ObjectReader n(v, at, unknown);
    auto& nc = c.norms;
    n.read("ensemble_size", nc.ensemble_size);
    n.read("amplitude_min", nc.amplitude_min);
    n.read("amplitude_max", nc.amplitude_max);
    n.read("width_min", nc.width_min);
    n.read("width_max", nc.width_max);
    n.read("center_min", nc.center_min);
    n.read("center_max", nc.center_max);
    n.read("q", nc.q);
    n.read("r", nc.r);
    n.read("resolution_check", nc.resolution_check);
    n.finish();
  });
  r.finish();
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    throw ValidationError("config: unknown keys: " + list);
  }
  if (experiment_override) {
    if (has_experiment && c.experiment != *experiment_override)
      throw ValidationError("experiment: config says '" + std::string(to_string(c.experiment)) +
                            "' but the subcommand is '" + std::string(to_string(*experiment_override)) + "'");
    c.experiment = *experiment_override;
  } else if (!has_experiment) {
    throw ValidationError("experiment: missing");
  }
  c.validate();
  return c;
}

inline std::string dump_config(const RunConfig& c) { return to_json_value(c).dump(2) + "\n"; }

}  // namespace gkdv
