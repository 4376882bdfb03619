#pragma once

#include "gkdv/config.hpp"
#include "gkdv/gram.hpp"

#include <algorithm>
#include <random>

namespace gkdv {

inline constexpr const char* version = "0.1.0";
inline constexpr int manifest_version = 1;

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 1;
inline constexpr int exit_blow_up = 2;
inline constexpr int exit_failure = 3;

// Errors caused by the request rather than the computation map to exit 1.
inline int exit_code_for(const Error& e) {
  if (dynamic_cast<const BlowUpError*>(&e)) return exit_blow_up;
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ConfigurationError*>(&e) ||
      dynamic_cast<const ModelError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const ResolutionError*>(&e) || dynamic_cast<const UnsupportedError*>(&e))
    return exit_validation;
  return exit_failure;
}

// Initial datum described by cfg.profile on cfg.grid, real for gKdV/Airy.
inline Field initial_field(const RunConfig& cfg) {
  const auto& pr = cfg.profile;
  pr.validate();
  const bool real = cfg.model.real_valued();
  switch (pr.kind) {
    case ProfileKind::gaussian:
      return gaussian(pr.amplitude, pr.width, pr.center, cfg.grid, real);
    case ProfileKind::ground_state:
    case ProfileKind::soliton: {
      const Field q = pr.amplitude * ground_state(pr.p, cfg.grid, pr.center);
      if (real) return q;
      return Field(cfg.grid, std::vector<cplx>(q.values().begin(), q.values().end()), false);
    }
    case ProfileKind::embedding_ansatz:
      break;
  }
  throw UnsupportedError("profile.kind: embedding_ansatz data are built by the embed experiment");
}

// ---------------------------------------------------------------------------
// Tables

inline const std::vector<std::string> diagnostics_columns{
    "t", "mass", "energy", "xM", "xE", "vM", "vE", "gap", "tail_mass", "mass_law_residual", "energy_law_residual"};

// One row per sample. Centre columns need a real-valued model and the
// residual columns exist only at interior samples.
inline CsvTable diagnostics_table(const Trajectory& traj, KVariant variant) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  CsvTable t(diagnostics_columns);
  const bool real = traj.model.real_valued();
  std::vector<double> mres(traj.size(), nan), eres(traj.size(), nan);
  if (real && traj.size() >= 5) {
    const auto m = conservation_residual(traj, ConservationLaw::mass_law, variant);
    const auto e = conservation_residual(traj, ConservationLaw::energy_law, variant);
    for (std::size_t i = 0; i < m.indices.size(); ++i) mres[m.indices[i]] = m.residual[i];
    for (std::size_t i = 0; i < e.indices.size(); ++i) eres[e.indices[i]] = e.residual[i];
  }
  if (real) {
    const auto recs = centres(traj, variant);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const auto& r = recs[i];
      t.add_row({r.t, r.mass, r.energy, r.xM, r.xE, r.vM, r.vE, r.gap, r.tail_mass, mres[i], eres[i]});
    }
  } else {
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const auto& f = traj.snapshots[i];
      t.add_row({traj.times[i], mass(f), energy(f, traj.model), nan, nan, nan, nan, nan, tail_mass_fraction(f), nan, nan});
    }
  }
  return t;
}

inline CsvTable gap_table(const GapSeries& g) {
  CsvTable t({"t", "gap", "gap_gram", "normalised_gap", "velocity_difference", "relative_mismatch"});
  for (const auto& s : g.samples)
    t.add_row({s.t, s.gap, s.gap_gram, s.normalised_gap, s.velocity_difference, s.relative_mismatch});
  return t;
}

inline CsvTable gram_table(const Trajectory& traj) {
  CsvTable t({"t", "a", "b", "q", "r", "s", "det", "min_eigenvalue", "psd", "rst", "lhs", "rhs", "gram_consistency"});
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto g = extract_gram(traj.snapshots[i], traj.model.p);
    const auto psd = gram_psd_check(g);
    const auto alg = alg_inequality(g, traj.model.p);
    t.add_row({traj.times[i], g.a, g.b, g.q, g.r, g.s, g.det(), psd.eigenvalues[0], psd.psd ? 1.0 : 0.0,
               g.satisfies_rst() ? 1.0 : 0.0, alg.lhs, alg.rhs, g.gram_consistency});
  }
  return t;
}

inline CsvTable dispersion_table(const DispersionReport& d) {
  CsvTable t({"T", "sup_dispersion"});
  for (std::size_t i = 0; i < d.windows.size(); ++i) t.add_row({d.windows[i], d.sups[i]});
  return t;
}

inline CsvTable embedding_series_table(const EmbeddingRecord& r) {
  CsvTable t({"t", "err_L2", "band1", "band3", "band5"});
  for (const auto& s : r.series) t.add_row({s.t, s.err_l2, s.band[0], s.band[1], s.band[2]});
  return t;
}

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json finite_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json fit_json(const std::optional<LinearFit>& f) {
  if (!f) return nullptr;
  return {{"slope", f->slope}, {"intercept", f->intercept}, {"slope_stderr", f->slope_stderr}};
}

inline json to_json_value(const EmbeddingReport& rep) {
  json recs = json::array();
  for (const auto& r : rep.records) {
    recs.push_back({{"N", r.N},
                    {"grid", to_json_value(r.grid)},
                    {"dt", r.dt},
                    {"failed", r.failed},
                    {"failure", r.failure},
                    {"failure_time", r.failure_time},
                    {"mass_ratio", optional_json(r.mass_ratio)},
                    {"energy_ratio", optional_json(r.energy_ratio)},
                    {"sup_error_l2", r.sup_error_l2},
                    {"band_norms", r.band_norms},
                    {"residual_norm", r.residual_norm},
                    {"leakage_fraction", r.leakage_fraction},
                    {"dispersive_norm", r.dispersive_norm},
                    {"forced_l6_smoothing", r.forced_l6_smoothing},
                    {"forced_l5l10", r.forced_l5l10},
                    {"forced_sup_l2", r.forced_sup_l2},
                    {"nonresonance_gain", r.nonresonance_gain},
                    {"l6_recovery_ratio", optional_json(r.l6_recovery_ratio)},
                    {"sup_v_l2", r.sup_v_l2}});
  }
  return {{"config", to_json_value(rep.config)},
          {"nls_mass", rep.nls_mass},
          {"records", recs},
          {"band_fits", {fit_json(rep.band_fits[0]), fit_json(rep.band_fits[1]), fit_json(rep.band_fits[2])}},
          {"residual_ratio_fit", fit_json(rep.residual_ratio_fit)}};
}

// ---------------------------------------------------------------------------
// Seeded Gaussian ensemble

// Uniform doubles from the top 53 bits of mt19937_64, whose output sequence
// is fixed by the standard (unlike std::uniform_real_distribution).
class EnsembleRng {
 public:
  explicit EnsembleRng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

 private:
  std::mt19937_64 gen_;
};

struct EnsembleMember {
  double amplitude = 0.0, width = 0.0, center = 0.0;
};

inline std::vector<EnsembleMember> gaussian_ensemble(const NormsConfig& c, std::uint64_t seed) {
  EnsembleRng rng(seed);
  std::vector<EnsembleMember> out(c.ensemble_size);
  for (auto& m : out) {
    m.amplitude = rng.uniform(c.amplitude_min, c.amplitude_max);
    m.width = rng.uniform(c.width_min, c.width_max);
    m.center = rng.uniform(c.center_min, c.center_max);
  }
  return out;
}

struct NormsRow {
  EnsembleMember member;
  double mass = 0.0;
  double norm = 0.0;
  double ratio = 0.0;
  // Same ratio with both resolutions doubled; NaN when not checked.
  double ratio_fine = std::numeric_limits<double>::quiet_NaN();
  double relative_change = std::numeric_limits<double>::quiet_NaN();
};

// L^r_x L^q_t norm of the Airy evolution over [0, t_final], divided by M^{1/2}.
inline double airy_norm_ratio(const EnsembleMember& m, const GridSpec& grid, double t_final, double sample_dt,
                              const NormsConfig& c, double* mass_out = nullptr, double* norm_out = nullptr) {
  const Field u0 = gaussian(m.amplitude, m.width, m.center, grid, true);
  StepperConfig st;
  st.dt = sample_dt;
  const auto traj = evolve(u0, ModelSpec::airy(), st, t_final, sample_dt);
  const double M = mass(u0);
  const double n = mixed_norm(traj, NormKind::space_outer, c.q, c.r).value;
  if (mass_out) *mass_out = M;
  if (norm_out) *norm_out = n;
  return n / std::sqrt(M);
}

inline std::vector<NormsRow> norms_ensemble(const RunConfig& cfg) {
  std::vector<NormsRow> rows;
  GridSpec fine = cfg.grid;
  fine.num_points *= 2;
  for (const auto& m : gaussian_ensemble(cfg.norms, cfg.seed)) {
    NormsRow r;
    r.member = m;
    r.ratio = airy_norm_ratio(m, cfg.grid, cfg.t_final, cfg.sample_dt, cfg.norms, &r.mass, &r.norm);
    if (cfg.norms.resolution_check) {
      r.ratio_fine = airy_norm_ratio(m, fine, cfg.t_final, 0.5 * cfg.sample_dt, cfg.norms);
      r.relative_change = std::abs(r.ratio_fine - r.ratio) / r.ratio;
    }
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Runs

struct RunResult {
  int exit_code = exit_ok;
  fs::path dir;
  std::vector<std::string> outputs;
  json summary = json::object();
};

namespace detail {

class RunWriter {
 public:
  explicit RunWriter(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void text(const std::string& name, const std::string& body) {
    write_text(dir_ / name, body);
    outputs_.push_back(name);
  }
  void csv(const std::string& name, const CsvTable& t) { text(name, t.str()); }
  void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }
  void trajectory(const std::string& name, const Trajectory& traj, const StepperConfig& st) {
    save_trajectory(dir_ / name, traj, st);
    outputs_.push_back(name + "/");
  }

  const fs::path& dir() const { return dir_; }
  const std::vector<std::string>& outputs() const { return outputs_; }

 private:
  fs::path dir_;
  std::vector<std::string> outputs_;
};

inline Trajectory simulate_trajectory(const RunConfig& cfg) {
  return evolve(initial_field(cfg), cfg.model, cfg.stepper, cfg.t_final, cfg.sample_dt);
}

inline void run_simulate(const RunConfig& cfg, RunWriter& w, json& summary) {
  const auto traj = simulate_trajectory(cfg);
  w.csv("diagnostics.csv", diagnostics_table(traj, cfg.k_variant));
  if (cfg.flag("save_snapshots", true)) w.trajectory("trajectory", traj, cfg.stepper);
  const double m0 = mass(traj.snapshots.front()), m1 = mass(traj.snapshots.back());
  summary["samples"] = traj.size();
  summary["mass_drift"] = m0 > 0.0 ? std::abs(m1 - m0) / m0 : 0.0;
  summary["first_wrap_time"] = finite_json(traj.first_wrap_time);
}

inline void run_diagnose(const RunConfig& cfg, RunWriter& w, json& summary) {
  const auto traj = simulate_trajectory(cfg);
  w.csv("diagnostics.csv", diagnostics_table(traj, cfg.k_variant));
  if (cfg.flag("save_snapshots", false)) w.trajectory("trajectory", traj, cfg.stepper);
  const auto& m = cfg.model;
  if (m.family != Family::gkdv) return;
  w.csv("gram.csv", gram_table(traj));
  if (m.mu == 1.0 && m.p >= std::sqrt(3.0) * (1.0 - 1e-12)) {
    const auto g = monotonicity_gap_series(traj, cfg.k_variant);
    w.csv("gap.csv", gap_table(g));
    summary["gap_all_positive"] = g.all_positive;
    summary["min_gap"] = g.min_gap;
    summary["max_relative_mismatch"] = g.max_relative_mismatch;
  }
  auto windows = cfg.diagnose.dispersion_windows;
  if (windows.empty()) windows = {0.25 * cfg.t_final, 0.5 * cfg.t_final, cfg.t_final};
  const auto d = dispersion_functional(traj, windows);
  w.csv("dispersion.csv", dispersion_table(d));
  CsvTable series({"t", "dispersion"});
  for (std::size_t i = 0; i < d.times.size(); ++i) series.add_row({d.times[i], d.values[i]});
  w.csv("dispersion_series.csv", series);
  summary["dispersion_exponent"] = d.fit.slope;
}

inline void run_embed(const RunConfig& cfg, RunWriter& w, json& summary) {
  const auto nls = embedding_nls_run(cfg.embedding);
  w.csv("diagnostics.csv", diagnostics_table(nls, cfg.k_variant));
  const auto rep = run_embedding(cfg.embedding, nls);
  w.json_file("embedding_report.json", to_json_value(rep));
  for (const auto& r : rep.records)
    w.csv("embedding_N" + format_double(r.N) + ".csv", embedding_series_table(r));
  summary["records"] = rep.records.size();
  for (const auto& r : rep.records)
    if (r.failed) throw BlowUpError("embed: gKdV run for N = " + format_double(r.N) + " failed: " + r.failure,
                                    r.failure_time);
}

inline void run_gram_scan(const RunConfig& cfg, RunWriter& w, json& summary) {
  w.csv("diagnostics.csv", CsvTable(diagnostics_columns));
  CsvTable scan({"p", "resolution", "points_tested", "min_expand_value", "n_violations"});
  CsvTable viol({"p", "q", "r", "s", "expand_value"});
  std::size_t total = 0;
  for (double p : cfg.gram_scan.p_list) {
    const auto rep = region_scan(p, cfg.gram_scan.resolution);
    if (rep.disagreements != 0)
      throw ConsistencyError("gram_scan: ray and discriminant tests disagree at " + std::to_string(rep.disagreements) +
                             " points for p = " + format_double(p));
    scan.add_row({p, rep.grid_resolution, static_cast<double>(rep.points_tested), rep.min_expand_value,
                  static_cast<double>(rep.violations.size())});
    for (const auto& v : rep.violations) viol.add_row({p, v.q, v.r, v.s, v.expand_value});
    total += rep.violations.size();
  }
  w.csv("gram_scan.csv", scan);
  w.csv("gram_violations.csv", viol);
  summary["total_violations"] = total;
}

inline void run_norms(const RunConfig& cfg, RunWriter& w, json& summary) {
  w.csv("diagnostics.csv", CsvTable(diagnostics_columns));
  const auto rows = norms_ensemble(cfg);
  CsvTable t({"member", "amplitude", "width", "center", "mass", "norm", "ratio", "ratio_fine", "relative_change"});
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    t.add_row({static_cast<double>(i), r.member.amplitude, r.member.width, r.member.center, r.mass, r.norm, r.ratio,
               r.ratio_fine, r.relative_change});
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
    if (std::isfinite(r.relative_change)) worst = std::max(worst, r.relative_change);
  }
  w.csv("norms.csv", t);
  summary["max_ratio"] = hi;
  summary["spread"] = hi / lo;
  summary["max_relative_change"] = worst;
}

inline json manifest_json(const RunConfig& cfg, const RunWriter& w, const std::string& status, const json& summary) {
  return {{"manifest_version", manifest_version},
          {"version", version},
          {"config", to_json_value(cfg)},
          {"status", status},
          {"outputs", w.outputs()},
          {"summary", summary}};
}

}  // namespace detail

// Runs one experiment into cfg.out_dir. Never throws for computational
// failures: those produce error.json and a nonzero exit code.
inline RunResult run(const RunConfig& cfg) {
  RunResult res;
  res.dir = cfg.out_dir;
  detail::RunWriter w(res.dir);
  fs::remove(res.dir / "error.json");
  json summary = json::object();
  try {
    cfg.validate();
    switch (cfg.experiment) {
      case Experiment::simulate: detail::run_simulate(cfg, w, summary); break;
      case Experiment::diagnose: detail::run_diagnose(cfg, w, summary); break;
      case Experiment::embed: detail::run_embed(cfg, w, summary); break;
      case Experiment::gram_scan: detail::run_gram_scan(cfg, w, summary); break;
      case Experiment::norms: detail::run_norms(cfg, w, summary); break;
    }
  } catch (const Error& e) {
    res.exit_code = exit_code_for(e);
    json err{{"kind", e.kind()}, {"message", e.what()}, {"exit_code", res.exit_code}};
    if (const auto* b = dynamic_cast<const BlowUpError*>(&e)) err["last_valid_time"] = b->last_valid_time();
    write_text(res.dir / "error.json", err.dump(2) + "\n");
  }
  const std::string status = res.exit_code == exit_ok ? "ok" : "failed";
  write_text(res.dir / "manifest.json", detail::manifest_json(cfg, w, status, summary).dump(2) + "\n");
  res.outputs = w.outputs();
  res.summary = summary;
  return res;
}

// ---------------------------------------------------------------------------
// Plot data

namespace detail {

inline bool run_has(const fs::path& dir, const char* file) { return fs::exists(dir / file); }

inline std::string columns_text(const std::string& header, const std::vector<std::vector<double>>& rows) {
  std::string out = "# " + header + "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out += (i ? " " : "") + format_double(r[i]);
    out += '\n';
  }
  return out;
}

inline std::vector<std::vector<double>> zip_columns(const CsvTable& t, const std::vector<std::string>& names) {
  std::vector<std::vector<double>> cols;
  for (const auto& n : names) cols.push_back(t.column(n));
  std::vector<std::vector<double>> rows(cols.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto& c : cols) rows[i].push_back(c[i]);
  return rows;
}

}  // namespace detail

inline std::vector<std::string> available_plot_series(const fs::path& dir) {
  std::vector<std::string> out;
  if (detail::run_has(dir, "diagnostics.csv") &&
      !CsvTable::parse(read_text(dir / "diagnostics.csv")).rows().empty()) {
    out.push_back("mass");
    out.push_back("energy");
  }
  if (detail::run_has(dir, "gap.csv")) out.push_back("gap");
  if (detail::run_has(dir, "dispersion.csv")) out.push_back("dispersion");
  if (detail::run_has(dir, "embedding_report.json")) {
    out.push_back("embedding_error");
    out.push_back("embedding_bands");
  }
  if (detail::run_has(dir, "gram_scan.csv")) out.push_back("gram_violations");
  if (detail::run_has(dir, "norms.csv")) out.push_back("norms");
  return out;
}

// Whitespace-separated columns with a single '#' header line.
inline std::string plot_data(const fs::path& dir, const std::string& series) {
  const auto avail = available_plot_series(dir);
  if (std::find(avail.begin(), avail.end(), series) == avail.end()) {
    std::string list;
    for (const auto& s : avail) list += (list.empty() ? "" : ", ") + s;
    throw ValidationError("plot: unknown series '" + series + "'; available: " + (list.empty() ? "(none)" : list));
  }
  if (series == "mass" || series == "energy") {
    const auto t = CsvTable::parse(read_text(dir / "diagnostics.csv"));
    return detail::columns_text("t " + series, detail::zip_columns(t, {"t", series}));
  }
  if (series == "gap") {
    const auto t = CsvTable::parse(read_text(dir / "gap.csv"));
    return detail::columns_text("t gap", detail::zip_columns(t, {"t", "gap"}));
  }
  if (series == "dispersion") {
    const auto t = CsvTable::parse(read_text(dir / "dispersion.csv"));
    const auto T = t.column("T"), S = t.column("sup_dispersion");
    std::string head = "T sup_dispersion";
    if (T.size() >= 2) head += " fitted_exponent=" + format_double(fit_power_law(T, S).slope);
    return detail::columns_text(head, detail::zip_columns(t, {"T", "sup_dispersion"}));
  }
  if (series == "gram_violations") {
    const auto t = CsvTable::parse(read_text(dir / "gram_violations.csv"));
    return detail::columns_text("p q r s expand_value", detail::zip_columns(t, {"p", "q", "r", "s", "expand_value"}));
  }
  if (series == "norms") {
    const auto t = CsvTable::parse(read_text(dir / "norms.csv"));
    return detail::columns_text("member ratio", detail::zip_columns(t, {"member", "ratio"}));
  }
  const json rep = json::parse(read_text(dir / "embedding_report.json"));
  std::vector<std::vector<double>> rows;
  for (const auto& r : rep.at("records")) {
    if (r.at("failed").get<bool>()) continue;
    const double N = r.at("N").get<double>();
    if (series == "embedding_error") {
      rows.push_back({N, r.at("sup_error_l2").get<double>()});
    } else {
      const auto b = r.at("band_norms").get<std::vector<double>>();
      rows.push_back({N, b[0], b[1], b[2]});
    }
  }
  std::sort(rows.begin(), rows.end());
  return detail::columns_text(series == "embedding_error" ? "N sup_error_L2" : "N band1 band3 band5", rows);
}

// Writes plot_<series>.dat into the run directory and returns its path.
inline fs::path emit_plot_data(const fs::path& dir, const std::string& series) {
  const auto text = plot_data(dir, series);
  const fs::path out = dir / ("plot_" + series + ".dat");
  write_text(out, text);
  return out;
}

}  // namespace gkdv
