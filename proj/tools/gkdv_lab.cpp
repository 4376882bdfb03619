// Command-line front end: one subcommand per experiment plus `plot`.
//
//   gkdv_lab simulate --config run.json --out runs/a
//   gkdv_lab plot --run runs/a --series mass

#include "gkdv/runner.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

struct RunFlags {
  std::string config;
  std::string out;
  std::string k_variant;
  std::optional<std::uint64_t> seed;
};

void add_run_flags(CLI::App* sub, RunFlags& f) {
  sub->add_option("--config", f.config, "JSON run config (or a run manifest)")->check(CLI::ExistingFile);
  sub->add_option("--out", f.out, "output directory (overrides out_dir)");
  sub->add_option("--k-variant", f.k_variant, "energy current: corrected | paper-literal");
  sub->add_option("--seed", f.seed, "seed for random ensembles");
}

void report_error(const gkdv::Error& e, int code, const std::string& out) {
  std::cerr << "gkdv_lab: " << e.kind() << ": " << e.what() << "\n";
  if (out.empty()) return;
  gkdv::json err{{"kind", e.kind()}, {"message", e.what()}, {"exit_code", code}};
  try {
    gkdv::write_text(gkdv::fs::path(out) / "error.json", err.dump(2) + "\n");
  } catch (const gkdv::Error&) {
  }
}

int run_experiment(gkdv::Experiment ex, const RunFlags& f) {
  gkdv::RunConfig cfg;
  try {
    if (f.config.empty()) {
      cfg.experiment = ex;
      if (ex == gkdv::Experiment::norms) cfg.model = gkdv::ModelSpec::airy();
    } else {
      cfg = gkdv::parse_config(gkdv::read_text(f.config), ex);
    }
    if (!f.out.empty()) cfg.out_dir = f.out;
    if (!f.k_variant.empty()) cfg.k_variant = gkdv::k_variant_from_string(f.k_variant);
    if (f.seed) cfg.seed = *f.seed;
    cfg.validate();
  } catch (const gkdv::Error& e) {
    // An unreadable config file is a bad request too.
    const int code = dynamic_cast<const gkdv::IoError*>(&e) ? gkdv::exit_validation : gkdv::exit_code_for(e);
    report_error(e, code, f.out);
    return code;
  }
  const auto res = gkdv::run(cfg);
  if (res.exit_code != gkdv::exit_ok) {
    std::cerr << "gkdv_lab: run failed, see " << (res.dir / "error.json").string() << "\n";
    return res.exit_code;
  }
  std::cout << res.dir.string() << "\n";
  return gkdv::exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral experiments for generalised KdV and the quintic NLS embedding"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    gkdv::Experiment ex;
    const char* help;
  };
  const Sub subs[] = {
      {"simulate", gkdv::Experiment::simulate, "evolve one datum and record diagnostics"},
      {"diagnose", gkdv::Experiment::diagnose, "simulate plus gap, Gram and dispersion tables"},
      {"embed", gkdv::Experiment::embed, "compare the NLS embedding ansatz with gKdV runs"},
      {"gram-scan", gkdv::Experiment::gram_scan, "scan the Gram constraint region for violations"},
      {"norms", gkdv::Experiment::norms, "mixed norms of a seeded Airy ensemble"},
  };
  RunFlags flags;
  std::vector<std::pair<CLI::App*, gkdv::Experiment>> run_subs;
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    add_run_flags(sub, flags);
    run_subs.emplace_back(sub, s.ex);
  }

  std::string run_dir, series;
  auto* plot = app.add_subcommand("plot", "write plot_<series>.dat from a finished run");
  plot->add_option("--run", run_dir, "run directory")->required();
  plot->add_option("--series", series, "series name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return gkdv::exit_validation;
  }

  for (const auto& [sub, ex] : run_subs)
    if (sub->parsed()) return run_experiment(ex, flags);

  try {
    std::cout << gkdv::emit_plot_data(run_dir, series).string() << "\n";
  } catch (const gkdv::Error& e) {
    std::cerr << "gkdv_lab: " << e.kind() << ": " << e.what() << "\n";
    return gkdv::exit_code_for(e);
  }
  return gkdv::exit_ok;
}
