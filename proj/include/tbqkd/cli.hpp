#pragma once

// Command dispatch for the `tbqkd` tool. Exit codes: 0 on success
// (including zero-key results), 1 on usage or configuration errors, 2 on
// I/O failures.

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tbqkd/config.hpp"
#include "tbqkd/finitekey.hpp"
#include "tbqkd/montecarlo.hpp"
#include "tbqkd/report.hpp"
#include "tbqkd/sweeps.hpp"
#include "tbqkd/validate.hpp"

namespace tbqkd::cli {

class IoError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::string> leakage;
};

inline void add_config(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "Parameter file (key = value)");
}

inline void add_leakage(CLI::App* app, Common& c) {
  app->add_option("--leakage", c.leakage, "Leakage model override")
      ->check(CLI::IsMember({"printed", "tight"}));
}

inline ParamBundle bundle(const Common& c) {
  ParamBundle b = load_config(c.config);
  if (c.leakage) b.leakage = *c.leakage == "printed" ? LeakageModel::printed : LeakageModel::tight;
  return b;
}

/// Writes to `path`, or to `out` when the path is empty.
inline void emit(const std::string& path, std::ostream& out,
                 const std::function<void(std::ostream&)>& write) {
  if (path.empty()) {
    write(out);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  write(f);
  if (!f) throw IoError("write to '" + path + "' failed");
}

inline sweeps::SweepSpec sweep_spec(const ParamBundle& b, double n_sum) {
  sweeps::SweepSpec s;
  s.system = b.system;
  s.security = b.security;
  s.split = b.split;
  s.leakage = b.leakage;
  s.n_sum = n_sum;
  return s;
}

}  // namespace detail

/// Runs one command line (without the program name).
inline int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-bin QKD simulator: finite-key rates, sweeps and Monte Carlo", "tbqkd"};
  app.require_subcommand(1);
  app.set_version_flag("--version", report::kVersion);

  std::function<void()> action;

  // keyrate
  detail::Common kr;
  double kr_distance = 0.0;
  double kr_n_sum = 1e11;
  std::optional<double> kr_ez, kr_ex;
  auto* keyrate = app.add_subcommand("keyrate", "Finite-key secure key rate at one operating point");
  detail::add_config(keyrate, kr);
  detail::add_leakage(keyrate, kr);
  keyrate->add_option("--distance-km", kr_distance, "Fiber length")->check(CLI::NonNegativeNumber);
  keyrate->add_option("--n-sum", kr_n_sum, "Pulses per block")->check(CLI::PositiveNumber);
  auto* ez = keyrate->add_option("--e-z", kr_ez, "Measured Z-basis QBER")->check(CLI::Range(0.0, 0.5));
  auto* ex = keyrate->add_option("--e-x", kr_ex, "Measured X-basis QBER")->check(CLI::Range(0.0, 0.5));
  ez->needs(ex);
  ex->needs(ez);
  keyrate->add_option("--out", kr.out, "JSON output file");
  keyrate->callback([&] {
    action = [&] {
      const auto b = detail::bundle(kr);
      SystemParams s = b.system;
      s.length_km = kr_distance;
      finitekey::KeyRateOptions opt;
      opt.leakage = b.leakage;
      opt.e_z_override = kr_ez;
      opt.e_x_override = kr_ex;
      const auto r = finitekey::analyze(s, b.security, b.split, kr_n_sum, opt);
      const auto rep = report::keyrate_report(b, kr_distance, kr_n_sum, r);
      detail::emit(kr.out, out, [&](std::ostream& os) { os << report::dump(rep); });
    };
  });

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Parameter sweeps written as CSV");
  sweep->require_subcommand(1);
  detail::Common sw;
  double sw_n_sum = 1e11;
  double sw_distance = 0.0;
  double d_from = 0, d_to = 150, d_step = 1;
  double n_min = 1e-3, n_max = 0.1, g_max = 0.1;
  std::size_t n_points = 21, g_points = 21;
  double f_min = 25e6, f_max = 500e6, tau_min = 100e-12, tau_max = 2000e-12;
  std::size_t f_points = 20, tau_points = 20;
  auto common_sweep = [&](CLI::App* a) {
    detail::add_config(a, sw);
    detail::add_leakage(a, sw);
    a->add_option("--out", sw.out, "CSV output file");
    a->add_option("--n-sum", sw_n_sum, "Pulses per block")->check(CLI::PositiveNumber);
  };
  auto* s_dist = sweep->add_subcommand("distance", "QBERs and key rate versus fiber length");
  common_sweep(s_dist);
  s_dist->add_option("--from", d_from, "First distance (km)")->check(CLI::NonNegativeNumber);
  s_dist->add_option("--to", d_to, "Last distance (km)")->check(CLI::NonNegativeNumber);
  s_dist->add_option("--step", d_step, "Distance step (km)")->check(CLI::PositiveNumber);
  s_dist->callback([&] {
    action = [&] {
      if (d_to < d_from) throw ParameterError("--to must not be below --from");
      auto spec = detail::sweep_spec(detail::bundle(sw), sw_n_sum);
      const auto n = static_cast<std::size_t>(std::floor((d_to - d_from) / d_step + 1e-9)) + 1;
      for (std::size_t i = 0; i < n; ++i) spec.x_grid.push_back(d_from + d_step * static_cast<double>(i));
      const auto rows = sweeps::distance_sweep(spec);
      detail::emit(sw.out, out, [&](std::ostream& os) { report::write_distance_csv(os, rows); });
    };
  });
  auto* s_bright = sweep->add_subcommand("brightness", "Key-rate gain over <n> x g2");
  common_sweep(s_bright);
  s_bright->add_option("--distance-km", sw_distance, "Fiber length")->check(CLI::NonNegativeNumber);
  s_bright->add_option("--n-min", n_min)->check(CLI::PositiveNumber);
  s_bright->add_option("--n-max", n_max)->check(CLI::PositiveNumber);
  s_bright->add_option("--n-points", n_points)->check(CLI::PositiveNumber);
  s_bright->add_option("--g2-max", g_max)->check(CLI::Range(0.0, 1.0));
  s_bright->add_option("--g2-points", g_points)->check(CLI::PositiveNumber);
  s_bright->callback([&] {
    action = [&] {
      auto spec = detail::sweep_spec(detail::bundle(sw), sw_n_sum);
      spec.distance_km = sw_distance;
      spec.x_grid = sweeps::logspace(n_min, n_max, n_points);
      spec.y_grid = sweeps::linspace(0.0, g_max, g_points);
      const auto rows = sweeps::brightness_purity_sweep(spec);
      detail::emit(sw.out, out, [&](std::ostream& os) { report::write_grid_csv(os, rows); });
    };
  });
  auto* s_rep = sweep->add_subcommand("reprate", "Key-rate gain over f_rep x lifetime");
  common_sweep(s_rep);
  s_rep->add_option("--distance-km", sw_distance, "Fiber length")->check(CLI::NonNegativeNumber);
  s_rep->add_option("--f-min", f_min)->check(CLI::PositiveNumber);
  s_rep->add_option("--f-max", f_max)->check(CLI::PositiveNumber);
  s_rep->add_option("--f-points", f_points)->check(CLI::PositiveNumber);
  s_rep->add_option("--tau-min", tau_min)->check(CLI::PositiveNumber);
  s_rep->add_option("--tau-max", tau_max)->check(CLI::PositiveNumber);
  s_rep->add_option("--tau-points", tau_points)->check(CLI::PositiveNumber);
  s_rep->callback([&] {
    action = [&] {
      auto spec = detail::sweep_spec(detail::bundle(sw), sw_n_sum);
      spec.distance_km = sw_distance;
      spec.x_grid = sweeps::linspace(f_min, f_max, f_points);
      spec.y_grid = sweeps::linspace(tau_min, tau_max, tau_points);
      const auto rows = sweeps::reprate_lifetime_sweep(spec);
      detail::emit(sw.out, out, [&](std::ostream& os) { report::write_grid_csv(os, rows); });
    };
  });

  // mc run
  auto* mc = app.add_subcommand("mc", "Monte Carlo detection simulation");
  mc->require_subcommand(1);
  detail::Common mcc;
  montecarlo::McConfig mcfg;
  std::string mc_mode = "pheno";
  std::string mc_report_path;
  double mc_distance = 0.0;
  auto* mc_run = mc->add_subcommand("run", "Simulate one block and report the QBERs");
  detail::add_config(mc_run, mcc);
  mc_run->add_option("--pulses", mcfg.n_pulses, "Pulses to simulate")->check(CLI::PositiveNumber);
  mc_run->add_option("--seed", mcfg.seed, "RNG seed");
  mc_run->add_option("--mode", mc_mode, "Simulation mode")
      ->check(CLI::IsMember({"matrix", "pheno"}));
  mc_run->add_option("--distance-km", mc_distance, "Fiber length")->check(CLI::NonNegativeNumber);
  mc_run->add_flag("--dead-time", mcfg.dead_time_enabled, "Apply detector dead time");
  mc_run->add_option("--workers", mcfg.workers, "Worker threads")->check(CLI::PositiveNumber);
  mc_run->add_option("--out", mcc.out, "Histogram CSV file (JSON report goes to stdout)");
  mc_run->add_option("--report", mc_report_path, "JSON report file");
  mc_run->callback([&] {
    action = [&] {
      const auto b = detail::bundle(mcc);
      SystemParams s = b.system;
      s.length_km = mc_distance;
      mcfg.mode = montecarlo::parse_mode(mc_mode);
      const auto seq = montecarlo::EncodingSequence::default_pattern();
      const auto hist = montecarlo::simulate_block(s, seq, mcfg, b.split);
      const auto q = montecarlo::sift_and_qber(hist, seq);
      if (!mcc.out.empty())
        detail::emit(mcc.out, out, [&](std::ostream& os) { report::write_histogram_csv(os, hist, seq); });
      const auto rep = report::mc_report(b, mcfg, mc_distance, hist, q);
      detail::emit(mc_report_path, out, [&](std::ostream& os) { os << report::dump(rep); });
    };
  });

  // stability
  detail::Common st;
  montecarlo::McConfig scfg;
  std::size_t st_blocks = 60;
  std::uint64_t st_block_pulses = 1'000'000;
  std::string st_mode = "pheno";
  std::string st_report_path;
  double st_distance = 0.0;
  auto* stab = app.add_subcommand("stability", "Monte Carlo QBER time series");
  detail::add_config(stab, st);
  stab->add_option("--blocks", st_blocks, "Number of blocks")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 32));
  stab->add_option("--block-pulses", st_block_pulses, "Pulses per block")->check(CLI::PositiveNumber);
  stab->add_option("--seed", scfg.seed, "RNG seed");
  stab->add_option("--mode", st_mode, "Simulation mode")->check(CLI::IsMember({"matrix", "pheno"}));
  stab->add_option("--distance-km", st_distance, "Fiber length")->check(CLI::NonNegativeNumber);
  stab->add_option("--workers", scfg.workers, "Worker threads")->check(CLI::PositiveNumber);
  stab->add_option("--out", st.out, "Per-block CSV file (JSON summary goes to stdout)");
  stab->add_option("--report", st_report_path, "JSON summary file");
  stab->callback([&] {
    action = [&] {
      const auto b = detail::bundle(st);
      SystemParams s = b.system;
      s.length_km = st_distance;
      scfg.mode = montecarlo::parse_mode(st_mode);
      const auto r = sweeps::stability_run(s, scfg, st_blocks, st_block_pulses);
      if (!st.out.empty())
        detail::emit(st.out, out, [&](std::ostream& os) { report::write_stability_csv(os, r); });
      const auto rep = report::stability_report(b, scfg, st_distance, r);
      detail::emit(st_report_path, out, [&](std::ostream& os) { os << report::dump(rep); });
    };
  });

  // validate
  int validate_status = 0;
  auto* val = app.add_subcommand("validate", "Run the built-in invariant checks");
  val->callback([&] {
    action = [&] {
      const auto results = validation::run_checks(validation::builtin_checks());
      validate_status = validation::print_results(out, results) ? 0 : 1;
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);  // --help, --version
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (action) action();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return validate_status;
}

}  // namespace tbqkd::cli
