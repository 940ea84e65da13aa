#pragma once

// Experiment drivers: distance sweeps, brightness x purity and repetition
// rate x lifetime gain maps, the measured-QBER key-rate table and the
// Monte Carlo stability emulation.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tbqkd/finitekey.hpp"
#include "tbqkd/montecarlo.hpp"
#include "tbqkd/params.hpp"

namespace tbqkd::sweeps {

using finitekey::KeyStatus;

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n == 0) throw ParameterError("linspace: empty grid");
  if (n == 1) return {lo};
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

inline std::vector<double> logspace(double lo, double hi, std::size_t n) {
  auto v = linspace(std::log10(lo), std::log10(hi), n);
  for (auto& x : v) x = std::pow(10.0, x);
  return v;
}

struct SweepSpec {
  SystemParams system;
  SecurityParams security;
  BasisSplit split;
  double n_sum = 1e11;
  LeakageModel leakage = LeakageModel::tight;
  double distance_km = 0.0;   // operating distance of the gain maps
  std::vector<double> x_grid;  // distance / <n> / f_rep
  std::vector<double> y_grid;  // g2 / lifetime

  void validate() const {
    system.validate();
    security.validate();
    split.validate();
    if (!(n_sum > 0)) throw ParameterError("n_sum must be positive");
    auto monotone = [](const std::vector<double>& g) {
      for (std::size_t i = 1; i < g.size(); ++i)
        if (!(g[i] > g[i - 1])) return false;
      return true;
    };
    if (!monotone(x_grid) || !monotone(y_grid)) throw ParameterError("grids must be increasing");
  }
};

struct DistanceRow {
  double length_km = 0;
  double e_x = 0;
  double e_z = 0;
  double r_secure = 0;
  KeyStatus status = KeyStatus::invalid;
};

struct GridRow {
  double x = 0;
  double y = 0;
  double gain = 0;
  KeyStatus status = KeyStatus::invalid;
};

namespace detail {

inline finitekey::KeyRateReport point(const SweepSpec& spec, const SystemParams& s,
                                      double n_sum) {
  finitekey::KeyRateOptions opt;
  opt.leakage = spec.leakage;
  return finitekey::analyze(s, spec.security, spec.split, n_sum, opt);
}

}  // namespace detail

inline finitekey::QberModel analytic_qber(const SweepSpec& spec, double length_km) {
  SystemParams s = spec.system;
  s.length_km = length_km;
  return finitekey::qber_model(finitekey::expected_counts(s, spec.security, spec.split, spec.n_sum));
}

/// Analytic QBERs and key rate at each distance of x_grid.
inline std::vector<DistanceRow> distance_sweep(const SweepSpec& spec) {
  spec.validate();
  if (spec.x_grid.empty()) throw ParameterError("distance grid is empty");
  std::vector<DistanceRow> rows;
  rows.reserve(spec.x_grid.size());
  for (double length : spec.x_grid) {
    if (!(length >= 0)) throw ParameterError("distances must be non-negative");
    SystemParams s = spec.system;
    s.length_km = length;
    const auto q = finitekey::qber_model(
        finitekey::expected_counts(s, spec.security, spec.split, spec.n_sum));
    const auto r = detail::point(spec, s, spec.n_sum);
    rows.push_back({length, q.e_x, q.e_z, r.r_secure, r.status});
  }
  return rows;
}

struct ToleranceResult {
  double distance_km = 0;
  bool reachable = false;
};

/// Smallest distance at which the analytic E_X reaches the threshold,
/// located by bisection to within `resolution_km`.
inline ToleranceResult max_tolerable_distance(const SweepSpec& spec, double qber_threshold,
                                              double lo_km = 0.0, double hi_km = 400.0,
                                              double resolution_km = 0.01) {
  spec.validate();
  if (!(qber_threshold > 0 && qber_threshold < 0.5))
    throw ParameterError("threshold must be in (0, 0.5)");
  auto ex = [&](double length) {
    const auto q = analytic_qber(spec, length);
    return q.valid ? q.e_x : 0.5;
  };
  if (ex(lo_km) >= qber_threshold) return {lo_km, true};
  if (ex(hi_km) < qber_threshold) return {hi_km, false};
  double lo = lo_km;
  double hi = hi_km;
  while (hi - lo > resolution_km) {
    const double mid = 0.5 * (lo + hi);
    if (ex(mid) >= qber_threshold)
      hi = mid;
    else
      lo = mid;
  }
  return {0.5 * (lo + hi), true};
}

/// Key-rate gain over the (<n>, g2) grid relative to the baseline source.
inline std::vector<GridRow> brightness_purity_sweep(const SweepSpec& spec) {
  spec.validate();
  SystemParams base = spec.system;
  base.length_km = spec.distance_km;
  const auto ref = detail::point(spec, base, spec.n_sum);
  std::vector<GridRow> rows;
  for (double n : spec.x_grid) {
    for (double g : spec.y_grid) {
      GridRow row{n, g, 0.0, KeyStatus::invalid};
      SystemParams s = base;
      s.mean_photon_number = n;
      s.g2 = g;
      try {
        const auto r = detail::point(spec, s, spec.n_sum);
        row.status = r.status;
        if (ref.r_secure > 0) row.gain = r.r_secure / ref.r_secure;
        else row.status = KeyStatus::invalid;
      } catch (const ParameterError&) {
        row.status = KeyStatus::invalid;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

/// Temporal-overlap model used for the repetition-rate map: the three
/// windows shrink to a third of the period, the emission tail exp(-W/tau)
/// leaks into the neighbouring window and half of it flips the bit; the
/// Sagnac slots overlap by exp(-delta/tau) with delta half a period, which
/// only degrades the phase basis.
struct ExponentialOverlapModel {
  SystemParams apply(const SystemParams& base, double f_rep, double tau) const {
    SystemParams s = base;
    s.f_rep_hz = f_rep;
    s.lifetime_tau_s = tau;
    const double window = 1.0 / (3.0 * f_rep);
    const double slot = 1.0 / (2.0 * f_rep);
    const double leak = std::exp(-window / tau);
    const double overlap = std::exp(-slot / tau);
    s.p_mis_z = std::min(1.0, base.p_mis_z + 0.5 * leak);
    s.p_mis_x = std::min(1.0, base.p_mis_x + 0.5 * leak + 0.5 * overlap);
    return s;
  }
};

/// Secure key rate (bits/s) gain over the (f_rep, tau) grid relative to
/// the baseline repetition rate and lifetime. `Model` maps the baseline
/// parameters to an operating point.
template <class Model = ExponentialOverlapModel>
std::vector<GridRow> reprate_lifetime_sweep(const SweepSpec& spec, const Model& model = {}) {
  spec.validate();
  SystemParams base = spec.system;
  base.length_km = spec.distance_km;
  auto skr = [&](double f, double tau, KeyStatus* status) {
    const auto r = detail::point(spec, model.apply(base, f, tau), spec.n_sum);
    if (status) *status = r.status;
    return r.r_secure * f;
  };
  const double ref = skr(base.f_rep_hz, base.lifetime_tau_s, nullptr);
  std::vector<GridRow> rows;
  for (double f : spec.x_grid) {
    for (double tau : spec.y_grid) {
      GridRow row{f, tau, 0.0, KeyStatus::invalid};
      const double v = skr(f, tau, &row.status);
      if (ref > 0) row.gain = v / ref;
      else row.status = KeyStatus::invalid;
      rows.push_back(row);
    }
  }
  return rows;
}

struct Table1Row {
  double length_km;
  double n_sum;
  double e_z;
  double e_x;
  double paper_skb_per_pulse;
};

/// Measured QBERs, block sizes and key rates of the four fiber spools.
inline std::array<Table1Row, 4> table1_rows() {
  return {{{0, 4.56e9, 0.0098, 0.0314, 1.59e-4},
           {40, 4.56e9, 0.0119, 0.0312, 3.04e-5},
           {80, 4.56e9, 0.0302, 0.0490, 3.54e-6},
           {120, 9.12e10, 0.0685, 0.0960, 1.99e-7}}};
}

/// Key rates recomputed from the measured QBERs through the finite-key
/// pipeline.
inline std::vector<finitekey::KeyRateReport> table1_reproduction(
    const SystemParams& system = {}, const SecurityParams& security = {},
    const BasisSplit& split = {},
    LeakageModel leakage = LeakageModel::tight) {
  std::vector<finitekey::KeyRateReport> out;
  for (const auto& row : table1_rows()) {
    SystemParams s = system;
    s.length_km = row.length_km;
    finitekey::KeyRateOptions opt;
    opt.e_z_override = row.e_z;
    opt.e_x_override = row.e_x;
    opt.leakage = leakage;
    out.push_back(finitekey::analyze(s, security, split, row.n_sum, opt));
  }
  return out;
}

/// One minute of pulses at the reference repetition rate.
inline constexpr double kMinuteBlockPulses = 4.56e9;

struct SeriesSummary {
  double mean = 0;
  double stddev = 0;     // sample standard deviation over blocks
  double matched = 0;    // stddev rescaled to the reference block size
  std::size_t defined = 0;
};

struct StabilityResult {
  std::vector<montecarlo::QberEstimates> series;
  SeriesSummary e_z0, e_z1, e_z, e_x0;
  std::uint64_t block_pulses = 0;
  double reference_block_pulses = kMinuteBlockPulses;
  double scale = 1;  // reference / simulated pulses per block
};

namespace detail {

template <class Get>
SeriesSummary summarize(const std::vector<montecarlo::QberEstimates>& s, Get get, double scale) {
  SeriesSummary out;
  double sum = 0;
  for (const auto& q : s)
    if (auto v = get(q)) {
      sum += *v;
      ++out.defined;
    }
  if (out.defined == 0) return out;
  out.mean = sum / static_cast<double>(out.defined);
  if (out.defined > 1) {
    double ss = 0;
    for (const auto& q : s)
      if (auto v = get(q)) ss += (*v - out.mean) * (*v - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(out.defined - 1));
  }
  out.matched = out.stddev / std::sqrt(scale);
  return out;
}

}  // namespace detail

/// Monte Carlo QBER time series: block i uses stream i of the seed. With
/// no drift model the spread is purely statistical.
inline StabilityResult stability_run(const SystemParams& system, const montecarlo::McConfig& cfg,
                                     std::size_t n_blocks, std::uint64_t block_pulses,
                                     double reference_block_pulses = kMinuteBlockPulses) {
  if (n_blocks < 2) throw ParameterError("stability_run needs at least 2 blocks");
  if (block_pulses < 1) throw ParameterError("block_pulses must be >= 1");
  const auto seq = montecarlo::EncodingSequence::default_pattern();
  StabilityResult res;
  res.block_pulses = block_pulses;
  res.reference_block_pulses = reference_block_pulses;
  res.scale = reference_block_pulses / static_cast<double>(block_pulses);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    montecarlo::McConfig c = cfg;
    c.n_pulses = block_pulses;
    c.stream_id = cfg.stream_id + 1 + b;
    res.series.push_back(montecarlo::sift_and_qber(montecarlo::simulate_block(system, seq, c), seq));
  }
  res.e_z0 = detail::summarize(res.series, [](const auto& q) { return q.e_z0.value; }, res.scale);
  res.e_z1 = detail::summarize(res.series, [](const auto& q) { return q.e_z1.value; }, res.scale);
  res.e_z = detail::summarize(res.series, [](const auto& q) { return q.e_z; }, res.scale);
  res.e_x0 = detail::summarize(res.series, [](const auto& q) { return q.e_x0.value; }, res.scale);
  return res;
}

}  // namespace tbqkd::sweeps
