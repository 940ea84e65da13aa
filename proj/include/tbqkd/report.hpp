#pragma once

// Machine-readable outputs: JSON run reports and CSV tables. Numbers are
// written in shortest round-trip form so identical runs give identical bytes.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tbqkd/config.hpp"
#include "tbqkd/finitekey.hpp"
#include "tbqkd/montecarlo.hpp"
#include "tbqkd/sweeps.hpp"

namespace tbqkd::report {

inline constexpr const char* kVersion = "1.0.0";

using nlohmann::json;

/// Run report. `outputs` entries sit at the top level of the JSON object
/// next to the fixed fields.
struct RunReport {
  std::string command;
  std::string version = kVersion;
  std::uint64_t seed = 0;
  std::string status;
  json inputs = json::object();
  json outputs = json::object();

  bool operator==(const RunReport&) const = default;
};

inline const std::vector<std::string>& reserved_keys() {
  static const std::vector<std::string> keys = {"command", "version", "seed", "status", "inputs"};
  return keys;
}

inline json to_json(const RunReport& r) {
  json j = r.outputs;
  j["command"] = r.command;
  j["version"] = r.version;
  j["seed"] = r.seed;
  j["status"] = r.status;
  j["inputs"] = r.inputs;
  return j;
}

inline RunReport from_json(const json& j) {
  RunReport r;
  r.command = j.at("command").get<std::string>();
  r.version = j.at("version").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.status = j.at("status").get<std::string>();
  r.inputs = j.at("inputs");
  for (const auto& [key, value] : j.items())
    if (std::find(reserved_keys().begin(), reserved_keys().end(), key) == reserved_keys().end())
      r.outputs[key] = value;
  return r;
}

inline std::string dump(const RunReport& r) { return to_json(r).dump(2) + "\n"; }

/// Parameter snapshot: every configuration key plus the config hash.
inline json inputs_json(const ParamBundle& b) {
  json j = json::object();
  for (const auto& [key, field] : config_detail::fields()) {
    const std::string text = field.get(b);
    double v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec == std::errc{} && res.ptr == text.data() + text.size())
      j[key] = v;
    else
      j[key] = text;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(config_hash(b)));
  j["config_hash"] = hex;
  return j;
}

inline RunReport keyrate_report(const ParamBundle& b, double length_km, double n_sum,
                                const finitekey::KeyRateReport& r) {
  RunReport out;
  out.command = "keyrate";
  out.status = finitekey::to_string(r.status);
  out.inputs = inputs_json(b);
  out.inputs["length_km"] = length_km;
  out.inputs["n_sum"] = n_sum;
  out.outputs = {{"e_z", r.e_z},
                 {"e_x", r.e_x},
                 {"phi_z_bar", r.phi_z_bar},
                 {"lambda_ec", r.lambda_ec},
                 {"skb_per_pulse", r.r_secure},
                 {"skr_bps", r.skr_bps},
                 {"r_raw", r.r_raw},
                 {"secret_length_bits", r.secret_length_bits}};
  return out;
}

inline json estimate_json(const montecarlo::Estimate& e) {
  json j = {{"errors", e.errors}, {"total", e.total}, {"std_error", e.std_error}};
  j["value"] = e.value ? json(*e.value) : json(nullptr);
  return j;
}

inline RunReport mc_report(const ParamBundle& b, const montecarlo::McConfig& cfg, double length_km,
                           const montecarlo::HistogramSet& hist,
                           const montecarlo::QberEstimates& q) {
  RunReport out;
  out.command = "mc run";
  out.seed = cfg.seed;
  out.status = q.e_z && q.e_x0.value ? "ok" : "undefined";
  out.inputs = inputs_json(b);
  out.inputs["length_km"] = length_km;
  out.inputs["pulses"] = cfg.n_pulses;
  out.inputs["mode"] = montecarlo::to_string(cfg.mode);
  out.inputs["dead_time"] = cfg.dead_time_enabled;
  out.outputs = {{"e_z0", estimate_json(q.e_z0)},
                 {"e_z1", estimate_json(q.e_z1)},
                 {"e_x0", estimate_json(q.e_x0)},
                 {"e_z", q.e_z ? json(*q.e_z) : json(nullptr)},
                 {"sifted_z", q.sifted_z},
                 {"sifted_x", q.sifted_x},
                 {"total_clicks", hist.total_clicks()},
                 {"total_pulses", hist.total_pulses()}};
  return out;
}

inline json summary_json(const sweeps::SeriesSummary& s) {
  return {{"mean", s.mean}, {"stddev", s.stddev}, {"stddev_matched", s.matched}, {"defined", s.defined}};
}

inline RunReport stability_report(const ParamBundle& b, const montecarlo::McConfig& cfg,
                                  double length_km, const sweeps::StabilityResult& r) {
  RunReport out;
  out.command = "stability";
  out.seed = cfg.seed;
  out.status = r.e_z.defined == r.series.size() ? "ok" : "undefined";
  out.inputs = inputs_json(b);
  out.inputs["length_km"] = length_km;
  out.inputs["blocks"] = r.series.size();
  out.inputs["block_pulses"] = r.block_pulses;
  out.inputs["reference_block_pulses"] = r.reference_block_pulses;
  out.inputs["mode"] = montecarlo::to_string(cfg.mode);
  out.outputs = {{"e_z0", summary_json(r.e_z0)},
                 {"e_z1", summary_json(r.e_z1)},
                 {"e_z", summary_json(r.e_z)},
                 {"e_x0", summary_json(r.e_x0)}};
  return out;
}

// CSV ----------------------------------------------------------------------

inline std::string csv_number(double v) { return format_double(v); }

inline std::string csv_number(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

inline void write_histogram_csv(std::ostream& os, const montecarlo::HistogramSet& h,
                                const montecarlo::EncodingSequence& seq) {
  os << "bit_index,symbol,w1,w2,w3,pulses\n";
  for (std::size_t i = 0; i < h.bits(); ++i) {
    const auto& c = h.counts[i];
    os << i << ',' << optics::to_string(seq.symbols[i]) << ',' << c[0] << ',' << c[1] << ','
       << c[2] << ',' << h.pulses[i] << '\n';
  }
}

inline void write_distance_csv(std::ostream& os, const std::vector<sweeps::DistanceRow>& rows) {
  os << "L_km,e_x,e_z,skb_per_pulse,status\n";
  for (const auto& r : rows)
    os << csv_number(r.length_km) << ',' << csv_number(r.e_x) << ',' << csv_number(r.e_z) << ','
       << csv_number(r.r_secure) << ',' << finitekey::to_string(r.status) << '\n';
}

inline void write_grid_csv(std::ostream& os, const std::vector<sweeps::GridRow>& rows) {
  os << "x,y,gain,status\n";
  for (const auto& r : rows)
    os << csv_number(r.x) << ',' << csv_number(r.y) << ',' << csv_number(r.gain) << ','
       << finitekey::to_string(r.status) << '\n';
}

inline void write_stability_csv(std::ostream& os, const sweeps::StabilityResult& r) {
  os << "block_index,e_z0,e_z1,e_x0\n";
  for (std::size_t i = 0; i < r.series.size(); ++i) {
    const auto& q = r.series[i];
    os << i << ',' << csv_number(q.e_z0.value) << ',' << csv_number(q.e_z1.value) << ','
       << csv_number(q.e_x0.value) << '\n';
  }
}

}  // namespace tbqkd::report
