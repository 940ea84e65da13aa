#pragma once

// Flat `key = value` configuration. Unknown keys are rejected, absent keys
// keep their defaults, and the resulting bundle is validated as a whole.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tbqkd/optics.hpp"
#include "tbqkd/params.hpp"

namespace tbqkd {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct ParamBundle {
  SystemParams system;
  SecurityParams security;
  BasisSplit split;
  LeakageModel leakage = LeakageModel::tight;

  void validate() const {
    system.validate();
    security.validate();
    split.validate();
    optics::TimingParams::from(system).validate();
  }

  bool operator==(const ParamBundle& o) const { return to_text() == o.to_text(); }

  /// Canonical text form, all keys in a fixed order.
  std::string to_text() const;
};

namespace config_detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& key, std::string_view text) {
  auto one = [&](std::string_view t) {
    t = trim(t);
    double v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size())
      throw ConfigError(key, "cannot parse number '" + std::string(text) + "'");
    return v;
  };
  // a single ratio such as 11/16 is accepted
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    const double den = one(text.substr(slash + 1));
    if (den == 0) throw ConfigError(key, "division by zero");
    return one(text.substr(0, slash)) / den;
  }
  return one(text);
}

struct Field {
  std::function<void(ParamBundle&, const std::string&, std::string_view)> set;
  std::function<std::string(const ParamBundle&)> get;
};

template <class Member>
Field number(Member member) {
  return {[member](ParamBundle& b, const std::string& key, std::string_view v) {
            b.*member = parse_number(key, v);
          },
          [member](const ParamBundle& b) { return format_double(b.*member); }};
}

template <class Sub>
Field number(Sub ParamBundle::*sub, double Sub::*member) {
  return {[sub, member](ParamBundle& b, const std::string& key, std::string_view v) {
            (b.*sub).*member = parse_number(key, v);
          },
          [sub, member](const ParamBundle& b) { return format_double((b.*sub).*member); }};
}

/// Key table in canonical order.
inline const std::vector<std::pair<std::string, Field>>& fields() {
  using B = ParamBundle;
  using S = SystemParams;
  static const std::vector<std::pair<std::string, Field>> table = {
      {"f_rep_hz", number(&B::system, &S::f_rep_hz)},
      {"mean_photon_number", number(&B::system, &S::mean_photon_number)},
      {"g2", number(&B::system, &S::g2)},
      {"eta_encoder", number(&B::system, &S::eta_encoder)},
      {"eta_decoder", number(&B::system, &S::eta_decoder)},
      {"eta_detector", number(&B::system, &S::eta_detector)},
      {"p_z_alice", number(&B::split, &BasisSplit::p_z_alice)},
      {"p_x_alice", number(&B::split, &BasisSplit::p_x_alice)},
      {"p_basis_bob", number(&B::split, &BasisSplit::p_basis_bob)},
      {"p_mis_z", number(&B::system, &S::p_mis_z)},
      {"p_mis_x", number(&B::system, &S::p_mis_x)},
      {"alpha_db_per_km", number(&B::system, &S::alpha_db_per_km)},
      {"dead_time_s", number(&B::system, &S::dead_time_s)},
      {"window_s", number(&B::system, &S::window_s)},
      {"p_dc", number(&B::system, &S::p_dc)},
      {"eps_pe", number(&B::security, &SecurityParams::eps_pe)},
      {"eps_ec", number(&B::security, &SecurityParams::eps_ec)},
      {"eps_pa", number(&B::security, &SecurityParams::eps_pa)},
      {"eps_cor", number(&B::security, &SecurityParams::eps_cor)},
      {"eps_sec", number(&B::security, &SecurityParams::eps_sec)},
      {"lifetime_tau_s", number(&B::system, &S::lifetime_tau_s)},
      {"delta_s", number(&B::system, &S::delta_s)},
      {"delta1_s", number(&B::system, &S::delta1_s)},
      {"decoder_phase_offset_rad", number(&B::system, &S::decoder_phase_offset_rad)},
      {"channel_phase_rad", number(&B::system, &S::channel_phase_rad)},
      {"pe_variant",
       {[](B& b, const std::string& key, std::string_view v) {
          if (v == "printed") b.system.pe_variant = PeVariant::printed;
          else if (v == "standard") b.system.pe_variant = PeVariant::standard;
          else throw ConfigError(key, "expected 'printed' or 'standard'");
        },
        [](const B& b) { return std::string(to_string(b.system.pe_variant)); }}},
      {"leakage_model",
       {[](B& b, const std::string& key, std::string_view v) {
          if (v == "printed") b.leakage = LeakageModel::printed;
          else if (v == "tight") b.leakage = LeakageModel::tight;
          else throw ConfigError(key, "expected 'printed' or 'tight'");
        },
        [](const B& b) { return std::string(to_string(b.leakage)); }}},
  };
  return table;
}

}  // namespace config_detail

inline std::string ParamBundle::to_text() const {
  std::string out;
  for (const auto& [key, field] : config_detail::fields()) out += key + " = " + field.get(*this) + "\n";
  return out;
}

/// Parses configuration text. '#' starts a comment.
inline ParamBundle parse_config(std::string_view text) {
  using namespace config_detail;
  ParamBundle b;
  std::map<std::string, bool> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v = line;
    if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = trim(v);
    if (v.empty()) continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("", "line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key(trim(v.substr(0, eq)));
    const auto value = trim(v.substr(eq + 1));
    const auto& table = fields();
    auto it = std::find_if(table.begin(), table.end(), [&](const auto& f) { return f.first == key; });
    if (it == table.end()) throw ConfigError(key, "unknown key");
    if (seen[key]) throw ConfigError(key, "duplicate key");
    seen[key] = true;
    it->second.set(b, key, value);
  }
  try {
    b.validate();
  } catch (const ParameterError& e) {
    const std::string msg = e.what();
    const auto key = msg.substr(0, msg.find(' '));
    const bool known = std::any_of(fields().begin(), fields().end(),
                                   [&](const auto& f) { return f.first == key; });
    throw ConfigError(known ? key : "", msg);
  }
  return b;
}

/// Loads a configuration file; an empty path yields the defaults.
inline ParamBundle load_config(const std::string& path) {
  if (path.empty()) {
    ParamBundle b;
    b.validate();
    return b;
  }
  std::ifstream f(path);
  if (!f) throw ConfigError("", "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

/// FNV-1a of the canonical text.
inline std::uint64_t config_hash(const ParamBundle& b) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : b.to_text()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace tbqkd
