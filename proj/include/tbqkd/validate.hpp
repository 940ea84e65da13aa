#pragma once

// Built-in self checks run by `tbqkd validate`. Each check is cheap and
// independent of the others.

#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "tbqkd/finitekey.hpp"
#include "tbqkd/montecarlo.hpp"
#include "tbqkd/optics.hpp"
#include "tbqkd/photostats.hpp"

namespace tbqkd::validation {

struct Check {
  std::string name;
  std::function<bool()> run;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string error;
};

namespace detail {

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline bool unitary(const optics::Matrix2& m) {
  const auto p = optics::multiply(optics::adjoint(m), m);
  return std::abs(p[0][0] - 1.0) < 1e-12 && std::abs(p[1][1] - 1.0) < 1e-12 &&
         std::abs(p[0][1]) < 1e-12 && std::abs(p[1][0]) < 1e-12;
}

}  // namespace detail

inline std::vector<Check> builtin_checks() {
  using namespace optics;
  std::vector<Check> checks;
  checks.push_back({"beam_splitter_unitary", [] { return detail::unitary(beam_splitter()); }});
  checks.push_back({"phase_shifter_unitary", [] {
                      for (double t = -7.0; t <= 7.0; t += 0.37)
                        if (!detail::unitary(phase_shifter(t))) return false;
                      return true;
                    }});
  checks.push_back({"encoded_state_norm", [] {
                      for (double t = 0; t <= 2 * kPi; t += 0.1)
                        if (!detail::near(encode(t).norm2(), 0.5, 1e-12)) return false;
                      return true;
                    }});
  checks.push_back({"window_probabilities_closed_form", [] {
                      for (double a = 0; a <= 2 * kPi; a += 0.21)
                        for (double b = -kPi; b <= kPi; b += 0.29) {
                          const auto m = window_probabilities(a, b);
                          const auto c = window_probabilities_closed_form(a, b);
                          if (!detail::near(m.p_w1, c.p_w1, 1e-12) ||
                              !detail::near(m.p_w2, c.p_w2, 1e-12) ||
                              !detail::near(m.p_w3, c.p_w3, 1e-12))
                            return false;
                        }
                      return true;
                    }});
  checks.push_back({"decoded_state_norm_quarter", [] {
                      for (double a = 0; a <= 2 * kPi; a += 0.3)
                        for (double b = -kPi; b <= kPi; b += 0.3)
                          if (!detail::near(decode(encode(a), b).norm2(), 0.25, 1e-12)) return false;
                      return true;
                    }});
  checks.push_back({"photon_distribution_normalized", [] {
                      for (double n = 1e-4; n < 0.5; n *= 1.7)
                        for (double g = 0; g <= 0.1; g += 0.01) {
                          const auto d = photostats::photon_number_dist(n, g);
                          if (!detail::near(d.p0 + d.p1 + d.p2, 1.0, 1e-15)) return false;
                          if (!detail::near(d.mean(), n, 1e-15)) return false;
                        }
                      return true;
                    }});
  checks.push_back({"thinning_preserves_g2", [] {
                      const auto d = photostats::photon_number_dist(0.01, 0.05);
                      for (double eta = 0.05; eta <= 1.0; eta += 0.05)
                        if (!detail::near(photostats::thin(d, eta).g2(), 0.05, 1e-12)) return false;
                      return true;
                    }});
  checks.push_back({"click_probability_monotone_in_length", [] {
                      SystemParams s;
                      double prev = 1.0;
                      for (double l = 0; l <= 200; l += 10) {
                        s.length_km = l;
                        const double pc =
                            photostats::system_click_error_probs(s, photostats::Basis::Z).p_click;
                        if (pc > prev) return false;
                        prev = pc;
                      }
                      return true;
                    }});
  checks.push_back({"chernoff_bound_above_mean", [] {
                      for (double x = 0; x < 1e9; x = x * 3 + 1)
                        if (finitekey::chernoff_upper(x, 1e-10) < x) return false;
                      return true;
                    }});
  checks.push_back({"inverse_binomial_cdf_consistent", [] {
                      for (std::int64_t n : {1, 7, 50, 333})
                        for (double p : {0.05, 0.5, 0.93})
                          for (double t : {1e-6, 0.3, 0.99}) {
                            const auto k = finitekey::inv_binomial_cdf(t, n, p);
                            if (finitekey::binomial_cdf(k, n, p) < t) return false;
                            if (k > 0 && finitekey::binomial_cdf(k - 1, n, p) >= t) return false;
                          }
                      return true;
                    }});
  checks.push_back({"key_rate_below_raw_rate", [] {
                      SystemParams s;
                      for (double l = 0; l <= 80; l += 20) {
                        s.length_km = l;
                        const auto r = finitekey::analyze(s, {}, {}, 1e11);
                        if (r.r_secure > r.r_raw) return false;
                      }
                      return true;
                    }});
  checks.push_back({"monte_carlo_partition_independent", [] {
                      montecarlo::McConfig c;
                      c.n_pulses = 200'000;
                      c.seed = 7;
                      const auto seq = montecarlo::EncodingSequence::default_pattern();
                      const auto a = montecarlo::simulate_block({}, seq, c);
                      c.workers = 3;
                      return a == montecarlo::simulate_block({}, seq, c);
                    }});
  return checks;
}

inline std::vector<CheckResult> run_checks(const std::vector<Check>& checks) {
  std::vector<CheckResult> out;
  for (const auto& c : checks) {
    CheckResult r{c.name, false, {}};
    try {
      r.passed = c.run();
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    out.push_back(r);
  }
  return out;
}

/// One PASS/FAIL line per check; returns true when everything passed.
inline bool print_results(std::ostream& os, const std::vector<CheckResult>& results) {
  bool all = true;
  for (const auto& r : results) {
    os << (r.passed ? "PASS " : "FAIL ") << r.name;
    if (!r.error.empty()) os << " (" << r.error << ")";
    os << '\n';
    all = all && r.passed;
  }
  return all;
}

}  // namespace tbqkd::validation
