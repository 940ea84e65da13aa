#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace tbqkd {

/// Raised when an input violates the domain of an operation.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Which form of the error-probability expression to use. `printed`
/// multiplies the whole click bracket (dark share included) by p_mis;
/// `standard` multiplies only the photon-induced share and counts dark
/// clicks on non-empty pulses as errors.
enum class PeVariant { printed, standard };

/// Error-correction leakage accounting used by the key-rate pipeline.
enum class LeakageModel { printed, tight };

inline const char* to_string(PeVariant v) {
  return v == PeVariant::printed ? "printed" : "standard";
}

inline const char* to_string(LeakageModel m) {
  return m == LeakageModel::printed ? "printed" : "tight";
}

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}

inline bool is_fraction(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

}  // namespace detail

/// Physical parameters of source, encoder, channel, decoder and detector.
/// Defaults are the measured values of the reference experiment.
struct SystemParams {
  double f_rep_hz = 75.947e6;
  double mean_photon_number = 2.89e-3;  // at the channel input
  double g2 = 0.0085;
  double eta_encoder = 0.1011;  // informational; mean_photon_number is already post-encoder
  double eta_decoder = 0.417;
  double eta_detector = 0.74;
  double alpha_db_per_km = 0.1956;
  double length_km = 0.0;
  double p_mis_z = 0.01;
  double p_mis_x = 0.02;
  double p_dc = 1.33e-6;  // per window
  double window_s = 4.3e-9;
  double dead_time_s = 35.8e-9;
  double lifetime_tau_s = 1018e-12;
  double delta_s = 6.5e-9;
  double delta1_s = 4.3e-9;
  PeVariant pe_variant = PeVariant::printed;
  double decoder_phase_offset_rad = 0.0;
  double channel_phase_rad = 0.0;

  void validate() const {
    using detail::is_fraction;
    using detail::require;
    require(std::isfinite(f_rep_hz) && f_rep_hz > 0, "f_rep_hz must be positive");
    require(std::isfinite(mean_photon_number) && mean_photon_number > 0 && mean_photon_number <= 1,
            "mean_photon_number must be in (0, 1]");
    require(std::isfinite(g2) && g2 >= 0 && g2 <= 1, "g2 must be in [0, 1]");
    require(is_fraction(eta_encoder), "eta_encoder must be in [0, 1]");
    require(is_fraction(eta_decoder), "eta_decoder must be in [0, 1]");
    require(is_fraction(eta_detector), "eta_detector must be in [0, 1]");
    require(std::isfinite(alpha_db_per_km) && alpha_db_per_km >= 0, "alpha_db_per_km must be >= 0");
    require(std::isfinite(length_km) && length_km >= 0, "length_km must be >= 0");
    require(is_fraction(p_mis_z), "p_mis_z must be in [0, 1]");
    require(is_fraction(p_mis_x), "p_mis_x must be in [0, 1]");
    require(std::isfinite(p_dc) && p_dc >= 0 && p_dc < 1, "p_dc must be in [0, 1)");
    require(std::isfinite(window_s) && window_s > 0, "window_s must be positive");
    require(std::isfinite(dead_time_s) && dead_time_s >= 0, "dead_time_s must be >= 0");
    require(std::isfinite(lifetime_tau_s) && lifetime_tau_s > 0, "lifetime_tau_s must be positive");
    require(std::isfinite(delta_s) && delta_s > 0, "delta_s must be positive");
    require(std::isfinite(delta1_s) && delta1_s > 0, "delta1_s must be positive");
    require(std::isfinite(decoder_phase_offset_rad), "decoder_phase_offset_rad must be finite");
    require(std::isfinite(channel_phase_rad), "channel_phase_rad must be finite");
  }
};

/// Failure-probability budget of the finite-key analysis.
struct SecurityParams {
  double eps_pe = 2e-10 / 3;
  double eps_ec = 1e-10 / 6;
  double eps_pa = 1e-10 / 6;
  double eps_cor = 1e-15;
  double eps_sec = 1e-10;

  void validate() const {
    auto open_unit = [](double x) { return std::isfinite(x) && x > 0 && x < 1; };
    detail::require(open_unit(eps_pe), "eps_pe must be in (0, 1)");
    detail::require(open_unit(eps_ec), "eps_ec must be in (0, 1)");
    detail::require(open_unit(eps_pa), "eps_pa must be in (0, 1)");
    detail::require(open_unit(eps_cor), "eps_cor must be in (0, 1)");
    detail::require(open_unit(eps_sec), "eps_sec must be in (0, 1)");
  }
};

/// Basis-choice probabilities at encoder and decoder.
struct BasisSplit {
  double p_z_alice = 11.0 / 16.0;
  double p_x_alice = 5.0 / 16.0;
  double p_basis_bob = 0.5;

  void validate() const {
    detail::require(detail::is_fraction(p_z_alice) && detail::is_fraction(p_x_alice),
                    "encoder basis shares must be in [0, 1]");
    detail::require(std::abs(p_z_alice + p_x_alice - 1.0) <= 1e-12,
                    "p_z_alice + p_x_alice must equal 1");
    detail::require(std::isfinite(p_basis_bob) && p_basis_bob > 0 && p_basis_bob < 1,
                    "p_basis_bob must be in (0, 1)");
  }
};

}  // namespace tbqkd
