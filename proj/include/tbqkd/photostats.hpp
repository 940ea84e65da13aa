#pragma once

// Photon-number statistics of the sub-Poissonian source (truncated at two
// photons) and the click / error probabilities of source + fiber + detector.

#include <array>
#include <cmath>

#include "tbqkd/params.hpp"

namespace tbqkd::photostats {

struct SourceStats {
  double mean_photon_number = 2.89e-3;
  double g2 = 0.0085;
};

struct PhotonNumberDist {
  double p0 = 1.0;
  double p1 = 0.0;
  double p2 = 0.0;

  double operator[](int n) const { return n == 0 ? p0 : n == 1 ? p1 : n == 2 ? p2 : 0.0; }
  double mean() const { return p1 + 2.0 * p2; }

  /// 2 p2 / mean^2; 0 for a vacuum distribution.
  double g2() const {
    const double m = mean();
    return m > 0 ? 2.0 * p2 / (m * m) : 0.0;
  }
};

struct ChannelDetParams {
  double alpha = 0.1956;
  double length_km = 0.0;
  double eta_encoder = 0.1011;
  double eta_decoder = 0.417;
  double eta_detector = 0.74;
  double p_dc = 1.33e-6;
  double p_mis_z = 0.01;
  double p_mis_x = 0.02;
  double tau_w = 4.3e-9;
  double tau_dt = 35.8e-9;

  static ChannelDetParams from(const SystemParams& s) {
    return {s.alpha_db_per_km, s.length_km, s.eta_encoder, s.eta_decoder, s.eta_detector,
            s.p_dc,            s.p_mis_z,   s.p_mis_x,     s.window_s,    s.dead_time_s};
  }
};

struct ClickErrorProbs {
  double p_click = 0.0;
  double p_error = 0.0;
};

inline PhotonNumberDist photon_number_dist(double n_bar, double g2) {
  if (!(n_bar > 0) || !std::isfinite(n_bar)) throw ParameterError("n_bar must be positive");
  if (!(g2 >= 0) || !std::isfinite(g2)) throw ParameterError("g2 must be non-negative");
  PhotonNumberDist d;
  d.p2 = n_bar * n_bar * g2 / 2.0;
  d.p1 = n_bar - 2.0 * d.p2;
  d.p0 = 1.0 - d.p1 - d.p2;
  if (d.p1 < 0 || d.p0 < 0)
    throw ParameterError("source too bright for two-photon truncation (p0 or p1 < 0)");
  return d;
}

/// Binomial loss applied photon by photon.
inline PhotonNumberDist thin(const PhotonNumberDist& d, double eta) {
  if (!detail::is_fraction(eta)) throw ParameterError("eta must be in [0, 1]");
  PhotonNumberDist out;
  out.p2 = d.p2 * eta * eta;
  out.p1 = d.p1 * eta + 2.0 * d.p2 * eta * (1.0 - eta);
  out.p0 = 1.0 - out.p1 - out.p2;
  return out;
}

inline double fiber_transmittance(double alpha_db_per_km, double length_km) {
  if (!(alpha_db_per_km >= 0) || !(length_km >= 0))
    throw ParameterError("alpha and length must be non-negative");
  return std::pow(10.0, -alpha_db_per_km * length_km / 10.0);
}

inline ClickErrorProbs click_error_probs(const PhotonNumberDist& d, double eta_total, double p_dc,
                                         double p_mis, PeVariant variant = PeVariant::printed) {
  if (!detail::is_fraction(eta_total) || !detail::is_fraction(p_dc) || !detail::is_fraction(p_mis))
    throw ParameterError("probabilities must be in [0, 1]");
  ClickErrorProbs out;
  const double no_dark = 1.0 - p_dc;
  double miss = 1.0;  // (1 - eta)^n
  for (int n = 0; n <= 2; ++n) {
    const double pn = d[n];
    const double bracket = 1.0 - no_dark * miss;
    out.p_click += pn * bracket;
    if (n == 0) {
      out.p_error += pn * p_dc;
    } else if (variant == PeVariant::printed) {
      out.p_error += pn * bracket * p_mis;
    } else {
      out.p_error += pn * ((1.0 - miss) * p_mis + miss * p_dc);
    }
    miss *= 1.0 - eta_total;
  }
  return out;
}

/// Mean photon number after decoder and detector, as used for p0..p2.
inline double detected_mean_photon_number(const SystemParams& s) {
  return s.mean_photon_number * s.eta_decoder * s.eta_detector;
}

/// Canonical pipeline: decoder and detector losses folded into the source
/// mean, fiber transmittance as the channel efficiency.
inline PhotonNumberDist detected_dist(const SystemParams& s) {
  return photon_number_dist(detected_mean_photon_number(s), s.g2);
}

enum class Basis { Z, X };

inline ClickErrorProbs system_click_error_probs(const SystemParams& s, Basis basis) {
  const double eta = fiber_transmittance(s.alpha_db_per_km, s.length_km);
  const double mis = basis == Basis::Z ? s.p_mis_z : s.p_mis_x;
  return click_error_probs(detected_dist(s), eta, s.p_dc, mis, s.pe_variant);
}

}  // namespace tbqkd::photostats
