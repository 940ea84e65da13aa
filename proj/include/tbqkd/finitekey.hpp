#pragma once

// Finite-key accounting: expected block counts, multiplicative Chernoff
// bound on multi-photon events, phase-error upper bound, error-correction
// leakage and the secret key length per block.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>

#include <boost/math/special_functions/beta.hpp>

#include "tbqkd/params.hpp"
#include "tbqkd/photostats.hpp"

namespace tbqkd::finitekey {

enum class KeyStatus { positive, zero_clamped, invalid };

inline const char* to_string(KeyStatus s) {
  switch (s) {
    case KeyStatus::positive: return "positive";
    case KeyStatus::zero_clamped: return "zero_clamped";
    case KeyStatus::invalid: return "invalid";
  }
  return "?";
}

/// Expected (real-valued) counts of one block. Nothing is rounded until the
/// final floor of the key length.
struct BlockCounts {
  double n_sum = 0;
  double n_r_z = 0;
  double n_r_x = 0;
  double m_r_z = 0;
  double m_r_x = 0;
  double n_nmp_z = 0;
  double n_nmp_x = 0;

  /// False when a non-multiphoton lower bound is not positive.
  bool key_possible() const { return n_nmp_z > 0 && n_nmp_x > 0; }
};

struct KeyRateReport {
  double r_secure = 0;  // bits per pulse
  double skr_bps = 0;
  double r_raw = 0;
  double e_z = 0;
  double e_x = 0;
  double phi_z_bar = 0;
  double lambda_ec = 0;
  double secret_length_bits = 0;  // floor before clamping at zero
  KeyStatus status = KeyStatus::invalid;

  bool operator==(const KeyRateReport&) const = default;
};

inline double binary_entropy(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw ParameterError("binary_entropy: x must be in [0, 1]");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

/// Upper Chernoff bound on a count with expectation x_star. At x_star = 0
/// the relative deviation is 0/0; the limit value beta is returned.
inline double chernoff_upper(double x_star, double eps) {
  if (!(x_star >= 0) || !std::isfinite(x_star)) throw ParameterError("x_star must be >= 0");
  if (!(eps > 0 && eps < 1)) throw ParameterError("eps must be in (0, 1)");
  const double beta = -std::log(eps);
  if (x_star == 0.0) return beta;
  const double delta_u = (beta + std::sqrt(8.0 * beta * x_star + beta * beta)) / (2.0 * x_star);
  return (1.0 + delta_u) * x_star;
}

/// Statistical correction of the phase error estimated on n samples and
/// applied to k samples, at observed rate lam and failure probability
/// eps_prime.
inline double gamma_upper(double n, double k, double lam, double eps_prime) {
  if (!(n > 0) || !(k > 0)) throw ParameterError("gamma_upper: n and k must be positive");
  if (!(lam > 0 && lam < 1)) throw ParameterError("gamma_upper: lam must be in (0, 1)");
  if (!(eps_prime > 0 && eps_prime < 1)) throw ParameterError("gamma_upper: eps' must be in (0, 1)");
  const double a = std::max(n, k);
  const double s = n + k;
  const double nk = n * k;  // formed once so the result is exactly symmetric
  const double g =
      s / nk * std::log(s / (2.0 * std::numbers::pi * nk * lam * (1.0 - lam) * eps_prime * eps_prime));
  if (!(g > 0)) throw ParameterError("gamma_upper: log argument below one");
  const double ag = a * g / s;
  return (1.0 / (2.0 + 2.0 * a * a * g / (s * s))) *
         ((1.0 - 2.0 * lam) * ag + std::sqrt(ag * ag + 4.0 * lam * (1.0 - lam) * g));
}

/// P(X <= k) for X ~ Binomial(n, p), through the regularized incomplete beta.
inline double binomial_cdf(std::int64_t k, std::int64_t n, double p) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  return boost::math::ibeta(static_cast<double>(n - k), static_cast<double>(k + 1), 1.0 - p);
}

/// Smallest k with P(X <= k) >= target; bisection over k.
inline std::int64_t inv_binomial_cdf(double target, std::int64_t n, double p) {
  if (!(target >= 0 && target <= 1)) throw ParameterError("inv_binomial_cdf: target not in [0, 1]");
  if (n < 1) throw ParameterError("inv_binomial_cdf: n must be >= 1");
  if (!(p >= 0 && p <= 1)) throw ParameterError("inv_binomial_cdf: p not in [0, 1]");
  // the upper tail underflows in double before k reaches n
  if (target == 1.0 && p > 0.0) return n;
  std::int64_t lo = 0;
  std::int64_t hi = n;
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (binomial_cdf(mid, n, p) >= target)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

namespace detail {

inline std::int64_t trials(double n) {
  if (!(n >= 1) || !std::isfinite(n)) throw ParameterError("received count must be >= 1");
  return std::llround(n);
}

inline double fluctuation_term(std::int64_t n, double e_z, double eps_cor) {
  const double nd = static_cast<double>(n);
  const double target = std::min(1.0, eps_cor * (1.0 + 1.0 / std::sqrt(nd)));
  const auto quantile = inv_binomial_cdf(target, n, 1.0 - e_z);
  return nd * (1.0 - e_z) - static_cast<double>(quantile) - 1.0;
}

}  // namespace detail

/// Leakage term in its printed form: only the finite-size fluctuation of
/// the number of correct bits, clamped at zero.
inline double lambda_ec(double n_r_z, double e_z, double eps_cor) {
  if (!(e_z >= 0 && e_z < 1)) throw ParameterError("lambda_ec: e_z must be in [0, 1)");
  if (!(eps_cor > 0 && eps_cor <= 1)) throw ParameterError("lambda_ec: eps_cor must be in (0, 1]");
  const auto n = detail::trials(n_r_z);
  return std::max(0.0, detail::fluctuation_term(n, e_z, eps_cor));
}

/// Second-order reconciliation bound for a binary symmetric channel:
/// n h(E) plus the fluctuation term weighted by log2((1-E)/E), minus
/// (1/2) log2 n and log2(1/eps).
inline double lambda_ec_tight(double n_r_z, double e_z, double eps_cor) {
  if (!(e_z >= 0 && e_z < 1)) throw ParameterError("lambda_ec: e_z must be in [0, 1)");
  if (!(eps_cor > 0 && eps_cor <= 1)) throw ParameterError("lambda_ec: eps_cor must be in (0, 1]");
  const auto n = detail::trials(n_r_z);
  if (e_z == 0.0) return 0.0;
  const double nd = static_cast<double>(n);
  const double leak = nd * binary_entropy(e_z) +
                      detail::fluctuation_term(n, e_z, eps_cor) * std::log2((1.0 - e_z) / e_z) -
                      0.5 * std::log2(nd) - std::log2(1.0 / eps_cor);
  return std::max(0.0, leak);
}

inline double leakage(LeakageModel model, double n_r_z, double e_z, double eps_cor) {
  return model == LeakageModel::tight ? lambda_ec_tight(n_r_z, e_z, eps_cor)
                                      : lambda_ec(n_r_z, e_z, eps_cor);
}

inline BlockCounts expected_counts(const SystemParams& system, const SecurityParams& security,
                                   const BasisSplit& split, double n_sum) {
  system.validate();
  security.validate();
  split.validate();
  if (!(n_sum > 0) || !std::isfinite(n_sum)) throw ParameterError("n_sum must be positive");
  const auto dist = photostats::detected_dist(system);
  const auto z = photostats::system_click_error_probs(system, photostats::Basis::Z);
  const auto x = photostats::system_click_error_probs(system, photostats::Basis::X);
  const double share_z = n_sum * split.p_z_alice * split.p_basis_bob;
  const double share_x = n_sum * split.p_x_alice * split.p_basis_bob;
  BlockCounts c;
  c.n_sum = n_sum;
  c.n_r_z = share_z * z.p_click;
  c.n_r_x = share_x * x.p_click;
  c.m_r_z = share_z * z.p_error;
  c.m_r_x = share_x * x.p_error;
  c.n_nmp_z = c.n_r_z - chernoff_upper(share_z * dist.p2, security.eps_pe);
  c.n_nmp_x = c.n_r_x - chernoff_upper(share_x * dist.p2, security.eps_pe);
  return c;
}

struct QberModel {
  double e_x = 0;
  double e_z = 0;
  bool clamped_x = false;
  bool clamped_z = false;
  bool valid = false;
};

/// Error rates relative to the non-multiphoton lower bounds, clamped to
/// [0, 0.5].
inline QberModel qber_model(const BlockCounts& c) {
  QberModel q;
  if (!(c.n_nmp_x > 0) || !(c.n_nmp_z > 0)) return q;
  auto clamp = [](double v, bool& flag) {
    if (v > 0.5) {
      flag = true;
      return 0.5;
    }
    if (v < 0.0) {
      flag = true;
      return 0.0;
    }
    return v;
  };
  q.e_x = clamp(c.m_r_x / c.n_nmp_x, q.clamped_x);
  q.e_z = clamp(c.m_r_z / c.n_nmp_z, q.clamped_z);
  q.valid = true;
  return q;
}

struct KeyRateOptions {
  std::optional<double> e_z_override;
  std::optional<double> e_x_override;
  LeakageModel leakage = LeakageModel::tight;
  double f_rep_hz = 75.947e6;
};

inline KeyRateReport secure_key_rate(const BlockCounts& c, const SecurityParams& security,
                                     const KeyRateOptions& opt = {}) {
  security.validate();
  for (const auto& o : {opt.e_z_override, opt.e_x_override})
    if (o && !(*o >= 0.0 && *o <= 0.5)) throw ParameterError("QBER override must be in [0, 0.5]");

  KeyRateReport r;
  r.r_raw = c.n_sum > 0 ? c.n_r_z / c.n_sum : 0.0;
  const QberModel model = qber_model(c);
  if (!model.valid || !(c.n_r_z >= 1) || !(c.n_sum > 0)) return r;

  r.e_x = opt.e_x_override.value_or(model.e_x);
  r.e_z = opt.e_z_override.value_or(model.e_z);

  const double phi = r.e_x;
  if (!(phi > 0)) return r;  // the phase-error correction term is singular at zero
  if (phi >= 0.5) {
    r.phi_z_bar = 0.5;
    r.status = KeyStatus::zero_clamped;
    return r;
  }
  r.phi_z_bar = phi + gamma_upper(c.n_nmp_x, c.n_nmp_z, phi, security.eps_sec / 6.0);
  bool clamped = false;
  if (r.phi_z_bar >= 0.5) {
    r.phi_z_bar = 0.5;
    clamped = true;
  }

  const double e_z_ec = opt.e_z_override.value_or(std::clamp(c.m_r_z / c.n_r_z, 0.0, 0.5));
  r.lambda_ec = leakage(opt.leakage, c.n_r_z, e_z_ec, security.eps_cor);

  const double length = std::floor(c.n_nmp_z * (1.0 - binary_entropy(r.phi_z_bar)) - r.lambda_ec -
                                   2.0 * std::log2(1.0 / (2.0 * security.eps_pa)) -
                                   std::log2(2.0 / security.eps_cor));
  r.secret_length_bits = length;
  if (clamped || length <= 0) {
    r.status = KeyStatus::zero_clamped;
    return r;
  }
  r.r_secure = length / c.n_sum;
  r.skr_bps = r.r_secure * opt.f_rep_hz;
  r.status = KeyStatus::positive;
  return r;
}

/// Full analytic pipeline for one operating point.
inline KeyRateReport analyze(const SystemParams& system, const SecurityParams& security,
                             const BasisSplit& split, double n_sum, KeyRateOptions opt = {}) {
  opt.f_rep_hz = system.f_rep_hz;
  return secure_key_rate(expected_counts(system, security, split, n_sum), security, opt);
}

}  // namespace tbqkd::finitekey
