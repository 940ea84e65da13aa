#pragma once

// Linear-optics model of the time-bin encoder (circulator, Sagnac loop,
// AMZI 1) and decoder (AMZI 2). Amplitudes keep their global phases so the
// state expressions can be compared term by term; everything from
// window_probabilities() onwards is phase-blind.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include "tbqkd/params.hpp"

namespace tbqkd::optics {

using cplx = std::complex<double>;
using Matrix2 = std::array<std::array<cplx, 2>, 2>;
using Vector2 = std::array<cplx, 2>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInvSqrt2 = 0.70710678118654752440;

enum class LogicalState { Z0, Z1, X0 };

inline const char* to_string(LogicalState s) {
  switch (s) {
    case LogicalState::Z0: return "Z0";
    case LogicalState::Z1: return "Z1";
    case LogicalState::X0: return "X0";
  }
  return "?";
}

/// Encoder phase for the nominal settings: Z0 -> 0, X0 -> pi/2, Z1 -> pi.
inline constexpr double nominal_theta1(LogicalState s) {
  switch (s) {
    case LogicalState::Z0: return 0.0;
    case LogicalState::X0: return kPi / 2;
    case LogicalState::Z1: return kPi;
  }
  return 0.0;
}

struct PhaseSetting {
  double theta1 = 0.0;
  double theta2 = 0.0;
};

/// Path state leaving the Sagnac loop, over (|S>, |L>).
struct PathState {
  cplx amp_s;
  cplx amp_l;
  double norm2() const { return std::norm(amp_s) + std::norm(amp_l); }
};

/// Time-bin qubit over (|e>, |l>).
struct TimeBinQubit {
  cplx amp_e;
  cplx amp_l;
  double norm2() const { return std::norm(amp_e) + std::norm(amp_l); }
};

/// State at the used decoder output over |e,S>, |e,L>, |l,S>, |l,L>.
struct JointState {
  cplx amp_eS;
  cplx amp_eL;
  cplx amp_lS;
  cplx amp_lL;
  double norm2() const {
    return std::norm(amp_eS) + std::norm(amp_eL) + std::norm(amp_lS) + std::norm(amp_lL);
  }
};

/// Detection probability per emitted photon in W1 (e,S), W2 (e,L + l,S),
/// W3 (l,L); the remainder leaves through the unused ports.
struct WindowProbs {
  double p_w1 = 0.0;
  double p_w2 = 0.0;
  double p_w3 = 0.0;
  double p_discard = 1.0;
  double detected() const { return p_w1 + p_w2 + p_w3; }
};

/// Delays of the interferometers and the emitter lifetime.
struct TimingParams {
  double f_rep = 75.947e6;
  double delta = 6.5e-9;
  double delta1 = 4.3e-9;
  double lifetime_tau = 1018e-12;

  static TimingParams from(const SystemParams& s) {
    return {s.f_rep_hz, s.delta_s, s.delta1_s, s.lifetime_tau_s};
  }

  // Sagnac delay is half a period; each of the three windows fits in a third.
  void validate() const {
    detail::require(f_rep > 0 && delta > 0 && delta1 > 0 && lifetime_tau > 0,
                    "timing parameters must be positive");
    const double half_period = 1.0 / (2.0 * f_rep);
    detail::require(std::abs(delta - half_period) <= 0.05 * half_period,
                    "delta must be within 5% of half the repetition period");
    detail::require(delta1 <= 1.05 / (3.0 * f_rep),
                    "delta1 must not exceed a third of the repetition period (5% slack)");
  }
};

inline double volts_to_phase(double v, double v_pi) {
  if (!(v_pi > 0) || !std::isfinite(v_pi)) throw ParameterError("v_pi must be positive");
  return kPi * v / v_pi;
}

/// 50:50 splitter, reflection carries the factor i.
inline Matrix2 beam_splitter() {
  const cplx i{0.0, kInvSqrt2};
  const cplx t{kInvSqrt2, 0.0};
  return {{{i, t}, {t, i}}};
}

/// Phase shifter on the short (first) path.
inline Matrix2 phase_shifter(double theta) {
  return {{{std::polar(1.0, theta), cplx{0.0}}, {cplx{0.0}, cplx{1.0}}}};
}

inline Matrix2 multiply(const Matrix2& a, const Matrix2& b) {
  Matrix2 out{};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
  return out;
}

inline Vector2 apply(const Matrix2& m, const Vector2& v) {
  return {m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]};
}

inline Matrix2 adjoint(const Matrix2& m) {
  return {{{std::conj(m[0][0]), std::conj(m[1][0])}, {std::conj(m[0][1]), std::conj(m[1][1])}}};
}

/// Single-photon interference in the Sagnac loop for encoder phase theta1.
inline PathState sagnac_path_state(double theta1) {
  const double h = theta1 / 2;
  const cplx pre = cplx{0.0, 1.0} * std::polar(1.0, h);
  return {pre * -std::sin(h), pre * std::cos(h)};
}

/// Time-bin state from the used BS2 port. The short path arrives early and
/// is reflected (factor i/sqrt2); the long path arrives late and is
/// transmitted (factor 1/sqrt2). Norm is 1/2.
inline TimeBinQubit encode(double theta1) {
  const PathState path = sagnac_path_state(theta1);
  const Matrix2 bs2 = beam_splitter();
  return {bs2[0][0] * path.amp_s, bs2[0][1] * path.amp_l};
}

/// Propagates a time-bin qubit through AMZI 2 and projects onto the used
/// BS4 port. The path operator is PS(theta2) * BS3 acting on the input
/// path |S>; the used BS4 port multiplies short-path amplitudes by i/sqrt2
/// and long-path amplitudes by 1/sqrt2.
inline JointState decode(const TimeBinQubit& q, double theta2, double channel_phase = 0.0) {
  const cplx g = std::polar(1.0, channel_phase);
  const Vector2 t{q.amp_e * g, q.amp_l * g};
  const Vector2 path = optics::apply(multiply(phase_shifter(theta2), beam_splitter()), Vector2{1.0, 0.0});
  const Matrix2 bs4 = beam_splitter();
  const cplx port_s = bs4[0][0];
  const cplx port_l = bs4[0][1];
  return {t[0] * path[0] * port_s, t[0] * path[1] * port_l, t[1] * path[0] * port_s,
          t[1] * path[1] * port_l};
}

/// Closed form of the decoded state for arbitrary decoder phase.
inline JointState decoded_state_closed_form(double theta1, double theta2) {
  const cplx pre = std::polar(1.0 / (2.0 * std::numbers::sqrt2), theta1 / 2);
  const cplx i{0.0, 1.0};
  const cplx ph = std::polar(1.0, theta2);
  const double s = std::sin(theta1 / 2);
  const double c = std::cos(theta1 / 2);
  return {-pre * s * ph, pre * s, -pre * i * c * ph, pre * i * c};
}

/// Decoded state with the decoder phase at pi/2, written directly in the
/// early/late x short/long basis.
inline JointState decoded_state_quadrature(double theta1) {
  const cplx pre = std::polar(1.0 / (2.0 * std::numbers::sqrt2), theta1 / 2);
  const cplx i{0.0, 1.0};
  const double s = std::sin(theta1 / 2);
  const double c = std::cos(theta1 / 2);
  return {-pre * i * s, pre * s, pre * c, pre * i * c};
}

/// Rotates the state so that its largest-magnitude amplitude is real and
/// positive.
inline JointState remove_global_phase(const JointState& j) {
  const std::array<cplx, 4> a{j.amp_eS, j.amp_eL, j.amp_lS, j.amp_lL};
  std::size_t k = 0;
  for (std::size_t n = 1; n < 4; ++n)
    if (std::abs(a[n]) > std::abs(a[k]) * (1 + 1e-12)) k = n;
  if (std::abs(a[k]) == 0.0) return j;
  const cplx r = std::conj(a[k]) / std::abs(a[k]);
  return {j.amp_eS * r, j.amp_eL * r, j.amp_lS * r, j.amp_lL * r};
}

inline WindowProbs window_probabilities(const JointState& j) {
  WindowProbs w;
  w.p_w1 = std::norm(j.amp_eS);
  w.p_w2 = std::norm(j.amp_eL + j.amp_lS);
  w.p_w3 = std::norm(j.amp_lL);
  w.p_discard = 1.0 - w.detected();
  return w;
}

inline WindowProbs window_probabilities(double theta1, double theta2, double channel_phase = 0.0) {
  return window_probabilities(decode(encode(theta1), theta2, channel_phase));
}

inline WindowProbs window_probabilities_closed_form(double theta1, double theta2) {
  const double s = std::sin(theta1 / 2);
  const double c = std::cos(theta1 / 2);
  WindowProbs w;
  w.p_w1 = s * s / 8;
  w.p_w2 = (1.0 + std::sin(theta1) * std::sin(theta2)) / 8;
  w.p_w3 = c * c / 8;
  w.p_discard = 1.0 - w.detected();
  return w;
}

}  // namespace tbqkd::optics
