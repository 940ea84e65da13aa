#pragma once

// Pulse-by-pulse event simulation of one key block. Produces the per-bit
// correlation histograms (W1, W2, W3 integrals) and extracts QBERs from
// them the way the measured histograms are analysed.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "tbqkd/optics.hpp"
#include "tbqkd/params.hpp"
#include "tbqkd/photostats.hpp"
#include "tbqkd/rng.hpp"

namespace tbqkd::montecarlo {

using optics::LogicalState;

struct EncodingSequence {
  std::vector<LogicalState> symbols;

  /// The 16-bit repeating pattern driven onto the phase modulator.
  static EncodingSequence default_pattern() {
    using enum LogicalState;
    return {{X0, Z1, Z0, X0, Z0, Z1, X0, Z1, Z0, X0, Z0, Z1, X0, Z0, Z1, Z1}};
  }

  std::size_t size() const { return symbols.size(); }

  std::size_t count(LogicalState s) const {
    return static_cast<std::size_t>(std::count(symbols.begin(), symbols.end(), s));
  }
};

enum class Window : std::uint8_t { w1 = 0, w2 = 1, w3 = 2 };

struct HistogramSet {
  std::vector<std::array<std::uint64_t, 3>> counts;  // bit index x {W1, W2, W3}
  std::vector<std::uint64_t> pulses;                 // pulses sent per bit index

  explicit HistogramSet(std::size_t bits = 16) : counts(bits, {0, 0, 0}), pulses(bits, 0) {}

  std::size_t bits() const { return counts.size(); }

  HistogramSet& merge(const HistogramSet& other) {
    if (other.bits() != bits()) throw ParameterError("histogram merge: bit count mismatch");
    for (std::size_t b = 0; b < bits(); ++b) {
      for (int w = 0; w < 3; ++w) counts[b][w] += other.counts[b][w];
      pulses[b] += other.pulses[b];
    }
    return *this;
  }

  std::uint64_t total_clicks() const {
    std::uint64_t t = 0;
    for (const auto& row : counts) t += row[0] + row[1] + row[2];
    return t;
  }

  std::uint64_t total_pulses() const {
    std::uint64_t t = 0;
    for (auto p : pulses) t += p;
    return t;
  }

  bool operator==(const HistogramSet&) const = default;
};

enum class Mode { matrix, phenomenological };

inline const char* to_string(Mode m) { return m == Mode::matrix ? "matrix" : "pheno"; }

inline Mode parse_mode(std::string_view s) {
  if (s == "matrix") return Mode::matrix;
  if (s == "pheno" || s == "phenomenological") return Mode::phenomenological;
  throw ParameterError("unknown simulation mode: " + std::string(s));
}

struct McConfig {
  Mode mode = Mode::phenomenological;
  std::uint64_t seed = 1;
  std::uint64_t n_pulses = 1'000'000;
  bool dead_time_enabled = false;
  unsigned workers = 1;
  std::uint64_t stream_id = 0;  // distinguishes blocks sharing a seed

  void validate() const {
    if (n_pulses < 1) throw ParameterError("n_pulses must be >= 1");
    if (workers < 1) throw ParameterError("workers must be >= 1");
  }
};

/// Decoder phase while X0 is being measured: W2 is then dark for X0.
inline constexpr double kDecoderPhase = -optics::kPi / 2;

namespace detail {

inline constexpr std::uint64_t kChunk = 1u << 16;

// Draw slots within one pulse.
enum Slot : std::uint64_t {
  kSource = 0,
  kSurvive = 1,  // + photon index
  kWindow = 3,   // + photon index
  kFlip = 5,     // + photon index
  kDarkAny = 7,
  kDarkPattern = 8,
};

/// Per-bit outcome probabilities precomputed from the parameters.
struct BitModel {
  LogicalState state = LogicalState::Z0;
  // matrix mode: window distribution of a delivered photon, flip probability
  std::array<double, 3> window_cdf{};
  double p_flip = 0.0;
  // phenomenological mode: cumulative {W1, W2, W3} probabilities
  std::array<double, 3> outcome_cdf{};
};

struct Event {
  std::uint64_t pulse;
  std::uint8_t window;
};

class BlockSimulator {
 public:
  BlockSimulator(const SystemParams& system, const EncodingSequence& seq, const McConfig& cfg,
                 const BasisSplit& split)
      : system_(system), cfg_(cfg), stream_(cfg.seed, cfg.stream_id) {
    system.validate();
    cfg.validate();
    split.validate();
    if (seq.size() == 0) throw ParameterError("encoding sequence is empty");
    source_ = photostats::photon_number_dist(system.mean_photon_number, system.g2);
    eta_chain_ = photostats::fiber_transmittance(system.alpha_db_per_km, system.length_km) *
                 system.eta_decoder * system.eta_detector;
    const double p_none = std::pow(1.0 - system.p_dc, 3);
    p_dark_any_ = 1.0 - p_none;
    build_dark_patterns();

    const auto z = photostats::system_click_error_probs(system, photostats::Basis::Z);
    const auto x = photostats::system_click_error_probs(system, photostats::Basis::X);
    const double pb = split.p_basis_bob;
    for (LogicalState s : seq.symbols) {
      BitModel m;
      m.state = s;
      const auto w = optics::window_probabilities(optics::nominal_theta1(s),
                                                  kDecoderPhase + system.decoder_phase_offset_rad,
                                                  system.channel_phase_rad);
      const double det = w.detected();
      m.window_cdf = {w.p_w1 / det, (w.p_w1 + w.p_w2) / det, 1.0};
      m.p_flip = s == LogicalState::X0 ? system.p_mis_x : system.p_mis_z;

      std::array<double, 3> p{};
      if (s == LogicalState::X0) {
        p = {pb * x.p_click / 2, (1 - pb) * x.p_error, pb * x.p_click / 2};
      } else {
        const int good = s == LogicalState::Z1 ? 0 : 2;
        p[good] = pb * (z.p_click - z.p_error);
        p[2 - good] = pb * z.p_error;
        p[1] = (1 - pb) * z.p_click;
      }
      m.outcome_cdf = {p[0], p[0] + p[1], p[0] + p[1] + p[2]};
      bits_.push_back(m);
    }
  }

  HistogramSet run() const {
    const std::uint64_t n_chunks = (cfg_.n_pulses + kChunk - 1) / kChunk;
    const unsigned n_workers =
        static_cast<unsigned>(std::min<std::uint64_t>(cfg_.workers, n_chunks));
    std::vector<HistogramSet> partial(n_workers, HistogramSet(bits_.size()));
    std::vector<std::vector<Event>> events(cfg_.dead_time_enabled ? n_chunks : 0);
    std::atomic<std::uint64_t> next{0};

    auto work = [&](unsigned id) {
      HistogramSet& hist = partial[id];
      for (std::uint64_t c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) {
        const std::uint64_t begin = c * kChunk;
        const std::uint64_t end = std::min(cfg_.n_pulses, begin + kChunk);
        std::vector<Event>* sink = cfg_.dead_time_enabled ? &events[c] : nullptr;
        for (std::uint64_t pulse = begin; pulse < end; ++pulse) {
          const auto b = static_cast<std::size_t>(pulse % bits_.size());
          ++hist.pulses[b];
          const int w = cfg_.mode == Mode::matrix ? matrix_pulse(pulse, bits_[b])
                                                  : pheno_pulse(pulse, bits_[b]);
          if (w < 0) continue;
          if (sink)
            sink->push_back({pulse, static_cast<std::uint8_t>(w)});
          else
            ++hist.counts[b][w];
        }
      }
    };

    if (n_workers == 1) {
      work(0);
    } else {
      std::vector<std::jthread> pool;
      for (unsigned id = 0; id < n_workers; ++id) pool.emplace_back(work, id);
    }

    HistogramSet out(bits_.size());
    for (const auto& h : partial) out.merge(h);
    if (cfg_.dead_time_enabled) apply_dead_time(events, out);
    return out;
  }

  const photostats::PhotonNumberDist& source() const { return source_; }
  const rng::CounterStream& stream() const { return stream_; }

  /// Photon number emitted in a pulse; shared by simulation and g2 check.
  int sample_photon_number(std::uint64_t pulse) const {
    const double u = stream_.uniform(pulse, kSource);
    if (u < source_.p1) return 1;
    if (u < source_.p1 + source_.p2) return 2;
    return 0;
  }

 private:
  int matrix_pulse(std::uint64_t pulse, const BitModel& m) const {
    unsigned fired = 0;  // bit w set when window w fires
    const int n = sample_photon_number(pulse);
    for (int j = 0; j < n; ++j) {
      if (stream_.uniform(pulse, kSurvive + j) >= eta_chain_) continue;
      const double uw = stream_.uniform(pulse, kWindow + j);
      int w = uw < m.window_cdf[0] ? 0 : uw < m.window_cdf[1] ? 1 : 2;
      const double uf = stream_.uniform(pulse, kFlip + j);
      if (uf < m.p_flip) w = flip(m.state, w, uf / m.p_flip);
      fired |= 1u << w;
    }
    if (p_dark_any_ > 0 && stream_.uniform(pulse, kDarkAny) < p_dark_any_) {
      const double u = stream_.uniform(pulse, kDarkPattern);
      unsigned pattern = 7;
      for (unsigned k = 0; k < 7; ++k) {
        if (u < dark_pattern_cdf_[k]) {
          pattern = k + 1;
          break;
        }
      }
      fired |= pattern;
    }
    if (fired == 0) return -1;
    // one registration per period: the earliest firing window
    return fired & 1u ? 0 : fired & 2u ? 1 : 2;
  }

  int pheno_pulse(std::uint64_t pulse, const BitModel& m) const {
    const double u = stream_.uniform(pulse, kSource);
    if (u < m.outcome_cdf[0]) return 0;
    if (u < m.outcome_cdf[1]) return 1;
    if (u < m.outcome_cdf[2]) return 2;
    return -1;
  }

  // Z bits swap W1 and W3. X bits move a Z-window click into the error
  // window W2, and a W2 click into W1 or W3 by the coin.
  static int flip(LogicalState s, int w, double coin) {
    if (s != LogicalState::X0) return w == 1 ? 1 : 2 - w;
    if (w != 1) return 1;
    return coin < 0.5 ? 0 : 2;
  }

  void build_dark_patterns() {
    const double p = system_.p_dc;
    double acc = 0;
    for (unsigned k = 1; k <= 7; ++k) {
      const int ones = static_cast<int>((k & 1u) + ((k >> 1) & 1u) + ((k >> 2) & 1u));
      acc += std::pow(p, ones) * std::pow(1.0 - p, 3 - ones);
      dark_pattern_cdf_[k - 1] = acc;
    }
    for (auto& v : dark_pattern_cdf_) v = p_dark_any_ > 0 ? v / acc : 1.0;
  }

  // Non-paralyzable dead time applied to the time-ordered click record.
  void apply_dead_time(const std::vector<std::vector<Event>>& events, HistogramSet& out) const {
    const double period = 1.0 / system_.f_rep_hz;
    const double tau = system_.dead_time_s;
    double last = -1e300;
    for (const auto& chunk : events) {
      for (const Event& e : chunk) {
        const double t = static_cast<double>(e.pulse) * period + e.window * system_.delta1_s;
        if (t - last < tau) continue;
        last = t;
        ++out.counts[e.pulse % bits_.size()][e.window];
      }
    }
  }

  SystemParams system_;
  McConfig cfg_;
  rng::CounterStream stream_;
  photostats::PhotonNumberDist source_;
  double eta_chain_ = 0;
  double p_dark_any_ = 0;
  std::array<double, 7> dark_pattern_cdf_{};
  std::vector<BitModel> bits_;
};

}  // namespace detail

inline HistogramSet simulate_block(const SystemParams& system, const EncodingSequence& seq,
                                   const McConfig& cfg, const BasisSplit& split = {}) {
  return detail::BlockSimulator(system, seq, cfg, split).run();
}

struct G2Estimate {
  double value = 0;
  double std_error = 0;
  std::uint64_t one_photon = 0;
  std::uint64_t two_photon = 0;
  std::uint64_t pulses = 0;
};

/// 2 P(n=2) / <n>^2 of the sampled emission stream.
inline G2Estimate empirical_g2(const SystemParams& system, const McConfig& cfg) {
  if (cfg.n_pulses < 1'000'000) throw ParameterError("empirical_g2 needs n_pulses >= 1e6");
  const detail::BlockSimulator sim(system, EncodingSequence::default_pattern(), cfg, BasisSplit{});
  G2Estimate g;
  g.pulses = cfg.n_pulses;
  for (std::uint64_t p = 0; p < cfg.n_pulses; ++p) {
    const int n = sim.sample_photon_number(p);
    g.one_photon += n == 1;
    g.two_photon += n == 2;
  }
  const double total = static_cast<double>(g.pulses);
  const double m = static_cast<double>(g.one_photon + 2 * g.two_photon);
  if (m == 0) return g;
  const double n2 = static_cast<double>(g.two_photon);
  g.value = 2.0 * n2 * total / (m * m);
  if (g.two_photon > 0) {
    const double d2 = 1.0 / n2 - 4.0 / m;
    const double d1 = -2.0 / m;
    g.std_error = g.value * std::sqrt(n2 * d2 * d2 + static_cast<double>(g.one_photon) * d1 * d1);
  }
  return g;
}

struct Estimate {
  std::optional<double> value;  // empty when the denominator is zero
  double std_error = 0;
  std::uint64_t errors = 0;
  std::uint64_t total = 0;
};

struct QberEstimates {
  Estimate e_z0;
  Estimate e_z1;
  Estimate e_x0;
  std::optional<double> e_z;  // mean of e_z0 and e_z1
  std::uint64_t sifted_z = 0;  // W1 + W3 over Z-encoded bits
  std::uint64_t sifted_x = 0;  // W1 + W3 over X-encoded bits
};

namespace detail {

inline Estimate ratio(std::uint64_t num, std::uint64_t den) {
  Estimate e;
  e.errors = num;
  e.total = den;
  if (den == 0) return e;
  const double v = std::min(1.0, static_cast<double>(num) / static_cast<double>(den));
  e.value = v;
  e.std_error = std::sqrt(v * (1.0 - v) / static_cast<double>(den));
  return e;
}

}  // namespace detail

/// Window integrals summed over the bits carrying each state. Which window
/// is an error for which bit comes from the sequence itself.
inline QberEstimates sift_and_qber(const HistogramSet& hist, const EncodingSequence& seq) {
  if (hist.bits() != seq.size())
    throw ParameterError("histogram bit count does not match sequence length");
  std::uint64_t z0_err = 0, z0_all = 0, z1_err = 0, z1_all = 0, x_err = 0, x_all = 0;
  for (std::size_t b = 0; b < seq.size(); ++b) {
    const auto& c = hist.counts[b];
    const std::uint64_t zwin = c[0] + c[2];
    switch (seq.symbols[b]) {
      case LogicalState::Z0:
        z0_err += c[0];
        z0_all += zwin;
        break;
      case LogicalState::Z1:
        z1_err += c[2];
        z1_all += zwin;
        break;
      case LogicalState::X0:
        x_err += c[1];
        x_all += zwin;
        break;
    }
  }
  QberEstimates q;
  q.e_z0 = detail::ratio(z0_err, z0_all);
  q.e_z1 = detail::ratio(z1_err, z1_all);
  q.e_x0 = detail::ratio(x_err, x_all);
  if (q.e_z0.value && q.e_z1.value) q.e_z = (*q.e_z0.value + *q.e_z1.value) / 2;
  q.sifted_z = z0_all + z1_all;
  q.sifted_x = x_all;
  return q;
}

}  // namespace tbqkd::montecarlo
