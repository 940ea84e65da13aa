#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tbqkd/finitekey.hpp"

using namespace tbqkd;
using namespace tbqkd::finitekey;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

constexpr double kEpsPe = 2e-10 / 3;

KeyRateReport table_row(double length, double n_sum, double ez, double ex,
                        LeakageModel model = LeakageModel::tight) {
  SystemParams s;
  s.length_km = length;
  KeyRateOptions opt;
  opt.e_z_override = ez;
  opt.e_x_override = ex;
  opt.leakage = model;
  return analyze(s, {}, {}, n_sum, opt);
}

}  // namespace

TEST(BinaryEntropy, Values) {
  EXPECT_EQ(binary_entropy(0.0), 0.0);
  EXPECT_EQ(binary_entropy(1.0), 0.0);
  EXPECT_DOUBLE_EQ(binary_entropy(0.5), 1.0);
  EXPECT_NEAR(binary_entropy(0.11), 0.49991595816452799564, 1e-15);
  EXPECT_NEAR(binary_entropy(0.3), binary_entropy(0.7), 1e-15);
}

TEST(BinaryEntropy, DomainError) {
  EXPECT_THROW(binary_entropy(-0.01), ParameterError);
  EXPECT_THROW(binary_entropy(1.01), ParameterError);
  EXPECT_THROW(binary_entropy(std::nan("")), ParameterError);
}

TEST(ChernoffUpper, Examples) {
  EXPECT_NEAR(-std::log(kEpsPe), 23.431316038048621222, 1e-13);
  EXPECT_LT(rel(chernoff_upper(1e6, kEpsPe), 1006857.3543669153725), 1e-14);
  EXPECT_LT(rel(chernoff_upper(100, kEpsPe), 181.16722279929728092), 1e-14);
}

TEST(ChernoffUpper, ZeroExpectationGivesBeta) {
  EXPECT_DOUBLE_EQ(chernoff_upper(0.0, kEpsPe), -std::log(kEpsPe));
}

TEST(ChernoffUpper, LockedPoints) {
  for (const auto& p : oracle::kChernoffPoints)
    EXPECT_LT(rel(chernoff_upper(p.x_star, p.eps), static_cast<double>(p.expected)), 1e-10)
        << p.x_star << " " << p.eps;
}

TEST(ChernoffUpper, Monotonicity) {
  for (double x = 1e-3; x < 1e12; x *= 3.7) {
    EXPECT_GT(chernoff_upper(x, 1e-10), x);
    EXPECT_GT(chernoff_upper(x * 1.1, 1e-10), chernoff_upper(x, 1e-10));
    EXPECT_GT(chernoff_upper(x, 1e-12), chernoff_upper(x, 1e-10));
  }
}

TEST(ChernoffUpper, RejectsBadInput) {
  EXPECT_THROW(chernoff_upper(-1.0, 0.1), ParameterError);
  EXPECT_THROW(chernoff_upper(1.0, 0.0), ParameterError);
  EXPECT_THROW(chernoff_upper(1.0, 1.0), ParameterError);
  EXPECT_THROW(chernoff_upper(INFINITY, 0.1), ParameterError);
}

TEST(GammaUpper, ReferenceValue) {
  EXPECT_LT(rel(gamma_upper(1e6, 1e6, 0.05, 1.67e-11), 0.0019099681470241251488), 1e-12);
}

TEST(GammaUpper, LockedPoints) {
  for (const auto& p : oracle::kGammaPoints)
    EXPECT_LT(rel(gamma_upper(p.n, p.k, p.lam, p.eps), static_cast<double>(p.expected)), 1e-10)
        << p.n << " " << p.k << " " << p.lam;
}

TEST(GammaUpper, PositiveAndSymmetric) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double n = std::floor(std::pow(10.0, 3 + 6 * u(rng)));
    const double k = std::floor(std::pow(10.0, 3 + 6 * u(rng)));
    const double lam = 0.001 + 0.49 * u(rng);
    const double eps = std::pow(10.0, -15 + 10 * u(rng));
    const double g = gamma_upper(n, k, lam, eps);
    EXPECT_GT(g, 0.0);
    EXPECT_EQ(g, gamma_upper(k, n, lam, eps));
  }
}

TEST(GammaUpper, DomainErrors) {
  EXPECT_THROW(gamma_upper(1e6, 1e6, 0.0, 1e-11), ParameterError);
  EXPECT_THROW(gamma_upper(1e6, 1e6, 1.0, 1e-11), ParameterError);
  EXPECT_THROW(gamma_upper(0.0, 1e6, 0.1, 1e-11), ParameterError);
  EXPECT_THROW(gamma_upper(1e6, 1e6, 0.1, 0.0), ParameterError);
  // log argument below one: the bound is undefined
  EXPECT_THROW(gamma_upper(1e6, 1e6, 0.5, 0.9), ParameterError);
}

TEST(BinomialCdf, Boundaries) {
  EXPECT_EQ(binomial_cdf(-1, 10, 0.3), 0.0);
  EXPECT_EQ(binomial_cdf(10, 10, 0.3), 1.0);
  EXPECT_EQ(binomial_cdf(3, 10, 0.0), 1.0);
  EXPECT_EQ(binomial_cdf(3, 10, 1.0), 0.0);
  EXPECT_NEAR(binomial_cdf(0, 2, 0.5), 0.25, 1e-15);
  EXPECT_NEAR(binomial_cdf(1, 2, 0.5), 0.75, 1e-15);
}

TEST(InvBinomialCdf, Examples) {
  for (std::int64_t n : {1, 5, 1000}) EXPECT_EQ(inv_binomial_cdf(1.0, n, 0.3), n);
  EXPECT_EQ(inv_binomial_cdf(1.0, 50, 1e-6), 50);
  EXPECT_EQ(inv_binomial_cdf(0.3, 2, 0.5), 1);
  EXPECT_EQ(inv_binomial_cdf(0.9, 10, 0.9), 10);
  EXPECT_EQ(oracle::inv_binomial_cdf_exhaustive(0.9, 10, 0.9), 10);
  EXPECT_EQ(inv_binomial_cdf(0.0, 10, 0.4), 0);
}

TEST(InvBinomialCdf, DegenerateProbabilities) {
  EXPECT_EQ(inv_binomial_cdf(0.5, 20, 0.0), 0);
  EXPECT_EQ(inv_binomial_cdf(0.5, 20, 1.0), 20);
}

TEST(InvBinomialCdf, RejectsBadInput) {
  EXPECT_THROW(inv_binomial_cdf(1.5, 10, 0.5), ParameterError);
  EXPECT_THROW(inv_binomial_cdf(0.5, 0, 0.5), ParameterError);
  EXPECT_THROW(inv_binomial_cdf(0.5, 10, -0.5), ParameterError);
}

TEST(InvBinomialCdf, MatchesExhaustiveSummation) {
  std::mt19937_64 rng(20261014);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::int64_t> un(1, 10000);
  for (int i = 0; i < 300; ++i) {
    const std::int64_t n = un(rng);
    const double p = u(rng);
    const double target = i % 2 ? u(rng) : std::pow(10.0, -16 * u(rng));
    ASSERT_EQ(inv_binomial_cdf(target, n, p), oracle::inv_binomial_cdf_exhaustive(target, n, p))
        << "n=" << n << " p=" << p << " target=" << target;
  }
}

TEST(LambdaEc, Examples) {
  EXPECT_EQ(lambda_ec(100, 0.05, 1e-15), 23.0);
  EXPECT_EQ(lambda_ec(1e4, 0.0685, 1e-15), 208.0);
  // oracle quantiles behind the two values
  EXPECT_EQ(oracle::inv_binomial_cdf_exhaustive(1e-15 * 1.1, 100, 0.95), 71);
  EXPECT_EQ(oracle::inv_binomial_cdf_exhaustive(1e-15 * 1.01, 10000, 1 - 0.0685), 9106);
}

TEST(LambdaEc, NoErrorsNoLeakage) {
  for (double n : {10.0, 1e3, 1e6}) {
    EXPECT_EQ(lambda_ec(n, 0.0, 1.0), 0.0);
    EXPECT_EQ(lambda_ec(n, 0.0, 0.999), 0.0);
    EXPECT_EQ(lambda_ec_tight(n, 0.0, 1e-15), 0.0);
  }
}

TEST(LambdaEc, DomainErrors) {
  EXPECT_THROW(lambda_ec(0.5, 0.01, 1e-15), ParameterError);
  EXPECT_THROW(lambda_ec(100, 1.0, 1e-15), ParameterError);
  EXPECT_THROW(lambda_ec(100, 0.01, 0.0), ParameterError);
  EXPECT_THROW(lambda_ec_tight(100, -0.1, 1e-15), ParameterError);
}

TEST(LambdaEcTight, AboveShannonBoundForLargeBlocks) {
  for (double n : {1e4, 1e5, 1e6})
    for (double e : {0.01, 0.05, 0.1}) {
      const double tight = lambda_ec_tight(n, e, 1e-15);
      EXPECT_GT(tight, n * binary_entropy(e));
      EXPECT_GT(tight, lambda_ec(n, e, 1e-15));
      EXPECT_EQ(leakage(LeakageModel::tight, n, e, 1e-15), tight);
      EXPECT_EQ(leakage(LeakageModel::printed, n, e, 1e-15), lambda_ec(n, e, 1e-15));
    }
}

TEST(ExpectedCounts, NoLightNoNoise) {
  SystemParams s;
  s.p_dc = 0;
  s.length_km = 1e6;  // transmittance underflows to zero
  const auto c = expected_counts(s, {}, {}, 1e10);
  EXPECT_EQ(c.n_r_z, 0.0);
  EXPECT_EQ(c.n_r_x, 0.0);
  EXPECT_EQ(c.m_r_z, 0.0);
  EXPECT_EQ(c.m_r_x, 0.0);
  EXPECT_FALSE(c.key_possible());
}

TEST(ExpectedCounts, RawRateAtZeroKm) {
  const auto c = expected_counts({}, {}, {}, 4.56e9);
  const double r_raw = c.n_r_z / c.n_sum;
  EXPECT_LT(rel(r_raw, 0.00030701056164920092686), 1e-12);
  EXPECT_LT(r_raw / 2.23e-4, 1.5);
  EXPECT_GT(r_raw / 2.23e-4, 1 / 1.5);
}

TEST(ExpectedCounts, OneHundredTwentyKm) {
  SystemParams s;
  s.length_km = 120;
  const auto c = expected_counts(s, {}, {}, 9.12e10);
  EXPECT_LT(rel(c.n_r_z, 167386.03581327398643), 1e-11);
  EXPECT_LT(rel(c.m_r_z, 42915.593448082806037), 1e-11);
  EXPECT_LT(rel(c.n_nmp_z, 167196.92101512095279), 1e-11);
  EXPECT_LT(rel(c.n_r_x, 76084.561733306357468), 1e-11);
  EXPECT_LT(rel(c.m_r_x, 20078.577565313998981), 1e-11);
  EXPECT_LT(rel(c.n_nmp_x, 75975.747948177882972), 1e-11);
  EXPECT_TRUE(c.key_possible());
}

TEST(ExpectedCounts, Invariants) {
  for (double l = 0; l <= 200; l += 12.5) {
    SystemParams s;
    s.length_km = l;
    const auto c = expected_counts(s, {}, {}, 1e11);
    EXPECT_GE(c.m_r_z, 0);
    EXPECT_LE(c.m_r_z, c.n_r_z);
    EXPECT_LE(c.m_r_x, c.n_r_x);
    EXPECT_LE(c.n_nmp_z, c.n_r_z);
    EXPECT_LE(c.n_nmp_x, c.n_r_x);
  }
  EXPECT_THROW(expected_counts({}, {}, {}, 0.0), ParameterError);
}

TEST(QberModel, ZeroErrors) {
  BlockCounts c;
  c.n_nmp_x = c.n_nmp_z = 100;
  const auto q = qber_model(c);
  EXPECT_TRUE(q.valid);
  EXPECT_EQ(q.e_x, 0.0);
  EXPECT_EQ(q.e_z, 0.0);
}

TEST(QberModel, ZeroDenominatorInvalid) {
  BlockCounts c;
  c.m_r_x = 3;
  EXPECT_FALSE(qber_model(c).valid);
}

TEST(QberModel, ClampingIsFlagged) {
  BlockCounts c;
  c.n_nmp_x = c.n_nmp_z = 10;
  c.m_r_x = 8;
  c.m_r_z = 1;
  const auto q = qber_model(c);
  EXPECT_EQ(q.e_x, 0.5);
  EXPECT_TRUE(q.clamped_x);
  EXPECT_FALSE(q.clamped_z);
}

TEST(QberModel, ZeroKilometreValues) {
  const auto q = qber_model(expected_counts({}, {}, {}, 1e11));
  EXPECT_LT(rel(q.e_z, 0.011473028255488891265), 1e-12);
  EXPECT_LT(rel(q.e_x, 0.021458252042304141935), 1e-12);
  EXPECT_NEAR(q.e_z, 0.010, 0.002);
}

TEST(SecureKeyRate, MaximalPhaseErrorGivesZero) {
  KeyRateOptions opt;
  opt.e_x_override = 0.5;
  const auto r = secure_key_rate(expected_counts({}, {}, {}, 1e11), {}, opt);
  EXPECT_EQ(r.r_secure, 0.0);
  EXPECT_EQ(r.status, KeyStatus::zero_clamped);
  EXPECT_EQ(r.phi_z_bar, 0.5);
}

TEST(SecureKeyRate, ZeroPhaseErrorIsInvalid) {
  KeyRateOptions opt;
  opt.e_x_override = 0.0;
  opt.e_z_override = 0.01;
  EXPECT_EQ(secure_key_rate(expected_counts({}, {}, {}, 1e11), {}, opt).status, KeyStatus::invalid);
}

TEST(SecureKeyRate, RejectsOutOfRangeOverride) {
  KeyRateOptions opt;
  opt.e_x_override = 0.6;
  EXPECT_THROW(secure_key_rate(expected_counts({}, {}, {}, 1e11), {}, opt), ParameterError);
}

TEST(SecureKeyRate, MeasuredRowsWithinPaperFactors) {
  const auto r0 = table_row(0, 4.56e9, 0.0098, 0.0314);
  EXPECT_EQ(r0.status, KeyStatus::positive);
  EXPECT_LT(r0.r_secure / 1.59e-4, 2.0);
  EXPECT_GT(r0.r_secure / 1.59e-4, 0.5);
  const auto r120 = table_row(120, 9.12e10, 0.0685, 0.0960);
  EXPECT_EQ(r120.status, KeyStatus::positive);
  EXPECT_GE(r120.r_secure, 1.0e-7);
  EXPECT_LE(r120.r_secure, 4.0e-7);
}

TEST(SecureKeyRate, MeasuredRowsRegression) {
  EXPECT_LT(rel(table_row(0, 4.56e9, 0.0098, 0.0314).r_secure, 2.1690723684210527e-4), 1e-12);
  EXPECT_LT(rel(table_row(40, 4.56e9, 0.0119, 0.0312).r_secure, 3.439627192982456e-05), 1e-12);
  EXPECT_LT(rel(table_row(80, 4.56e9, 0.0302, 0.0490).r_secure, 3.7892543859649123e-06), 1e-12);
  EXPECT_LT(rel(table_row(120, 9.12e10, 0.0685, 0.0960).r_secure, 2.526206140350877e-07), 1e-12);
  // printed leakage form at 120 km
  EXPECT_LT(rel(table_row(120, 9.12e10, 0.0685, 0.0960, LeakageModel::printed).r_secure,
                9.383662280701754e-07),
            1e-12);
}

TEST(SecureKeyRate, ReportFields) {
  const auto r = table_row(40, 4.56e9, 0.0119, 0.0312);
  EXPECT_EQ(r.e_z, 0.0119);
  EXPECT_EQ(r.e_x, 0.0312);
  EXPECT_GT(r.phi_z_bar, r.e_x);
  EXPECT_LE(r.phi_z_bar, 0.5);
  EXPECT_GT(r.lambda_ec, 0);
  EXPECT_NEAR(r.skr_bps, r.r_secure * 75.947e6, 1e-9);
  EXPECT_EQ(r.secret_length_bits, r.r_secure * 4.56e9);
}

TEST(SecureKeyRate, MonotoneInQberOverrides) {
  for (double l : {0.0, 40.0, 80.0}) {
    double prev = INFINITY;
    for (double ex = 0.005; ex < 0.2; ex += 0.005) {
      const auto r = table_row(l, 1e10, 0.02, ex);
      EXPECT_LE(r.r_secure, prev);
      prev = r.r_secure;
    }
    prev = INFINITY;
    for (double ez = 0.0; ez < 0.2; ez += 0.005) {
      const auto r = table_row(l, 1e10, ez, 0.03);
      EXPECT_LE(r.r_secure, prev);
      prev = r.r_secure;
    }
  }
}

TEST(SecureKeyRate, NonDecreasingInBlockSize) {
  for (double l : {0.0, 60.0}) {
    double prev = 0;
    for (double n = 1e8; n <= 1e12; n *= 2) {
      const double r = table_row(l, n, 0.012, 0.03).r_secure;
      EXPECT_GE(r, prev);
      prev = r;
    }
  }
}

TEST(SecureKeyRate, BelowNonMultiphotonBound) {
  for (double l = 0; l <= 120; l += 10)
    for (double n : {1e9, 1e11}) {
      SystemParams s;
      s.length_km = l;
      const auto c = expected_counts(s, {}, {}, n);
      for (auto m : {LeakageModel::printed, LeakageModel::tight}) {
        KeyRateOptions opt;
        opt.leakage = m;
        const auto r = secure_key_rate(c, {}, opt);
        EXPECT_GE(r.r_secure, 0.0);
        EXPECT_LE(r.r_secure, c.n_nmp_z / n);
        if (r.status != KeyStatus::invalid) {
          EXPECT_GE(r.phi_z_bar, 0.0);
          EXPECT_LE(r.phi_z_bar, 0.5);
        }
      }
    }
}

TEST(SecureKeyRate, Deterministic) {
  SystemParams s;
  s.length_km = 33.3;
  EXPECT_EQ(analyze(s, {}, {}, 7.7e9), analyze(s, {}, {}, 7.7e9));
}

TEST(Params, DefaultsValidate) {
  EXPECT_NO_THROW(SystemParams{}.validate());
  EXPECT_NO_THROW(SecurityParams{}.validate());
  EXPECT_NO_THROW(BasisSplit{}.validate());
  BasisSplit b;
  b.p_x_alice = 0.5;
  EXPECT_THROW(b.validate(), ParameterError);
  SecurityParams e;
  e.eps_cor = 0;
  EXPECT_THROW(e.validate(), ParameterError);
  EXPECT_STREQ(to_string(KeyStatus::zero_clamped), "zero_clamped");
}
