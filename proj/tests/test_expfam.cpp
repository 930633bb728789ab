#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "preq/error.hpp"
#include "preq/expfam.hpp"
#include "preq/sources.hpp"

using namespace preq;

namespace {

std::vector<FamilySpec> discrete_families() {
  return {FamilySpec::bernoulli(), FamilySpec::binomial(2), FamilySpec::binomial(7),
          FamilySpec::poisson(), FamilySpec::geometric()};
}

std::vector<FamilySpec> all_families() {
  auto v = discrete_families();
  v.push_back(FamilySpec::exponential());
  v.push_back(FamilySpec::normal_fixed_variance(1.0));
  v.push_back(FamilySpec::normal_fixed_variance(2.5));
  v.push_back(FamilySpec::normal_fixed_mean());
  return v;
}

double random_mean(const FamilySpec& f, std::mt19937_64& rng) {
  const auto d = f.mean_domain();
  std::uniform_real_distribution<double> u(0.05, 0.95);
  if (std::isfinite(d.lo) && std::isfinite(d.hi)) return d.lo + (d.hi - d.lo) * u(rng);
  if (std::isfinite(d.lo)) return d.lo + 0.2 + 12.0 * u(rng);
  return -10.0 + 20.0 * u(rng);
}

// Sum of g(x) M_mu(x) over the discrete alphabet, stopping once the remaining
// mass is negligible.
template <class G>
double discrete_expectation(const FamilySpec& f, double mu, G g) {
  double total = 0.0, mass = 0.0;
  for (int x = 0; x < 100000; ++x) {
    if (!f.in_alphabet(x)) break;
    const double p = std::exp(log_density(f, MeanParam{mu}, x));
    total += g(static_cast<double>(x)) * p;
    mass += p;
    if (1.0 - mass < 1e-16 && x > mu) break;
  }
  return total;
}

// Composite Simpson rule.
template <class G>
double simpson(G g, double a, double b, int intervals) {
  const double h = (b - a) / intervals;
  double s = g(a) + g(b);
  for (int i = 1; i < intervals; ++i) s += g(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST(LogDensity, Examples) {
  EXPECT_NEAR(log_density(FamilySpec::bernoulli(), MeanParam{0.5}, 1), -0.693147, 1e-6);
  EXPECT_NEAR(log_density(FamilySpec::poisson(), MeanParam{4}, 4), -1.632876, 1e-6);
  EXPECT_NEAR(log_density(FamilySpec::poisson(), MeanParam{4}, 4),
              -4.0 + 4.0 * std::log(4.0) - std::log(24.0), 1e-13);
  EXPECT_NEAR(log_density(FamilySpec::geometric(), MeanParam{1}, 0), -0.693147, 1e-6);
}

TEST(LogDensity, RejectsBoundaryMeansAndForeignOutcomes) {
  EXPECT_THROW(log_density(FamilySpec::bernoulli(), MeanParam{1.0}, 1), DomainError);
  EXPECT_THROW(log_density(FamilySpec::poisson(), MeanParam{0.0}, 1), DomainError);
  EXPECT_THROW(log_density(FamilySpec::bernoulli(), MeanParam{0.5}, 2), SupportError);
  EXPECT_THROW(log_density(FamilySpec::poisson(), MeanParam{1.0}, 1.5), SupportError);
  EXPECT_THROW(log_density(FamilySpec::exponential(), MeanParam{1.0}, -1.0), SupportError);
}

TEST(LogDensity, DiscreteFamiliesNormalize) {
  std::mt19937_64 rng(11);
  for (const auto& f : discrete_families()) {
    for (int i = 0; i < 50; ++i) {
      const double mu = random_mean(f, rng);
      EXPECT_NEAR(discrete_expectation(f, mu, [](double) { return 1.0; }), 1.0, 1e-10)
          << f.name() << " mu=" << mu;
    }
  }
}

TEST(LogDensity, DiscreteMeanAndVarianceMatch) {
  std::mt19937_64 rng(12);
  for (const auto& f : discrete_families()) {
    for (int i = 0; i < 20; ++i) {
      const double mu = random_mean(f, rng);
      const double m1 = discrete_expectation(f, mu, [](double x) { return x; });
      const double v = discrete_expectation(f, mu, [&](double x) { return (x - mu) * (x - mu); });
      EXPECT_NEAR(m1, mu, 1e-8 * std::max(1.0, mu)) << f.name();
      EXPECT_NEAR(v, variance_at(f, MeanParam{mu}), 1e-8 * std::max(1.0, v)) << f.name();
    }
  }
}

TEST(LogDensity, ContinuousMeanAndVarianceByQuadrature) {
  for (double mu : {0.5, 1.0, 3.0}) {
    const auto f = FamilySpec::exponential();
    auto dens = [&](double x) { return std::exp(log_density(f, MeanParam{mu}, x)); };
    const double hi = 80.0 * mu;
    EXPECT_NEAR(simpson(dens, 0, hi, 200000), 1.0, 1e-9);
    EXPECT_NEAR(simpson([&](double x) { return x * dens(x); }, 0, hi, 200000), mu, 1e-8);
    EXPECT_NEAR(simpson([&](double x) { return (x - mu) * (x - mu) * dens(x); }, 0, hi, 200000),
                variance_at(f, MeanParam{mu}), 1e-8);
  }
  for (double mu : {-2.0, 0.0, 1.5}) {
    const auto f = FamilySpec::normal_fixed_variance(2.5);
    auto dens = [&](double x) { return std::exp(log_density(f, MeanParam{mu}, x)); };
    EXPECT_NEAR(simpson([&](double x) { return x * dens(x); }, mu - 40, mu + 40, 200000), mu, 1e-8);
    EXPECT_NEAR(simpson([&](double x) { return (x - mu) * (x - mu) * dens(x); }, mu - 40, mu + 40,
                        200000),
                2.5, 1e-8);
  }
  // The fixed-mean normal models X = Z^2; integrate over z.
  for (double mu : {0.5, 2.0}) {
    const auto f = FamilySpec::normal_fixed_mean();
    auto dens = [&](double z) { return std::exp(log_density(f, MeanParam{mu}, z * z)); };
    const double w = 30.0 * std::sqrt(mu);
    EXPECT_NEAR(simpson(dens, -w, w, 200000), 1.0, 1e-9);
    EXPECT_NEAR(simpson([&](double z) { return z * z * dens(z); }, -w, w, 200000), mu, 1e-8);
    EXPECT_NEAR(simpson([&](double z) { return std::pow(z * z - mu, 2) * dens(z); }, -w, w, 200000),
                variance_at(f, MeanParam{mu}), 1e-7);
  }
}

TEST(ParameterMaps, Examples) {
  EXPECT_DOUBLE_EQ(mean_to_natural(FamilySpec::bernoulli(), MeanParam{0.5}).value, 0.0);
  EXPECT_DOUBLE_EQ(mean_to_natural(FamilySpec::poisson(), MeanParam{1.0}).value, 0.0);
  EXPECT_NEAR(mean_to_natural(FamilySpec::poisson(), MeanParam{4.0}).value, -std::log(4.0), 1e-15);
  const auto g = FamilySpec::geometric();
  EXPECT_NEAR(natural_to_mean(g, mean_to_natural(g, MeanParam{3.7})).value, 3.7, 1e-12 * 3.7);
}

TEST(ParameterMaps, RoundTripAllFamilies) {
  std::mt19937_64 rng(13);
  for (const auto& f : all_families()) {
    for (int i = 0; i < 50; ++i) {
      const double mu = random_mean(f, rng);
      const double back = natural_to_mean(f, mean_to_natural(f, MeanParam{mu})).value;
      EXPECT_NEAR(back, mu, 1e-12 * std::max(1.0, std::abs(mu))) << f.name();
    }
  }
}

TEST(ParameterMaps, DensityHasNegativeExponentForm) {
  // ln M = -eta x + ln h(x) - ln Z(eta) with the library's log_partition.
  std::mt19937_64 rng(14);
  for (const auto& f : discrete_families()) {
    const double mu = random_mean(f, rng);
    const auto eta = mean_to_natural(f, MeanParam{mu});
    for (double x : {0.0, 1.0, 2.0}) {
      if (!f.in_alphabet(x)) continue;
      EXPECT_NEAR(log_density(f, MeanParam{mu}, x),
                  -eta.value * x + log_carrier(f, x) - log_partition(f, eta), 1e-12)
          << f.name();
    }
  }
}

TEST(Variance, ExamplesAndFisherIdentity) {
  EXPECT_DOUBLE_EQ(variance_at(FamilySpec::poisson(), MeanParam{4}), 4.0);
  EXPECT_DOUBLE_EQ(variance_at(FamilySpec::bernoulli(), MeanParam{0.5}), 0.25);
  EXPECT_DOUBLE_EQ(variance_at(FamilySpec::normal_fixed_variance(1.0), MeanParam{-3.0}), 1.0);
  EXPECT_THROW(variance_at(FamilySpec::bernoulli(), MeanParam{0.0}), DomainError);
  std::mt19937_64 rng(15);
  for (const auto& f : all_families()) {
    for (int i = 0; i < 20; ++i) {
      const MeanParam mu{random_mean(f, rng)};
      const double v = variance_at(f, mu);
      EXPECT_EQ(fisher_information(f, mu), 1.0 / v);
      EXPECT_NEAR(fisher_information(f, mu) * v, 1.0, 0x1p-52);
    }
  }
}

TEST(KlDivergence, Examples) {
  const auto p = FamilySpec::poisson();
  EXPECT_NEAR(kl_divergence(p, MeanParam{2}, MeanParam{1}), 0.386294, 1e-6);
  double oracle = 0.0;
  for (int x = 0; x <= 200; ++x) {
    const double a = log_density(p, MeanParam{2}, x);
    oracle += std::exp(a) * (a - log_density(p, MeanParam{1}, x));
  }
  EXPECT_NEAR(kl_divergence(p, MeanParam{2}, MeanParam{1}), oracle, 1e-12);
  EXPECT_NEAR(kl_divergence(FamilySpec::bernoulli(), MeanParam{0.5}, MeanParam{0.25}), 0.143841,
              1e-6);
  EXPECT_NEAR(kl_divergence(FamilySpec::bernoulli(), MeanParam{0.5}, MeanParam{0.25}),
              0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0), 1e-14);
  for (const auto& f : all_families()) {
    const double mu = f.default_anchor() + (f.mean_domain().contains(f.default_anchor() + 0.1) ? 0.1 : 0);
    EXPECT_EQ(kl_divergence(f, MeanParam{mu}, MeanParam{mu}), 0.0) << f.name();
  }
}

TEST(KlDivergence, PositiveAndLocallyQuadratic) {
  std::mt19937_64 rng(16);
  for (const auto& f : all_families()) {
    for (int i = 0; i < 10; ++i) {
      const double mu = random_mean(f, rng);
      const double v = variance_at(f, MeanParam{mu});
      double previous_error = 1.0;
      for (double rel : {1e-2, 1e-3}) {
        const double delta = rel * std::sqrt(v);
        const double d = kl_divergence(f, MeanParam{mu}, MeanParam{mu + delta});
        EXPECT_GT(d, 0.0);
        const double ratio = d / (delta * delta / (2.0 * v));
        const double error = std::abs(ratio - 1.0);
        EXPECT_LT(error, 0.05) << f.name();
        EXPECT_LE(error, previous_error + 1e-8) << f.name();
        previous_error = error;
      }
    }
  }
}

TEST(KlDivergence, ExpectedLogRatioIdentityForFiniteSupportSources) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& f : discrete_families()) {
    for (int trial = 0; trial < 20; ++trial) {
      const int max_x = f.has_finite_alphabet() ? static_cast<int>(f.trials()) : 9;
      std::vector<double> values, probs;
      double total = 0.0;
      for (int x = 0; x <= max_x; ++x) {
        values.push_back(x);
        probs.push_back(0.05 + u(rng));
        total += probs.back();
      }
      double mean = 0.0;
      for (std::size_t i = 0; i < probs.size(); ++i) {
        probs[i] /= total;
        mean += probs[i] * values[i];
      }
      const double theta = random_mean(f, rng);
      double lhs = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        lhs += probs[i] * (log_density(f, MeanParam{mean}, values[i]) -
                           log_density(f, MeanParam{theta}, values[i]));
      }
      EXPECT_NEAR(lhs, kl_divergence(f, MeanParam{mean}, MeanParam{theta}), 1e-10) << f.name();
    }
  }
}

TEST(KlFourthDerivative, Examples) {
  EXPECT_DOUBLE_EQ(kl_fourth_derivative(FamilySpec::poisson(), MeanParam{2}, MeanParam{1}), 12.0);
  EXPECT_DOUBLE_EQ(
      kl_fourth_derivative(FamilySpec::normal_fixed_variance(1.0), MeanParam{0.3}, MeanParam{-2}), 0.0);
  EXPECT_DOUBLE_EQ(kl_fourth_derivative(FamilySpec::bernoulli(), MeanParam{0.5}, MeanParam{0.5}),
                   96.0);
}

TEST(KlFourthDerivative, MatchesFiniteDifferences) {
  // Seven-point central stencil for the fourth derivative, O(h^4) accurate.
  constexpr double kWeights[7] = {-1.0 / 6, 2.0, -13.0 / 2, 28.0 / 3, -13.0 / 2, 2.0, -1.0 / 6};
  const double h = 1e-2;
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<FamilySpec, std::pair<double, double>>> cases = {
      {FamilySpec::bernoulli(), {0.2, 0.8}},          {FamilySpec::binomial(3), {0.6, 2.4}},
      {FamilySpec::poisson(), {0.5, 10}},             {FamilySpec::geometric(), {0.5, 10}},
      {FamilySpec::exponential(), {0.5, 10}},         {FamilySpec::normal_fixed_mean(), {0.5, 10}},
      {FamilySpec::normal_fixed_variance(1.0), {-5, 5}}};
  for (const auto& [f, range] : cases) {
    for (int i = 0; i < 20; ++i) {
      const double star = range.first + (range.second - range.first) * u(rng);
      const double mu = range.first + (range.second - range.first) * u(rng);
      double fd = 0.0;
      for (int j = 0; j < 7; ++j) {
        fd += kWeights[j] * kl_divergence(f, MeanParam{star}, MeanParam{mu + (j - 3) * h});
      }
      fd /= std::pow(h, 4);
      const double exact = kl_fourth_derivative(f, MeanParam{star}, MeanParam{mu});
      EXPECT_NEAR(fd, exact, std::max(1e-3, 1e-3 * std::abs(exact)))
          << f.name() << " star=" << star << " mu=" << mu;
    }
  }
}

TEST(Sample, EmpiricalMeansAndDeterminism) {
  RngStream a(5, "draws");
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) sum += sample(FamilySpec::poisson(), MeanParam{4}, a);
  EXPECT_GE(sum / 1e5, 3.95);
  EXPECT_LE(sum / 1e5, 4.05);
  RngStream b(5, "draws");
  sum = 0.0;
  for (int i = 0; i < 100000; ++i) sum += sample(FamilySpec::bernoulli(), MeanParam{0.5}, b);
  EXPECT_GE(sum / 1e5, 0.49);
  EXPECT_LE(sum / 1e5, 0.51);
  RngStream c1(99, "same"), c2(99, "same");
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(sample(FamilySpec::geometric(), MeanParam{3}, c1),
              sample(FamilySpec::geometric(), MeanParam{3}, c2));
  }
}

TEST(Sample, AllFamiliesHitTheirMean) {
  std::mt19937_64 rng(19);
  for (const auto& f : all_families()) {
    const double mu = random_mean(f, rng);
    RngStream s(3, f.name());
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = sample(f, MeanParam{mu}, s);
      ASSERT_TRUE(f.in_alphabet(x)) << f.name() << " drew " << x;
      sum += x;
    }
    const double se = std::sqrt(variance_at(f, MeanParam{mu}) / n);
    EXPECT_NEAR(sum / n, mu, 4.5 * se) << f.name();
  }
}

TEST(Condition, Verdicts) {
  const auto p = FamilySpec::poisson();
  EXPECT_TRUE(check_condition1(p, moments(Source::in_model(p, 4.0))).pass);
  EXPECT_TRUE(check_condition1(p, moments(Source::point_mass(4.0))).pass);
  const auto verdict = check_condition1(p, moments(Source::uniform_integers(0, 8).with_moment_order(3)));
  EXPECT_FALSE(verdict.pass);
  EXPECT_NE(verdict.reason.find("needs first 4 moments"), std::string::npos) << verdict.reason;
  // Bounded directions never need extra moments.
  EXPECT_TRUE(check_condition1(FamilySpec::bernoulli(),
                               moments(Source::finite_support({0, 1}, {0.5, 0.5}))).pass);
  for (const auto& f : all_families()) EXPECT_EQ(condition_moment_order(f), 4u);
}

TEST(Families, ParseAndNames) {
  for (const auto& f : all_families()) EXPECT_EQ(parse_family(f.name()), f);
  EXPECT_EQ(parse_family("binomial:5"), FamilySpec::binomial(5));
  EXPECT_THROW(parse_family("pareto"), ParseError);
  EXPECT_THROW(parse_family("binomial(0)"), ParseError);
  EXPECT_EQ(supported_families().size(), 7u);
}

TEST(LogDensityRatio, MatchesDifferenceOfLogDensities) {
  std::mt19937_64 rng(20);
  for (const auto& f : all_families()) {
    for (int i = 0; i < 20; ++i) {
      const double a = random_mean(f, rng), b = random_mean(f, rng);
      for (double x : {0.0, 1.0, 3.0}) {
        if (!f.in_alphabet(x)) continue;
        const double direct = log_density(f, MeanParam{a}, x) - log_density(f, MeanParam{b}, x);
        EXPECT_NEAR(log_density_ratio(f, MeanParam{a}, MeanParam{b}, x), direct,
                    1e-11 * std::max(1.0, std::abs(direct)))
            << f.name();
      }
    }
  }
  const auto p = FamilySpec::poisson();
  EXPECT_EQ(log_density_ratio(p, MeanParam{4}, MeanParam{2.5}, 4.0),
            kl_divergence(p, MeanParam{4}, MeanParam{2.5}));
}
