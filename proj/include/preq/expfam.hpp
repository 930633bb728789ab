#pragma once

// One-parameter exponential families in mean-value parameterization.
//
// Densities follow the sign convention M_eta(z) = exp(-eta * X(z)) h(z) / Z(eta).
// The textbook convention exp(+theta * X) is recovered with theta = -eta.
//
// Carriers h and the resulting log-partition A(eta) = ln Z(eta):
//
//   family                 X       h(z)                  A(eta)
//   Bernoulli              z       1 on {0,1}            ln(1 + e^-eta)
//   Binomial(m)            z       C(m,z) on {0..m}      m ln(1 + e^-eta)
//   Poisson                z       1/z!                  e^-eta
//   Geometric              z       1 on {0,1,..}         -ln(1 - e^-eta)
//   Exponential            z       1 on [0,inf)          -ln eta
//   NormalFixedVariance    z       N(0, s2) density      eta^2 s2 / 2
//   NormalFixedMean (0)    z^2     1/sqrt(2 pi) on R     -ln(2 eta) / 2
//
// For NormalFixedMean the outcome handed to every function is the statistic
// x = z^2, and densities are those of z (not of z^2). The Jacobian between the
// two is parameter free, so codelength differences and divergences agree with
// either choice while the z density stays finite at x = 0.

#include <cstdint>
#include <string>
#include <vector>

#include "preq/moments.hpp"
#include "preq/rng.hpp"

namespace preq {

enum class FamilyId : std::uint8_t {
  Bernoulli = 1,
  Binomial = 2,
  Poisson = 3,
  Geometric = 4,
  Exponential = 5,
  NormalFixedVariance = 6,
  NormalFixedMean = 7,
};

enum class AlphabetKind { Finite, Countable, Continuous };

// Open interval (lo, hi); either end may be infinite.
struct Interval {
  double lo;
  double hi;

  bool contains(double x) const { return lo < x && x < hi; }
};

struct MeanParam {
  double value;
};

struct NaturalParam {
  double value;
};

class FamilySpec {
 public:
  static FamilySpec bernoulli();
  static FamilySpec binomial(unsigned trials);
  static FamilySpec poisson();
  static FamilySpec geometric();
  static FamilySpec exponential();
  static FamilySpec normal_fixed_variance(double variance);
  static FamilySpec normal_fixed_mean();

  FamilyId id() const { return id_; }
  // Binomial trial count m (1 for Bernoulli, 0 otherwise).
  unsigned trials() const { return trials_; }
  // sigma^2 for NormalFixedVariance (0 otherwise).
  double fixed_variance() const { return fixed_variance_; }

  Interval mean_domain() const;
  Interval natural_domain() const;
  AlphabetKind alphabet_kind() const;
  bool is_discrete() const { return alphabet_kind() != AlphabetKind::Continuous; }
  bool has_finite_alphabet() const { return alphabet_kind() == AlphabetKind::Finite; }
  // Values of a finite alphabet; throws UnsupportedError otherwise.
  std::vector<double> finite_alphabet() const;
  // Smallest and largest possible statistic values (may be infinite).
  double statistic_min() const;
  double statistic_max() const;
  // True when x is a possible value of the sufficient statistic.
  bool in_alphabet(double x) const;

  // Checked construction of a mean parameter: throws DomainError unless
  // value lies strictly inside mean_domain().
  MeanParam mean(double value) const;
  // Interior anchor used as the default fake outcome x0.
  double default_anchor() const;

  // Lower-case identifier, e.g. "poisson", "binomial(2)", "normal-var(1)".
  std::string name() const;

  friend bool operator==(const FamilySpec&, const FamilySpec&) = default;

 private:
  FamilySpec(FamilyId id, unsigned trials, double variance)
      : id_(id), trials_(trials), fixed_variance_(variance) {}

  FamilyId id_;
  unsigned trials_;
  double fixed_variance_;
};

// Parses names produced by FamilySpec::name() plus the short forms
// "binomial:M" and "normal-var:S2". Throws ParseError.
FamilySpec parse_family(const std::string& text);

std::vector<FamilySpec> supported_families();

// Throws DomainError when mu is not strictly inside the mean domain.
void require_mean(const FamilySpec& f, MeanParam mu);
// Throws SupportError when x is not a possible statistic value.
void require_support(const FamilySpec& f, double x);

// ln M_mu(x) in nats. For NormalFixedMean x is the statistic z^2.
double log_density(const FamilySpec& f, MeanParam mu, double x);
// ln h(x).
double log_carrier(const FamilySpec& f, double x);
// ln Z(eta).
double log_partition(const FamilySpec& f, NaturalParam eta);

NaturalParam mean_to_natural(const FamilySpec& f, MeanParam mu);
MeanParam natural_to_mean(const FamilySpec& f, NaturalParam eta);

double variance_at(const FamilySpec& f, MeanParam mu);
inline double fisher_information(const FamilySpec& f, MeanParam mu) {
  return 1.0 / variance_at(f, mu);
}

// Moments of M_mu, used by in-model sources.
MomentReport family_moments(const FamilySpec& f, MeanParam mu);

// ln M_num(x) - ln M_den(x) from natural parameters; the carrier cancels.
double log_density_ratio(const FamilySpec& f, MeanParam num, MeanParam den, double x);

// D(M_from || M_to) in nats via the natural-parameter form.
double kl_divergence(const FamilySpec& f, MeanParam from, MeanParam to);

// d^4/dmu^4 D(M_star || M_mu).
double kl_fourth_derivative(const FamilySpec& f, MeanParam star, MeanParam mu);

// Sufficient statistics of a sequence: everything a log likelihood needs.
struct SufficientStats {
  std::uint64_t count = 0;
  double sum = 0.0;
  double sum_log_carrier = 0.0;

  void add(const FamilySpec& f, double x);
};

SufficientStats summarize(const FamilySpec& f, const std::vector<double>& xs);

// sum_i ln M_mu(x_i) computed from sufficient statistics.
double log_likelihood(const FamilySpec& f, MeanParam mu, const SufficientStats& s);

// One draw of the sufficient statistic from M_mu.
double sample(const FamilySpec& f, MeanParam mu, RngStream& rng);

// Prepared sampler for repeated draws from one M_mu.
class FamilySampler {
 public:
  FamilySampler(const FamilySpec& f, MeanParam mu);
  double operator()(Engine& engine);

 private:
  FamilyId id_;
  double bernoulli_p_;
  std::binomial_distribution<long> binomial_;
  std::poisson_distribution<long> poisson_;
  std::geometric_distribution<long> geometric_;
  std::exponential_distribution<double> exponential_;
  std::normal_distribution<double> normal_;
};

struct ConditionVerdict {
  bool pass = true;
  std::string reason;

  explicit operator bool() const { return pass; }
};

// Moment order k such that the fourth derivative of the divergence grows as
// O(mu^(k-6)) along an unbounded statistic direction. Derived from the
// closed forms returned by kl_fourth_derivative; k = 4 for every family here.
unsigned condition_moment_order(const FamilySpec& f);

// Checks the tail/moment growth condition for both T = X and T = -X.
ConditionVerdict check_condition1(const FamilySpec& f, const MomentReport& moments);

// Maps a raw outcome z to its sufficient statistic X(z) (z^2 for the
// fixed-mean normal family, z otherwise).
double statistic_of(const FamilySpec& f, double z);

// log(n!) with a cached table for small n.
double log_factorial(std::uint64_t n);
double log_choose(std::uint64_t n, std::uint64_t k);
// Reentrant ln Gamma(x) for x > 0.
double log_gamma(double x);
double log_beta(double a, double b);

}  // namespace preq
