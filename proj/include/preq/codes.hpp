#pragma once

// Universal codelength functions over sequences of sufficient-statistic
// values. All lengths are in nats.

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "preq/expfam.hpp"

namespace preq {

enum class CodeId { Plugin, Bayes, Nml, TwoPart, Oracle, MaximumLikelihood };

std::string code_name(CodeId id);

// Codelength (nats) charged to one outcome, independent of the past.
using SymbolCodelength = std::function<double(double x)>;

// Smoothed ML: a fake initial outcome x0 with weight n0.
struct FakeOutcome {};

// Encode the first m outcomes with a fixed fallback code, then predict with
// the unmodified ML estimate. With extend_until_interior the fallback is kept
// until the ML estimate of the prefix is interior to the mean domain.
struct SkipFirst {
  std::size_t m = 1;
  SymbolCodelength fallback;
  bool extend_until_interior = false;
};

struct PluginConfig {
  double x0 = 0.0;
  double n0 = 1.0;
  std::variant<FakeOutcome, SkipFirst> variant;

  // x0 = family anchor, n0 = 1.
  static PluginConfig defaults(const FamilySpec& f);
  static PluginConfig fake_outcome(double x0, double n0);
  // A missing fallback defaults to ln 2 per symbol for Bernoulli and is a
  // ConfigError for every other family.
  static PluginConfig skip_first(const FamilySpec& f, std::size_t m, SymbolCodelength fallback = {},
                                 bool extend_until_interior = false);

  bool is_fake_outcome() const { return std::holds_alternative<FakeOutcome>(variant); }
};

// Throws ConfigError / DomainError for an unusable configuration.
void validate(const FamilySpec& f, const PluginConfig& config);

struct CodelengthReport {
  double total = 0.0;
  std::vector<double> per_symbol;
  CodeId code = CodeId::Plugin;
};

// Sequential state of the prequential plug-in code.
class PluginPredictor {
 public:
  PluginPredictor(FamilySpec family, PluginConfig config);

  // Current estimate mu_hat_n; throws DomainError if it sits on the boundary
  // and ConfigError while a skip_first startup has no estimate yet.
  MeanParam estimate() const;
  // True while outcomes are charged to the startup fallback.
  bool in_startup() const;
  // -ln U(x | past) without consuming x.
  double codelength(double x) const;
  // Charges x, updates the state, returns the charged length.
  double observe(double x);

  std::uint64_t count() const { return count_; }
  double stat_sum() const { return stat_sum_; }
  double accumulated_length() const { return accumulated_; }
  const FamilySpec& family() const { return family_; }
  const PluginConfig& config() const { return config_; }

 private:
  FamilySpec family_;
  PluginConfig config_;
  std::uint64_t count_ = 0;
  double stat_sum_ = 0.0;
  double accumulated_ = 0.0;
  bool startup_done_ = false;
};

// (x0 n0 + sum x_i) / (n + n0) for fake_outcome; the plain mean of the
// prefix for skip_first. Throws DomainError on a boundary value.
MeanParam smoothed_ml_estimate(const FamilySpec& f, const PluginConfig& config,
                               const std::vector<double>& prefix);

CodelengthReport plugin_codelength(const FamilySpec& f, const PluginConfig& config,
                                   const std::vector<double>& seq);

// Conjugate priors. Beta(a, b) is placed on mu/m for Bernoulli and
// Binomial(m), and on mu/(mu+1) for Geometric; Gamma(shape, rate) on mu for
// Poisson and on the rate 1/mu for Exponential.
struct BetaPrior {
  double a = 0.5;
  double b = 0.5;
};

struct GammaPrior {
  double shape = 1.0;
  double rate = 1.0;
};

using ConjugatePrior = std::variant<BetaPrior, GammaPrior>;

ConjugatePrior default_prior(const FamilySpec& f);
// Throws UnsupportedError for a family/prior mismatch, ConfigError for bad
// hyperparameters.
void validate(const FamilySpec& f, const ConjugatePrior& prior);

// Sequential Bayes predictive state.
class BayesPredictor {
 public:
  BayesPredictor(FamilySpec family, ConjugatePrior prior);

  double codelength(double x) const;
  double observe(double x);
  // Posterior predictive mean E[X | past].
  double predictive_mean() const;

 private:
  FamilySpec family_;
  ConjugatePrior prior_;
  SufficientStats stats_;
};

// Per-symbol predictive lengths plus the closed-form marginal as total.
CodelengthReport bayes_codelength(const FamilySpec& f, const ConjugatePrior& prior,
                                  const std::vector<double>& seq);
// -ln of the marginal likelihood in closed form.
double bayes_marginal_codelength(const FamilySpec& f, const ConjugatePrior& prior,
                                 const SufficientStats& stats);

// ln sum_{y^n} sup_mu M_mu(y^n) for finite-alphabet families, by counting
// sufficient statistics. Cached per (family, horizon).
double nml_log_normalizer(const FamilySpec& f, std::uint64_t horizon);
double nml_codelength(const FamilySpec& f, std::uint64_t horizon, const std::vector<double>& seq);
double nml_codelength(const FamilySpec& f, const SufficientStats& stats);

// Parameter grid for the two-part code.
struct ExplicitGrid {
  std::vector<double> points;
};

// Uniform grid on [lo, hi] with spacing at most scale / sqrt(n).
struct UniformGrid {
  double lo = 0.0;
  double hi = 0.0;
  double scale = 1.0;
};

using TwoPartGrid = std::variant<ExplicitGrid, UniformGrid>;

// Default uniform grid: a compact interval inside the mean domain.
UniformGrid default_two_part_grid(const FamilySpec& f);
std::vector<double> grid_points(const FamilySpec& f, const TwoPartGrid& grid, std::uint64_t n);

double two_part_codelength(const FamilySpec& f, const std::vector<double>& seq,
                           const TwoPartGrid& grid);
double two_part_codelength(const FamilySpec& f, const SufficientStats& stats,
                           const TwoPartGrid& grid);

// -sum ln M_mu*(x_i).
double oracle_codelength(const FamilySpec& f, MeanParam star, const std::vector<double>& seq);

// inf over the closure of the mean domain of -ln M_mu(seq).
double ml_codelength(const FamilySpec& f, const std::vector<double>& seq);
double ml_codelength(const FamilySpec& f, const SufficientStats& stats);

}  // namespace preq
