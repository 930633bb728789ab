#pragma once

// Monte Carlo experiments over universal codes: redundancy curves and slope
// fits, regret gaps, the divergence decomposition of the plug-in redundancy,
// estimator mean squared error and Poisson-vs-geometric model selection.
//
// Replicate r always draws its data from the stream ("data", seed, r), so
// results do not depend on the number of worker threads, and different codes
// run with the same seed see the same sequences.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "preq/codes.hpp"
#include "preq/expfam.hpp"
#include "preq/sources.hpp"

namespace preq {

struct PluginCode {
  PluginConfig config;
};

struct BayesCode {
  ConjugatePrior prior;
};

struct NmlCode {};

struct TwoPartCode {
  TwoPartGrid grid;
};

using CodeSpec = std::variant<PluginCode, BayesCode, NmlCode, TwoPartCode>;

CodeId code_id(const CodeSpec& code);
std::string describe(const CodeSpec& code);
// Family defaults for each kind: anchor/n0 = 1, default prior, default grid.
CodeSpec default_code(CodeId id, const FamilySpec& f);

struct RunOptions {
  unsigned threads = 1;
  // Run even if the source fails the moment condition; recorded in results.
  bool override_condition = false;
};

// Default grid 2^6 .. 2^14.
std::vector<std::uint64_t> default_n_grid();
inline constexpr std::uint64_t kDefaultFitMinN = 256;

struct RedundancyCurve {
  std::vector<std::uint64_t> n_grid;
  std::vector<double> mean_gap;
  // NaN when there is a single replicate of a non-degenerate source.
  std::vector<double> std_error;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  CodeId code = CodeId::Plugin;
  std::string code_description;
  std::string source_description;
  std::string family;
  bool condition_overridden = false;
  std::string condition_reason;
  // Per-replicate gaps, row r = replicate r, column k = n_grid[k].
  std::vector<std::vector<double>> replicate_gaps;
};

// Mean over replicates of L_code(X^n) - oracle_codelength(f, mu*, X^n).
// Throws ConditionError if the source fails the moment condition and the
// override is not set.
RedundancyCurve redundancy_curve(const Source& s, const FamilySpec& f, const CodeSpec& code,
                                 const std::vector<std::uint64_t>& n_grid, std::size_t replicates,
                                 std::uint64_t seed, const RunOptions& options = {});

// Several codes on the same replicate streams.
std::vector<RedundancyCurve> redundancy_curves(const Source& s, const FamilySpec& f,
                                               const std::vector<CodeSpec>& codes,
                                               const std::vector<std::uint64_t>& n_grid,
                                               std::size_t replicates, std::uint64_t seed,
                                               const RunOptions& options = {});

struct SlopeFit {
  double c_hat = 0.0;
  double intercept = 0.0;
  double c_stderr = 0.0;
  std::uint64_t n_min_used = 0;
  std::size_t points = 0;
};

// Weighted least squares of mean_gap on (1/2) ln n over points with
// n >= n_min, weights 1/stderr^2 (uniform when any stderr is zero or NaN).
// When per-replicate gaps are present the stderr of c_hat is the replicate
// spread of the same linear estimator, which accounts for the correlation
// between grid points. Needs at least 4 points.
SlopeFit fit_c(const RedundancyCurve& curve, std::uint64_t n_min = kDefaultFitMinN);

struct DnCurve {
  std::vector<std::uint64_t> n_grid;
  std::vector<double> d_hat;
  std::vector<double> std_error;
  double limit_prediction = 0.0;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
};

// d(n) = E[oracle_codelength(mu*, X^n) - ml_codelength(X^n)] for families
// with a finite alphabet.
DnCurve dn_curve(const Source& s, const FamilySpec& f, const std::vector<std::uint64_t>& n_grid,
                 std::size_t replicates, std::uint64_t seed, const RunOptions& options = {});

// Expected regret E[L_code(X^n) - ml_codelength(X^n)], in the same layout as
// a redundancy curve.
RedundancyCurve expected_regret_curve(const Source& s, const FamilySpec& f, const CodeSpec& code,
                                      const std::vector<std::uint64_t>& n_grid,
                                      std::size_t replicates, std::uint64_t seed,
                                      const RunOptions& options = {});

struct KlDecompositionReport {
  std::uint64_t n = 0;
  std::size_t replicates = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_stderr = 0.0;
  double rhs_stderr = 0.0;
  // Standard error of the paired per-replicate difference.
  double diff_stderr = 0.0;
  bool agree = false;
};

// lhs: Monte Carlo plug-in redundancy at n. rhs: Monte Carlo sum over i < n
// of D(M_mu* || M_mu_hat_i) on the same streams. Agreement means
// |lhs - rhs| <= 4 diff_stderr, or equality to 1e-12 relative when the
// difference has no spread. Fake-outcome configurations only.
KlDecompositionReport kl_decomposition_check(const Source& s, const FamilySpec& f,
                                             const PluginConfig& config, std::uint64_t n,
                                             std::size_t replicates, std::uint64_t seed,
                                             const RunOptions& options = {});

struct MseCurve {
  std::vector<std::uint64_t> n_grid;
  std::vector<double> mse;
  std::vector<double> std_error;
  // (n + 1) * mse.
  std::vector<double> scaled;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
};

// E[(mu_hat_n - mu*)^2] of the plug-in estimator. Needs a finite variance.
MseCurve estimator_mse_curve(const Source& s, const FamilySpec& f, const PluginConfig& config,
                             const std::vector<std::uint64_t>& n_grid, std::size_t replicates,
                             std::uint64_t seed, const RunOptions& options = {});

enum class SelectionCode { Plugin, Bayes, Nml, TwoPart };

std::string selection_code_name(SelectionCode code);
SelectionCode parse_selection_code(const std::string& text);

struct SelectionCell {
  std::uint64_t n = 0;
  SelectionCode code = SelectionCode::Plugin;
  // False when the code is undefined for some candidate (NML on a countable
  // alphabet); the rates are then NaN.
  bool defined = true;
  double error_rate = 0.0;
  double tie_rate = 0.0;
  std::size_t replicates = 0;
};

struct SelectionTable {
  FamilySpec true_family = FamilySpec::poisson();
  double mu_true = 0.0;
  std::vector<FamilySpec> candidates;
  std::uint64_t seed = 0;
  std::vector<SelectionCell> cells;

  const SelectionCell& cell(std::uint64_t n, SelectionCode code) const;
};

// For each replicate, draws X^n from the true family and picks the candidate
// with the smallest codelength under each code. Ties go to the candidate
// whose name sorts first and are counted separately.
SelectionTable model_selection_experiment(const FamilySpec& true_family, double mu_true,
                                          const std::vector<FamilySpec>& candidates,
                                          const std::vector<SelectionCode>& codes,
                                          const std::vector<std::uint64_t>& n_grid,
                                          std::size_t replicates, std::uint64_t seed,
                                          const RunOptions& options = {});

}  // namespace preq
