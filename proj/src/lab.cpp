#include "preq/lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "preq/error.hpp"
#include "preq/format.hpp"

namespace preq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::string_view kDataStream = "data";

void check_grid(const std::vector<std::uint64_t>& n_grid) {
  if (n_grid.empty()) throw ConfigError("n grid is empty");
  for (std::size_t k = 1; k < n_grid.size(); ++k) {
    if (n_grid[k] <= n_grid[k - 1]) throw ConfigError("n grid must be strictly increasing");
  }
}

void check_replicates(std::size_t replicates) {
  if (replicates == 0) throw ConfigError("replicates must be at least 1");
}

// Runs fn(r) for every replicate. Results must be written by replicate index
// so the outcome does not depend on scheduling.
template <class Fn>
void for_each_replicate(std::size_t replicates, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, replicates);
  if (workers == 1) {
    for (std::size_t r = 0; r < replicates; ++r) fn(r);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::size_t error_index = replicates;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (!failed.load(std::memory_order_relaxed)) {
        const std::size_t r = next.fetch_add(1);
        if (r >= replicates) return;
        try {
          fn(r);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (r < error_index) {
            error_index = r;
            error = std::current_exception();
          }
          failed = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct ColumnSummary {
  double mean = 0.0;
  double std_error = 0.0;
};

// Mean and standard error of column k over replicate rows, summed in
// replicate order.
ColumnSummary summarize_column(const std::vector<std::vector<double>>& rows, std::size_t k,
                               bool degenerate) {
  const auto count = static_cast<double>(rows.size());
  double sum = 0.0;
  for (const auto& row : rows) sum += row[k];
  const double mean = sum / count;
  if (rows.size() < 2) return {mean, degenerate ? 0.0 : kNaN};
  double ss = 0.0;
  for (const auto& row : rows) ss += (row[k] - mean) * (row[k] - mean);
  return {mean, std::sqrt(ss / (count - 1.0) / count)};
}

std::string enforce_condition(const Source& s, const FamilySpec& f, const RunOptions& options,
                              bool& overridden) {
  const ConditionVerdict verdict = check_condition1(f, moments(s));
  overridden = false;
  if (verdict) return verdict.reason;
  if (!options.override_condition) {
    throw ConditionError("source " + s.describe() + " fails the moment condition for " +
                         f.name() + ": " + verdict.reason);
  }
  overridden = true;
  return verdict.reason;
}

void validate_code(const FamilySpec& f, const CodeSpec& code) {
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, PluginCode>) {
          validate(f, c.config);
        } else if constexpr (std::is_same_v<T, BayesCode>) {
          validate(f, c.prior);
        } else if constexpr (std::is_same_v<T, NmlCode>) {
          if (!f.has_finite_alphabet()) {
            throw UnsupportedError("NML parametric complexity is infinite or undefined at a "
                                   "fixed horizon for " + f.name());
          }
        } else {
          grid_points(f, c.grid, 1);
        }
      },
      code);
}

// Codelength of the prefix seen so far under one code. Plug-in lengths are
// accumulated symbol by symbol, the others are closed forms of the prefix
// statistics.
class PrefixCode {
 public:
  PrefixCode(const FamilySpec& f, const CodeSpec& code) : family_(f), code_(code) {
    if (const auto* p = std::get_if<PluginCode>(&code)) plugin_.emplace(f, p->config);
  }

  void observe(double x) {
    if (plugin_) accumulated_ += plugin_->observe(x);
  }

  double length(const SufficientStats& stats) const {
    if (plugin_) return accumulated_;
    if (stats.count == 0) return 0.0;
    if (const auto* b = std::get_if<BayesCode>(&code_)) {
      return bayes_marginal_codelength(family_, b->prior, stats);
    }
    if (std::holds_alternative<NmlCode>(code_)) return nml_codelength(family_, stats);
    return two_part_codelength(family_, stats, std::get<TwoPartCode>(code_).grid);
  }

 private:
  const FamilySpec& family_;
  const CodeSpec& code_;
  std::optional<PluginPredictor> plugin_;
  double accumulated_ = 0.0;
};

CodeId selection_code_id(SelectionCode code) {
  switch (code) {
    case SelectionCode::Plugin:
      return CodeId::Plugin;
    case SelectionCode::Bayes:
      return CodeId::Bayes;
    case SelectionCode::Nml:
      return CodeId::Nml;
    case SelectionCode::TwoPart:
      return CodeId::TwoPart;
  }
  return CodeId::Plugin;
}

enum class Baseline { Oracle, MaximumLikelihood };

std::vector<RedundancyCurve> gap_curves(const Source& s, const FamilySpec& f,
                                        const std::vector<CodeSpec>& codes,
                                        const std::vector<std::uint64_t>& n_grid,
                                        std::size_t replicates, std::uint64_t seed,
                                        const RunOptions& options, Baseline baseline) {
  check_grid(n_grid);
  check_replicates(replicates);
  if (codes.empty()) throw ConfigError("no codes requested");
  const MeanParam star = optimal_mean(s, f);
  bool overridden = false;
  const std::string reason = enforce_condition(s, f, options, overridden);
  for (const auto& code : codes) validate_code(f, code);

  const std::size_t grid_size = n_grid.size();
  const std::uint64_t n_max = n_grid.back();
  std::vector<std::vector<std::vector<double>>> gaps(
      codes.size(), std::vector<std::vector<double>>(replicates, std::vector<double>(grid_size)));

  for_each_replicate(replicates, options.threads, [&](std::size_t r) {
    const auto data = sample_iid(s, n_max, seed, kDataStream, r);
    std::vector<PrefixCode> runners;
    runners.reserve(codes.size());
    for (const auto& code : codes) runners.emplace_back(f, code);
    SufficientStats stats;
    double oracle = 0.0;
    std::size_t k = 0;
    auto record = [&] {
      const double reference =
          baseline == Baseline::Oracle ? oracle : (stats.count == 0 ? 0.0 : ml_codelength(f, stats));
      for (std::size_t c = 0; c < codes.size(); ++c) {
        gaps[c][r][k] = runners[c].length(stats) - reference;
      }
      ++k;
    };
    while (k < grid_size && n_grid[k] == 0) record();
    for (std::uint64_t i = 0; i < n_max; ++i) {
      const double x = data[i];
      for (auto& runner : runners) runner.observe(x);
      stats.add(f, x);
      if (baseline == Baseline::Oracle) oracle -= log_density(f, star, x);
      if (i + 1 == n_grid[k]) record();
    }
  });

  std::vector<RedundancyCurve> curves;
  for (std::size_t c = 0; c < codes.size(); ++c) {
    RedundancyCurve curve;
    curve.n_grid = n_grid;
    curve.replicates = replicates;
    curve.seed = seed;
    curve.code = code_id(codes[c]);
    curve.code_description = describe(codes[c]);
    curve.source_description = s.describe();
    curve.family = f.name();
    curve.condition_overridden = overridden;
    curve.condition_reason = reason;
    for (std::size_t k = 0; k < grid_size; ++k) {
      const auto summary = summarize_column(gaps[c], k, s.is_degenerate());
      curve.mean_gap.push_back(summary.mean);
      curve.std_error.push_back(summary.std_error);
    }
    curve.replicate_gaps = std::move(gaps[c]);
    curves.push_back(std::move(curve));
  }
  return curves;
}

}  // namespace

// ---------------------------------------------------------------------------
// Codes

CodeId code_id(const CodeSpec& code) {
  return std::visit(
      [](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, PluginCode>) return CodeId::Plugin;
        if constexpr (std::is_same_v<T, BayesCode>) return CodeId::Bayes;
        if constexpr (std::is_same_v<T, NmlCode>) return CodeId::Nml;
        if constexpr (std::is_same_v<T, TwoPartCode>) return CodeId::TwoPart;
      },
      code);
}

std::string describe(const CodeSpec& code) {
  if (const auto* p = std::get_if<PluginCode>(&code)) {
    if (const auto* skip = std::get_if<SkipFirst>(&p->config.variant)) {
      return "plugin(skip_first m=" + std::to_string(skip->m) +
             (skip->extend_until_interior ? " extend" : "") + ")";
    }
    return "plugin(x0=" + format_exact(p->config.x0) + " n0=" + format_exact(p->config.n0) + ")";
  }
  if (const auto* b = std::get_if<BayesCode>(&code)) {
    if (const auto* beta = std::get_if<BetaPrior>(&b->prior)) {
      return "bayes(beta a=" + format_exact(beta->a) + " b=" + format_exact(beta->b) + ")";
    }
    const auto& gamma = std::get<GammaPrior>(b->prior);
    return "bayes(gamma shape=" + format_exact(gamma.shape) + " rate=" + format_exact(gamma.rate) +
           ")";
  }
  if (std::holds_alternative<NmlCode>(code)) return "nml";
  const auto& grid = std::get<TwoPartCode>(code).grid;
  if (const auto* u = std::get_if<UniformGrid>(&grid)) {
    return "two-part(uniform lo=" + format_exact(u->lo) + " hi=" + format_exact(u->hi) +
           " scale=" + format_exact(u->scale) + ")";
  }
  return "two-part(explicit " + std::to_string(std::get<ExplicitGrid>(grid).points.size()) +
         " points)";
}

CodeSpec default_code(CodeId id, const FamilySpec& f) {
  switch (id) {
    case CodeId::Plugin:
      return PluginCode{PluginConfig::defaults(f)};
    case CodeId::Bayes:
      return BayesCode{default_prior(f)};
    case CodeId::Nml:
      return NmlCode{};
    case CodeId::TwoPart:
      return TwoPartCode{default_two_part_grid(f)};
    default:
      throw ConfigError(code_name(id) + " is a reference length, not a universal code");
  }
}

std::vector<std::uint64_t> default_n_grid() {
  std::vector<std::uint64_t> grid;
  for (int e = 6; e <= 14; ++e) grid.push_back(std::uint64_t{1} << e);
  return grid;
}

// ---------------------------------------------------------------------------
// Redundancy and slopes

RedundancyCurve redundancy_curve(const Source& s, const FamilySpec& f, const CodeSpec& code,
                                 const std::vector<std::uint64_t>& n_grid, std::size_t replicates,
                                 std::uint64_t seed, const RunOptions& options) {
  return std::move(
      gap_curves(s, f, {code}, n_grid, replicates, seed, options, Baseline::Oracle).front());
}

std::vector<RedundancyCurve> redundancy_curves(const Source& s, const FamilySpec& f,
                                               const std::vector<CodeSpec>& codes,
                                               const std::vector<std::uint64_t>& n_grid,
                                               std::size_t replicates, std::uint64_t seed,
                                               const RunOptions& options) {
  return gap_curves(s, f, codes, n_grid, replicates, seed, options, Baseline::Oracle);
}

RedundancyCurve expected_regret_curve(const Source& s, const FamilySpec& f, const CodeSpec& code,
                                      const std::vector<std::uint64_t>& n_grid,
                                      std::size_t replicates, std::uint64_t seed,
                                      const RunOptions& options) {
  return std::move(
      gap_curves(s, f, {code}, n_grid, replicates, seed, options, Baseline::MaximumLikelihood)
          .front());
}

SlopeFit fit_c(const RedundancyCurve& curve, std::uint64_t n_min) {
  if (curve.mean_gap.size() != curve.n_grid.size() ||
      curve.std_error.size() != curve.n_grid.size()) {
    throw ConfigError("curve columns have different lengths");
  }
  std::vector<std::size_t> used;
  for (std::size_t k = 0; k < curve.n_grid.size(); ++k) {
    if (curve.n_grid[k] >= n_min && curve.n_grid[k] > 0) used.push_back(k);
  }
  if (used.size() < 4) {
    throw ConfigError("slope fit needs at least 4 grid points with n >= " + std::to_string(n_min) +
                      ", got " + std::to_string(used.size()));
  }
  bool weighted = true;
  for (std::size_t k : used) {
    const double se = curve.std_error[k];
    if (!(std::isfinite(se) && se > 0.0)) weighted = false;
  }
  const std::size_t m = used.size();
  std::vector<double> u(m), y(m), w(m);
  for (std::size_t j = 0; j < m; ++j) {
    u[j] = 0.5 * std::log(static_cast<double>(curve.n_grid[used[j]]));
    y[j] = curve.mean_gap[used[j]];
    w[j] = weighted ? 1.0 / (curve.std_error[used[j]] * curve.std_error[used[j]]) : 1.0;
  }
  const double sw = std::accumulate(w.begin(), w.end(), 0.0);
  double u_bar = 0.0, y_bar = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    u_bar += w[j] * u[j];
    y_bar += w[j] * y[j];
  }
  u_bar /= sw;
  y_bar /= sw;
  double sxx = 0.0;
  for (std::size_t j = 0; j < m; ++j) sxx += w[j] * (u[j] - u_bar) * (u[j] - u_bar);
  // c_hat = sum_j coef[j] * y[j].
  std::vector<double> coef(m);
  double c_hat = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    coef[j] = w[j] * (u[j] - u_bar) / sxx;
    c_hat += coef[j] * (y[j] - y_bar);
  }
  SlopeFit fit;
  fit.c_hat = c_hat;
  fit.intercept = y_bar - c_hat * u_bar;
  fit.n_min_used = curve.n_grid[used.front()];
  fit.points = m;

  const auto& reps = curve.replicate_gaps;
  if (reps.size() >= 2) {
    std::vector<double> slopes;
    slopes.reserve(reps.size());
    for (const auto& row : reps) {
      double c = 0.0;
      for (std::size_t j = 0; j < m; ++j) c += coef[j] * row[used[j]];
      slopes.push_back(c);
    }
    const double mean = std::accumulate(slopes.begin(), slopes.end(), 0.0) /
                        static_cast<double>(slopes.size());
    double ss = 0.0;
    for (double c : slopes) ss += (c - mean) * (c - mean);
    const auto count = static_cast<double>(slopes.size());
    fit.c_stderr = std::sqrt(ss / (count - 1.0) / count);
  } else if (weighted) {
    fit.c_stderr = std::sqrt(1.0 / sxx);
  } else {
    double rss = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double resid = y[j] - fit.intercept - c_hat * u[j];
      rss += resid * resid;
    }
    fit.c_stderr = std::sqrt(rss / static_cast<double>(m - 2) / sxx);
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Regret gap

DnCurve dn_curve(const Source& s, const FamilySpec& f, const std::vector<std::uint64_t>& n_grid,
                 std::size_t replicates, std::uint64_t seed, const RunOptions& options) {
  if (!f.has_finite_alphabet()) {
    throw UnsupportedError("d(n) limit is only established for finite alphabets; " + f.name() +
                           " is not finite");
  }
  check_grid(n_grid);
  check_replicates(replicates);
  const MeanParam star = optimal_mean(s, f);
  const std::size_t grid_size = n_grid.size();
  const std::uint64_t n_max = n_grid.back();
  std::vector<std::vector<double>> rows(replicates, std::vector<double>(grid_size));

  for_each_replicate(replicates, options.threads, [&](std::size_t r) {
    const auto data = sample_iid(s, n_max, seed, kDataStream, r);
    SufficientStats stats;
    double oracle = 0.0;
    std::size_t k = 0;
    while (k < grid_size && n_grid[k] == 0) rows[r][k++] = 0.0;
    for (std::uint64_t i = 0; i < n_max; ++i) {
      stats.add(f, data[i]);
      oracle -= log_density(f, star, data[i]);
      if (i + 1 == n_grid[k]) rows[r][k++] = oracle - ml_codelength(f, stats);
    }
  });

  DnCurve curve;
  curve.n_grid = n_grid;
  curve.replicates = replicates;
  curve.seed = seed;
  curve.limit_prediction = 0.5 * theoretical_c(s, f);
  for (std::size_t k = 0; k < grid_size; ++k) {
    const auto summary = summarize_column(rows, k, s.is_degenerate());
    curve.d_hat.push_back(summary.mean);
    curve.std_error.push_back(summary.std_error);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Divergence decomposition

KlDecompositionReport kl_decomposition_check(const Source& s, const FamilySpec& f,
                                             const PluginConfig& config, std::uint64_t n,
                                             std::size_t replicates, std::uint64_t seed,
                                             const RunOptions& options) {
  check_replicates(replicates);
  if (!config.is_fake_outcome()) {
    throw UnsupportedError("the divergence decomposition needs a fake-outcome configuration");
  }
  validate(f, config);
  const MeanParam star = optimal_mean(s, f);
  bool overridden = false;
  enforce_condition(s, f, options, overridden);

  KlDecompositionReport report;
  report.n = n;
  report.replicates = replicates;
  if (n == 0) {
    report.agree = true;
    return report;
  }
  // Columns: lhs, rhs, lhs - rhs.
  std::vector<std::vector<double>> rows(replicates, std::vector<double>(3));
  for_each_replicate(replicates, options.threads, [&](std::size_t r) {
    const auto data = sample_iid(s, n, seed, kDataStream, r);
    PluginPredictor predictor(f, config);
    double lhs = 0.0, rhs = 0.0;
    for (double x : data) {
      rhs += kl_divergence(f, star, predictor.estimate());
      lhs += log_density_ratio(f, star, predictor.estimate(), x);
      predictor.observe(x);
    }
    rows[r] = {lhs, rhs, lhs - rhs};
  });
  const bool degenerate = s.is_degenerate();
  const auto lhs = summarize_column(rows, 0, degenerate);
  const auto rhs = summarize_column(rows, 1, degenerate);
  const auto diff = summarize_column(rows, 2, degenerate);
  report.lhs = lhs.mean;
  report.rhs = rhs.mean;
  report.lhs_stderr = lhs.std_error;
  report.rhs_stderr = rhs.std_error;
  report.diff_stderr = diff.std_error;
  const double gap = std::abs(report.lhs - report.rhs);
  if (diff.std_error > 0.0) {
    report.agree = gap <= 4.0 * diff.std_error;
  } else {
    const double scale = std::max({1.0, std::abs(report.lhs), std::abs(report.rhs)});
    report.agree = gap <= 1e-12 * scale;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Estimator mean squared error

MseCurve estimator_mse_curve(const Source& s, const FamilySpec& f, const PluginConfig& config,
                             const std::vector<std::uint64_t>& n_grid, std::size_t replicates,
                             std::uint64_t seed, const RunOptions& options) {
  check_grid(n_grid);
  check_replicates(replicates);
  validate(f, config);
  const MeanParam star = optimal_mean(s, f);
  if (!moments(s).has_moment(2)) {
    throw DomainError("estimator MSE needs a source with finite variance");
  }
  const bool fake = config.is_fake_outcome();
  if (!fake && n_grid.front() == 0) {
    throw ConfigError("skip_first has no estimate at n = 0");
  }
  const std::size_t grid_size = n_grid.size();
  const std::uint64_t n_max = n_grid.back();
  std::vector<std::vector<double>> rows(replicates, std::vector<double>(grid_size));

  for_each_replicate(replicates, options.threads, [&](std::size_t r) {
    const auto data = sample_iid(s, n_max, seed, kDataStream, r);
    // Deviations are accumulated about mu* so that a constant source gives
    // an exact estimator error.
    double deviation_sum = 0.0;
    std::size_t k = 0;
    auto record = [&](std::uint64_t n) {
      const auto nd = static_cast<double>(n);
      const double err = fake ? (config.n0 * (config.x0 - star.value) + deviation_sum) / (nd + config.n0)
                              : deviation_sum / nd;
      rows[r][k++] = err * err;
    };
    while (k < grid_size && n_grid[k] == 0) record(0);
    for (std::uint64_t i = 0; i < n_max; ++i) {
      deviation_sum += data[i] - star.value;
      if (i + 1 == n_grid[k]) record(i + 1);
    }
  });

  MseCurve curve;
  curve.n_grid = n_grid;
  curve.replicates = replicates;
  curve.seed = seed;
  for (std::size_t k = 0; k < grid_size; ++k) {
    const auto summary = summarize_column(rows, k, s.is_degenerate());
    curve.mse.push_back(summary.mean);
    curve.std_error.push_back(summary.std_error);
    curve.scaled.push_back((static_cast<double>(n_grid[k]) + 1.0) * summary.mean);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Model selection

std::string selection_code_name(SelectionCode code) {
  switch (code) {
    case SelectionCode::Plugin:
      return "plugin";
    case SelectionCode::Bayes:
      return "bayes";
    case SelectionCode::Nml:
      return "nml";
    case SelectionCode::TwoPart:
      return "two-part";
  }
  return "?";
}

SelectionCode parse_selection_code(const std::string& text) {
  for (auto code : {SelectionCode::Plugin, SelectionCode::Bayes, SelectionCode::Nml,
                    SelectionCode::TwoPart}) {
    if (text == selection_code_name(code)) return code;
  }
  if (text == "two_part" || text == "twopart") return SelectionCode::TwoPart;
  throw ParseError("unknown code '" + text + "' (expected plugin, bayes, nml or two-part)");
}

const SelectionCell& SelectionTable::cell(std::uint64_t n, SelectionCode code) const {
  for (const auto& c : cells) {
    if (c.n == n && c.code == code) return c;
  }
  throw ConfigError("no cell for n = " + std::to_string(n) + " and code " +
                    selection_code_name(code));
}

SelectionTable model_selection_experiment(const FamilySpec& true_family, double mu_true,
                                          const std::vector<FamilySpec>& candidates,
                                          const std::vector<SelectionCode>& codes,
                                          const std::vector<std::uint64_t>& n_grid,
                                          std::size_t replicates, std::uint64_t seed,
                                          const RunOptions& options) {
  check_grid(n_grid);
  check_replicates(replicates);
  if (candidates.size() < 2) throw ConfigError("model selection needs at least two candidates");
  if (codes.empty()) throw ConfigError("no codes requested");
  if (n_grid.front() == 0) throw ConfigError("model selection needs n >= 1");
  const MeanParam truth = true_family.mean(mu_true);
  for (const auto& c : candidates) {
    if (!c.mean_domain().contains(mu_true)) {
      throw DomainError("mu_true = " + format_exact(mu_true) + " is outside the mean domain of " +
                        c.name());
    }
  }
  const Source source = Source::in_model(true_family, truth.value);

  // Candidate order for tie breaking.
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].name() < candidates[b].name();
  });

  // Per code and candidate, or nullopt if the code is undefined there.
  std::vector<std::vector<std::optional<CodeSpec>>> specs(codes.size());
  std::vector<bool> defined(codes.size(), true);
  for (std::size_t q = 0; q < codes.size(); ++q) {
    for (const auto& c : candidates) {
      if (codes[q] == SelectionCode::Nml && !c.has_finite_alphabet()) {
        defined[q] = false;
        specs[q].push_back(std::nullopt);
        continue;
      }
      CodeSpec spec = default_code(selection_code_id(codes[q]), c);
      validate_code(c, spec);
      specs[q].push_back(std::move(spec));
    }
  }

  const std::size_t grid_size = n_grid.size();
  const std::uint64_t n_max = n_grid.back();
  // outcome[r][k * codes + q]: 0 correct, 1 wrong, plus 2 if tied.
  std::vector<std::vector<std::uint8_t>> outcome(
      replicates, std::vector<std::uint8_t>(grid_size * codes.size(), 0));

  for_each_replicate(replicates, options.threads, [&](std::size_t r) {
    const auto data = sample_iid(source, n_max, seed, kDataStream, r);
    std::vector<std::vector<std::optional<PrefixCode>>> runners(codes.size());
    for (std::size_t q = 0; q < codes.size(); ++q) {
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        runners[q].emplace_back();
        if (specs[q][c]) runners[q][c].emplace(candidates[c], *specs[q][c]);
      }
    }
    std::vector<SufficientStats> stats(candidates.size());
    std::size_t k = 0;
    for (std::uint64_t i = 0; i < n_max; ++i) {
      const double x = data[i];
      for (std::size_t c = 0; c < candidates.size(); ++c) stats[c].add(candidates[c], x);
      for (auto& per_code : runners) {
        for (auto& runner : per_code) {
          if (runner) runner->observe(x);
        }
      }
      if (i + 1 != n_grid[k]) continue;
      for (std::size_t q = 0; q < codes.size(); ++q) {
        if (!defined[q]) continue;
        double best = std::numeric_limits<double>::infinity();
        std::size_t chosen = order.front();
        bool tie = false;
        for (std::size_t c : order) {
          const double length = runners[q][c]->length(stats[c]);
          if (length < best) {
            best = length;
            chosen = c;
            tie = false;
          } else if (length == best) {
            tie = true;
          }
        }
        std::uint8_t code = candidates[chosen] == true_family ? 0 : 1;
        if (tie) code |= 2;
        outcome[r][k * codes.size() + q] = code;
      }
      ++k;
    }
  });

  SelectionTable table;
  table.true_family = true_family;
  table.mu_true = mu_true;
  table.candidates = candidates;
  table.seed = seed;
  const auto count = static_cast<double>(replicates);
  for (std::size_t k = 0; k < grid_size; ++k) {
    for (std::size_t q = 0; q < codes.size(); ++q) {
      SelectionCell cell;
      cell.n = n_grid[k];
      cell.code = codes[q];
      cell.replicates = replicates;
      cell.defined = defined[q];
      if (!defined[q]) {
        cell.error_rate = kNaN;
        cell.tie_rate = kNaN;
      } else {
        std::size_t errors = 0, ties = 0;
        for (const auto& row : outcome) {
          const std::uint8_t v = row[k * codes.size() + q];
          errors += v & 1u;
          ties += (v >> 1) & 1u;
        }
        cell.error_rate = static_cast<double>(errors) / count;
        cell.tie_rate = static_cast<double>(ties) / count;
      }
      table.cells.push_back(cell);
    }
  }
  return table;
}

}  // namespace preq
