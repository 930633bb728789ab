#include "preq/codes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

#include "preq/error.hpp"
#include "preq/format.hpp"

namespace preq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double checked_length(double length, const char* what) {
  if (!std::isfinite(length)) {
    throw Error(std::string(what) + " produced a non-finite codelength");
  }
  return length;
}

// Largest log likelihood over the closure of the mean domain.
double max_log_likelihood(const FamilySpec& f, const SufficientStats& s) {
  if (s.count == 0) return 0.0;
  const double n = static_cast<double>(s.count);
  const double mean = s.sum / n;
  if (f.mean_domain().contains(mean)) return log_likelihood(f, MeanParam{mean}, s);
  switch (f.id()) {
    case FamilyId::Bernoulli:
    case FamilyId::Binomial:
    case FamilyId::Poisson:
    case FamilyId::Geometric:
      // All outcomes at one end of the statistic range: the likelihood of the
      // statistic part tends to 1 (0^0 = 1), leaving the carrier.
      return s.sum_log_carrier;
    default:
      throw DomainError("maximum likelihood is unbounded for " + f.name() +
                        " on a sequence with statistic sum " + format_exact(s.sum));
  }
}

}  // namespace

std::string code_name(CodeId id) {
  switch (id) {
    case CodeId::Plugin:
      return "plugin";
    case CodeId::Bayes:
      return "bayes";
    case CodeId::Nml:
      return "nml";
    case CodeId::TwoPart:
      return "two-part";
    case CodeId::Oracle:
      return "oracle";
    case CodeId::MaximumLikelihood:
      return "ml";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Plug-in code

PluginConfig PluginConfig::defaults(const FamilySpec& f) {
  return fake_outcome(f.default_anchor(), 1.0);
}

PluginConfig PluginConfig::fake_outcome(double x0, double n0) {
  PluginConfig c;
  c.x0 = x0;
  c.n0 = n0;
  c.variant = FakeOutcome{};
  return c;
}

PluginConfig PluginConfig::skip_first(const FamilySpec& f, std::size_t m,
                                      SymbolCodelength fallback, bool extend_until_interior) {
  if (!fallback) {
    if (f.id() != FamilyId::Bernoulli) {
      throw ConfigError("skip_first startup for " + f.name() + " needs an explicit fallback code");
    }
    fallback = [](double) { return std::numbers::ln2; };
  }
  PluginConfig c;
  c.x0 = f.default_anchor();
  c.n0 = 0.0;
  c.variant = SkipFirst{m, std::move(fallback), extend_until_interior};
  return c;
}

void validate(const FamilySpec& f, const PluginConfig& config) {
  if (config.is_fake_outcome()) {
    if (!f.mean_domain().contains(config.x0)) {
      throw DomainError("fake outcome x0 = " + format_exact(config.x0) +
                        " must lie strictly inside the mean domain of " + f.name());
    }
    if (!(config.n0 > 0.0) || !std::isfinite(config.n0)) {
      throw ConfigError("fake outcome weight n0 must be positive, got " + format_exact(config.n0));
    }
    return;
  }
  const auto& skip = std::get<SkipFirst>(config.variant);
  if (skip.m == 0 && !skip.extend_until_interior) {
    throw ConfigError("skip_first needs m >= 1: the ML estimate of an empty prefix is undefined");
  }
  if (!skip.fallback) throw ConfigError("skip_first needs a fallback code");
}

PluginPredictor::PluginPredictor(FamilySpec family, PluginConfig config)
    : family_(std::move(family)), config_(std::move(config)) {
  validate(family_, config_);
}

bool PluginPredictor::in_startup() const {
  if (config_.is_fake_outcome() || startup_done_) return false;
  const auto& skip = std::get<SkipFirst>(config_.variant);
  if (count_ < skip.m) return true;
  if (!skip.extend_until_interior) return false;
  if (count_ == 0) return true;
  return !family_.mean_domain().contains(stat_sum_ / static_cast<double>(count_));
}

MeanParam PluginPredictor::estimate() const {
  if (config_.is_fake_outcome()) {
    const double mu = (config_.x0 * config_.n0 + stat_sum_) / (static_cast<double>(count_) + config_.n0);
    return family_.mean(mu);
  }
  if (in_startup() || count_ == 0) {
    throw ConfigError("no ML estimate during the skip_first startup phase");
  }
  return family_.mean(stat_sum_ / static_cast<double>(count_));
}

double PluginPredictor::codelength(double x) const {
  require_support(family_, x);
  if (in_startup()) {
    return checked_length(std::get<SkipFirst>(config_.variant).fallback(x), "startup fallback");
  }
  return checked_length(-log_density(family_, estimate(), x), "plug-in prediction");
}

double PluginPredictor::observe(double x) {
  const double length = codelength(x);
  ++count_;
  stat_sum_ += x;
  accumulated_ += length;
  if (!config_.is_fake_outcome() && !startup_done_ && !in_startup()) startup_done_ = true;
  return length;
}

MeanParam smoothed_ml_estimate(const FamilySpec& f, const PluginConfig& config,
                               const std::vector<double>& prefix) {
  validate(f, config);
  double sum = 0.0;
  for (double x : prefix) {
    require_support(f, x);
    sum += x;
  }
  const double n = static_cast<double>(prefix.size());
  if (config.is_fake_outcome()) return f.mean((config.x0 * config.n0 + sum) / (n + config.n0));
  if (prefix.empty()) throw ConfigError("the ML estimate of an empty prefix is undefined");
  return f.mean(sum / n);
}

CodelengthReport plugin_codelength(const FamilySpec& f, const PluginConfig& config,
                                   const std::vector<double>& seq) {
  PluginPredictor predictor(f, config);
  CodelengthReport report;
  report.code = CodeId::Plugin;
  report.per_symbol.reserve(seq.size());
  for (double x : seq) report.per_symbol.push_back(predictor.observe(x));
  report.total = predictor.accumulated_length();
  return report;
}

// ---------------------------------------------------------------------------
// Bayes mixtures

ConjugatePrior default_prior(const FamilySpec& f) {
  switch (f.id()) {
    case FamilyId::Bernoulli:
    case FamilyId::Binomial:
    case FamilyId::Geometric:
      return BetaPrior{0.5, 0.5};
    case FamilyId::Poisson:
    case FamilyId::Exponential:
      return GammaPrior{1.0, 1.0};
    default:
      throw UnsupportedError("no conjugate Bayes code implemented for " + f.name());
  }
}

void validate(const FamilySpec& f, const ConjugatePrior& prior) {
  const bool wants_beta = f.id() == FamilyId::Bernoulli || f.id() == FamilyId::Binomial ||
                          f.id() == FamilyId::Geometric;
  const bool wants_gamma = f.id() == FamilyId::Poisson || f.id() == FamilyId::Exponential;
  if (!wants_beta && !wants_gamma) {
    throw UnsupportedError("no conjugate Bayes code implemented for " + f.name());
  }
  if (const auto* beta = std::get_if<BetaPrior>(&prior)) {
    if (!wants_beta) throw UnsupportedError("a Beta prior does not fit " + f.name());
    if (!(beta->a > 0.0) || !(beta->b > 0.0) || !std::isfinite(beta->a + beta->b)) {
      throw ConfigError("Beta prior hyperparameters must be positive");
    }
  } else {
    const auto& gamma = std::get<GammaPrior>(prior);
    if (!wants_gamma) throw UnsupportedError("a Gamma prior does not fit " + f.name());
    if (!(gamma.shape > 0.0) || !(gamma.rate > 0.0) || !std::isfinite(gamma.shape + gamma.rate)) {
      throw ConfigError("Gamma prior hyperparameters must be positive");
    }
  }
}

BayesPredictor::BayesPredictor(FamilySpec family, ConjugatePrior prior)
    : family_(std::move(family)), prior_(prior) {
  validate(family_, prior_);
}

double BayesPredictor::codelength(double x) const {
  require_support(family_, x);
  const double n = static_cast<double>(stats_.count);
  const double S = stats_.sum;
  double log_p = 0.0;
  switch (family_.id()) {
    case FamilyId::Bernoulli: {
      const auto& p = std::get<BetaPrior>(prior_);
      const double a = p.a + S;
      const double b = p.b + n - S;
      log_p = std::log((x == 1.0 ? a : b) / (a + b));
      break;
    }
    case FamilyId::Binomial: {
      const auto& p = std::get<BetaPrior>(prior_);
      const double m = family_.trials();
      const double a = p.a + S;
      const double b = p.b + n * m - S;
      log_p = log_choose(family_.trials(), static_cast<std::uint64_t>(x)) +
              log_beta(a + x, b + m - x) - log_beta(a, b);
      break;
    }
    case FamilyId::Geometric: {
      const auto& p = std::get<BetaPrior>(prior_);
      const double a = p.a + S;
      const double b = p.b + n;
      log_p = log_beta(a + x, b + 1.0) - log_beta(a, b);
      break;
    }
    case FamilyId::Poisson: {
      const auto& p = std::get<GammaPrior>(prior_);
      const double shape = p.shape + S;
      const double rate = p.rate + n;
      log_p = log_gamma(shape + x) - log_gamma(shape) -
              log_factorial(static_cast<std::uint64_t>(x)) +
              shape * std::log(rate / (rate + 1.0)) - x * std::log1p(rate);
      break;
    }
    case FamilyId::Exponential: {
      const auto& p = std::get<GammaPrior>(prior_);
      const double shape = p.shape + n;
      const double rate = p.rate + S;
      log_p = std::log(shape) + shape * std::log(rate) - (shape + 1.0) * std::log(rate + x);
      break;
    }
    default:
      throw UnsupportedError("no conjugate Bayes code implemented for " + family_.name());
  }
  return checked_length(-log_p, "Bayes prediction");
}

double BayesPredictor::observe(double x) {
  const double length = codelength(x);
  stats_.add(family_, x);
  return length;
}

double BayesPredictor::predictive_mean() const {
  const double n = static_cast<double>(stats_.count);
  const double S = stats_.sum;
  switch (family_.id()) {
    case FamilyId::Bernoulli:
    case FamilyId::Binomial: {
      const auto& p = std::get<BetaPrior>(prior_);
      return family_.trials() * (p.a + S) / (p.a + p.b + n * family_.trials());
    }
    case FamilyId::Geometric: {
      // E[theta / (1 - theta)] under Beta(a', b') = a' / (b' - 1).
      const auto& p = std::get<BetaPrior>(prior_);
      const double b = p.b + n;
      return b > 1.0 ? (p.a + S) / (b - 1.0) : kInf;
    }
    case FamilyId::Poisson: {
      const auto& p = std::get<GammaPrior>(prior_);
      return (p.shape + S) / (p.rate + n);
    }
    case FamilyId::Exponential: {
      const auto& p = std::get<GammaPrior>(prior_);
      const double shape = p.shape + n;
      return shape > 1.0 ? (p.rate + S) / (shape - 1.0) : kInf;
    }
    default:
      throw UnsupportedError("no conjugate Bayes code implemented for " + family_.name());
  }
}

double bayes_marginal_codelength(const FamilySpec& f, const ConjugatePrior& prior,
                                 const SufficientStats& stats) {
  validate(f, prior);
  const double n = static_cast<double>(stats.count);
  const double S = stats.sum;
  double log_marginal = 0.0;
  switch (f.id()) {
    case FamilyId::Bernoulli: {
      const auto& p = std::get<BetaPrior>(prior);
      log_marginal = log_beta(p.a + S, p.b + n - S) - log_beta(p.a, p.b);
      break;
    }
    case FamilyId::Binomial: {
      const auto& p = std::get<BetaPrior>(prior);
      const double trials = n * f.trials();
      log_marginal =
          stats.sum_log_carrier + log_beta(p.a + S, p.b + trials - S) - log_beta(p.a, p.b);
      break;
    }
    case FamilyId::Geometric: {
      const auto& p = std::get<BetaPrior>(prior);
      log_marginal = log_beta(p.a + S, p.b + n) - log_beta(p.a, p.b);
      break;
    }
    case FamilyId::Poisson: {
      const auto& p = std::get<GammaPrior>(prior);
      log_marginal = stats.sum_log_carrier + p.shape * std::log(p.rate) +
                     log_gamma(p.shape + S) - log_gamma(p.shape) -
                     (p.shape + S) * std::log(p.rate + n);
      break;
    }
    case FamilyId::Exponential: {
      const auto& p = std::get<GammaPrior>(prior);
      log_marginal = p.shape * std::log(p.rate) + log_gamma(p.shape + n) - log_gamma(p.shape) -
                     (p.shape + n) * std::log(p.rate + S);
      break;
    }
    default:
      throw UnsupportedError("no conjugate Bayes code implemented for " + f.name());
  }
  return checked_length(-log_marginal, "Bayes marginal");
}

CodelengthReport bayes_codelength(const FamilySpec& f, const ConjugatePrior& prior,
                                  const std::vector<double>& seq) {
  BayesPredictor predictor(f, prior);
  CodelengthReport report;
  report.code = CodeId::Bayes;
  report.per_symbol.reserve(seq.size());
  for (double x : seq) report.per_symbol.push_back(predictor.observe(x));
  report.total = seq.empty() ? 0.0 : bayes_marginal_codelength(f, prior, summarize(f, seq));
  return report;
}

// ---------------------------------------------------------------------------
// NML

double nml_log_normalizer(const FamilySpec& f, std::uint64_t horizon) {
  if (!f.has_finite_alphabet()) {
    throw UnsupportedError("parametric complexity of " + f.name() +
                           " is infinite/undefined at a fixed horizon");
  }
  if (horizon == 0) return 0.0;
  static std::mutex mutex;
  static std::map<std::pair<unsigned, std::uint64_t>, double> cache;
  const auto key = std::make_pair(f.trials(), horizon);
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  // Sequences of n draws from {0..m} with total s carry combined carrier
  // weight C(nm, s) (Vandermonde), so the normalizer reduces to a sum over s.
  const std::uint64_t total = horizon * f.trials();
  const double N = static_cast<double>(total);
  std::vector<double> terms(total + 1);
  double peak = -kInf;
  for (std::uint64_t s = 0; s <= total; ++s) {
    const double k = static_cast<double>(s);
    double t = log_choose(total, s);
    if (s > 0) t += k * std::log(k / N);
    if (s < total) t += (N - k) * std::log1p(-k / N);
    terms[s] = t;
    peak = std::max(peak, t);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - peak);
  const double value = peak + std::log(acc);
  std::lock_guard lock(mutex);
  cache.emplace(key, value);
  return value;
}

double nml_codelength(const FamilySpec& f, const SufficientStats& stats) {
  return nml_log_normalizer(f, stats.count) - max_log_likelihood(f, stats);
}

double nml_codelength(const FamilySpec& f, std::uint64_t horizon, const std::vector<double>& seq) {
  if (!f.has_finite_alphabet()) {
    throw UnsupportedError("parametric complexity of " + f.name() +
                           " is infinite/undefined at a fixed horizon");
  }
  if (seq.size() != horizon) {
    throw ConfigError("NML horizon " + std::to_string(horizon) + " does not match sequence length " +
                      std::to_string(seq.size()));
  }
  return nml_codelength(f, summarize(f, seq));
}

// ---------------------------------------------------------------------------
// Two-part code

UniformGrid default_two_part_grid(const FamilySpec& f) {
  switch (f.id()) {
    case FamilyId::Bernoulli:
    case FamilyId::Binomial:
      return {0.01 * f.trials(), 0.99 * f.trials(), 1.0};
    case FamilyId::NormalFixedVariance:
      return {-100.0, 100.0, 1.0};
    default:
      return {0.01, 100.0, 1.0};
  }
}

std::vector<double> grid_points(const FamilySpec& f, const TwoPartGrid& grid, std::uint64_t n) {
  std::vector<double> points;
  if (const auto* exp = std::get_if<ExplicitGrid>(&grid)) {
    points = exp->points;
  } else {
    const auto& u = std::get<UniformGrid>(grid);
    if (!(u.hi >= u.lo) || !(u.scale > 0.0)) {
      throw ConfigError("uniform grid needs lo <= hi and a positive scale");
    }
    const double width = u.hi - u.lo;
    const double spacing = u.scale / std::sqrt(static_cast<double>(std::max<std::uint64_t>(n, 1)));
    const auto steps = static_cast<std::uint64_t>(std::ceil(width / spacing));
    points.reserve(steps + 1);
    if (steps == 0) {
      points.push_back(u.lo);
    } else {
      for (std::uint64_t j = 0; j <= steps; ++j) {
        points.push_back(u.lo + width * static_cast<double>(j) / static_cast<double>(steps));
      }
    }
  }
  if (points.empty()) throw ConfigError("two-part grid is empty");
  for (double p : points) {
    if (!f.mean_domain().contains(p)) {
      throw ConfigError("two-part grid point " + format_exact(p) +
                        " is outside the open mean domain of " + f.name());
    }
  }
  std::sort(points.begin(), points.end());
  return points;
}

double two_part_codelength(const FamilySpec& f, const SufficientStats& stats,
                           const TwoPartGrid& grid) {
  if (stats.count == 0) throw ConfigError("two-part code needs a nonempty sequence");
  const auto points = grid_points(f, grid, stats.count);
  // -ln M_mu(x^n) decreases up to the ML estimate and increases after it,
  // so the best grid point is one of the two neighbours of the estimate.
  const double mean = stats.sum / static_cast<double>(stats.count);
  const auto upper = std::lower_bound(points.begin(), points.end(), mean);
  double best = kInf;
  if (upper != points.end()) best = -log_likelihood(f, MeanParam{*upper}, stats);
  if (upper != points.begin()) {
    best = std::min(best, -log_likelihood(f, MeanParam{*std::prev(upper)}, stats));
  }
  return std::log(static_cast<double>(points.size())) + best;
}

double two_part_codelength(const FamilySpec& f, const std::vector<double>& seq,
                           const TwoPartGrid& grid) {
  return two_part_codelength(f, summarize(f, seq), grid);
}

// ---------------------------------------------------------------------------
// Reference lengths

double oracle_codelength(const FamilySpec& f, MeanParam star, const std::vector<double>& seq) {
  require_mean(f, star);
  double total = 0.0;
  for (double x : seq) total -= log_density(f, star, x);
  return total;
}

double ml_codelength(const FamilySpec& f, const SufficientStats& stats) {
  return checked_length(-max_log_likelihood(f, stats), "maximum likelihood");
}

double ml_codelength(const FamilySpec& f, const std::vector<double>& seq) {
  if (seq.empty()) throw ConfigError("ML codelength needs a nonempty sequence");
  return ml_codelength(f, summarize(f, seq));
}

}  // namespace preq
