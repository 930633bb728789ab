#include "preq/sources.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "preq/error.hpp"
#include "preq/format.hpp"

namespace preq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kProbTolerance = 1e-12;

std::vector<double> checked_cumulative(const std::vector<double>& probs, const char* what) {
  if (probs.empty()) throw ConfigError(std::string(what) + " needs at least one entry");
  std::vector<double> cumulative(probs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0) || !std::isfinite(probs[i])) {
      throw ConfigError(std::string(what) + " entries must be nonnegative, got " +
                        format_exact(probs[i]));
    }
    total += probs[i];
    cumulative[i] = total;
  }
  if (std::abs(total - 1.0) > kProbTolerance) {
    throw ConfigError(std::string(what) + " must sum to 1, got " + format_exact(total));
  }
  return cumulative;
}

std::size_t pick(const std::vector<double>& cumulative, double u) {
  // u in [0,1); the last bucket absorbs any rounding shortfall.
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1);
}

double uniform01(Engine& engine) { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }

double mean_of(const Source& s);

// E[(X - c)^k] for k = 1..4.
std::array<double, 4> moments_about(const Source& s, double c) {
  std::array<double, 4> out{};
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, InModelSource>) {
          const MomentReport m = family_moments(k.family, k.mean);
          const double d = m.mean - c;
          out[0] = d;
          out[1] = m.variance + d * d;
          out[2] = m.third_central + 3.0 * m.variance * d + d * d * d;
          out[3] = m.fourth_central + 4.0 * m.third_central * d + 6.0 * m.variance * d * d +
                   d * d * d * d;
        } else if constexpr (std::is_same_v<T, PointMassSource>) {
          const double d = k.value - c;
          out = {d, d * d, d * d * d, d * d * d * d};
        } else if constexpr (std::is_same_v<T, FiniteSupportSource>) {
          for (std::size_t i = 0; i < k.values.size(); ++i) {
            const double d = k.values[i] - c;
            const double p = k.probs[i];
            out[0] += p * d;
            out[1] += p * d * d;
            out[2] += p * d * d * d;
            out[3] += p * d * d * d * d;
          }
        } else if constexpr (std::is_same_v<T, MixtureSource>) {
          for (std::size_t i = 0; i < k.components.size(); ++i) {
            const auto part = moments_about(k.components[i], c);
            for (std::size_t j = 0; j < 4; ++j) out[j] += k.weights[i] * part[j];
          }
        } else {
          const double inv = 1.0 / static_cast<double>(k.data.size());
          for (double x : k.data) {
            const double d = x - c;
            out[0] += d;
            out[1] += d * d;
            out[2] += d * d * d;
            out[3] += d * d * d * d;
          }
          for (double& v : out) v *= inv;
        }
      },
      s.kind());
  return out;
}

double mean_of(const Source& s) {
  return std::visit(
      [](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, InModelSource>) {
          return k.mean.value;
        } else if constexpr (std::is_same_v<T, PointMassSource>) {
          return k.value;
        } else if constexpr (std::is_same_v<T, FiniteSupportSource>) {
          double m = 0.0;
          for (std::size_t i = 0; i < k.values.size(); ++i) m += k.probs[i] * k.values[i];
          return m;
        } else if constexpr (std::is_same_v<T, MixtureSource>) {
          double m = 0.0;
          for (std::size_t i = 0; i < k.components.size(); ++i) {
            m += k.weights[i] * mean_of(k.components[i]);
          }
          return m;
        } else {
          double m = 0.0;
          for (double x : k.data) m += x;
          return m / static_cast<double>(k.data.size());
        }
      },
      s.kind());
}

std::optional<unsigned> effective_order(const Source& s) {
  std::optional<unsigned> order = s.declared_moment_order();
  if (const auto* mix = std::get_if<MixtureSource>(&s.kind())) {
    for (const auto& c : mix->components) {
      if (auto inner = effective_order(c)) order = order ? std::min(*order, *inner) : *inner;
    }
  }
  return order;
}

void require_finite_value(double v, const char* what) {
  if (!std::isfinite(v)) throw ConfigError(std::string(what) + " must be finite");
}

}  // namespace

// ---------------------------------------------------------------------------
// Construction

Source Source::in_model(const FamilySpec& f, double mean) {
  return Source(InModelSource{f, f.mean(mean)});
}

Source Source::point_mass(double value) {
  require_finite_value(value, "point mass location");
  return Source(PointMassSource{value});
}

Source Source::finite_support(std::vector<double> values, std::vector<double> probs) {
  if (values.size() != probs.size()) {
    throw ConfigError("finite support needs one probability per value");
  }
  for (double v : values) require_finite_value(v, "support value");
  auto cumulative = checked_cumulative(probs, "finite support probabilities");
  return Source(FiniteSupportSource{std::move(values), std::move(probs), std::move(cumulative)});
}

Source Source::uniform_integers(long lo, long hi) {
  if (hi < lo) throw ConfigError("uniform range is empty");
  const std::size_t n = static_cast<std::size_t>(hi - lo + 1);
  std::vector<double> values(n);
  std::vector<double> probs(n, 1.0 / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) values[i] = static_cast<double>(lo + static_cast<long>(i));
  return finite_support(std::move(values), std::move(probs));
}

Source Source::mixture(std::vector<double> weights, std::vector<Source> components) {
  if (weights.size() != components.size()) {
    throw ConfigError("mixture needs one weight per component");
  }
  auto cumulative = checked_cumulative(weights, "mixture weights");
  return Source(MixtureSource{std::move(weights), std::move(components), std::move(cumulative)});
}

Source Source::empirical(std::vector<double> data, std::string origin) {
  if (data.empty()) throw ConfigError("empirical source needs at least one value");
  for (double v : data) require_finite_value(v, "empirical value");
  return Source(EmpiricalSource{std::move(data), std::move(origin)});
}

Source Source::with_moment_order(unsigned k) const {
  if (k == 0) throw ConfigError("a source must at least have a finite mean (order >= 1)");
  Source copy = *this;
  copy.moment_order_ = k;
  return copy;
}

bool Source::is_degenerate() const {
  return std::visit(
      [](const auto& k) -> bool {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, PointMassSource>) {
          return true;
        } else if constexpr (std::is_same_v<T, InModelSource>) {
          return false;
        } else if constexpr (std::is_same_v<T, FiniteSupportSource>) {
          std::size_t atoms = 0;
          for (double p : k.probs) atoms += p > 0.0;
          return atoms == 1;
        } else if constexpr (std::is_same_v<T, MixtureSource>) {
          const double m = mean_of(k.components.front());
          for (std::size_t i = 0; i < k.components.size(); ++i) {
            if (k.weights[i] == 0.0) continue;
            if (!k.components[i].is_degenerate() || mean_of(k.components[i]) != m) return false;
          }
          return true;
        } else {
          return std::all_of(k.data.begin(), k.data.end(),
                             [&](double x) { return x == k.data.front(); });
        }
      },
      kind_);
}

std::string Source::describe() const {
  std::string text = std::visit(
      [](const auto& k) -> std::string {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, InModelSource>) {
          return "inmodel:" + k.family.name() + "@" + format_exact(k.mean.value);
        } else if constexpr (std::is_same_v<T, PointMassSource>) {
          return "point:" + format_exact(k.value);
        } else if constexpr (std::is_same_v<T, FiniteSupportSource>) {
          std::string out = "finite:";
          for (std::size_t i = 0; i < k.values.size(); ++i) {
            if (i) out += ',';
            out += format_exact(k.values[i]) + "=" + format_exact(k.probs[i]);
          }
          return out;
        } else if constexpr (std::is_same_v<T, MixtureSource>) {
          std::string out = "mixture:";
          for (std::size_t i = 0; i < k.components.size(); ++i) {
            if (i) out += ';';
            out += format_exact(k.weights[i]) + "*" + k.components[i].describe();
          }
          return out;
        } else {
          if (!k.origin.empty()) return "file:" + k.origin;
          return "empirical(n=" + std::to_string(k.data.size()) + ")";
        }
      },
      kind_);
  if (moment_order_) text += "#" + std::to_string(*moment_order_);
  return text;
}

// ---------------------------------------------------------------------------
// Sampling

double Source::draw(Engine& engine) const {
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, InModelSource>) {
          FamilySampler sampler(k.family, k.mean);
          return sampler(engine);
        } else if constexpr (std::is_same_v<T, PointMassSource>) {
          return k.value;
        } else if constexpr (std::is_same_v<T, FiniteSupportSource>) {
          return k.values[pick(k.cumulative, uniform01(engine))];
        } else if constexpr (std::is_same_v<T, MixtureSource>) {
          return k.components[pick(k.cumulative, uniform01(engine))].draw(engine);
        } else {
          return k.data[std::uniform_int_distribution<std::size_t>(0, k.data.size() - 1)(engine)];
        }
      },
      kind_);
}

std::vector<double> sample_iid(const Source& s, std::size_t n, std::uint64_t seed,
                               std::string_view stream, std::uint64_t index) {
  RngStream rng(seed, stream, index);
  std::vector<double> out;
  out.reserve(n);
  if (const auto* in = std::get_if<InModelSource>(&s.kind())) {
    FamilySampler sampler(in->family, in->mean);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sampler(rng.engine()));
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) out.push_back(s.draw(rng.engine()));
  return out;
}

// ---------------------------------------------------------------------------
// Moments

MomentReport moments(const Source& s) {
  MomentReport r;
  r.mean = mean_of(s);
  const auto central = moments_about(s, r.mean);
  r.variance = std::max(0.0, central[1]);
  r.third_central = central[2];
  r.fourth_central = std::max(central[3], r.variance * r.variance);
  if (s.is_degenerate()) {
    r.variance = 0.0;
    r.third_central = 0.0;
    r.fourth_central = 0.0;
  }
  r.highest_finite_moment = effective_order(s);
  if (r.highest_finite_moment) {
    const unsigned k = *r.highest_finite_moment;
    if (k < 2) r.variance = kInf;
    if (k < 3) r.third_central = std::numeric_limits<double>::quiet_NaN();
    if (k < 4) r.fourth_central = kInf;
  }
  return r;
}

MeanParam optimal_mean(const Source& s, const FamilySpec& f) {
  const double m = mean_of(s);
  if (!f.mean_domain().contains(m)) {
    throw DomainError("KL projection undefined: source mean " + format_exact(m) +
                      " is not strictly inside the mean domain of " + f.name());
  }
  return MeanParam{m};
}

double theoretical_c(const Source& s, const FamilySpec& f) {
  const MeanParam star = optimal_mean(s, f);
  const MomentReport m = moments(s);
  if (!std::isfinite(m.variance)) {
    throw DomainError("source variance is infinite; the redundancy slope is undefined");
  }
  return m.variance / variance_at(f, star);
}

// ---------------------------------------------------------------------------
// Parsing

std::vector<double> read_values(std::istream& in, std::string_view origin) {
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    while (!view.empty() && std::isspace(static_cast<unsigned char>(view.front()))) {
      view.remove_prefix(1);
    }
    while (!view.empty() && std::isspace(static_cast<unsigned char>(view.back()))) {
      view.remove_suffix(1);
    }
    if (view.empty() || view.front() == '#') continue;
    double v = 0.0;
    if (!parse_real(view, v) || !std::isfinite(v)) {
      throw ParseError(std::string(origin) + ":" + std::to_string(line_no) +
                       ": cannot parse '" + std::string(view) + "' as a number");
    }
    values.push_back(v);
  }
  return values;
}

Source load_empirical(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open data file " + path.string());
  auto values = read_values(in, path.string());
  if (values.empty()) throw ParseError("data file " + path.string() + " contains no values");
  return Source::empirical(std::move(values), path.string());
}

namespace {

double parse_number(std::string_view text, const std::string& context) {
  double v = 0.0;
  if (!parse_real(text, v)) {
    throw ParseError("cannot parse '" + std::string(text) + "' as a number in source '" +
                     context + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

Source parse_plain_source(const std::string& text, bool allow_mixture) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ParseError("source '" + text + "' has no kind prefix");
  const std::string kind = text.substr(0, colon);
  const std::string body = text.substr(colon + 1);
  if (kind == "point") return Source::point_mass(parse_number(body, text));
  if (kind == "finite") {
    std::vector<double> values;
    std::vector<double> probs;
    for (auto item : split(body, ',')) {
      auto eq = item.find('=');
      if (eq == std::string_view::npos) {
        throw ParseError("finite source entries look like VALUE=PROB, got '" +
                         std::string(item) + "'");
      }
      values.push_back(parse_number(item.substr(0, eq), text));
      probs.push_back(parse_number(item.substr(eq + 1), text));
    }
    return Source::finite_support(std::move(values), std::move(probs));
  }
  if (kind == "uniform") {
    auto dots = body.find("..");
    if (dots == std::string::npos) throw ParseError("uniform source looks like uniform:A..B");
    const double lo = parse_number(std::string_view(body).substr(0, dots), text);
    const double hi = parse_number(std::string_view(body).substr(dots + 2), text);
    if (lo != std::floor(lo) || hi != std::floor(hi)) {
      throw ParseError("uniform bounds must be integers in '" + text + "'");
    }
    return Source::uniform_integers(static_cast<long>(lo), static_cast<long>(hi));
  }
  if (kind == "inmodel") {
    auto at = body.rfind('@');
    if (at == std::string::npos) throw ParseError("in-model source looks like inmodel:FAMILY@MEAN");
    return Source::in_model(parse_family(body.substr(0, at)),
                            parse_number(std::string_view(body).substr(at + 1), text));
  }
  if (kind == "file") return load_empirical(body);
  if (kind == "mixture") {
    if (!allow_mixture) throw ParseError("nested mixtures are not supported on the command line");
    std::vector<double> weights;
    std::vector<Source> components;
    for (auto item : split(body, ';')) {
      auto star = item.find('*');
      if (star == std::string_view::npos) {
        throw ParseError("mixture components look like WEIGHT*SOURCE, got '" +
                         std::string(item) + "'");
      }
      weights.push_back(parse_number(item.substr(0, star), text));
      components.push_back(parse_plain_source(std::string(item.substr(star + 1)), false));
    }
    return Source::mixture(std::move(weights), std::move(components));
  }
  throw ParseError("unknown source kind '" + kind + "'");
}

}  // namespace

Source parse_source(const std::string& text) {
  const auto hash = text.rfind('#');
  if (hash != std::string::npos && text.rfind(':') < hash) {
    const double k = parse_number(std::string_view(text).substr(hash + 1), text);
    if (k < 1.0 || k != std::floor(k)) throw ParseError("moment order must be a positive integer");
    return parse_plain_source(text.substr(0, hash), true)
        .with_moment_order(static_cast<unsigned>(k));
  }
  return parse_plain_source(text, true);
}

}  // namespace preq
