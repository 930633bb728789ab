#include "preq/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <thread>

#include "preq/coder.hpp"
#include "preq/codes.hpp"
#include "preq/error.hpp"
#include "preq/expfam.hpp"
#include "preq/format.hpp"
#include "preq/lab.hpp"
#include "preq/sources.hpp"

namespace preq::cli {

namespace {

using Json = nlohmann::ordered_json;

// Malformed command line: reported with exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

FamilySpec family_arg(const std::string& text) {
  try {
    return parse_family(text);
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  }
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::uint64_t parse_count(const std::string& text) {
  std::string t = text;
  t.erase(std::remove(t.begin(), t.end(), ' '), t.end());
  if (t.rfind("2^", 0) == 0) {
    const std::uint64_t e = parse_count(t.substr(2));
    if (e > 62) throw UsageError("grid exponent too large: " + text);
    return std::uint64_t{1} << e;
  }
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || end != t.data() + t.size()) {
    throw UsageError("not a count: '" + text + "'");
  }
  return v;
}

// Copies every key of a --config JSON object into the argument list unless
// the same flag is already present, so explicit flags win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path) return args;
  std::ifstream in(*path);
  if (!in) throw Error("cannot open config file " + *path);
  Json config;
  try {
    config = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(*path + ": " + e.what());
  }
  if (!config.is_object()) throw ParseError(*path + ": config must be a JSON object");
  std::vector<std::string> out = args;
  for (const auto& [key, value] : config.items()) {
    if (key == "command" || key == "tool") continue;
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (given) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back(flag);
      continue;
    }
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_number_unsigned()) {
      text = std::to_string(value.get<std::uint64_t>());
    } else if (value.is_number_integer()) {
      text = std::to_string(value.get<std::int64_t>());
    } else if (value.is_number_float()) {
      text = format_exact(value.get<double>());
    } else if (value.is_array()) {
      for (const auto& item : value) {
        if (!text.empty()) text += ",";
        text += item.is_string() ? item.get<std::string>() : item.dump();
      }
    } else if (value.is_null()) {
      continue;
    } else {
      throw ParseError(*path + ": unsupported value for key '" + key + "'");
    }
    out.push_back(flag);
    out.push_back(text);
  }
  return out;
}

// Hyperparameters shared by every command that builds a code.
struct CodeOptions {
  std::string code = "plugin";
  std::optional<double> x0;
  std::optional<double> n0;
  std::optional<std::size_t> skip_first;
  std::optional<double> prior_a;
  std::optional<double> prior_b;
  std::optional<double> prior_shape;
  std::optional<double> prior_rate;
  std::optional<double> grid_lo;
  std::optional<double> grid_hi;
  std::optional<double> grid_scale;

  void attach(CLI::App* app) {
    app->add_option("--code", code, "plugin, bayes, nml or two-part")->capture_default_str();
    app->add_option("--x0", x0, "plug-in fake outcome (default: family anchor)");
    app->add_option("--n0", n0, "plug-in fake outcome weight (default 1)");
    app->add_option("--skip-first", skip_first,
                    "plug-in startup variant: fallback code for the first M outcomes");
    app->add_option("--prior-a", prior_a, "Beta prior a");
    app->add_option("--prior-b", prior_b, "Beta prior b");
    app->add_option("--prior-shape", prior_shape, "Gamma prior shape");
    app->add_option("--prior-rate", prior_rate, "Gamma prior rate");
    app->add_option("--grid-lo", grid_lo, "two-part grid lower end");
    app->add_option("--grid-hi", grid_hi, "two-part grid upper end");
    app->add_option("--grid-scale", grid_scale, "two-part grid spacing scale / sqrt(n)");
  }

  CodeSpec build(const FamilySpec& f) const {
    CodeId id;
    if (code == "plugin") {
      id = CodeId::Plugin;
    } else if (code == "bayes") {
      id = CodeId::Bayes;
    } else if (code == "nml") {
      id = CodeId::Nml;
    } else if (code == "two-part" || code == "two_part") {
      id = CodeId::TwoPart;
    } else {
      throw UsageError("unknown code '" + code + "' (expected plugin, bayes, nml or two-part)");
    }
    CodeSpec spec = default_code(id, f);
    if (auto* p = std::get_if<PluginCode>(&spec)) {
      if (skip_first) {
        p->config = PluginConfig::skip_first(f, *skip_first);
      } else {
        p->config = PluginConfig::fake_outcome(x0.value_or(f.default_anchor()), n0.value_or(1.0));
      }
    } else if (auto* b = std::get_if<BayesCode>(&spec)) {
      if (auto* beta = std::get_if<BetaPrior>(&b->prior)) {
        beta->a = prior_a.value_or(beta->a);
        beta->b = prior_b.value_or(beta->b);
      } else if (auto* gamma = std::get_if<GammaPrior>(&b->prior)) {
        gamma->shape = prior_shape.value_or(gamma->shape);
        gamma->rate = prior_rate.value_or(gamma->rate);
      }
    } else if (auto* t = std::get_if<TwoPartCode>(&spec)) {
      auto& grid = std::get<UniformGrid>(t->grid);
      grid.lo = grid_lo.value_or(grid.lo);
      grid.hi = grid_hi.value_or(grid.hi);
      grid.scale = grid_scale.value_or(grid.scale);
    }
    return spec;
  }

  void record(Json& config, const CodeSpec& spec) const {
    config["code"] = code_name(code_id(spec));
    if (const auto* p = std::get_if<PluginCode>(&spec)) {
      if (const auto* skip = std::get_if<SkipFirst>(&p->config.variant)) {
        config["skip_first"] = skip->m;
      } else {
        config["x0"] = p->config.x0;
        config["n0"] = p->config.n0;
      }
    } else if (const auto* b = std::get_if<BayesCode>(&spec)) {
      if (const auto* beta = std::get_if<BetaPrior>(&b->prior)) {
        config["prior_a"] = beta->a;
        config["prior_b"] = beta->b;
      } else if (const auto* gamma = std::get_if<GammaPrior>(&b->prior)) {
        config["prior_shape"] = gamma->shape;
        config["prior_rate"] = gamma->rate;
      }
    } else if (const auto* t = std::get_if<TwoPartCode>(&spec)) {
      const auto& grid = std::get<UniformGrid>(t->grid);
      config["grid_lo"] = grid.lo;
      config["grid_hi"] = grid.hi;
      config["grid_scale"] = grid.scale;
    }
  }
};

// Writes to --out, or to stdout when no path (or "-") is given.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : path_(path) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
    } else {
      file_.open(path, std::ios::binary);
      if (!file_) throw Error("cannot open output file " + path);
      stream_ = &file_;
    }
  }

  std::ostream& stream() { return *stream_; }
  bool to_file() const { return !(path_.empty() || path_ == "-"); }

 private:
  std::string path_;
  std::ofstream file_;
  std::ostream* stream_;
};

void write_metadata(std::ostream& os, const Json& config,
                    const std::vector<std::pair<std::string, std::string>>& extra) {
  os << "# preqcode " << kToolVersion << "\n";
  os << "# config: " << config.dump() << "\n";
  for (const auto& [key, value] : extra) os << "# " << key << ": " << value << "\n";
}

Json grid_json(const std::vector<std::uint64_t>& grid) {
  Json a = Json::array();
  for (auto n : grid) a.push_back(n);
  return a;
}

std::string stream_note(std::uint64_t seed) {
  return "replicate r draws from stream (seed=" + std::to_string(seed) +
         ", label=data, index=r); all codes share these streams";
}

std::string describe_domain(const Interval& d) {
  auto end = [](double v) {
    if (std::isinf(v)) return std::string(v < 0 ? "-inf" : "inf");
    return format_short(v);
  };
  return "(" + end(d.lo) + ", " + end(d.hi) + ")";
}

std::string describe_alphabet(const FamilySpec& f) {
  switch (f.alphabet_kind()) {
    case AlphabetKind::Finite: {
      std::string s = "finite {";
      const auto values = f.finite_alphabet();
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += ",";
        s += format_short(values[i]);
      }
      return s + "}";
    }
    case AlphabetKind::Countable:
      return "countable {0,1,2,...}";
    case AlphabetKind::Continuous:
      return "continuous " + describe_domain(Interval{f.statistic_min(), f.statistic_max()});
  }
  return "?";
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open input file " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}


// Reads the n / mean_gap_nats / stderr_nats columns of a curve CSV.
RedundancyCurve read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open input file " + path);
  RedundancyCurve curve;
  std::string line;
  std::vector<std::string> header;
  std::size_t line_no = 0;
  int col_n = -1, col_gap = -1, col_se = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream row(line);
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (header.empty()) {
      header = cells;
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "n") col_n = static_cast<int>(i);
        if (header[i] == "mean_gap_nats") col_gap = static_cast<int>(i);
        if (header[i] == "stderr_nats") col_se = static_cast<int>(i);
      }
      if (col_n < 0 || col_gap < 0 || col_se < 0) {
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": expected columns n, mean_gap_nats, stderr_nats");
      }
      continue;
    }
    if (cells.size() != header.size()) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": wrong number of columns");
    }
    double n = 0, gap = 0, se = 0;
    const bool ok_se = parse_real(cells[col_se], se) || cells[col_se] == "nan";
    if (!parse_real(cells[col_n], n) || !parse_real(cells[col_gap], gap) || !ok_se) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": malformed number");
    }
    if (cells[col_se] == "nan") se = std::numeric_limits<double>::quiet_NaN();
    curve.n_grid.push_back(static_cast<std::uint64_t>(n));
    curve.mean_gap.push_back(gap);
    curve.std_error.push_back(se);
  }
  if (curve.n_grid.empty()) throw ParseError(path + ": no data rows");
  return curve;
}

std::string csv_real(double v) { return std::isnan(v) ? "nan" : format_exact(v); }

}  // namespace

std::vector<std::uint64_t> parse_n_grid(const std::string& text) {
  std::vector<std::uint64_t> grid;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const std::uint64_t lo = parse_count(text.substr(0, dots));
    const std::uint64_t hi = parse_count(text.substr(dots + 2));
    if (lo == 0 || hi < lo) throw UsageError("grid range must satisfy 0 < lo <= hi: " + text);
    for (std::uint64_t n = lo; n <= hi; n *= 2) {
      grid.push_back(n);
      if (n > hi / 2) break;
    }
  } else {
    for (const auto& part : split(text, ',')) grid.push_back(parse_count(part));
  }
  if (grid.empty()) throw UsageError("empty n grid");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (grid[k] <= grid[k - 1]) throw UsageError("n grid must be strictly increasing: " + text);
  }
  return grid;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Prequential plug-in, Bayes, NML and two-part codes for exponential families",
               "preqcode"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kToolVersion);
  std::string config_path;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--config", config_path, "JSON file with default flag values (flags win)");
  app.add_option("--threads", threads, "worker threads; results do not depend on it")
      ->check(CLI::PositiveNumber);

  // families list
  auto* families = app.add_subcommand("families", "supported model families");
  families->require_subcommand(1);
  auto* families_list = families->add_subcommand("list", "one row per supported family");

  // kl
  auto* kl = app.add_subcommand("kl", "KL divergence D(M_from || M_to) in nats");
  std::string family_text;
  double mu_from = 0, mu_to = 0;
  kl->add_option("--family", family_text)->required();
  kl->add_option("--from", mu_from)->required();
  kl->add_option("--to", mu_to)->required();

  // condition-check
  auto* condition = app.add_subcommand("condition-check", "moment condition for a source");
  std::string source_text;
  condition->add_option("--family", family_text)->required();
  condition->add_option("--source", source_text)->required();

  // redundancy
  auto* redundancy = app.add_subcommand("redundancy", "Monte Carlo relative redundancy curve");
  CodeOptions code_options;
  std::string grid_text = "2^6..2^14";
  std::size_t replicates = 1000;
  std::uint64_t seed = 1;
  std::string out_path;
  bool override_condition = false;
  redundancy->add_option("--family", family_text)->required();
  redundancy->add_option("--source", source_text)->required();
  code_options.attach(redundancy);
  redundancy->add_option("--n-grid", grid_text)->capture_default_str();
  redundancy->add_option("--replicates", replicates)->capture_default_str();
  redundancy->add_option("--seed", seed)->capture_default_str();
  redundancy->add_option("--out", out_path, "CSV output (default stdout)");
  redundancy->add_flag("--override-condition", override_condition,
                       "run even if the source fails the moment condition");

  // fit-c
  auto* fit = app.add_subcommand("fit-c", "slope of a redundancy curve against (1/2) ln n");
  std::string in_path;
  std::uint64_t n_min = kDefaultFitMinN;
  fit->add_option("--in", in_path)->required();
  fit->add_option("--n-min", n_min)->capture_default_str();

  // dn
  auto* dn = app.add_subcommand("dn", "gap d(n) between redundancy and expected regret");
  dn->add_option("--family", family_text)->required();
  dn->add_option("--source", source_text)->required();
  dn->add_option("--n-grid", grid_text)->capture_default_str();
  dn->add_option("--replicates", replicates)->capture_default_str();
  dn->add_option("--seed", seed)->capture_default_str();
  dn->add_option("--out", out_path, "CSV output (default stdout)");

  // select-model
  auto* select = app.add_subcommand("select-model", "model selection error rates");
  std::string true_family_text;
  double mu_true = 0;
  std::string selection_codes = "plugin,bayes,nml,two-part";
  std::string candidates_text = "poisson,geometric";
  std::string select_grid = "2^2..2^8";
  select->add_option("--true-family", true_family_text)->required();
  select->add_option("--mu", mu_true)->required();
  select->add_option("--code", selection_codes, "comma-separated codes")->capture_default_str();
  select->add_option("--candidates", candidates_text)->capture_default_str();
  select->add_option("--n-grid", select_grid)->capture_default_str();
  select->add_option("--replicates", replicates)->capture_default_str();
  select->add_option("--seed", seed)->capture_default_str();
  select->add_option("--out", out_path, "CSV output (default stdout)");

  // compress / decompress
  auto* compress = app.add_subcommand("compress", "arithmetic-code a data file");
  std::optional<double> x0, n0;
  unsigned precision = 32;
  unsigned tail_exp = kDefaultTailExponent;
  compress->add_option("--family", family_text)->required();
  compress->add_option("--x0", x0, "fake outcome (default: family anchor)");
  compress->add_option("--n0", n0, "fake outcome weight (default 1)");
  compress->add_option("--precision", precision)->capture_default_str();
  compress->add_option("--tail-exp", tail_exp, "truncate countable tails below 2^-tail_exp")
      ->capture_default_str();
  compress->add_option("--in", in_path)->required();
  compress->add_option("--out", out_path)->required();

  auto* decompress = app.add_subcommand("decompress", "decode a PQC1 bitstream");
  decompress->add_option("--in", in_path)->required();
  decompress->add_option("--out", out_path, "one value per line (default stdout)");

  try {
    auto args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  const RunOptions options{threads, override_condition};
  try {
    if (families_list->parsed()) {
      for (const auto& f : supported_families()) {
        out << f.name() << "\t" << describe_domain(f.mean_domain()) << "\t"
            << describe_alphabet(f) << "\n";
      }
    } else if (kl->parsed()) {
      const FamilySpec f = family_arg(family_text);
      out << format_short(kl_divergence(f, f.mean(mu_from), f.mean(mu_to))) << "\n";
    } else if (condition->parsed()) {
      const FamilySpec f = family_arg(family_text);
      const Source s = parse_source(source_text);
      const auto verdict = check_condition1(f, moments(s));
      out << (verdict ? "pass" : "fail") << ": " << verdict.reason << "\n";
    } else if (redundancy->parsed()) {
      const FamilySpec f = family_arg(family_text);
      const auto grid = parse_n_grid(grid_text);
      const CodeSpec code = code_options.build(f);
      const Source s = parse_source(source_text);
      const auto curve = redundancy_curve(s, f, code, grid, replicates, seed, options);
      Json config;
      config["command"] = "redundancy";
      config["family"] = f.name();
      config["source"] = source_text;
      code_options.record(config, code);
      config["n_grid"] = grid_json(grid);
      config["replicates"] = replicates;
      config["seed"] = seed;
      if (override_condition) config["override_condition"] = true;
      config["out"] = out_path;
      Output o(out_path, out);
      write_metadata(o.stream(), config,
                     {{"code", curve.code_description},
                      {"source", curve.source_description},
                      {"theoretical_c", csv_real(theoretical_c(s, f))},
                      {"condition", std::string(curve.condition_overridden ? "overridden: " : "pass: ") +
                                        curve.condition_reason},
                      {"streams", stream_note(seed)}});
      o.stream() << "n,mean_gap_nats,stderr_nats,replicates\n";
      for (std::size_t k = 0; k < grid.size(); ++k) {
        o.stream() << grid[k] << "," << csv_real(curve.mean_gap[k]) << ","
                   << csv_real(curve.std_error[k]) << "," << curve.replicates << "\n";
      }
      if (o.to_file()) err << "wrote " << grid.size() << " rows to " << out_path << "\n";
    } else if (fit->parsed()) {
      const auto curve = read_curve_csv(in_path);
      const auto slope = fit_c(curve, n_min);
      out << format_short(slope.c_hat) << "\n";
      err << "c_hat " << format_short(slope.c_hat) << " stderr " << format_short(slope.c_stderr)
          << " intercept " << format_short(slope.intercept) << " n_min_used "
          << slope.n_min_used << " points " << slope.points << "\n";
    } else if (dn->parsed()) {
      const FamilySpec f = family_arg(family_text);
      const auto grid = parse_n_grid(grid_text);
      const Source s = parse_source(source_text);
      const auto curve = dn_curve(s, f, grid, replicates, seed, options);
      Json config;
      config["command"] = "dn";
      config["family"] = f.name();
      config["source"] = source_text;
      config["n_grid"] = grid_json(grid);
      config["replicates"] = replicates;
      config["seed"] = seed;
      config["out"] = out_path;
      Output o(out_path, out);
      write_metadata(o.stream(), config,
                     {{"source", s.describe()},
                      {"limit_prediction", csv_real(curve.limit_prediction)},
                      {"streams", stream_note(seed)}});
      o.stream() << "n,d_hat_nats,stderr_nats,replicates\n";
      for (std::size_t k = 0; k < grid.size(); ++k) {
        o.stream() << grid[k] << "," << csv_real(curve.d_hat[k]) << ","
                   << csv_real(curve.std_error[k]) << "," << curve.replicates << "\n";
      }
      if (o.to_file()) err << "wrote " << grid.size() << " rows to " << out_path << "\n";
    } else if (select->parsed()) {
      const FamilySpec truth = family_arg(true_family_text);
      std::vector<FamilySpec> candidates;
      for (const auto& c : split(candidates_text, ',')) candidates.push_back(family_arg(c));
      std::vector<SelectionCode> codes;
      for (const auto& c : split(selection_codes, ',')) {
        try {
          codes.push_back(parse_selection_code(c));
        } catch (const ParseError& e) {
          throw UsageError(e.what());
        }
      }
      const auto grid = parse_n_grid(select_grid);
      const auto table =
          model_selection_experiment(truth, mu_true, candidates, codes, grid, replicates, seed, options);
      Json config;
      config["command"] = "select-model";
      config["true_family"] = truth.name();
      config["mu"] = mu_true;
      Json code_list = Json::array();
      for (auto c : codes) code_list.push_back(selection_code_name(c));
      config["code"] = code_list;
      Json candidate_list = Json::array();
      for (const auto& c : candidates) candidate_list.push_back(c.name());
      config["candidates"] = candidate_list;
      config["n_grid"] = grid_json(grid);
      config["replicates"] = replicates;
      config["seed"] = seed;
      config["out"] = out_path;
      Output o(out_path, out);
      write_metadata(o.stream(), config,
                     {{"ties", "broken toward the candidate whose name sorts first"},
                      {"streams", stream_note(seed)}});
      o.stream() << "n,code,error_rate,tie_rate,replicates\n";
      for (const auto& cell : table.cells) {
        o.stream() << cell.n << "," << selection_code_name(cell.code) << ","
                   << (cell.defined ? format_exact(cell.error_rate) : "undefined") << ","
                   << (cell.defined ? format_exact(cell.tie_rate) : "undefined") << ","
                   << cell.replicates << "\n";
      }
      if (o.to_file()) err << "wrote " << table.cells.size() << " rows to " << out_path << "\n";
    } else if (compress->parsed()) {
      const FamilySpec f = family_arg(family_text);
      if (!f.is_discrete()) throw UsageError("compress needs a discrete family");
      std::ifstream in(in_path);
      if (!in) throw Error("cannot open input file " + in_path);
      const auto values = read_values(in, in_path);
      const auto config = PluginConfig::fake_outcome(x0.value_or(f.default_anchor()), n0.value_or(1.0));
      const auto stream = encode(f, config, values, precision, tail_exp);
      const auto bytes = serialize(stream);
      std::ofstream o(out_path, std::ios::binary);
      if (!o) throw Error("cannot open output file " + out_path);
      o.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
      const double ideal = plugin_codelength(f, config, values).total / std::log(2.0);
      err << values.size() << " symbols, payload " << stream.payload.bits << " bits (ideal "
          << format_short(ideal) << "), " << bytes.size() << " bytes written\n";
    } else if (decompress->parsed()) {
      const auto bytes = read_bytes(in_path);
      const auto values = decode(parse_bitstream(bytes));
      Output o(out_path, out);
      for (double v : values) o.stream() << format_exact(v) << "\n";
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace preq::cli
