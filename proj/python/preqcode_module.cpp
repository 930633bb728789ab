#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "preq/coder.hpp"
#include "preq/codes.hpp"
#include "preq/error.hpp"
#include "preq/expfam.hpp"
#include "preq/lab.hpp"
#include "preq/sources.hpp"

namespace py = pybind11;
using namespace preq;

namespace {

CodeSpec make_code(const FamilySpec& f, const std::string& code, std::optional<double> x0,
                   std::optional<double> n0) {
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
    throw ConfigError("unknown code '" + code + "'");
  }
  CodeSpec spec = default_code(id, f);
  if (auto* p = std::get_if<PluginCode>(&spec)) {
    p->config = PluginConfig::fake_outcome(x0.value_or(f.default_anchor()), n0.value_or(1.0));
  }
  return spec;
}

PluginConfig make_config(const FamilySpec& f, std::optional<double> x0, std::optional<double> n0) {
  return PluginConfig::fake_outcome(x0.value_or(f.default_anchor()), n0.value_or(1.0));
}

}  // namespace

PYBIND11_MODULE(_preqcode, m) {
  m.doc() = "Prequential plug-in, Bayes, NML and two-part codes for exponential families";

  static py::exception<Error> base(m, "PreqError", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<SupportError>(m, "SupportError", base.ptr());
  py::register_exception<UnsupportedError>(m, "UnsupportedError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<DecodeError>(m, "DecodeError", base.ptr());
  py::register_exception<ConditionError>(m, "ConditionError", base.ptr());
  py::register_exception<DiagnosticsError>(m, "DiagnosticsError", base.ptr());

  py::class_<FamilySpec>(m, "Family")
      .def_static("bernoulli", &FamilySpec::bernoulli)
      .def_static("binomial", &FamilySpec::binomial, py::arg("trials"))
      .def_static("poisson", &FamilySpec::poisson)
      .def_static("geometric", &FamilySpec::geometric)
      .def_static("exponential", &FamilySpec::exponential)
      .def_static("normal_fixed_variance", &FamilySpec::normal_fixed_variance, py::arg("variance"))
      .def_static("normal_fixed_mean", &FamilySpec::normal_fixed_mean)
      .def_static("parse", &parse_family)
      .def_property_readonly("name", &FamilySpec::name)
      .def_property_readonly("mean_domain",
                             [](const FamilySpec& f) {
                               const auto d = f.mean_domain();
                               return py::make_tuple(d.lo, d.hi);
                             })
      .def_property_readonly("is_discrete", &FamilySpec::is_discrete)
      .def_property_readonly("has_finite_alphabet", &FamilySpec::has_finite_alphabet)
      .def("__eq__", [](const FamilySpec& a, const FamilySpec& b) { return a == b; })
      .def("__repr__", [](const FamilySpec& f) { return "Family(" + f.name() + ")"; });

  m.def("supported_families", &supported_families);

  m.def("log_density", [](const FamilySpec& f, double mu, double x) {
    return log_density(f, f.mean(mu), x);
  });
  m.def("mean_to_natural", [](const FamilySpec& f, double mu) {
    return mean_to_natural(f, f.mean(mu)).value;
  });
  m.def("natural_to_mean", [](const FamilySpec& f, double eta) {
    return natural_to_mean(f, NaturalParam{eta}).value;
  });
  m.def("variance_at", [](const FamilySpec& f, double mu) { return variance_at(f, f.mean(mu)); });
  m.def("fisher_information",
        [](const FamilySpec& f, double mu) { return fisher_information(f, f.mean(mu)); });
  m.def("kl_divergence", [](const FamilySpec& f, double from, double to) {
    return kl_divergence(f, f.mean(from), f.mean(to));
  });
  m.def("kl_fourth_derivative", [](const FamilySpec& f, double star, double mu) {
    return kl_fourth_derivative(f, f.mean(star), f.mean(mu));
  });

  py::class_<Source>(m, "Source")
      .def_static("in_model", &Source::in_model, py::arg("family"), py::arg("mean"))
      .def_static("point_mass", &Source::point_mass)
      .def_static("finite_support", &Source::finite_support, py::arg("values"), py::arg("probs"))
      .def_static("uniform_integers", &Source::uniform_integers, py::arg("lo"), py::arg("hi"))
      .def_static("mixture", &Source::mixture, py::arg("weights"), py::arg("components"))
      .def_static("empirical", &Source::empirical, py::arg("data"), py::arg("origin") = "")
      .def_static("parse", &parse_source)
      .def_static("load", [](const std::string& path) { return load_empirical(path); })
      .def("with_moment_order", &Source::with_moment_order)
      .def_property_readonly("is_degenerate", &Source::is_degenerate)
      .def("__repr__", &Source::describe);

  m.def("sample_iid", &sample_iid, py::arg("source"), py::arg("n"), py::arg("seed"),
        py::arg("stream") = "sample", py::arg("index") = 0);
  m.def("moments", [](const Source& s) {
    const auto r = moments(s);
    py::dict d;
    d["mean"] = r.mean;
    d["variance"] = r.variance;
    d["third_central"] = r.third_central;
    d["fourth_central"] = r.fourth_central;
    d["highest_finite_moment"] = r.highest_finite_moment;
    return d;
  });
  m.def("optimal_mean", [](const Source& s, const FamilySpec& f) { return optimal_mean(s, f).value; });
  m.def("theoretical_c", &theoretical_c);
  m.def("check_condition", [](const FamilySpec& f, const Source& s) {
    const auto v = check_condition1(f, moments(s));
    return py::make_tuple(v.pass, v.reason);
  });

  m.def(
      "plugin_codelength",
      [](const FamilySpec& f, const std::vector<double>& seq, std::optional<double> x0,
         std::optional<double> n0) {
        const auto r = plugin_codelength(f, make_config(f, x0, n0), seq);
        return py::make_tuple(r.total, r.per_symbol);
      },
      py::arg("family"), py::arg("seq"), py::arg("x0") = py::none(), py::arg("n0") = py::none());
  m.def(
      "bayes_codelength",
      [](const FamilySpec& f, const std::vector<double>& seq, std::optional<double> a,
         std::optional<double> b) {
        ConjugatePrior prior = default_prior(f);
        if (auto* beta = std::get_if<BetaPrior>(&prior)) {
          beta->a = a.value_or(beta->a);
          beta->b = b.value_or(beta->b);
        } else if (auto* gamma = std::get_if<GammaPrior>(&prior)) {
          gamma->shape = a.value_or(gamma->shape);
          gamma->rate = b.value_or(gamma->rate);
        }
        const auto r = bayes_codelength(f, prior, seq);
        return py::make_tuple(r.total, r.per_symbol);
      },
      py::arg("family"), py::arg("seq"), py::arg("a") = py::none(), py::arg("b") = py::none());
  m.def("nml_codelength", [](const FamilySpec& f, const std::vector<double>& seq) {
    return nml_codelength(f, seq.size(), seq);
  });
  m.def("nml_log_normalizer", &nml_log_normalizer);
  m.def(
      "two_part_codelength",
      [](const FamilySpec& f, const std::vector<double>& seq,
         std::optional<std::vector<double>> grid) {
        if (grid) return two_part_codelength(f, seq, ExplicitGrid{*grid});
        return two_part_codelength(f, seq, default_two_part_grid(f));
      },
      py::arg("family"), py::arg("seq"), py::arg("grid") = py::none());
  m.def("oracle_codelength", [](const FamilySpec& f, double star, const std::vector<double>& seq) {
    return oracle_codelength(f, f.mean(star), seq);
  });
  m.def("ml_codelength",
        [](const FamilySpec& f, const std::vector<double>& seq) { return ml_codelength(f, seq); });

  m.def(
      "compress",
      [](const FamilySpec& f, const std::vector<double>& seq, std::optional<double> x0,
         std::optional<double> n0, unsigned precision) {
        const auto bytes = serialize(encode(f, make_config(f, x0, n0), seq, precision));
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      },
      py::arg("family"), py::arg("seq"), py::arg("x0") = py::none(), py::arg("n0") = py::none(),
      py::arg("precision") = 32);
  m.def("decompress", [](const py::bytes& data) {
    const std::string raw = data;
    const std::vector<std::uint8_t> bytes(raw.begin(), raw.end());
    return decode(parse_bitstream(bytes));
  });

  py::class_<RedundancyCurve>(m, "RedundancyCurve")
      .def_readonly("n_grid", &RedundancyCurve::n_grid)
      .def_readonly("mean_gap", &RedundancyCurve::mean_gap)
      .def_readonly("stderr", &RedundancyCurve::std_error)
      .def_readonly("replicates", &RedundancyCurve::replicates)
      .def_readonly("seed", &RedundancyCurve::seed)
      .def_readonly("code", &RedundancyCurve::code_description)
      .def_readonly("source", &RedundancyCurve::source_description)
      .def_readonly("family", &RedundancyCurve::family);

  py::class_<SlopeFit>(m, "SlopeFit")
      .def_readonly("c_hat", &SlopeFit::c_hat)
      .def_readonly("intercept", &SlopeFit::intercept)
      .def_readonly("c_stderr", &SlopeFit::c_stderr)
      .def_readonly("n_min_used", &SlopeFit::n_min_used);

  m.def(
      "redundancy_curve",
      [](const Source& s, const FamilySpec& f, const std::string& code,
         std::vector<std::uint64_t> n_grid, std::size_t replicates, std::uint64_t seed,
         std::optional<double> x0, std::optional<double> n0, unsigned threads, bool override) {
        if (n_grid.empty()) n_grid = default_n_grid();
        py::gil_scoped_release release;
        return redundancy_curve(s, f, make_code(f, code, x0, n0), n_grid, replicates, seed,
                                RunOptions{threads, override});
      },
      py::arg("source"), py::arg("family"), py::arg("code") = "plugin",
      py::arg("n_grid") = std::vector<std::uint64_t>{}, py::arg("replicates") = 100,
      py::arg("seed") = 1, py::arg("x0") = py::none(), py::arg("n0") = py::none(),
      py::arg("threads") = 1, py::arg("override_condition") = false);
  m.def("fit_c", &fit_c, py::arg("curve"), py::arg("n_min") = kDefaultFitMinN);

  m.def(
      "dn_curve",
      [](const Source& s, const FamilySpec& f, const std::vector<std::uint64_t>& n_grid,
         std::size_t replicates, std::uint64_t seed) {
        const auto c = dn_curve(s, f, n_grid, replicates, seed);
        py::dict d;
        d["n_grid"] = c.n_grid;
        d["d_hat"] = c.d_hat;
        d["stderr"] = c.std_error;
        d["limit_prediction"] = c.limit_prediction;
        return d;
      },
      py::arg("source"), py::arg("family"), py::arg("n_grid"), py::arg("replicates") = 100,
      py::arg("seed") = 1);

  m.def(
      "kl_decomposition_check",
      [](const Source& s, const FamilySpec& f, std::uint64_t n, std::size_t replicates,
         std::uint64_t seed, std::optional<double> x0, std::optional<double> n0) {
        const auto r = kl_decomposition_check(s, f, make_config(f, x0, n0), n, replicates, seed);
        py::dict d;
        d["lhs"] = r.lhs;
        d["rhs"] = r.rhs;
        d["diff_stderr"] = r.diff_stderr;
        d["agree"] = r.agree;
        return d;
      },
      py::arg("source"), py::arg("family"), py::arg("n"), py::arg("replicates") = 100,
      py::arg("seed") = 1, py::arg("x0") = py::none(), py::arg("n0") = py::none());

  m.def(
      "estimator_mse_curve",
      [](const Source& s, const FamilySpec& f, const std::vector<std::uint64_t>& n_grid,
         std::size_t replicates, std::uint64_t seed, std::optional<double> x0,
         std::optional<double> n0) {
        const auto c = estimator_mse_curve(s, f, make_config(f, x0, n0), n_grid, replicates, seed);
        py::dict d;
        d["n_grid"] = c.n_grid;
        d["mse"] = c.mse;
        d["stderr"] = c.std_error;
        d["scaled"] = c.scaled;
        return d;
      },
      py::arg("source"), py::arg("family"), py::arg("n_grid"), py::arg("replicates") = 100,
      py::arg("seed") = 1, py::arg("x0") = py::none(), py::arg("n0") = py::none());

  m.def(
      "model_selection",
      [](const FamilySpec& truth, double mu, const std::vector<FamilySpec>& candidates,
         const std::vector<std::string>& codes, const std::vector<std::uint64_t>& n_grid,
         std::size_t replicates, std::uint64_t seed) {
        std::vector<SelectionCode> parsed;
        for (const auto& c : codes) parsed.push_back(parse_selection_code(c));
        const auto table =
            model_selection_experiment(truth, mu, candidates, parsed, n_grid, replicates, seed);
        py::list rows;
        for (const auto& cell : table.cells) {
          py::dict d;
          d["n"] = cell.n;
          d["code"] = selection_code_name(cell.code);
          d["defined"] = cell.defined;
          d["error_rate"] = cell.error_rate;
          d["tie_rate"] = cell.tie_rate;
          d["replicates"] = cell.replicates;
          rows.append(d);
        }
        return rows;
      },
      py::arg("true_family"), py::arg("mu"), py::arg("candidates"), py::arg("codes"),
      py::arg("n_grid"), py::arg("replicates") = 100, py::arg("seed") = 1);
}
