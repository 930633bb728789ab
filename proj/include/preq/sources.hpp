#pragma once

// Data-generating distributions over the sufficient statistic, including
// distributions that lie outside any model family.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "preq/expfam.hpp"
#include "preq/moments.hpp"
#include "preq/rng.hpp"

namespace preq {

class Source;

struct InModelSource {
  FamilySpec family;
  MeanParam mean;
};

struct PointMassSource {
  double value;
};

struct FiniteSupportSource {
  std::vector<double> values;
  std::vector<double> probs;
  std::vector<double> cumulative;
};

struct MixtureSource {
  std::vector<double> weights;
  std::vector<Source> components;
  std::vector<double> cumulative;
};

struct EmpiricalSource {
  std::vector<double> data;
  // File the data came from, if any.
  std::string origin;
};

class Source {
 public:
  using Kind = std::variant<InModelSource, PointMassSource, FiniteSupportSource, MixtureSource,
                            EmpiricalSource>;

  static Source in_model(const FamilySpec& f, double mean);
  static Source point_mass(double value);
  // Probabilities must be nonnegative and sum to 1 within 1e-12.
  static Source finite_support(std::vector<double> values, std::vector<double> probs);
  // Uniform over the integers lo..hi inclusive.
  static Source uniform_integers(long lo, long hi);
  // Weights must be nonnegative and sum to 1 within 1e-12.
  static Source mixture(std::vector<double> weights, std::vector<Source> components);
  static Source empirical(std::vector<double> data, std::string origin = {});

  // Caps the number of finite moments (e.g. to describe a heavy-tailed
  // source for condition checks). k >= 1.
  Source with_moment_order(unsigned k) const;

  const Kind& kind() const { return kind_; }
  std::optional<unsigned> declared_moment_order() const { return moment_order_; }
  // True when the source is almost surely constant.
  bool is_degenerate() const;
  // Human-readable description, stable across runs.
  std::string describe() const;

  // One draw.
  double draw(Engine& engine) const;

 private:
  explicit Source(Kind kind) : kind_(std::move(kind)) {}

  Kind kind_;
  std::optional<unsigned> moment_order_;
};

// n i.i.d. draws from the stream (seed, stream, index).
std::vector<double> sample_iid(const Source& s, std::size_t n, std::uint64_t seed,
                               std::string_view stream, std::uint64_t index = 0);

MomentReport moments(const Source& s);

// The KL projection of the source onto the family: E_P[X], which must lie
// strictly inside the mean domain. Throws DomainError otherwise.
MeanParam optimal_mean(const Source& s, const FamilySpec& f);

// var_P X / var_{M_mu*} X.
double theoretical_c(const Source& s, const FamilySpec& f);

// Reads one number per line; blank lines and '#' comments are skipped.
// Throws ParseError citing the line number.
Source load_empirical(const std::filesystem::path& path);
std::vector<double> read_values(std::istream& in, std::string_view origin);

// Source descriptions used on the command line:
//   point:X                       point mass
//   finite:V=P,V=P,...            finite support
//   uniform:A..B                  uniform over integers A..B
//   inmodel:FAMILY@MEAN           element of a family (family as in parse_family)
//   file:PATH                     empirical distribution of a data file
//   mixture:W*SRC;W*SRC;...       mixture (components may not be mixtures)
// Any form may end in "#K" to declare only K finite moments.
Source parse_source(const std::string& text);

}  // namespace preq
