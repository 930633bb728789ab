#pragma once

// Arithmetic coding of outcome sequences against sequential predictive
// distributions, plus the framed "PQC1" bitstream for the plug-in code.
//
// Framed layout (little-endian):
//   offset  size  field
//   0       4     magic "PQC1"
//   4       1     family id (FamilyId, discrete families only)
//   5       8     x0 (IEEE double)
//   13      8     n0 (IEEE double)
//   21      1     precision_bits (16..62)
//   22      8     n, number of coded symbols
//   30      1     truncation_tail_prob_exp
//   31      4     binomial trial count m (present only for Binomial)
//   ...           payload: arithmetic-coder bits, MSB first, zero padded

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "preq/codes.hpp"
#include "preq/expfam.hpp"

namespace preq {

inline constexpr unsigned kMinPrecisionBits = 16;
inline constexpr unsigned kMaxPrecisionBits = 62;
inline constexpr unsigned kDefaultTailExponent = 40;
// Bits written by the encoder's final flush.
inline constexpr unsigned kFlushBits = 32;

// Predictive distribution over outcomes given the past.
class SequentialModel {
 public:
  virtual ~SequentialModel() = default;
  virtual double log_prob(double x) const = 0;
  virtual void observe(double x) = 0;
  // Mean of the family member used for the next prediction, when the
  // prediction is a single member.
  virtual std::optional<MeanParam> member_mean() const { return std::nullopt; }
};

class PluginModel final : public SequentialModel {
 public:
  PluginModel(const FamilySpec& f, const PluginConfig& config) : predictor_(f, config) {}
  double log_prob(double x) const override { return -predictor_.codelength(x); }
  void observe(double x) override { predictor_.observe(x); }
  std::optional<MeanParam> member_mean() const override {
    if (predictor_.in_startup()) return std::nullopt;
    return predictor_.estimate();
  }

 private:
  PluginPredictor predictor_;
};

class BayesModel final : public SequentialModel {
 public:
  BayesModel(const FamilySpec& f, const ConjugatePrior& prior) : predictor_(f, prior) {}
  double log_prob(double x) const override { return -predictor_.codelength(x); }
  void observe(double x) override { predictor_.observe(x); }

 private:
  BayesPredictor predictor_;
};

// Integer cumulative frequencies for one coding step. Symbol i covers
// [cum[i], cum[i+1]) out of 2^precision_bits. For countable alphabets the
// last symbol is the escape for values beyond the truncation point.
struct QuantizedCdf {
  std::vector<std::uint64_t> cum;
  bool has_escape = false;

  std::size_t symbols() const { return cum.size() - 1; }
};

// Quantizes probabilities so every symbol gets at least one quantum and the
// total is exactly 2^precision_bits. Probabilities need not sum to 1.
QuantizedCdf quantize(std::span<const double> probs, unsigned precision_bits);

// Quantized predictive distribution of `model` over the alphabet of `f`.
QuantizedCdf predictive_cdf(const FamilySpec& f, const SequentialModel& model,
                            unsigned precision_bits, unsigned tail_exponent);

struct Payload {
  std::vector<std::uint8_t> bytes;
  // Bits actually produced, before zero padding to whole bytes.
  std::uint64_t bits = 0;
};

Payload encode_payload(const FamilySpec& f, SequentialModel& model, std::span<const double> seq,
                       unsigned precision_bits, unsigned tail_exponent = kDefaultTailExponent);
std::vector<double> decode_payload(const FamilySpec& f, SequentialModel& model,
                                   std::span<const std::uint8_t> bytes, std::uint64_t n,
                                   unsigned precision_bits,
                                   unsigned tail_exponent = kDefaultTailExponent);

struct BitstreamHeader {
  FamilyId family = FamilyId::Bernoulli;
  unsigned trials = 1;
  double x0 = 0.5;
  double n0 = 1.0;
  std::uint8_t precision_bits = 32;
  std::uint64_t n = 0;
  std::uint8_t truncation_tail_prob_exp = kDefaultTailExponent;

  FamilySpec family_spec() const;
};

struct Bitstream {
  BitstreamHeader header;
  Payload payload;
};

// Codes `seq` with the fake-outcome plug-in predictor.
Bitstream encode(const FamilySpec& f, const PluginConfig& config, std::span<const double> seq,
                 unsigned precision_bits, unsigned tail_exponent = kDefaultTailExponent);
std::vector<double> decode(const Bitstream& stream);

std::vector<std::uint8_t> serialize(const Bitstream& stream);
// Throws FormatError on bad magic, unknown family or a short header.
Bitstream parse_bitstream(std::span<const std::uint8_t> bytes);

// Per-symbol quantization slack 2^-(precision_bits - 10) in bits.
double quantization_slack_bits(unsigned precision_bits);

}  // namespace preq
