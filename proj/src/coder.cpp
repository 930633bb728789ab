#include "preq/coder.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "preq/error.hpp"

namespace preq {

namespace {

using u128 = unsigned __int128;

constexpr std::uint64_t kHalf = std::uint64_t{1} << 63;
constexpr std::uint64_t kQuarter = std::uint64_t{1} << 62;
constexpr std::uint64_t kThreeQuarters = kHalf + kQuarter;
constexpr unsigned kLiteralHalfBits = 16;
constexpr std::size_t kMaxCountableSymbols = std::size_t{1} << 16;
constexpr std::array<char, 4> kMagic = {'P', 'Q', 'C', '1'};
constexpr std::size_t kHeaderBytes = 31;

void check_precision(unsigned precision_bits) {
  if (precision_bits < kMinPrecisionBits || precision_bits > kMaxPrecisionBits) {
    throw ConfigError("precision_bits must be in [16, 62], got " + std::to_string(precision_bits));
  }
}

void check_tail_exponent(unsigned tail_exponent) {
  if (tail_exponent < 1 || tail_exponent > 48) {
    throw ConfigError("truncation tail exponent must be in [1, 48], got " +
                      std::to_string(tail_exponent));
  }
}

class BitWriter {
 public:
  void put(bool bit) {
    if (bits_ % 8 == 0) bytes_.push_back(0);
    if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ % 8));
    ++bits_;
  }

  Payload take() { return Payload{std::move(bytes_), bits_}; }

 private:
  std::vector<std::uint8_t> bytes_;
  std::uint64_t bits_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Bits past the end read as zero, but never more than the encoder's flush
  // can account for.
  bool get() {
    const std::uint64_t limit = 8 * static_cast<std::uint64_t>(bytes_.size()) + kFlushBits;
    if (pos_ >= limit) throw DecodeError("payload is truncated");
    const std::uint64_t at = pos_++;
    if (at / 8 >= bytes_.size()) return false;
    return (bytes_[at / 8] >> (7 - at % 8)) & 1u;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::uint64_t pos_ = 0;
};

// Bit-oriented arithmetic coder with 64-bit registers. Straddles of the
// midpoint are deferred as pending bits and resolved (carried) once the next
// decided bit is known.
class Encoder {
 public:
  void encode(std::uint64_t lo, std::uint64_t hi, unsigned total_bits) {
    const u128 range = u128(high_ - low_) + 1;
    high_ = low_ + static_cast<std::uint64_t>((range * hi) >> total_bits) - 1;
    low_ = low_ + static_cast<std::uint64_t>((range * lo) >> total_bits);
    while (true) {
      if (high_ < kHalf) {
        emit(false);
      } else if (low_ >= kHalf) {
        emit(true);
        low_ -= kHalf;
        high_ -= kHalf;
      } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
        ++pending_;
        low_ -= kQuarter;
        high_ -= kQuarter;
      } else {
        break;
      }
      low_ <<= 1;
      high_ = (high_ << 1) | 1;
    }
  }

  Payload finish() {
    // low + 2^62 lies inside [low, high] after renormalization; its top
    // kFlushBits bits followed by zeros still do.
    const std::uint64_t v = low_ + kQuarter;
    for (unsigned i = 0; i < kFlushBits; ++i) {
      const bool bit = (v >> (63 - i)) & 1u;
      if (i == 0) {
        emit(bit);
      } else {
        out_.put(bit);
      }
    }
    return out_.take();
  }

 private:
  void emit(bool bit) {
    out_.put(bit);
    for (; pending_ > 0; --pending_) out_.put(!bit);
  }

  std::uint64_t low_ = 0;
  std::uint64_t high_ = ~std::uint64_t{0};
  std::uint64_t pending_ = 0;
  BitWriter out_;
};

class Decoder {
 public:
  explicit Decoder(std::span<const std::uint8_t> bytes) : in_(bytes) {
    for (int i = 0; i < 64; ++i) value_ = (value_ << 1) | (in_.get() ? 1u : 0u);
  }

  std::uint64_t target(unsigned total_bits) const {
    const u128 range = u128(high_ - low_) + 1;
    const u128 offset = u128(value_ - low_) + 1;
    return static_cast<std::uint64_t>(((offset << total_bits) - 1) / range);
  }

  void consume(std::uint64_t lo, std::uint64_t hi, unsigned total_bits) {
    const u128 range = u128(high_ - low_) + 1;
    high_ = low_ + static_cast<std::uint64_t>((range * hi) >> total_bits) - 1;
    low_ = low_ + static_cast<std::uint64_t>((range * lo) >> total_bits);
    while (true) {
      if (high_ < kHalf) {
        // nothing to subtract
      } else if (low_ >= kHalf) {
        low_ -= kHalf;
        high_ -= kHalf;
        value_ -= kHalf;
      } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
        low_ -= kQuarter;
        high_ -= kQuarter;
        value_ -= kQuarter;
      } else {
        break;
      }
      low_ <<= 1;
      high_ = (high_ << 1) | 1;
      value_ = (value_ << 1) | (in_.get() ? 1u : 0u);
    }
  }

 private:
  BitReader in_;
  std::uint64_t low_ = 0;
  std::uint64_t high_ = ~std::uint64_t{0};
  std::uint64_t value_ = 0;
};

std::size_t find_symbol(const QuantizedCdf& cdf, std::uint64_t target) {
  auto it = std::upper_bound(cdf.cum.begin(), cdf.cum.end(), target);
  if (it == cdf.cum.begin() || it == cdf.cum.end()) throw DecodeError("corrupt payload");
  return static_cast<std::size_t>(it - cdf.cum.begin()) - 1;
}

std::uint64_t literal_limit() { return std::uint64_t{1} << (2 * kLiteralHalfBits); }

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t{in[at + i]} << (8 * i);
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// CDF construction

QuantizedCdf quantize(std::span<const double> probs, unsigned precision_bits) {
  check_precision(precision_bits);
  const std::uint64_t total = std::uint64_t{1} << precision_bits;
  const std::size_t k = probs.size();
  if (k == 0 || k > total) throw ConfigError("cannot quantize this many symbols at this precision");
  const std::uint64_t free = total - k;
  std::vector<std::uint64_t> freq(k);
  std::uint64_t sum = 0;
  std::size_t largest = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double p = std::clamp(probs[i], 0.0, 1.0);
    const double scaled = std::floor(p * static_cast<double>(free));
    const std::uint64_t extra =
        std::min<std::uint64_t>(free, static_cast<std::uint64_t>(scaled));
    freq[i] = 1 + extra;
    sum += freq[i];
    if (freq[i] > freq[largest]) largest = i;
  }
  // Rounding leaves a small surplus or deficit; the most probable symbol
  // absorbs it.
  if (sum < total) {
    freq[largest] += total - sum;
  } else {
    std::uint64_t excess = sum - total;
    while (excess > 0) {
      std::size_t at = 0;
      for (std::size_t i = 1; i < k; ++i) {
        if (freq[i] > freq[at]) at = i;
      }
      const std::uint64_t take = std::min(excess, freq[at] - 1);
      freq[at] -= take;
      excess -= take;
    }
  }
  QuantizedCdf cdf;
  cdf.cum.resize(k + 1);
  for (std::size_t i = 0; i < k; ++i) cdf.cum[i + 1] = cdf.cum[i] + freq[i];
  return cdf;
}

QuantizedCdf predictive_cdf(const FamilySpec& f, const SequentialModel& model,
                            unsigned precision_bits, unsigned tail_exponent) {
  check_precision(precision_bits);
  check_tail_exponent(tail_exponent);
  std::vector<double> probs;
  if (f.has_finite_alphabet()) {
    for (double x : f.finite_alphabet()) probs.push_back(std::exp(model.log_prob(x)));
    return quantize(probs, precision_bits);
  }
  if (!f.is_discrete()) throw UnsupportedError("arithmetic coding needs a discrete family");
  const double tail_target = std::ldexp(1.0, -static_cast<int>(tail_exponent));
  const std::size_t cap =
      std::min<std::size_t>(kMaxCountableSymbols, (std::size_t{1} << (precision_bits - 1)) - 1);
  // Log-mass recursion for single family members: ln M(x+1) - ln M(x) is
  // ln mu - ln(x+1) for Poisson and ln(mu/(mu+1)) for Geometric.
  const std::optional<MeanParam> member = model.member_mean();
  double log_mass = 0.0;
  if (member) log_mass = log_density(f, *member, 0.0);
  const double log_mu = member ? std::log(member->value) : 0.0;
  const double log_theta = member ? std::log(member->value / (member->value + 1.0)) : 0.0;
  double cdf_sum = 0.0;
  double compensation = 0.0;
  while (probs.size() < cap) {
    const auto x = static_cast<double>(probs.size());
    double p = 0.0;
    if (member) {
      p = std::exp(log_mass);
      log_mass += f.id() == FamilyId::Poisson ? log_mu - std::log(x + 1.0) : log_theta;
    } else {
      p = std::exp(model.log_prob(x));
    }
    probs.push_back(p);
    const double y = p - compensation;
    const double t = cdf_sum + y;
    compensation = (t - cdf_sum) - y;
    cdf_sum = t;
    if (1.0 - cdf_sum < tail_target) break;
  }
  probs.push_back(std::max(0.0, 1.0 - cdf_sum));
  QuantizedCdf cdf = quantize(probs, precision_bits);
  cdf.has_escape = true;
  return cdf;
}

// ---------------------------------------------------------------------------
// Payload coding

Payload encode_payload(const FamilySpec& f, SequentialModel& model, std::span<const double> seq,
                       unsigned precision_bits, unsigned tail_exponent) {
  check_precision(precision_bits);
  check_tail_exponent(tail_exponent);
  if (!f.is_discrete()) throw UnsupportedError("arithmetic coding needs a discrete family");
  if (seq.empty()) return {};
  Encoder enc;
  for (double x : seq) {
    require_support(f, x);
    const QuantizedCdf cdf = predictive_cdf(f, model, precision_bits, tail_exponent);
    const auto symbol = static_cast<std::uint64_t>(x);
    const std::size_t escape = cdf.symbols() - 1;
    if (!cdf.has_escape || symbol < escape) {
      enc.encode(cdf.cum[symbol], cdf.cum[symbol + 1], precision_bits);
    } else {
      if (symbol >= literal_limit()) {
        throw SupportError("value " + std::to_string(symbol) + " exceeds the 32-bit escape literal");
      }
      enc.encode(cdf.cum[escape], cdf.cum[escape + 1], precision_bits);
      const std::uint64_t high_half = symbol >> kLiteralHalfBits;
      const std::uint64_t low_half = symbol & ((std::uint64_t{1} << kLiteralHalfBits) - 1);
      enc.encode(high_half, high_half + 1, kLiteralHalfBits);
      enc.encode(low_half, low_half + 1, kLiteralHalfBits);
    }
    model.observe(x);
  }
  return enc.finish();
}

std::vector<double> decode_payload(const FamilySpec& f, SequentialModel& model,
                                   std::span<const std::uint8_t> bytes, std::uint64_t n,
                                   unsigned precision_bits, unsigned tail_exponent) {
  check_precision(precision_bits);
  check_tail_exponent(tail_exponent);
  if (!f.is_discrete()) throw UnsupportedError("arithmetic coding needs a discrete family");
  std::vector<double> out;
  if (n == 0) return out;
  out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1u << 20)));
  Decoder dec(bytes);
  for (std::uint64_t i = 0; i < n; ++i) {
    const QuantizedCdf cdf = predictive_cdf(f, model, precision_bits, tail_exponent);
    const std::size_t s = find_symbol(cdf, dec.target(precision_bits));
    dec.consume(cdf.cum[s], cdf.cum[s + 1], precision_bits);
    std::uint64_t value = s;
    const std::size_t escape = cdf.symbols() - 1;
    if (cdf.has_escape && s == escape) {
      const std::uint64_t high_half = dec.target(kLiteralHalfBits);
      dec.consume(high_half, high_half + 1, kLiteralHalfBits);
      const std::uint64_t low_half = dec.target(kLiteralHalfBits);
      dec.consume(low_half, low_half + 1, kLiteralHalfBits);
      value = (high_half << kLiteralHalfBits) | low_half;
      if (value < escape) throw DecodeError("corrupt payload: escape literal inside the support");
    }
    const double x = static_cast<double>(value);
    out.push_back(x);
    model.observe(x);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Framing

FamilySpec BitstreamHeader::family_spec() const {
  switch (family) {
    case FamilyId::Bernoulli:
      return FamilySpec::bernoulli();
    case FamilyId::Binomial:
      return FamilySpec::binomial(trials);
    case FamilyId::Poisson:
      return FamilySpec::poisson();
    case FamilyId::Geometric:
      return FamilySpec::geometric();
    default:
      throw FormatError("bitstream family id " + std::to_string(static_cast<int>(family)) +
                        " is not a discrete family");
  }
}

Bitstream encode(const FamilySpec& f, const PluginConfig& config, std::span<const double> seq,
                 unsigned precision_bits, unsigned tail_exponent) {
  if (!f.is_discrete()) throw UnsupportedError("arithmetic coding needs a discrete family");
  if (!config.is_fake_outcome()) {
    throw UnsupportedError("the bitstream header only describes fake-outcome plug-in predictors");
  }
  check_precision(precision_bits);
  check_tail_exponent(tail_exponent);
  Bitstream stream;
  stream.header.family = f.id();
  stream.header.trials = f.trials();
  stream.header.x0 = config.x0;
  stream.header.n0 = config.n0;
  stream.header.precision_bits = static_cast<std::uint8_t>(precision_bits);
  stream.header.n = seq.size();
  stream.header.truncation_tail_prob_exp = static_cast<std::uint8_t>(tail_exponent);
  PluginModel model(f, config);
  stream.payload = encode_payload(f, model, seq, precision_bits, tail_exponent);
  return stream;
}

std::vector<double> decode(const Bitstream& stream) {
  const auto& h = stream.header;
  const FamilySpec f = h.family_spec();
  PluginModel model(f, PluginConfig::fake_outcome(h.x0, h.n0));
  return decode_payload(f, model, stream.payload.bytes, h.n, h.precision_bits,
                        h.truncation_tail_prob_exp);
}

std::vector<std::uint8_t> serialize(const Bitstream& stream) {
  const auto& h = stream.header;
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + 4 + stream.payload.bytes.size());
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  out.push_back(static_cast<std::uint8_t>(h.family));
  put_u64(out, std::bit_cast<std::uint64_t>(h.x0), 8);
  put_u64(out, std::bit_cast<std::uint64_t>(h.n0), 8);
  out.push_back(h.precision_bits);
  put_u64(out, h.n, 8);
  out.push_back(h.truncation_tail_prob_exp);
  if (h.family == FamilyId::Binomial) put_u64(out, h.trials, 4);
  out.insert(out.end(), stream.payload.bytes.begin(), stream.payload.bytes.end());
  return out;
}

Bitstream parse_bitstream(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw FormatError("bitstream is shorter than its header");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw FormatError("bad magic: not a PQC1 bitstream");
  }
  Bitstream stream;
  auto& h = stream.header;
  const std::uint8_t id = bytes[4];
  if (id < static_cast<std::uint8_t>(FamilyId::Bernoulli) ||
      id > static_cast<std::uint8_t>(FamilyId::Geometric)) {
    throw FormatError("bitstream family id " + std::to_string(id) + " is not a discrete family");
  }
  h.family = static_cast<FamilyId>(id);
  h.x0 = std::bit_cast<double>(get_u64(bytes, 5, 8));
  h.n0 = std::bit_cast<double>(get_u64(bytes, 13, 8));
  h.precision_bits = bytes[21];
  h.n = get_u64(bytes, 22, 8);
  h.truncation_tail_prob_exp = bytes[30];
  std::size_t offset = kHeaderBytes;
  if (h.family == FamilyId::Binomial) {
    if (bytes.size() < kHeaderBytes + 4) throw FormatError("bitstream is shorter than its header");
    h.trials = static_cast<unsigned>(get_u64(bytes, kHeaderBytes, 4));
    if (h.trials == 0) throw FormatError("binomial trial count is zero");
    offset += 4;
  } else {
    h.trials = h.family == FamilyId::Bernoulli ? 1 : 0;
  }
  if (h.precision_bits < kMinPrecisionBits || h.precision_bits > kMaxPrecisionBits) {
    throw FormatError("precision_bits out of range");
  }
  if (h.truncation_tail_prob_exp < 1 || h.truncation_tail_prob_exp > 48) {
    throw FormatError("truncation tail exponent out of range");
  }
  try {
    validate(h.family_spec(), PluginConfig::fake_outcome(h.x0, h.n0));
  } catch (const Error& e) {
    throw FormatError(std::string("invalid predictor in header: ") + e.what());
  }
  stream.payload.bytes.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
  stream.payload.bits = 8 * static_cast<std::uint64_t>(stream.payload.bytes.size());
  if (h.n > 0 && stream.payload.bytes.empty()) throw DecodeError("payload is truncated");
  return stream;
}

double quantization_slack_bits(unsigned precision_bits) {
  return std::ldexp(1.0, -(static_cast<int>(precision_bits) - 10));
}

}  // namespace preq
