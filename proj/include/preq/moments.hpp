#pragma once

#include <optional>

namespace preq {

// Moments of a data-generating distribution over the sufficient statistic.
// Central moments above the highest finite order are +infinity.
struct MomentReport {
  double mean = 0.0;
  double variance = 0.0;
  double third_central = 0.0;
  double fourth_central = 0.0;
  // std::nullopt means every moment is finite.
  std::optional<unsigned> highest_finite_moment;

  bool has_moment(unsigned k) const {
    return !highest_finite_moment || *highest_finite_moment >= k;
  }
};

}  // namespace preq
