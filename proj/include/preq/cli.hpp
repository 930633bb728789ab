#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace preq::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Runs the preqcode command line. args excludes the program name.
// Returns 0 on success, 1 when a library precondition fails and 2 on usage
// errors (unknown flag, family or code).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "64,128,256", "2^6..2^14" (powers of two) or "64..16384".
std::vector<std::uint64_t> parse_n_grid(const std::string& text);

}  // namespace preq::cli
