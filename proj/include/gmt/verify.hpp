#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace gmt::verify {

struct SuiteResult {
  std::string name;
  bool pass = false;
  /// Suite-specific counts and extremes.
  nlohmann::json details;
  /// Wall time; kept out of to_json so reports stay reproducible.
  double seconds = 0.0;

  nlohmann::json to_json() const;
};

/// Individual suite names, in run order.
const std::vector<std::string>& suite_names();

/// Runs one suite, or every suite for "all". Unknown names throw InputError.
/// Violations are reported through `pass`, never thrown.
std::vector<SuiteResult> run(const std::string& suite, std::uint64_t seed = 1);

SuiteResult eigenvalue_bounds(std::uint64_t seed);
SuiteResult ellipse_nesting(std::uint64_t seed);
SuiteResult flatness_comparison(std::uint64_t seed);
SuiteResult moment_residuals(std::uint64_t seed);
SuiteResult cone_gap(std::uint64_t seed);
SuiteResult rescaling_uniformity(std::uint64_t seed);
SuiteResult blowup_composition(std::uint64_t seed);

}  // namespace gmt::verify
