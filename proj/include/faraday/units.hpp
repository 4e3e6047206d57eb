#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace faraday::units {

// Conversion factors to internal SI units. Keys are the unit suffixes used in
// scenario and timeline files (e.g. "bias_mg = 5" means 5 milligauss).
// Field values are carried in Gauss internally, so gauss-family suffixes
// convert to Gauss, not Tesla.

/// Factor f such that value_in_si = value * f. Unknown unit -> nullopt.
std::optional<double> si_factor(std::string_view unit);

/// value expressed in `unit` -> internal units. Throws config_error on
/// unknown unit.
double to_internal(double value, std::string_view unit);

/// Inverse of to_internal.
double from_internal(double value_si, std::string_view unit);

/// Splits "eddy_tau_ms" into {"eddy_tau", "ms"} when the trailing suffix is a
/// known unit; returns nullopt otherwise.
std::optional<std::pair<std::string, std::string>> split_unit_suffix(std::string_view key);

} // namespace faraday::units
