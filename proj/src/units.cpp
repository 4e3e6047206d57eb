#include "faraday/units.hpp"

#include <array>

#include "faraday/errors.hpp"
#include "faraday/physconst.hpp"

namespace faraday::units {

namespace {

struct UnitEntry {
    std::string_view name;
    double factor;
};

// Internal units: seconds, meters, Hz, Gauss, Watts, W/m^2, radians, Kelvin.
constexpr std::array<UnitEntry, 27> kUnits{{
    {"s", 1.0},
    {"ms", 1e-3},
    {"us", 1e-6},
    {"hz", 1.0},
    {"khz", 1e3},
    {"mhz", 1e6},
    {"ghz", 1e9},
    {"m", 1.0},
    {"mm", 1e-3},
    {"um", 1e-6},
    {"nm", 1e-9},
    {"gauss", 1.0},
    {"g", 1.0},
    {"mg", 1e-3},
    {"ug", 1e-6},
    {"gauss_per_s", 1.0},
    {"gauss_per_rthz", 1.0},
    {"w", 1.0},
    {"mw", 1e-3},
    {"w_m2", 1.0},
    {"mw_cm2", 10.0},
    {"rad", 1.0},
    {"deg", phys::pi / 180.0},
    {"uk", 1e-6},
    {"k", 1.0},
    {"j", 1.0},
    {"1", 1.0},
}};

} // namespace

std::optional<double> si_factor(std::string_view unit) {
    for (const auto& u : kUnits)
        if (u.name == unit) return u.factor;
    return std::nullopt;
}

double to_internal(double value, std::string_view unit) {
    auto f = si_factor(unit);
    if (!f) throw config_error("unknown unit suffix: " + std::string(unit));
    return value * *f;
}

double from_internal(double value_si, std::string_view unit) {
    auto f = si_factor(unit);
    if (!f) throw config_error("unknown unit suffix: " + std::string(unit));
    return value_si / *f;
}

std::optional<std::pair<std::string, std::string>> split_unit_suffix(std::string_view key) {
    auto pos = key.rfind('_');
    if (pos == std::string_view::npos) return std::nullopt;
    std::string_view suffix = key.substr(pos + 1);
    // Compound suffixes (w_m2, mw_cm2, ...) contain their own underscore.
    for (std::string_view compound : {"w_m2", "mw_cm2", "gauss_per_s", "gauss_per_rthz"}) {
        if (key.size() > compound.size() + 1 &&
            key.substr(key.size() - compound.size()) == compound &&
            key[key.size() - compound.size() - 1] == '_') {
            return std::make_pair(std::string(key.substr(0, key.size() - compound.size() - 1)),
                                  std::string(compound));
        }
    }
    if (si_factor(suffix))
        return std::make_pair(std::string(key.substr(0, pos)), std::string(suffix));
    return std::nullopt;
}

} // namespace faraday::units
