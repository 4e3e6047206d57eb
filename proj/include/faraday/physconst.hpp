#pragma once

#include <span>

namespace faraday {

// Every numeric physical constant used anywhere in the project lives in this
// header. Other modules must reference these symbols, never re-declare values.
namespace phys {

inline constexpr double pi      = 3.141592653589793238462643383279502884;
inline constexpr double two_pi  = 2.0 * pi;

inline constexpr double h_planck    = 6.62607015e-34;       // J s (exact, SI 2019)
inline constexpr double hbar        = h_planck / two_pi;    // J s
inline constexpr double k_boltzmann = 1.380649e-23;         // J/K (exact, SI 2019)
inline constexpr double atomic_mass = 1.66053906660e-27;    // kg
inline constexpr double g_earth     = 9.80665;              // m/s^2 (standard gravity)

inline constexpr double gauss_to_tesla = 1e-4;

// 85Rb D2 line. Mass and wavelength are the standard tabulated values; the
// linewidth is the accepted 2pi x 6.066 MHz.
inline constexpr double rb85_mass_kg        = 84.911789738 * atomic_mass;
inline constexpr double rb85_wavelength_d2  = 780.24e-9;            // m
inline constexpr double rb85_gamma          = two_pi * 6.066e6;     // rad/s
inline constexpr double rb85_i_sat          = 16.0;                 // W/m^2 (= 1.6 mW/cm^2)
inline constexpr double rb85_gyro_hz_per_g  = 466741.5; // Hz/G, linear-frequency convention
inline constexpr int    rb85_hyperfine_f    = 3;

} // namespace phys

/// One alkali species as seen by the trap/spin/kinetics code.
/// gyro_hz_per_gauss uses the linear-frequency convention: nu_L = gyro * B.
struct AtomSpecies {
    double mass_kg;
    double wavelength_d2_m;
    double gamma_rad_s;       // natural linewidth, angular
    double i_sat_w_m2;
    double gyro_hz_per_gauss;
    int    hyperfine_f;

    static const AtomSpecies& rb85();
};

/// nu_L = gyro * |B|.  B in Gauss, result in Hz.  Throws on non-finite B.
double larmor_frequency_hz(double b_gauss, const AtomSpecies& species);

/// Inverse of larmor_frequency_hz.  nu must be >= 0 and finite.
double field_from_frequency_gauss(double nu_hz, const AtomSpecies& species);

/// hbar^2 k^2 / 2m with k = 2 pi / lambda_D2.
double recoil_energy_j(const AtomSpecies& species);

/// Shot-noise-limited field resolution (1/gyro)/sqrt(N tau T_m), in Gauss.
/// Linear-frequency convention; no extra 2 pi (see unit tests).
double shot_noise_limit_gauss(double n_atoms, double tau_s, double t_m_s,
                              const AtomSpecies& species);

/// One row of the exported constants table.
struct ConstantRow {
    const char* key;
    double      value;
    const char* unit;
    const char* source;
};

/// Machine-readable table of every constant above (key, value, unit, source).
/// Documentation, the CLI `constants` subcommand, and the tests all read this
/// one table.
std::span<const ConstantRow> constant_table();

} // namespace faraday
