#include "faraday/physconst.hpp"

#include <cmath>

#include "faraday/errors.hpp"

namespace faraday {

const AtomSpecies& AtomSpecies::rb85() {
    static const AtomSpecies s{
        phys::rb85_mass_kg,       phys::rb85_wavelength_d2, phys::rb85_gamma,
        phys::rb85_i_sat,         phys::rb85_gyro_hz_per_g, phys::rb85_hyperfine_f,
    };
    return s;
}

double larmor_frequency_hz(double b_gauss, const AtomSpecies& species) {
    if (!std::isfinite(b_gauss))
        throw config_error("larmor_frequency_hz: field must be finite");
    // Sign of B sets the precession sense only; the spectral chain sees |B|.
    return std::abs(b_gauss) * species.gyro_hz_per_gauss;
}

double field_from_frequency_gauss(double nu_hz, const AtomSpecies& species) {
    if (!std::isfinite(nu_hz) || nu_hz < 0.0)
        throw config_error("field_from_frequency_gauss: frequency must be finite and >= 0");
    return nu_hz / species.gyro_hz_per_gauss;
}

double recoil_energy_j(const AtomSpecies& species) {
    const double k = phys::two_pi / species.wavelength_d2_m;
    return phys::hbar * phys::hbar * k * k / (2.0 * species.mass_kg);
}

double shot_noise_limit_gauss(double n_atoms, double tau_s, double t_m_s,
                              const AtomSpecies& species) {
    if (n_atoms < 1.0 || tau_s <= 0.0 || t_m_s <= 0.0)
        throw config_error("shot_noise_limit_gauss: need N >= 1, tau > 0, T_m > 0");
    return 1.0 / (species.gyro_hz_per_gauss * std::sqrt(n_atoms * tau_s * t_m_s));
}

std::span<const ConstantRow> constant_table() {
    using namespace phys;
    static const ConstantRow rows[] = {
        {"h_planck", h_planck, "J s", "SI 2019 exact"},
        {"hbar", hbar, "J s", "SI 2019 exact"},
        {"k_boltzmann", k_boltzmann, "J/K", "SI 2019 exact"},
        {"atomic_mass", atomic_mass, "kg", "CODATA 2018"},
        {"g_earth", g_earth, "m/s^2", "standard gravity"},
        {"gauss_to_tesla", gauss_to_tesla, "T/G", "definition"},
        {"rb85_mass", rb85_mass_kg, "kg", "tabulated 85Rb"},
        {"rb85_wavelength_d2", rb85_wavelength_d2, "m", "tabulated 85Rb D2"},
        {"rb85_gamma", rb85_gamma, "rad/s", "tabulated 85Rb D2, 2pi x 6.066 MHz"},
        {"rb85_i_sat", rb85_i_sat, "W/m^2", "tabulated 85Rb D2"},
        {"rb85_gyro", rb85_gyro_hz_per_g, "Hz/G", "tabulated 85Rb F=3"},
        {"rb85_hyperfine_f", double(rb85_hyperfine_f), "1", "85Rb ground state"},
    };
    return rows;
}

} // namespace faraday
