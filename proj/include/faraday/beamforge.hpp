#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "faraday/fit.hpp"
#include "faraday/physconst.hpp"
#include "faraday/spinsim.hpp"

namespace faraday {

/// Hollow-beam generation parameters (SLM mask + focusing + trap light).
struct BeamSpec {
    int charge = 8;                      // azimuthal index n
    double waist_m = 1.71e-3;            // input 1/e^2 waist
    double focal_length_m = 0.200;
    double wavelength_m = phys::rb85_wavelength_d2;
    double power_w = 0.150;              // per beam, at the trap
    double detuning_hz = 25e9;           // blue of F=3 -> F'=4
    double z_offset_m = 0.0;             // operating plane relative to focus
    double slm_aperture_radius_m = 3.84e-3;
    int grid_n = 1024;
    double grid_pitch_m = 15e-6;

    void validate() const;
};

/// Complex field samples on a uniform transverse grid (row-major, y*n+x,
/// origin at pixel n/2).
struct FieldGrid {
    int n = 0;
    double pitch_m = 0;
    double z_m = 0;          // propagation distance from the SLM plane
    double wavelength_m = 0; // carried for propagation
    std::vector<std::complex<double>> amp;

    double coord(int i) const { return (double(i) - double(n / 2)) * pitch_m; }
    std::complex<double>& at(int ix, int iy) { return amp[std::size_t(iy) * n + ix]; }
    const std::complex<double>& at(int ix, int iy) const { return amp[std::size_t(iy) * n + ix]; }
    double intensity(int ix, int iy) const { return std::norm(at(ix, iy)); }
    double intensity_bilinear(double x_m, double y_m) const;

    double power_w() const;           // sum |E|^2 pitch^2
    double beam_diameter_m() const;   // 2 sqrt(2 <r^2>), intensity-weighted
};

/// SLM phase at (rho, phi): n phi plus the focal-length-f lens term
/// -pi rho^2 / (lambda f); not reduced mod 2pi. The on-axis point (rho = 0,
/// azimuth undefined) is assigned phase 0 by convention.
double slm_phase(double rho_m, double phi_rad, const BeamSpec& spec);

/// 8-bit mask export: phase mod 2pi mapped 0..255 on an n x n pixel grid.
std::vector<std::uint8_t> slm_mask(const BeamSpec& spec, int n_pixels, double pixel_pitch_m);

/// Input Gaussian with the mask phase applied, apertured at the SLM radius,
/// normalized to spec.power_w.
FieldGrid make_input_field(const BeamSpec& spec);

/// Angular-spectrum propagation by dz (either sign). Power is conserved;
/// under-sampled phase content raises numerical_error.
FieldGrid propagate(const FieldGrid& input, double dz_m, Exec exec = Exec::parallel);

struct RingMetrics {
    bool has_ring = false;
    double d_ring_m = 0;            // between opposing intensity maxima
    double peak_intensity_w_m2 = 0; // radial-profile peak
    double core_over_peak = 0;      // I(0,0) / peak
    double ring_variation = 0;      // azimuthal std/mean on the ring
};

RingMetrics measure_ring(const FieldGrid& grid);

enum class PlaneSelect { ring_diameter, peak_intensity, fixed };

/// Scan z around the focal plane and return the chosen operating offset.
/// ring_diameter picks the plane whose ring diameter matches `target_m`
/// (beyond focus); peak_intensity picks the brightest-ring plane.
double optimize_z_offset(const BeamSpec& spec, PlaneSelect mode, double target_m,
                         double scan_step_m = 1e-3, double scan_halfspan_m = 0.040);

/// U = hbar Gamma^2 I / (8 (2 pi Delta) I_sat), far-detuned two-level form.
double dipole_potential_j(double intensity_w_m2, double detuning_hz, const AtomSpecies& species);

/// Crossed-beam 3D potential. Each hollow beam is frozen at the operating
/// plane and taken translation-invariant along its own axis (x resp. y);
/// U(x,y,z) = kappa [I(sqrt(y^2+z^2)) + I(sqrt(x^2+z^2))] + m g z.
struct TrapPotential {
    fit::UniformSpline intensity_w_m2; // radial profile of one beam
    double u_per_intensity = 0;        // J per (W/m^2)
    double detuning_hz = 25e9;
    bool gravity = true;
    double mass_kg = phys::rb85_mass_kg;
    double u_max_j = 0;                // single-beam peak optical potential
    double d_ring_m = 0;
    double peak_intensity_w_m2 = 0;
    double box_radius_m = 0;           // escape box (3x ring radius)
    double z_offset_m = 0;

    double optical_intensity(double x, double y, double z) const;
    double potential_j(double x, double y, double z) const;
    void force(double x, double y, double z, double& fx, double& fy, double& fz) const;

    /// Zero-light potential (free flight / gravity-only), for tests.
    static TrapPotential free_space(const AtomSpecies& species, bool gravity);
};

TrapPotential crossed_trap(const BeamSpec& spec, const AtomSpecies& species, bool gravity = true);

struct TrapMetrics {
    double u_max_j = 0;
    double u_max_hbar_gamma = 0;
    double u_max_recoil = 0;
    std::optional<double> d_ring_m;
    double peak_intensity_w_m2 = 0;
    double peak_scatter_rate_hz = 0;    // photons/s at the single-beam peak
    double gravity_span_j = 0;          // m g d_ring
    double gravity_span_hbar_gamma = 0;
    double z_offset_m = 0;
};

TrapMetrics trap_report(const TrapPotential& trap, const AtomSpecies& species);

} // namespace faraday
