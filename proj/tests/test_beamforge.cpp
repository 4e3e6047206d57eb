#include <doctest.h>

#include <cmath>

#include "faraday/atomkinetics.hpp"
#include "faraday/beamforge.hpp"
#include "faraday/errors.hpp"
#include "faraday/rng.hpp"

using namespace faraday;

namespace {

const AtomSpecies& rb() { return AtomSpecies::rb85(); }

// Frozen regression checksum of the default 512^2 mask (FNV-1a over bytes).
constexpr std::uint64_t kMaskChecksum = 14388279075259924684ULL;

std::uint64_t mask_checksum(const std::vector<std::uint8_t>& mask) {
    std::uint64_t h = 14695981039346656037ULL;
    for (std::uint8_t b : mask) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

const TrapPotential& default_trap() {
    static const TrapPotential trap = [] {
        BeamSpec spec;
        spec.z_offset_m = optimize_z_offset(spec, PlaneSelect::ring_diameter, 0.48e-3);
        return crossed_trap(spec, rb(), true);
    }();
    return trap;
}

} // namespace

TEST_CASE("slm phase") {
    BeamSpec spec;
    spec.charge = 0;
    spec.focal_length_m = 1e12; // lens term negligible
    for (double rho : {1e-4, 1e-3, 3e-3})
        for (double phi : {0.0, 1.0, 3.0})
            CHECK(std::abs(slm_phase(rho, phi, spec)) < 1e-8);

    spec.charge = 8;
    // 8 * pi/4 = 2 pi == 0 on the mask
    const double ph = slm_phase(1e-3, M_PI / 4, spec);
    CHECK(std::remainder(ph, 2 * M_PI) == doctest::Approx(0.0).epsilon(1e-9));

    // on-axis pixel: azimuth undefined, phase 0 by convention
    CHECK(slm_phase(0.0, 2.3, spec) == 0.0);

    // lens term: converging quadratic phase
    BeamSpec lens;
    lens.charge = 0;
    const double expect = -M_PI * 1e-6 / (lens.wavelength_m * lens.focal_length_m);
    CHECK(slm_phase(1e-3, 0.7, lens) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("default 512x512 mask matches its golden checksum") {
    BeamSpec spec;
    const auto mask = slm_mask(spec, 512, 15e-6);
    REQUIRE(mask.size() == 512u * 512u);
    CHECK(mask_checksum(mask) == kMaskChecksum);
}

TEST_CASE("propagation is unitary and invertible") {
    BeamSpec spec;
    spec.charge = 0;
    spec.grid_n = 256;
    spec.grid_pitch_m = 10e-6;
    spec.waist_m = 200e-6;
    spec.slm_aperture_radius_m = 1.2e-3;
    spec.focal_length_m = 1e12; // plain Gaussian
    FieldGrid in = make_input_field(spec);
    CHECK(in.power_w() == doctest::Approx(spec.power_w).epsilon(1e-12));

    FieldGrid fwd = propagate(in, 0.05);
    CHECK(fwd.power_w() == doctest::Approx(spec.power_w).epsilon(1e-6));
    FieldGrid back = propagate(fwd, -0.05);
    double rms = 0;
    for (std::size_t i = 0; i < in.amp.size(); ++i) rms += std::norm(back.amp[i] - in.amp[i]);
    rms = std::sqrt(rms / double(in.amp.size()));
    CHECK(rms < 1e-8);
}

TEST_CASE("gaussian spreads like the analytic w(z)") {
    BeamSpec spec;
    spec.charge = 0;
    spec.grid_n = 256;
    spec.grid_pitch_m = 10e-6;
    spec.waist_m = 200e-6;
    spec.slm_aperture_radius_m = 1.25e-3;
    spec.focal_length_m = 1e12;
    FieldGrid in = make_input_field(spec);
    const double zr = M_PI * spec.waist_m * spec.waist_m / spec.wavelength_m;
    for (double z : {0.5 * zr, zr}) {
        FieldGrid out = propagate(in, z);
        const double w_expect = spec.waist_m * std::sqrt(1.0 + (z / zr) * (z / zr));
        // beam_diameter is 2w for a Gaussian
        CHECK(out.beam_diameter_m() == doctest::Approx(2.0 * w_expect).epsilon(0.01));
    }
}

TEST_CASE("serial and parallel propagation agree bitwise") {
    BeamSpec spec;
    spec.grid_n = 256;
    spec.grid_pitch_m = 16e-6; // extent 4.1 mm: the charge-8 beam needs room
    spec.waist_m = 300e-6;
    spec.slm_aperture_radius_m = 1.2e-3;
    spec.focal_length_m = 0.5;
    FieldGrid in = make_input_field(spec);
    FieldGrid a = propagate(in, 0.02, Exec::serial);
    FieldGrid b = propagate(in, 0.02, Exec::parallel);
    for (std::size_t i = 0; i < a.amp.size(); ++i) CHECK(a.amp[i] == b.amp[i]);
}

TEST_CASE("under-sampled mask phase raises an aliasing error") {
    BeamSpec spec;
    spec.grid_n = 256;
    spec.grid_pitch_m = 60e-6; // lens chirp exceeds pi/pixel across the aperture
    CHECK_THROWS_AS(propagate(make_input_field(spec), 0.01), numerical_error);
}

TEST_CASE("dipole potential") {
    CHECK(dipole_potential_j(0.0, 25e9, rb()) == 0.0);

    // the nominal operating point: 8.2e4 mW/cm^2 at 25 GHz
    const double u = dipole_potential_j(8.2e5, 25e9, rb());
    CHECK(u == doctest::Approx(6.247765425584568e-27).epsilon(1e-12));
    const double hbar_gamma = phys::hbar * rb().gamma_rad_s;
    CHECK(u / hbar_gamma == doctest::Approx(1.5544125).epsilon(1e-6));
    // one-significant-figure design targets: 2 hbar Gamma, 3000 recoil
    // energies
    CHECK(u / hbar_gamma > 0.65 * 2.0);
    CHECK(u / hbar_gamma < 1.35 * 2.0);
    CHECK(u / recoil_energy_j(rb()) > 1950);
    CHECK(u / recoil_energy_j(rb()) < 4050);

    // scaling: linear in I, inverse in detuning
    CHECK(dipole_potential_j(2 * 8.2e5, 25e9, rb()) == doctest::Approx(2 * u).epsilon(1e-12));
    CHECK(dipole_potential_j(8.2e5, 50e9, rb()) == doctest::Approx(u / 2).epsilon(1e-12));
    CHECK_THROWS_AS(dipole_potential_j(1e5, 0.0, rb()), config_error);
    CHECK_THROWS_AS(dipole_potential_j(-1.0, 25e9, rb()), config_error);
}

TEST_CASE("operating plane and ring metrics") {
    const TrapPotential& trap = default_trap();
    // diameter between maxima lands on the 0.48 mm target
    CHECK(trap.d_ring_m == doctest::Approx(0.48e-3).epsilon(0.02));
    // a few centimeters past the focal plane
    CHECK(trap.z_offset_m > 0.005);
    CHECK(trap.z_offset_m < 0.04);

    BeamSpec spec;
    spec.z_offset_m = trap.z_offset_m;
    FieldGrid plane = propagate(make_input_field(spec), spec.focal_length_m + spec.z_offset_m);
    RingMetrics m = measure_ring(plane);
    REQUIRE(m.has_ring);
    CHECK(m.core_over_peak < 1e-4);       // dark core
    CHECK(m.ring_variation < 0.03);       // azimuthal symmetry (std/mean)
    CHECK(m.ring_variation * m.ring_variation < 0.01); // variance vs mean^2
}

TEST_CASE("peak-intensity plane selection also sits off focus") {
    BeamSpec spec;
    const double z = optimize_z_offset(spec, PlaneSelect::peak_intensity, 0.0, 2e-3, 0.03);
    CHECK(z > 0.004); // the charge-8 mask beam is brightest centimeters past focus
    CHECK(z < 0.03);
}

TEST_CASE("crossed trap potential") {
    const TrapPotential& trap = default_trap();
    // dark, box-like interior
    CHECK(trap.potential_j(0, 0, 0) < 1e-3 * trap.u_max_j + trap.mass_kg * phys::g_earth * 0.0);
    CHECK(trap.optical_intensity(0, 0, 0) < 1e-3 * trap.peak_intensity_w_m2);

    // walls at the ring radius on each axis
    const double r = trap.d_ring_m / 2;
    TrapPotential nog = trap;
    nog.gravity = false;
    CHECK(nog.potential_j(r, 0, 0) == doctest::Approx(trap.u_max_j).epsilon(0.05));
    CHECK(nog.potential_j(0, r, 0) == doctest::Approx(trap.u_max_j).epsilon(0.05));
    // along z both beams contribute
    CHECK(nog.potential_j(0, 0, r) == doctest::Approx(2 * trap.u_max_j).epsilon(0.05));
}

TEST_CASE("force matches the finite-difference gradient") {
    const TrapPotential& trap = default_trap();
    rng::Counter c(31, 0);
    const double h = 1e-9;
    for (int trial = 0; trial < 200; ++trial) {
        const double x = (c.uniform() - 0.5) * 0.8e-3;
        const double y = (c.uniform() - 0.5) * 0.8e-3;
        const double z = (c.uniform() - 0.5) * 0.8e-3;
        double fx, fy, fz;
        trap.force(x, y, z, fx, fy, fz);
        const double gx = -(trap.potential_j(x + h, y, z) - trap.potential_j(x - h, y, z)) / (2 * h);
        const double gy = -(trap.potential_j(x, y + h, z) - trap.potential_j(x, y - h, z)) / (2 * h);
        const double gz = -(trap.potential_j(x, y, z + h) - trap.potential_j(x, y, z - h)) / (2 * h);
        const double scale = trap.u_max_j / trap.d_ring_m;
        CHECK(std::abs(fx - gx) < 1e-5 * scale + 1e-6 * std::abs(gx));
        CHECK(std::abs(fy - gy) < 1e-5 * scale + 1e-6 * std::abs(gy));
        CHECK(std::abs(fz - gz) < 1e-5 * scale + 1e-6 * std::abs(gz));
    }
}

TEST_CASE("trap report reproduces the headline numbers") {
    const TrapMetrics m = trap_report(default_trap(), rb());
    // depth: 2 hbar Gamma and 3000 E_r, one-significant-figure values
    CHECK(m.u_max_hbar_gamma > 0.65 * 2.0);
    CHECK(m.u_max_hbar_gamma < 1.35 * 2.0);
    CHECK(m.u_max_recoil > 1950);
    CHECK(m.u_max_recoil < 4050);
    // peak scattering rate ~ 2 pi x 3 kHz
    CHECK(m.peak_scatter_rate_hz > phys::two_pi * 1950);
    CHECK(m.peak_scatter_rate_hz < phys::two_pi * 4050);
    // gravity span hbar Gamma / 6
    REQUIRE(m.d_ring_m.has_value());
    CHECK(m.gravity_span_hbar_gamma == doctest::Approx(1.0 / 6.0).epsilon(0.20));
}

TEST_CASE("focused plain gaussian has no ring") {
    BeamSpec spec;
    spec.charge = 0;
    spec.z_offset_m = 0.0;
    FieldGrid plane = propagate(make_input_field(spec), spec.focal_length_m);
    RingMetrics m = measure_ring(plane);
    CHECK_FALSE(m.has_ring);
    CHECK_THROWS_AS(crossed_trap(spec, rb(), true), numerical_error);
}

TEST_CASE("spec validation") {
    BeamSpec spec;
    spec.detuning_hz = -1e9; // red detuning not modeled
    CHECK_THROWS_AS(spec.validate(), config_error);
    spec = BeamSpec{};
    spec.grid_n = 300; // not a power of two
    CHECK_THROWS_AS(spec.validate(), config_error);
}
