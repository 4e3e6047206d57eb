#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "faraday/atomkinetics.hpp"
#include "faraday/beamforge.hpp"
#include "faraday/errors.hpp"
#include "faraday/rng.hpp"

using namespace faraday;

namespace {

const AtomSpecies& rb() { return AtomSpecies::rb85(); }

const TrapPotential& default_trap() {
    static const TrapPotential trap = [] {
        BeamSpec spec;
        spec.z_offset_m = optimize_z_offset(spec, PlaneSelect::ring_diameter, 0.48e-3);
        return crossed_trap(spec, rb(), true);
    }();
    return trap;
}

} // namespace

TEST_CASE("scattering rate formula") {
    CHECK(scattering_rate_hz(0.0, 25e9, rb()) == 0.0);

    // the nominal trap operating point (8.2e4 mW/cm^2, 25 GHz)
    const double r = scattering_rate_hz(8.2e5, 25e9, rb());
    CHECK(r == doctest::Approx(14364.267012031414).epsilon(1e-12));
    CHECK(r / phys::two_pi > 1950); // 2 pi x 3 kHz rounded to one digit
    CHECK(r / phys::two_pi < 4050);

    // probe beam: 20 mW, 6.0 mm waist, 2.5 GHz -> ~2 ms scattering time
    const double ip = 2.0 * 0.020 / (M_PI * 0.006 * 0.006);
    const double rp = scattering_rate_hz(ip, 2.5e9, rb());
    CHECK(1.0 / rp == doctest::Approx(1.6129096921e-3).epsilon(1e-9));
    CHECK(1.0 / rp > 1.3e-3); // the nominal ~2 ms within rounding
    CHECK(1.0 / rp < 2.7e-3);

    // far-detuned linearity in intensity
    CHECK(scattering_rate_hz(2 * 8.2e5, 25e9, rb()) == doctest::Approx(2 * r).epsilon(1e-2));
}

TEST_CASE("thermal cloud statistics") {
    AtomEnsemble e = AtomEnsemble::thermal_cloud(20000, 500e-6, 10e-6, rb(), 77);
    REQUIRE(e.size() == 20000);
    double sx = 0, sx2 = 0, sv = 0, sv2 = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        sx += e.x[i];
        sx2 += e.x[i] * e.x[i];
        sv += e.vx[i];
        sv2 += e.vx[i] * e.vx[i];
    }
    const double n = double(e.size());
    CHECK(std::abs(sx / n) < 3e-6);
    CHECK(std::sqrt(sx2 / n) == doctest::Approx(125e-6).epsilon(0.03)); // 1/e^2 dia / 4
    const double sigma_v = std::sqrt(phys::k_boltzmann * 10e-6 / rb().mass_kg);
    CHECK(std::abs(sv / n) < 0.02 * sigma_v);
    CHECK(std::sqrt(sv2 / n) == doctest::Approx(sigma_v).epsilon(0.03));
}

TEST_CASE("free flight follows the ballistic parabola") {
    TrapPotential fs = TrapPotential::free_space(rb(), true);
    AtomEnsemble e;
    e.x = {0};
    e.y = {0};
    e.z = {0};
    e.vx = {0.01};
    e.vy = {0};
    e.vz = {0.02};
    e.alive = {1};
    e.seed = 3;
    ScatterSchedule sch;
    sch.trap_scattering = false;
    const double dt = 1e-6;
    const int steps = 10000;
    for (int s = 0; s < steps; ++s) step(e, fs, sch, dt, s * dt, s);
    const double t = steps * dt;
    CHECK(std::abs(e.x[0] - 0.01 * t) < 1e-9);
    CHECK(std::abs(e.z[0] - (0.02 * t - 0.5 * phys::g_earth * t * t)) < 1e-9);
    CHECK(e.y[0] == 0.0);
}

TEST_CASE("sample at rest on the ring slides into the dark core") {
    const TrapPotential& trap = default_trap();
    TrapPotential nog = trap;
    nog.gravity = false;
    // start at the radial intensity maximum of the x-beam
    double r_peak = 0, best = 0;
    for (double r = 0; r < 0.4e-3; r += 1e-6) {
        const double v = nog.intensity_w_m2.value(r);
        if (v > best) {
            best = v;
            r_peak = r;
        }
    }
    AtomEnsemble e;
    e.x = {0};
    e.y = {r_peak};
    e.z = {0};
    e.vx = {0};
    e.vy = {0};
    e.vz = {0};
    e.alive = {1};
    e.seed = 5;
    ScatterSchedule sch;
    sch.trap_scattering = false;
    const double e0 = nog.potential_j(0, r_peak, 0);
    double min_r = r_peak;
    double max_drift = 0;
    for (int s = 0; s < 300000; ++s) {
        step(e, nog, sch, 1e-6, s * 1e-6, s);
        min_r = std::min(min_r, std::abs(e.y[0]));
        const double ke = 0.5 * rb().mass_kg * e.vy[0] * e.vy[0];
        const double et = ke + nog.potential_j(e.x[0], e.y[0], e.z[0]);
        max_drift = std::max(max_drift, std::abs(et - e0) / e0);
    }
    CHECK(min_r < 0.1 * r_peak);  // reached the dark interior
    CHECK(max_drift < 1e-4);      // turning points conserve energy
}

TEST_CASE("trap-held ensemble conserves energy over the full run") {
    const TrapPotential& trap = default_trap();
    AtomEnsemble e = AtomEnsemble::thermal_cloud(32, 400e-6, 10e-6, rb(), 13);
    ScatterSchedule sch;
    sch.trap_scattering = false;
    KineticsRun r = survival_curve(e, trap, sch, 0.4, 1e-6, 100);
    CHECK(r.max_energy_drift < 1e-4);
}

TEST_CASE("no scattering and a compact cloud: nothing is lost") {
    const TrapPotential& trap = default_trap();
    // cloud fully inside the 0.48 mm ring
    AtomEnsemble e = AtomEnsemble::thermal_cloud(256, 200e-6, 10e-6, rb(), 15);
    ScatterSchedule sch;
    sch.trap_scattering = false;
    KineticsRun r = survival_curve(e, trap, sch, 0.1, 1e-6, 50);
    CHECK(r.curve.back().fraction == 1.0);
    CHECK(r.total_photons == 0);
}

TEST_CASE("recoil heating rate: (1 + 1/3) E_r per photon along the pump axis") {
    TrapPotential fs = TrapPotential::free_space(rb(), false);
    AtomEnsemble e = AtomEnsemble::thermal_cloud(2500, 500e-6, 10e-6, rb(), 11);
    ScatterSchedule sch;
    sch.trap_scattering = false;
    // continuous pump-channel scattering at 5000 photons/s
    sch.pump_photons_per_cycle = 10;
    sch.pump_duration_s = 2e-3;
    sch.cycle_period_s = 2e-3;
    const double t_tot = 20e-3, dt = 1e-6;
    const double er = recoil_energy_j(rb());

    double ex0 = 0, et0 = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        ex0 += 0.5 * rb().mass_kg * e.vx[i] * e.vx[i];
        et0 += 0.5 * rb().mass_kg * (e.vx[i] * e.vx[i] + e.vy[i] * e.vy[i] + e.vz[i] * e.vz[i]);
    }
    const int steps = int(t_tot / dt);
    for (int s = 0; s < steps; ++s) step(e, fs, sch, dt, s * dt, s);
    double ex1 = 0, et1 = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        ex1 += 0.5 * rb().mass_kg * e.vx[i] * e.vx[i];
        et1 += 0.5 * rb().mass_kg * (e.vx[i] * e.vx[i] + e.vy[i] * e.vy[i] + e.vz[i] * e.vz[i]);
    }
    const double photons = 5000.0 * t_tot;
    const double n = double(e.size());
    // along the absorption axis: E_r (absorption) + E_r/3 (isotropic emission)
    CHECK((ex1 - ex0) / n / photons / er == doctest::Approx(4.0 / 3.0).epsilon(0.05));
    // total: 2 E_r per photon for this kick model
    CHECK((et1 - et0) / n / photons / er == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("survival fraction is monotone and serial == parallel") {
    const TrapPotential& trap = default_trap();
    AtomEnsemble e = AtomEnsemble::thermal_cloud(300, 500e-6, 10e-6, rb(), 19);
    ScatterSchedule sch;
    sch.trap_detuning_hz = 25e9;
    sch.probe_rate_hz = 620;
    sch.pump_photons_per_cycle = 11;
    KineticsRun a = survival_curve(e, trap, sch, 0.06, 1e-6, 60, 0.25e-3, Exec::parallel);
    KineticsRun b = survival_curve(e, trap, sch, 0.06, 1e-6, 60, 0.25e-3, Exec::serial);
    REQUIRE(a.curve.size() == b.curve.size());
    for (std::size_t k = 0; k < a.curve.size(); ++k) {
        CHECK(a.curve[k].fraction == b.curve[k].fraction);
        CHECK(a.curve[k].aperture_weight == b.curve[k].aperture_weight);
        if (k) CHECK(a.curve[k].fraction <= a.curve[k - 1].fraction);
    }
    CHECK(a.total_photons == b.total_photons);
}

TEST_CASE("step rejects an over-long dt") {
    TrapPotential fs = TrapPotential::free_space(rb(), true);
    AtomEnsemble e = AtomEnsemble::thermal_cloud(4, 500e-6, 10e-6, rb(), 2);
    ScatterSchedule sch;
    CHECK_THROWS_AS(step(e, fs, sch, 5e-6, 0.0, 0), config_error);
}

TEST_CASE("boil-time estimate: U / (gamma_tot E_r)") {
    // back-of-envelope: a 3000 E_r trap at 5000 photons/s boils in ~0.6 s,
    // i.e. ~300 pumping cycles at 2 ms each
    const double u = 3000.0 * recoil_energy_j(rb());
    const double t_boil = u / (5000.0 * recoil_energy_j(rb()));
    CHECK(t_boil == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(t_boil / 2e-3 == doctest::Approx(300.0).epsilon(1e-12));
}

TEST_CASE("untrapped cloud falls out of the detection aperture within 25 ms") {
    TrapPotential fs = TrapPotential::free_space(rb(), true);
    AtomEnsemble e = AtomEnsemble::thermal_cloud(1000, 500e-6, 10e-6, rb(), 23);
    CHECK(faraday_weight(e, 1.0) == 1.0); // aperture much larger than the cloud
    ScatterSchedule sch;
    sch.trap_scattering = false;
    KineticsRun r = survival_curve(e, fs, sch, 0.030, 1e-6, 30, 0.25e-3);
    // weight at t = 25 ms
    double w25 = 1.0;
    for (const auto& p : r.curve)
        if (p.t_s >= 0.025) {
            w25 = p.aperture_weight;
            break;
        }
    CHECK(w25 < 0.05);
    CHECK(r.weight_tau_s > 5e-3);
    CHECK(r.weight_tau_s < 20e-3);
}

TEST_CASE("doubling the sample count moves the lifetime less than the bootstrap interval") {
    const TrapPotential& trap = default_trap();
    ScatterSchedule sch;
    sch.trap_detuning_hz = 25e9;
    sch.probe_rate_hz = 620;
    sch.pump_photons_per_cycle = 22; // faster boil so 150 ms of sim suffices
    AtomEnsemble small = AtomEnsemble::thermal_cloud(600, 500e-6, 10e-6, rb(), 31);
    AtomEnsemble big = AtomEnsemble::thermal_cloud(1200, 500e-6, 10e-6, rb(), 37);
    KineticsRun rs = survival_curve(small, trap, sch, 0.15, 1e-6, 150, 0.0);
    KineticsRun rb2 = survival_curve(big, trap, sch, 0.15, 1e-6, 150, 0.0);

    // bootstrap the small run's curve: resample escape times via binomial
    // thinning of the curve itself at the checkpoint level
    std::vector<double> taus;
    rng::Counter c(41, 0);
    for (int b = 0; b < 48; ++b) {
        std::vector<double> t, y;
        for (const auto& p : rs.curve) {
            if (p.fraction < 0.02) break;
            // resampled fraction ~ Normal(f, stderr)
            const double f = std::min(std::max(p.fraction + p.stderr_frac * c.normal(), 1e-3), 1.0);
            t.push_back(p.t_s);
            y.push_back(f);
        }
        try {
            taus.push_back(fit::fit_exponential(t, y).second);
        } catch (const numerical_error&) {
        }
    }
    REQUIRE(taus.size() > 40);
    std::sort(taus.begin(), taus.end());
    const double lo = taus[std::size_t(0.025 * taus.size())];
    const double hi = taus[std::size_t(0.975 * taus.size())];
    CHECK(rb2.fitted_tau_s > rs.fitted_tau_s - (hi - lo));
    CHECK(rb2.fitted_tau_s < rs.fitted_tau_s + (hi - lo));
}
