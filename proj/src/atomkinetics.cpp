#include "faraday/atomkinetics.hpp"

#include <algorithm>
#include <cmath>

#include "faraday/errors.hpp"
#include "faraday/fit.hpp"
#include "faraday/parallel.hpp"
#include "faraday/rng.hpp"

namespace faraday {

double scattering_rate_hz(double intensity_w_m2, double detuning_hz, const AtomSpecies& species) {
    if (intensity_w_m2 < 0) return 0.0;
    const double s = intensity_w_m2 / species.i_sat_w_m2;
    const double d = 2.0 * phys::two_pi * detuning_hz / species.gamma_rad_s;
    return 0.5 * species.gamma_rad_s * s / (1.0 + s + d * d);
}

std::size_t AtomEnsemble::alive_count() const {
    return std::size_t(std::count(alive.begin(), alive.end(), std::uint8_t(1)));
}

AtomEnsemble AtomEnsemble::thermal_cloud(std::size_t n, double diameter_1e2_m, double temperature_k,
                                         const AtomSpecies& species, std::uint64_t seed) {
    AtomEnsemble e;
    e.x.resize(n);
    e.y.resize(n);
    e.z.resize(n);
    e.vx.resize(n);
    e.vy.resize(n);
    e.vz.resize(n);
    e.alive.assign(n, 1);
    e.seed = seed;
    // 1/e^2 density diameter 2w -> per-axis position sigma = w/2.
    const double sigma_r = diameter_1e2_m / 4.0;
    const double sigma_v = std::sqrt(phys::k_boltzmann * temperature_k / species.mass_kg);
    const std::uint64_t key = rng::substream(seed, "thermal_cloud");
    for (std::size_t i = 0; i < n; ++i) {
        rng::Counter c(key, i);
        e.x[i] = sigma_r * c.normal();
        e.y[i] = sigma_r * c.normal();
        e.z[i] = sigma_r * c.normal();
        e.vx[i] = sigma_v * c.normal();
        e.vy[i] = sigma_v * c.normal();
        e.vz[i] = sigma_v * c.normal();
    }
    return e;
}

namespace {

struct SampleState {
    double x, y, z, vx, vy, vz;
    double ax, ay, az;
    int over_energy_checks = 0;
    std::uint64_t photons = 0;
    std::uint64_t trap_photons = 0;
};

struct StepContext {
    const TrapPotential* trap;
    const ScatterSchedule* sched;
    double dt;
    double inv_mass;
    double recoil_speed;       // hbar k / m
    double pump_rate_hz;       // photons/s during the burst window
    std::int64_t steps_per_cycle;  // <= 0 when the cycle is off-grid
    std::int64_t pump_steps;
    double i_sat_gamma_half;   // precomputed rate coefficients
    double s_denom;            // 1 + (2 delta / gamma)^2
    double inv_isat;
};

inline double trap_rate(const StepContext& c, double intensity) {
    const double s = intensity * c.inv_isat;
    return c.i_sat_gamma_half * s / (c.s_denom + s);
}

inline void apply_kick(SampleState& s, rng::Counter& rnd, double recoil, int axis) {
    // Absorption: random sign along the beam axis. Emission: isotropic.
    const double sign = rnd.uniform() < 0.5 ? 1.0 : -1.0;
    if (axis == 0)
        s.vx += sign * recoil;
    else
        s.vy += sign * recoil;
    double ex, ey, ez;
    rnd.unit_vector(ex, ey, ez);
    s.vx += recoil * ex;
    s.vy += recoil * ey;
    s.vz += recoil * ez;
}

inline void advance_one(SampleState& s, const StepContext& c, std::uint64_t sample_key,
                        std::int64_t step_index) {
    // Velocity Verlet with the acceleration carried across steps.
    const double dt = c.dt;
    s.x += s.vx * dt + 0.5 * s.ax * dt * dt;
    s.y += s.vy * dt + 0.5 * s.ay * dt * dt;
    s.z += s.vz * dt + 0.5 * s.az * dt * dt;
    double fx, fy, fz;
    c.trap->force(s.x, s.y, s.z, fx, fy, fz);
    const double ax1 = fx * c.inv_mass, ay1 = fy * c.inv_mass, az1 = fz * c.inv_mass;
    s.vx += 0.5 * (s.ax + ax1) * dt;
    s.vy += 0.5 * (s.ay + ay1) * dt;
    s.vz += 0.5 * (s.az + az1) * dt;
    s.ax = ax1;
    s.ay = ay1;
    s.az = az1;

    const ScatterSchedule& sched = *c.sched;
    if (!sched.any_scattering()) return;

    rng::Counter rnd(sample_key, std::uint64_t(step_index));

    // Trap + probe: at most one event per step (rates per step are << 1).
    double mu_trap = 0.0;
    if (sched.trap_scattering) {
        const double r1 = std::hypot(s.y, s.z);
        const double r2 = std::hypot(s.x, s.z);
        const double i1 = c.trap->intensity_w_m2.value(r1);
        const double i2 = c.trap->intensity_w_m2.value(r2);
        mu_trap = trap_rate(c, i1 + i2) * dt;
        const double mu_tp = mu_trap + sched.probe_rate_hz * dt;
        const double u = rnd.uniform();
        if (u < mu_tp) {
            if (u < mu_trap) {
                // Which beam absorbed sets the kick axis (x-beam vs y-beam).
                const int axis = rnd.uniform() * (i1 + i2) < i1 ? 0 : 1;
                apply_kick(s, rnd, c.recoil_speed, axis);
                ++s.trap_photons;
            } else {
                apply_kick(s, rnd, c.recoil_speed, 0);
            }
            ++s.photons;
        }
    } else if (sched.probe_rate_hz > 0) {
        if (rnd.uniform() < sched.probe_rate_hz * dt) {
            apply_kick(s, rnd, c.recoil_speed, 0);
            ++s.photons;
        }
    }

    // Pump burst window at each cycle start; mean photons per step can
    // approach 1, so draw a Poisson count.
    if (c.pump_rate_hz > 0 && c.steps_per_cycle > 0) {
        const std::int64_t in_cycle = step_index % c.steps_per_cycle;
        if (in_cycle < c.pump_steps) {
            const int nk = rnd.poisson(c.pump_rate_hz * dt);
            for (int k = 0; k < nk; ++k) apply_kick(s, rnd, c.recoil_speed, 0);
            s.photons += std::uint64_t(nk);
        }
    }
}

StepContext make_context(const TrapPotential& trap, const ScatterSchedule& sched, double dt,
                         const AtomSpecies& species) {
    if (dt > 1.0000001e-6) throw config_error("kinetics: dt must be <= 1 us");
    if (dt <= 0) throw config_error("kinetics: dt must be > 0");
    StepContext c{};
    c.trap = &trap;
    c.sched = &sched;
    c.dt = dt;
    c.inv_mass = 1.0 / trap.mass_kg;
    const double k = phys::two_pi / species.wavelength_d2_m;
    c.recoil_speed = phys::hbar * k / species.mass_kg;
    c.inv_isat = 1.0 / species.i_sat_w_m2;
    const double d = 2.0 * phys::two_pi * sched.trap_detuning_hz / species.gamma_rad_s;
    c.i_sat_gamma_half = 0.5 * species.gamma_rad_s;
    c.s_denom = 1.0 + d * d;
    if (sched.pump_photons_per_cycle > 0) {
        c.pump_rate_hz = sched.pump_photons_per_cycle / sched.pump_duration_s;
        const double spc = sched.cycle_period_s / dt;
        if (std::abs(spc - std::round(spc)) > 1e-6)
            throw config_error("kinetics: cycle period must be an integer number of steps");
        c.steps_per_cycle = std::int64_t(std::round(spc));
        c.pump_steps = std::int64_t(std::round(sched.pump_duration_s / dt));
    }
    return c;
}

inline double total_energy(const TrapPotential& trap, const SampleState& s) {
    const double ke = 0.5 * trap.mass_kg * (s.vx * s.vx + s.vy * s.vy + s.vz * s.vz);
    return ke + trap.potential_j(s.x, s.y, s.z);
}

inline bool escaped(const TrapPotential& trap, SampleState& s) {
    const double box = trap.box_radius_m;
    if ((std::abs(s.x) > box && s.x * s.vx > 0) || (std::abs(s.y) > box && s.y * s.vy > 0) ||
        (std::abs(s.z) > box && s.z * s.vz > 0))
        return true;
    if (trap.u_max_j > 0) {
        if (total_energy(trap, s) > 1.2 * trap.u_max_j) {
            if (++s.over_energy_checks >= 3) return true;
        } else {
            s.over_energy_checks = 0;
        }
    }
    return false;
}

SampleState load_state(const AtomEnsemble& e, std::size_t i, const TrapPotential& trap) {
    SampleState s{};
    s.x = e.x[i];
    s.y = e.y[i];
    s.z = e.z[i];
    s.vx = e.vx[i];
    s.vy = e.vy[i];
    s.vz = e.vz[i];
    double fx, fy, fz;
    trap.force(s.x, s.y, s.z, fx, fy, fz);
    s.ax = fx / trap.mass_kg;
    s.ay = fy / trap.mass_kg;
    s.az = fz / trap.mass_kg;
    return s;
}

} // namespace

void step(AtomEnsemble& ensemble, const TrapPotential& trap, const ScatterSchedule& schedule,
          double dt_s, double t_now_s, std::uint64_t step_index) {
    const AtomSpecies& species = AtomSpecies::rb85();
    const StepContext ctx = make_context(trap, schedule, dt_s, species);
    (void)t_now_s;
    const std::uint64_t run_key = rng::substream(ensemble.seed, "kinetics");
    parallel_for(std::int64_t(ensemble.size()), [&](std::int64_t i) {
        if (!ensemble.alive[i]) return;
        SampleState s = load_state(ensemble, std::size_t(i), trap);
        advance_one(s, ctx, rng::mix64(run_key ^ rng::mix64(std::uint64_t(i))),
                    std::int64_t(step_index));
        ensemble.x[i] = s.x;
        ensemble.y[i] = s.y;
        ensemble.z[i] = s.z;
        ensemble.vx[i] = s.vx;
        ensemble.vy[i] = s.vy;
        ensemble.vz[i] = s.vz;
        if (escaped(trap, s)) ensemble.alive[i] = 0;
    });
}

KineticsRun survival_curve(const AtomEnsemble& initial, const TrapPotential& trap,
                           const ScatterSchedule& schedule, double t_total_s, double dt_s,
                           int checkpoints, double aperture_radius_m, Exec exec) {
    const AtomSpecies& species = AtomSpecies::rb85();
    const StepContext ctx = make_context(trap, schedule, dt_s, species);
    const std::size_t n = initial.size();
    if (n == 0) throw config_error("survival_curve: empty ensemble");
    if (checkpoints < 2) throw config_error("survival_curve: need >= 2 checkpoints");

    const std::int64_t total_steps = std::int64_t(std::round(t_total_s / dt_s));
    const std::int64_t check_every = std::max<std::int64_t>(total_steps / checkpoints, 1);
    const int n_check = int(total_steps / check_every) + 1; // includes t = 0
    const std::uint64_t run_key = rng::substream(initial.seed, "kinetics");
    const bool conservative = !schedule.any_scattering();
    const bool track_aperture = aperture_radius_m > 0;

    std::vector<double> escape_time(n, std::numeric_limits<double>::infinity());
    std::vector<double> alive_time(n, 0.0);
    std::vector<std::uint64_t> photons(n, 0), trap_photons(n, 0);
    std::vector<double> energy_drift(n, 0.0);
    std::vector<std::uint8_t> in_aperture; // row per sample, column per checkpoint
    if (track_aperture) in_aperture.assign(n * std::size_t(n_check), 0);

    auto run_sample = [&](std::int64_t i) {
        if (!initial.alive[i]) {
            escape_time[i] = 0.0;
            return;
        }
        SampleState s = load_state(initial, std::size_t(i), trap);
        const std::uint64_t sample_key = rng::mix64(run_key ^ rng::mix64(std::uint64_t(i)));
        const double e0 = total_energy(trap, s);
        const double e_denom = std::max(std::abs(e0), 1e-32);
        double drift = 0.0;
        if (track_aperture && std::hypot(s.y, s.z) < aperture_radius_m)
            in_aperture[std::size_t(i) * n_check] = 1;
        for (std::int64_t step_i = 0; step_i < total_steps; ++step_i) {
            advance_one(s, ctx, sample_key, step_i);
            if ((step_i + 1) % check_every == 0 || step_i + 1 == total_steps) {
                if (escaped(trap, s)) {
                    escape_time[i] = double(step_i + 1) * dt_s;
                    break;
                }
                if (track_aperture) {
                    const int ck = int((step_i + 1) / check_every);
                    if (ck < n_check && std::hypot(s.y, s.z) < aperture_radius_m)
                        in_aperture[std::size_t(i) * n_check + ck] = 1;
                }
                if (conservative)
                    drift = std::max(drift, std::abs(total_energy(trap, s) - e0) / e_denom);
            }
        }
        alive_time[i] = std::min(escape_time[i], t_total_s);
        photons[i] = s.photons;
        trap_photons[i] = s.trap_photons;
        energy_drift[i] = drift;
    };

    if (exec == Exec::parallel)
        parallel_for(std::int64_t(n), run_sample);
    else
        serial_for(std::int64_t(n), run_sample);

    KineticsRun out;
    out.curve.resize(checkpoints + 1);
    for (int k = 0; k <= checkpoints; ++k) {
        const double t = t_total_s * double(k) / checkpoints;
        std::size_t alive = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (escape_time[i] > t) ++alive;
        const double f = double(alive) / double(n);
        out.curve[k] = {t, f, std::sqrt(std::max(f * (1.0 - f), 0.0) / double(n)), 0.0};
        if (track_aperture) {
            const int ck = std::min(int(std::round(t / (double(check_every) * dt_s))), n_check - 1);
            std::size_t in = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (escape_time[i] > t && in_aperture[i * std::size_t(n_check) + ck]) ++in;
            out.curve[k].aperture_weight = double(in) / double(n);
        }
    }
    if (track_aperture) {
        // 1/e crossing of the weight, interpolated.
        const double target = out.curve.front().aperture_weight / std::exp(1.0);
        for (std::size_t k = 1; k < out.curve.size(); ++k) {
            if (out.curve[k].aperture_weight <= target) {
                const double w0 = out.curve[k - 1].aperture_weight;
                const double w1 = out.curve[k].aperture_weight;
                const double f = w0 > w1 ? (w0 - target) / (w0 - w1) : 0.0;
                out.weight_tau_s =
                    out.curve[k - 1].t_s + f * (out.curve[k].t_s - out.curve[k - 1].t_s);
                break;
            }
        }
    }

    double total_alive_time = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total_alive_time += alive_time[i];
        out.total_photons += photons[i];
        out.max_energy_drift = std::max(out.max_energy_drift, energy_drift[i]);
    }
    std::uint64_t total_trap_photons = 0;
    for (std::size_t i = 0; i < n; ++i) total_trap_photons += trap_photons[i];
    if (total_alive_time > 0) {
        out.mean_scatter_rate_hz = double(out.total_photons) / total_alive_time;
        out.mean_trap_rate_hz = double(total_trap_photons) / total_alive_time;
    }

    if (conservative && out.max_energy_drift > 1e-3)
        throw numerical_error("survival_curve: energy drift " +
                              std::to_string(out.max_energy_drift) +
                              " with scattering off; dt too large");

    // Exponential lifetime: fit over the decaying part of the curve.
    std::vector<double> ft, fy;
    for (const auto& p : out.curve) {
        if (p.fraction < 0.02) break;
        ft.push_back(p.t_s);
        fy.push_back(p.fraction);
    }
    if (out.curve.back().fraction > 0.90) {
        out.fitted_tau_s = std::numeric_limits<double>::infinity();
    } else if (ft.size() >= 3) {
        auto [amp, tau] = fit::fit_exponential(ft, fy);
        (void)amp;
        out.fitted_tau_s = tau;
    }
    return out;
}

double faraday_weight(const AtomEnsemble& ensemble, double aperture_radius_m) {
    if (ensemble.size() == 0) return 0.0;
    std::size_t in = 0;
    for (std::size_t i = 0; i < ensemble.size(); ++i)
        if (ensemble.alive[i] && std::hypot(ensemble.y[i], ensemble.z[i]) < aperture_radius_m) ++in;
    return double(in) / double(ensemble.size());
}

} // namespace faraday
