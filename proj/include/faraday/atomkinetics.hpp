#pragma once

#include <cstdint>
#include <vector>

#include "faraday/beamforge.hpp"
#include "faraday/physconst.hpp"
#include "faraday/spinsim.hpp"

namespace faraday {

/// Photon scattering rate (events/s) in the far-detuned two-level limit:
/// (Gamma/2) s / (1 + s + (2 * 2 pi Delta / Gamma)^2), s = I / I_sat.
double scattering_rate_hz(double intensity_w_m2, double detuning_hz, const AtomSpecies& species);

/// Monte Carlo sample cloud (structure-of-arrays; positions m, velocities m/s).
struct AtomEnsemble {
    std::vector<double> x, y, z, vx, vy, vz;
    std::vector<std::uint8_t> alive;
    double weight_per_sample = 1.0;
    std::uint64_t seed = 0;

    std::size_t size() const { return x.size(); }
    std::size_t alive_count() const;

    /// Gaussian cloud (1/e^2 density diameter) at Maxwell-Boltzmann temperature.
    static AtomEnsemble thermal_cloud(std::size_t n, double diameter_1e2_m, double temperature_k,
                                      const AtomSpecies& species, std::uint64_t seed);
};

/// Stochastic photon budget per sample. Recoil model: each event applies an
/// absorption kick hbar k along the beam axis (random sign) plus an emission
/// kick hbar k in a uniform random direction, so the mean heating is
/// 2 E_r per photon in total and (1 + 1/3) E_r along the absorption axis.
struct ScatterSchedule {
    bool trap_scattering = true;        // local rate from the trap intensity map
    double trap_detuning_hz = 25e9;
    double probe_rate_hz = 0;           // uniform, absorption along x
    double pump_photons_per_cycle = 0;  // burst at each cycle start, along x
    double pump_duration_s = 20e-6;
    double cycle_period_s = 2e-3;

    bool any_scattering() const {
        return trap_scattering || probe_rate_hz > 0 || pump_photons_per_cycle > 0;
    }
};

struct SurvivalPoint {
    double t_s = 0;
    double fraction = 0;
    double stderr_frac = 0;
    double aperture_weight = 0; // alive and inside the detection aperture
};

struct KineticsRun {
    std::vector<SurvivalPoint> curve;
    double fitted_tau_s = 0;          // exponential 1/e constant of the curve
    double weight_tau_s = 0;          // 1/e crossing of the aperture weight
    double mean_scatter_rate_hz = 0;  // photons/s per alive atom, all channels
    double mean_trap_rate_hz = 0;     // trap-beam photons only
    std::uint64_t total_photons = 0;
    double max_energy_drift = 0;      // only meaningful with scattering off
};

/// Advance every sample by one velocity-Verlet step with stochastic recoils;
/// draws are keyed by (seed, sample, step) so any looping order agrees.
void step(AtomEnsemble& ensemble, const TrapPotential& trap, const ScatterSchedule& schedule,
          double dt_s, double t_now_s, std::uint64_t step_index);

/// Full trajectory run: per-sample time loops (parallel across samples),
/// survival checkpoints, exponential lifetime fit, scattering statistics.
/// aperture_radius_m > 0 additionally tracks the in-aperture weight.
KineticsRun survival_curve(const AtomEnsemble& initial, const TrapPotential& trap,
                           const ScatterSchedule& schedule, double t_total_s, double dt_s,
                           int checkpoints = 400, double aperture_radius_m = 0.0,
                           Exec exec = Exec::parallel);

/// Fraction of alive samples within a transverse aperture around the probe
/// axis (x); links atom number to the trace envelope.
double faraday_weight(const AtomEnsemble& ensemble, double aperture_radius_m);

} // namespace faraday
