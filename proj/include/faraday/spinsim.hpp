#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "faraday/fieldscape.hpp"
#include "faraday/physconst.hpp"

namespace faraday {

enum class Exec { parallel, serial };

/// Optical pumping / probing cadence of one measurement run.
struct PumpProbeSchedule {
    double cycle_period_s = 2e-3;
    double pump_duration_s = 20e-6;
    int cycles = 200;
    int averages = 64;
    double sample_rate_hz = 1e6;

    int samples_per_cycle() const;
    int pump_samples() const;
    int total_samples() const { return samples_per_cycle() * cycles; }
    double total_time_s() const { return cycle_period_s * cycles; }

    /// Checks pump < cycle, integer sample counts, and (given the largest
    /// expected Larmor frequency) the 10x sampling margin.
    void validate(double expected_nu_hz = 0.0) const;
};

enum class EnvelopeModel { trapped, untrapped, none };

EnvelopeModel envelope_from_tag(const std::string& tag);
std::string envelope_tag(EnvelopeModel m);

/// Sampled polarimeter voltage for a full multi-cycle run.
struct PrecessionTrace {
    std::vector<double> v;
    double sample_rate_hz = 1e6;
    PumpProbeSchedule schedule;
    EnvelopeModel envelope = EnvelopeModel::none;
    std::uint64_t seed = 0;

    double time_of(std::size_t i) const { return double(i) / sample_rate_hz; }

    void save_csv(const std::filesystem::path& path) const;
    static PrecessionTrace load_csv(const std::filesystem::path& path);
    void save_raw(const std::filesystem::path& path) const;
    static PrecessionTrace load_raw(const std::filesystem::path& path);
};

struct SynthParams {
    double per_cycle_tau_s = 0.5e-3;  // damped-sinusoid decay inside a cycle
    EnvelopeModel envelope = EnvelopeModel::trapped;
    double trapped_tau_s = 0.150;     // cycle-amplitude 1/e constant
    double fall_tau_s = 0.013;        // untrapped fall-away 1/e constant
    double amplitude_v = 1.0;
    double snr = 15.0;                // amplitude / per-shot noise RMS
    double phase_jitter_rad = 0.0;    // per-cycle pump phase jitter
    std::uint64_t seed = 1;
};

/// Cycle-amplitude factor at cycle start time T. Trapped samples decay
/// exponentially (boil-off); untrapped samples fall through the detection
/// window, exp(-(T/tau)^4), which crosses 1/e at tau and is gone soon after.
double cycle_envelope(EnvelopeModel m, double t_s, const SynthParams& p);

/// Phenomenological polarimeter trace: per cycle i starting at T_i,
///   V(t) = A(T_i) exp(-(t-T_i)/tau) sin(2 pi g \int_{T_i}^t B dt' + phi_i) + n(t)
/// with n white, RMS = amplitude / (snr sqrt(averages)). Pumping restarts the
/// phase each cycle; phi_i is 0 up to the configured jitter.
PrecessionTrace synth_trace(const FieldTimeline& timeline, const PumpProbeSchedule& schedule,
                            const SynthParams& params, const AtomSpecies& species,
                            Exec exec = Exec::parallel);

/// Single-spin model with the rank-2 light-shift term:
///   H/hbar = omega_L F_z + beta (F . eps(theta))^2,  eps = (0, sin, cos).
struct SpinModel {
    int f = 3;
    double larmor_hz = 46674.15;
    double beta_rad_s = phys::two_pi * 1000.0;
    double theta_rad = 0.0;
    double damping_rate_hz = 500.0; // 1/tau applied to the returned signal
};

struct SpinEvolution {
    std::vector<double> t_s;
    std::vector<double> fx;  // <F_x>(t) e^{-t/tau}
    std::vector<double> fy;  // <F_y>(t) e^{-t/tau}
    double norm_drift = 0.0;
    double energy_drift = 0.0; // relative <H> drift of the coherent part
};

/// Exact evolution from the stretched state along x (one diagonalization of
/// the (2F+1)-dim Hamiltonian; unitary at every step by construction).
SpinEvolution quantum_evolve(const SpinModel& model, std::span<const double> t_grid);

/// quantum_evolve wrapped into polarimeter voltage cycles with noise.
PrecessionTrace revival_trace(const SpinModel& model, const PumpProbeSchedule& schedule,
                              double snr, std::uint64_t seed);

} // namespace faraday
