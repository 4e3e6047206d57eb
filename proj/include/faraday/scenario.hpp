#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "faraday/beamforge.hpp"
#include "faraday/compensator.hpp"
#include "faraday/fieldscape.hpp"
#include "faraday/spinsim.hpp"

namespace faraday {

struct KineticsConfig {
    std::size_t samples = 10000;
    double atom_number = 1e6;
    double cloud_diameter_m = 500e-6;
    double temperature_k = 10e-6;
    double dt_s = 1e-6;
    double t_total_s = 0.400;
    double aperture_radius_m = 0.25e-3;
    bool trap_on = true;
    bool gravity = true;
    bool trap_scattering = true;
    double probe_rate_hz = 620.0;       // from the probe power/waist/detuning
    double pump_photons_per_cycle = 11.0;
};

struct SpinConfig {
    double beta_rad_s = phys::two_pi * 1000.0;
    double theta_a_rad = 0.0;
    double theta_b_rad = 0.9553166181245093; // arctan(sqrt(2))
    double tau_s = 1e-3;
    double snr = 15.0;
};

/// One named bundle that fully determines every output.
struct Scenario {
    std::string name = "default";
    std::uint64_t seed = 20260808;
    BeamSpec beam;
    PlaneSelect plane_mode = PlaneSelect::ring_diameter;
    double ring_target_m = 0.48e-3;
    FieldTimeline truth;
    PumpProbeSchedule schedule;
    SynthParams synth;
    KineticsConfig kinetics;
    SpinConfig spin;
    LoopConfig loop;

    std::string canonical_text; // exact file contents, for hashing

    static Scenario load(const std::filesystem::path& path);
    static Scenario parse(const std::string& text, const std::string& origin);
};

} // namespace faraday
