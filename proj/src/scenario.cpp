#include "faraday/scenario.hpp"

#include <cmath>
#include <set>

#include "faraday/errors.hpp"
#include "faraday/io.hpp"
#include "faraday/rng.hpp"
#include "faraday/units.hpp"

namespace faraday {

namespace {

enum class Dim { time, length, frequency, field, power, intensity, angle, temperature, count };

bool suffix_in_dim(const std::string& suffix, Dim d) {
    auto in = [&](std::initializer_list<const char*> names) {
        for (const char* n : names)
            if (suffix == n) return true;
        return false;
    };
    switch (d) {
        case Dim::time: return in({"s", "ms", "us"});
        case Dim::length: return in({"m", "mm", "um", "nm"});
        case Dim::frequency: return in({"hz", "khz", "mhz", "ghz"});
        case Dim::field: return in({"gauss", "g", "mg", "ug"});
        case Dim::power: return in({"w", "mw"});
        case Dim::intensity: return in({"w_m2", "mw_cm2"});
        case Dim::angle: return in({"rad", "deg"});
        case Dim::temperature: return in({"k", "uk"});
        case Dim::count: return in({"1"});
    }
    return false;
}

/// Reads physical keys written as "<base>_<unit>"; converts to internal units
/// and enforces that the unit matches the declared dimension.
class ScenarioReader {
public:
    ScenarioReader(const io::KvFile& kv) : kv_(kv) {}

    bool quantity(const std::string& base, Dim dim, double& out) {
        for (const auto& [key, value] : kv_.entries()) {
            auto split = units::split_unit_suffix(key);
            if (!split || split->first != base) continue;
            if (!suffix_in_dim(split->second, dim))
                throw config_error(kv_.origin() + ":" + std::to_string(kv_.line_of(key)) +
                                   ": key '" + key + "' has unit '" + split->second +
                                   "' of the wrong dimension");
            out = units::to_internal(kv_.get_double(key), split->second);
            return true;
        }
        return false;
    }

    bool integer(const std::string& key, long long& out) {
        auto v = kv_.find(key);
        if (!v) return false;
        out = std::stoll(*v);
        return true;
    }

    /// Dimensionless quantity, no unit suffix.
    bool number(const std::string& key, double& out) {
        auto v = kv_.find(key);
        if (!v) return false;
        out = kv_.get_double(key);
        return true;
    }

    bool text(const std::string& key, std::string& out) {
        auto v = kv_.find(key);
        if (!v) return false;
        out = *v;
        return true;
    }

    bool flag(const std::string& key, bool& out) {
        auto v = kv_.find(key);
        if (!v) return false;
        if (*v == "1" || *v == "true")
            out = true;
        else if (*v == "0" || *v == "false")
            out = false;
        else
            throw config_error(kv_.origin() + ": key '" + key + "' must be 0/1/true/false");
        return true;
    }

private:
    const io::KvFile& kv_;
};

} // namespace

Scenario Scenario::load(const std::filesystem::path& path) {
    return parse(io::read_text_file(path), path.string());
}

Scenario Scenario::parse(const std::string& text, const std::string& origin) {
    io::KvFile kv = io::KvFile::parse(text, origin);
    ScenarioReader r(kv);
    Scenario s;
    s.canonical_text = text;

    r.text("name", s.name);
    long long ll;
    if (r.integer("seed", ll)) s.seed = std::uint64_t(ll);

    // Beam
    if (r.integer("beam_charge", ll)) s.beam.charge = int(ll);
    r.quantity("beam_waist", Dim::length, s.beam.waist_m);
    r.quantity("beam_focal_length", Dim::length, s.beam.focal_length_m);
    r.quantity("beam_wavelength", Dim::length, s.beam.wavelength_m);
    r.quantity("beam_power", Dim::power, s.beam.power_w);
    r.quantity("beam_detuning", Dim::frequency, s.beam.detuning_hz);
    r.quantity("beam_z_offset", Dim::length, s.beam.z_offset_m);
    r.quantity("beam_slm_aperture_radius", Dim::length, s.beam.slm_aperture_radius_m);
    if (r.integer("beam_grid_n", ll)) s.beam.grid_n = int(ll);
    r.quantity("beam_grid_pitch", Dim::length, s.beam.grid_pitch_m);
    std::string mode;
    if (r.text("beam_plane_mode", mode)) {
        if (mode == "ring")
            s.plane_mode = PlaneSelect::ring_diameter;
        else if (mode == "peak")
            s.plane_mode = PlaneSelect::peak_intensity;
        else if (mode == "fixed")
            s.plane_mode = PlaneSelect::fixed;
        else
            throw config_error(origin + ": beam_plane_mode must be ring|peak|fixed");
    }
    r.quantity("beam_ring_target", Dim::length, s.ring_target_m);

    // Field truth
    r.quantity("field_bias", Dim::field, s.truth.bias_g);
    r.quantity("field_eddy_amplitude", Dim::field, s.truth.eddy_amplitude_g);
    r.quantity("field_eddy_tau", Dim::time, s.truth.eddy_tau_s);
    r.quantity("field_noise_density", Dim::field, s.truth.noise_g_per_rthz);
    long long nh = 0;
    r.integer("field_harmonics", nh);
    for (long long i = 0; i < nh; ++i) {
        const std::string p = "field_harmonic_" + std::to_string(i);
        Harmonic h;
        if (!r.quantity(p + "_freq", Dim::frequency, h.freq_hz))
            throw config_error(origin + ": missing " + p + "_freq_*");
        r.quantity(p + "_amplitude", Dim::field, h.amplitude_g);
        r.quantity(p + "_phase", Dim::angle, h.phase_rad);
        s.truth.harmonics.push_back(h);
    }
    long long ndrift = 0;
    r.integer("field_drift_points", ndrift);
    for (long long i = 0; i < ndrift; ++i) {
        const std::string p = "field_drift_" + std::to_string(i);
        double t = 0, g = 0;
        if (!r.quantity(p + "_t", Dim::time, t) || !r.quantity(p + "_offset", Dim::field, g))
            throw config_error(origin + ": incomplete drift point " + p);
        s.truth.drift.emplace_back(t, g);
    }
    s.truth.seed = rng::substream(s.seed, "field_noise_root");

    // Schedule
    r.quantity("sched_cycle_period", Dim::time, s.schedule.cycle_period_s);
    r.quantity("sched_pump_duration", Dim::time, s.schedule.pump_duration_s);
    if (r.integer("sched_cycles", ll)) s.schedule.cycles = int(ll);
    if (r.integer("sched_averages", ll)) s.schedule.averages = int(ll);
    r.quantity("sched_sample_rate", Dim::frequency, s.schedule.sample_rate_hz);

    // Synthesis
    r.quantity("synth_cycle_tau", Dim::time, s.synth.per_cycle_tau_s);
    std::string env;
    if (r.text("synth_envelope", env)) s.synth.envelope = envelope_from_tag(env);
    r.quantity("synth_trapped_tau", Dim::time, s.synth.trapped_tau_s);
    r.quantity("synth_fall_tau", Dim::time, s.synth.fall_tau_s);
    r.number("synth_snr", s.synth.snr);
    r.quantity("synth_phase_jitter", Dim::angle, s.synth.phase_jitter_rad);
    s.synth.seed = rng::substream(s.seed, "synth");

    // Kinetics
    if (r.integer("kin_samples", ll)) s.kinetics.samples = std::size_t(ll);
    r.number("kin_atom_number", s.kinetics.atom_number);
    r.quantity("kin_cloud_diameter", Dim::length, s.kinetics.cloud_diameter_m);
    r.quantity("kin_temperature", Dim::temperature, s.kinetics.temperature_k);
    r.quantity("kin_dt", Dim::time, s.kinetics.dt_s);
    r.quantity("kin_t_total", Dim::time, s.kinetics.t_total_s);
    r.quantity("kin_aperture_radius", Dim::length, s.kinetics.aperture_radius_m);
    r.flag("kin_trap_on", s.kinetics.trap_on);
    r.flag("kin_gravity", s.kinetics.gravity);
    r.flag("kin_trap_scattering", s.kinetics.trap_scattering);
    r.quantity("kin_probe_rate", Dim::frequency, s.kinetics.probe_rate_hz);
    r.number("kin_pump_photons_per_cycle", s.kinetics.pump_photons_per_cycle);

    // Spin
    double beta_hz;
    if (r.quantity("spin_beta", Dim::frequency, beta_hz)) s.spin.beta_rad_s = phys::two_pi * beta_hz;
    r.quantity("spin_theta_a", Dim::angle, s.spin.theta_a_rad);
    r.quantity("spin_theta_b", Dim::angle, s.spin.theta_b_rad);
    r.quantity("spin_tau", Dim::time, s.spin.tau_s);
    r.number("spin_snr", s.spin.snr);

    // Compensation loop
    long long nfit = 0;
    if (r.integer("comp_fit_harmonics", nfit)) {
        s.loop.model.harmonics_hz.clear();
        for (long long i = 0; i < nfit; ++i) {
            double f;
            if (!r.quantity("comp_fit_harmonic_" + std::to_string(i), Dim::frequency, f))
                throw config_error(origin + ": missing comp_fit_harmonic_" + std::to_string(i));
            s.loop.model.harmonics_hz.push_back(f);
        }
    }
    long long nplan = -1;
    if (r.integer("comp_plan_harmonics", nplan)) {
        s.loop.plan_harmonics_hz.clear();
        for (long long i = 0; i < nplan; ++i) {
            double f;
            if (!r.quantity("comp_plan_harmonic_" + std::to_string(i), Dim::frequency, f))
                throw config_error(origin + ": missing comp_plan_harmonic_" + std::to_string(i));
            s.loop.plan_harmonics_hz.push_back(f);
        }
    }
    r.quantity("comp_coil_bandwidth", Dim::frequency, s.loop.coil_bandwidth_hz);
    if (r.integer("comp_max_iterations", ll)) s.loop.max_iterations = int(ll);

    const auto unknown = kv.unconsumed();
    if (!unknown.empty())
        throw config_error(origin + ":" + std::to_string(kv.line_of(unknown.front())) +
                           ": unknown key '" + unknown.front() + "'");

    s.truth.validate();
    s.beam.validate();
    return s;
}

} // namespace faraday
