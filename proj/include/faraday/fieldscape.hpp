#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace faraday {

/// One AC line component of the ambient field.
struct Harmonic {
    double freq_hz = 60.0;
    double amplitude_g = 0.0;
    double phase_rad = 0.0;
};

struct EddyBranch {
    double step_amplitude_g = 0.0;
    double tau_s = 0.020;
};

struct SinBranch {
    double freq_hz = 60.0;
    double amplitude_g = 0.0;
    double phase_rad = 0.0;
};

/// Opposing-field waveform: a low-passed step against the eddy transient plus
/// sinusoidal coil currents against line harmonics. Branch parameters are the
/// fitted disturbance parameters; the emitted field is their negation.
struct CompensationPlan {
    std::optional<EddyBranch> eddy;
    std::vector<SinBranch> branches;
    double coil_bandwidth_hz = 1000.0;
    double line_freq_hz = 60.0;

    /// Throws config_error if a branch is off the line-harmonic comb, not
    /// finite, or above the coil bandwidth.
    void validate() const;

    bool empty() const { return !eddy && branches.empty(); }
};

/// Field produced by the plan at time t (Gauss). Includes the overall minus
/// sign: the coils oppose what the branches describe.
double compensation_field_g(const CompensationPlan& plan, double t_s);

/// Analytic integral of compensation_field_g over [t0, t1], in Gauss-seconds.
double compensation_integral_gs(const CompensationPlan& plan, double t0_s, double t1_s);

/// Scalar field along z versus time since MOT-coil shutoff:
/// bias + eddy transient + AC line harmonics + slow drift + white noise,
/// minus any applied compensation plans. Immutable after construction;
/// evaluation is reentrant and deterministic in the seed.
struct FieldTimeline {
    double bias_g = 0.0;
    double eddy_amplitude_g = 0.0;
    double eddy_tau_s = 0.020;
    std::vector<Harmonic> harmonics;
    std::vector<std::pair<double, double>> drift; // (t_s, offset_g), piecewise linear
    double noise_g_per_rthz = 0.0;
    double noise_sample_rate_hz = 1e6;
    std::uint64_t seed = 0;
    std::vector<CompensationPlan> plans;

    void validate() const;

    /// B(t) in Gauss. t < 0 is rejected. Includes the noise sample.
    double field_at(double t_s) const;

    /// B(t) without the stochastic term (used by analytic oracles and the
    /// phase integral).
    double deterministic_field_at(double t_s) const;

    /// Analytic integral of the deterministic field over [t0, t1] (G s).
    double integral_gs(double t0_s, double t1_s) const;

    /// Upper bound on |B| over t >= 0; used for aliasing checks.
    double max_abs_field_g() const;

    std::string serialize() const;
    static FieldTimeline deserialize(const std::string& text, const std::string& origin);
};

/// New timeline whose field is the pointwise sum of `timeline` and the plan's
/// opposing field.
FieldTimeline apply(const FieldTimeline& timeline, const CompensationPlan& plan);

} // namespace faraday
