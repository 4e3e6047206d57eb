#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "faraday/fieldscape.hpp"
#include "faraday/spectra.hpp"
#include "faraday/spinsim.hpp"

namespace faraday {

struct FieldModelConfig {
    std::vector<double> harmonics_hz = {60.0};  // fitted line components
    bool fit_eddy = true;
    double tau_min_s = 5e-3;   // eddy decay search grid
    double tau_max_s = 100e-3;
    int tau_grid_points = 40;
    double max_condition = 1e8;
    std::size_t min_valid_windows = 50;
    // Window response deconvolution: each window's nu is a weighted average
    // over the probe interval, which attenuates and phase-lags AC components.
    // harmonic_response carries the measured complex response per fitted
    // harmonic (see calibrate_harmonic_response); when empty, an analytic
    // envelope-weighted model is used if the window fields are set, else no
    // correction.
    std::vector<std::complex<double>> harmonic_response;
    double window_pump_offset_s = 0;
    double window_tau_s = 0;
    double window_length_s = 0;
};

/// Measured complex response of the synth -> window-fit pipeline to a unit
/// field harmonic at freq_hz: inject a known small line on a clean carrier,
/// run the same per-window fits, and regress the recovered sin/cos. The
/// closed loop divides fitted harmonics by this, the software analog of
/// tuning coil amplitude and phase against a known source.
std::complex<double> calibrate_harmonic_response(double freq_hz, double bias_g,
                                                 const PumpProbeSchedule& schedule,
                                                 double per_cycle_tau_s,
                                                 const AtomSpecies& species);

struct FittedHarmonic {
    double freq_hz = 0;
    double amplitude_g = 0;
    double phase_rad = 0;
    double sigma_amplitude_g = 0;
};

struct FieldModelParams {
    double nu0_hz = 0;               // static offset, frequency units
    double sigma_nu0_hz = 0;
    double eddy_amplitude_g = 0;
    double sigma_eddy_amplitude_g = 0;
    double eddy_tau_s = 0;
    double sigma_eddy_tau_s = 0;
    std::vector<FittedHarmonic> harmonics;
    double residual_rms_hz = 0;
    double condition = 0;
};

/// Separable least squares on a nu_L timeline: scan the single nonlinear
/// parameter tau_e on a log grid (golden-section refined), solving the linear
/// problem {nu0, eddy amplitude, harmonic sin/cos} at each candidate.
FieldModelParams estimate_params(const NuTimeline& timeline, const FieldModelConfig& config,
                                 const AtomSpecies& species);

/// Plan with the eddy branch and one branch per fitted harmonic; branches
/// above the coil bandwidth are dropped (count reported via dropped list).
CompensationPlan make_plan(const FieldModelParams& params, double coil_bandwidth_hz,
                           std::vector<double>* dropped_hz = nullptr);

struct HarmonicSuppression {
    double freq_hz = 0;
    double pre_amplitude_g = 0;
    double post_amplitude_g = 0;
    double factor = 0;
};

struct CompensationReport {
    double pre_std_hz = 0;
    double post_std_hz = 0;
    std::vector<HarmonicSuppression> suppression;
    FieldModelParams first_fit; // fit of the raw disturbance (physical params)
    FieldModelParams final_fit; // fit of the last measured residual
    int iterations = 0;
    bool converged = false;
    bool diverged = false;
    NuTimeline pre_timeline;
    NuTimeline post_timeline;
    FieldSpectrum pre_spectrum;
    FieldSpectrum post_spectrum;
    std::vector<CompensationPlan> plans;

    void save(const std::filesystem::path& dir) const;
};

struct LoopConfig {
    FieldModelConfig model;
    std::vector<double> plan_harmonics_hz = {60.0}; // branches actually driven
    double coil_bandwidth_hz = 1000.0;
    int max_iterations = 3;
    double convergence_improvement = 0.05;
};

/// Closed simulate -> measure -> fit -> compensate loop on a truth timeline.
CompensationReport closed_loop(const FieldTimeline& truth, const PumpProbeSchedule& schedule,
                               const SynthParams& synth, const LoopConfig& config,
                               const AtomSpecies& species);

} // namespace faraday
