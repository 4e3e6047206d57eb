#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "faraday/physconst.hpp"
#include "faraday/spinsim.hpp"

namespace faraday {

/// One per-cycle probe segment (pump interval excluded).
struct Segment {
    double t_start_s = 0; // cycle start time
    int cycle = 0;
    std::vector<double> v;
    double sample_rate_hz = 0;
};

std::vector<Segment> window_slice(const PrecessionTrace& trace, const PumpProbeSchedule& schedule);

struct Spectrum {
    std::vector<double> freq_hz;
    std::vector<double> power;
    double sample_rate_hz = 0;
    int n_samples = 0;  // before padding
    int pad_factor = 1;
    double bin_hz() const { return freq_hz.size() > 1 ? freq_hz[1] - freq_hz[0] : 0.0; }
};

/// Magnitude-squared DFT of the mean-subtracted segment, zero-padded for grid
/// interpolation (rectangular window). Needs >= 64 samples.
Spectrum power_spectrum(std::span<const double> v, double sample_rate_hz, int zero_pad_factor = 8);

struct SpectralFit {
    double nu_hz = 0;        // Lorentzian center
    double half_width_hz = 0;
    double amplitude = 0;    // peak power above baseline
    double baseline = 0;
    double sigma_nu_hz = 0;  // center uncertainty
    double residual_rms = 0;
    bool valid = false;
    bool no_signal = false;  // no peak above threshold (distinct from fit failure)
    int iterations = 0;
    int window_index = -1;
};

/// Least-squares a / (1 + ((nu-nu0)/w)^2) + b over +-10 w0 around the peak.
SpectralFit lorentzian_fit(const Spectrum& spectrum);

struct DampedSineFit {
    double amplitude_v = 0;
    double tau_s = 0;
    double nu_hz = 0;
    double phase_rad = 0;
    double sigma_nu_hz = 0;
    double residual_rms = 0;
    bool converged = false;
};

/// Time-domain nonlinear fit of A exp(-t/tau) sin(2 pi nu t + phi); the
/// independent cross-check for lorentzian_fit.
DampedSineFit damped_sine_fit(std::span<const double> v, double sample_rate_hz);

struct NuTimeline {
    std::vector<double> t_s;       // cycle start times
    std::vector<double> nu_hz;
    std::vector<double> sigma_hz;
    std::vector<std::uint8_t> valid;
    double dt_s = 0;               // cycle period

    std::size_t valid_count() const;
    void save_csv(const std::filesystem::path& path, const std::string& input_checksum = {}) const;
    static NuTimeline load_csv(const std::filesystem::path& path);
};

/// lorentzian_fit mapped over window_slice; invalid windows carry flags.
NuTimeline nu_timeline(const PrecessionTrace& trace, const PumpProbeSchedule& schedule,
                       Exec exec = Exec::parallel);

struct FieldSpectrum {
    std::vector<double> freq_hz;
    std::vector<double> amplitude_g; // single-sided
    int interpolated_windows = 0;    // gap-filled before transforming
};

/// Amplitude spectrum of field_from_frequency(nu_L(t)). Gaps above 10% of the
/// windows are an error; smaller gaps are linearly interpolated.
FieldSpectrum field_spectrum(const NuTimeline& timeline, const AtomSpecies& species);

/// Amplitude at the bin nearest f_hz.
double spectrum_amplitude_at(const FieldSpectrum& s, double f_hz);

struct Raster {
    int rows = 0; // sample index within cycle
    int cols = 0; // cycle index
    std::vector<double> m; // row-major
    double at(int r, int c) const { return m[std::size_t(r) * cols + c]; }
    void save_p5(const std::filesystem::path& path) const;
    void save_csv(const std::filesystem::path& path) const;
};

/// Fig-style 2D view: column c holds cycle c's probe samples.
Raster rasterize(const PrecessionTrace& trace, const PumpProbeSchedule& schedule);

} // namespace faraday
