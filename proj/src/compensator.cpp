#include "faraday/compensator.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "faraday/errors.hpp"
#include "faraday/fit.hpp"
#include "faraday/io.hpp"
#include "faraday/rng.hpp"

namespace faraday {

namespace {

// Complex response of the per-window frequency estimate to a field component
// e^{i 2 pi f t}: the window weights instantaneous frequency by the squared
// signal envelope, H(f) = e^{i 2 pi f t_p} int e^{-2u/tau} e^{i 2 pi f u} du
// (normalized). Returns 1 when the correction is disabled.
std::complex<double> window_response(const FieldModelConfig& cfg, double freq_hz) {
    if (cfg.window_tau_s <= 0 || cfg.window_length_s <= 0) return 1.0;
    const double a = 2.0 / cfg.window_tau_s;
    const double w = phys::two_pi * freq_hz;
    const double W = cfg.window_length_s;
    const std::complex<double> denom(a, -w);
    const std::complex<double> num =
        1.0 - std::exp(-a * W) * std::polar(1.0, w * W);
    const double norm = (1.0 - std::exp(-a * W)) / a;
    std::complex<double> h = num / denom / norm;
    h *= std::polar(1.0, w * cfg.window_pump_offset_s);
    return h;
}

// Same filter applied to the eddy exponential: a real amplitude factor (the
// time dependence across windows is exact, only the in-window average scales).
double window_exp_gain(const FieldModelConfig& cfg, double tau_e) {
    if (cfg.window_tau_s <= 0 || cfg.window_length_s <= 0 || tau_e <= 0) return 1.0;
    const double a = 2.0 / cfg.window_tau_s;
    const double b = a + 1.0 / tau_e;
    const double W = cfg.window_length_s;
    const double gain =
        (a * (1.0 - std::exp(-b * W))) / (b * (1.0 - std::exp(-a * W)));
    return gain * std::exp(-cfg.window_pump_offset_s / tau_e);
}

struct DesignData {
    std::vector<double> t, nu, w; // valid windows only; w = 1/sigma
};

DesignData collect(const NuTimeline& timeline) {
    DesignData d;
    for (std::size_t i = 0; i < timeline.t_s.size(); ++i) {
        if (!timeline.valid[i]) continue;
        d.t.push_back(timeline.t_s[i]);
        d.nu.push_back(timeline.nu_hz[i]);
        d.w.push_back(timeline.sigma_hz[i] > 0 ? 1.0 / timeline.sigma_hz[i] : 1.0);
    }
    return d;
}

// Columns: [1, exp(-t/tau)?, sin/cos per harmonic]; rows pre-weighted.
Eigen::MatrixXd design_matrix(const DesignData& d, const FieldModelConfig& cfg, double tau) {
    const int n = int(d.t.size());
    const int ncol = 1 + (cfg.fit_eddy ? 1 : 0) + 2 * int(cfg.harmonics_hz.size());
    Eigen::MatrixXd a(n, ncol);
    for (int i = 0; i < n; ++i) {
        int c = 0;
        a(i, c++) = d.w[i];
        if (cfg.fit_eddy) a(i, c++) = d.w[i] * std::exp(-d.t[i] / tau);
        for (double f : cfg.harmonics_hz) {
            a(i, c++) = d.w[i] * std::sin(phys::two_pi * f * d.t[i]);
            a(i, c++) = d.w[i] * std::cos(phys::two_pi * f * d.t[i]);
        }
    }
    return a;
}

double solve_rss(const DesignData& d, const FieldModelConfig& cfg, double tau,
                 fit::LinearLsResult* out = nullptr) {
    Eigen::MatrixXd a = design_matrix(d, cfg, tau);
    Eigen::VectorXd b(int(d.t.size()));
    for (int i = 0; i < b.size(); ++i) b[i] = d.w[i] * d.nu[i];
    fit::LinearLsResult r = fit::linear_least_squares(a, b);
    if (out) *out = std::move(r);
    return out ? out->rss : r.rss;
}

} // namespace

FieldModelParams estimate_params(const NuTimeline& timeline, const FieldModelConfig& cfg,
                                 const AtomSpecies& species) {
    DesignData d = collect(timeline);
    if (d.t.size() < cfg.min_valid_windows)
        throw numerical_error("estimate_params: only " + std::to_string(d.t.size()) +
                              " valid windows; need " + std::to_string(cfg.min_valid_windows));
    if (!cfg.harmonics_hz.empty()) {
        const double span = d.t.back() - d.t.front();
        const double fmin = *std::min_element(cfg.harmonics_hz.begin(), cfg.harmonics_hz.end());
        if (span < 3.0 / fmin)
            throw numerical_error("estimate_params: timeline spans fewer than 3 line periods");
    }

    double best_tau = cfg.tau_min_s;
    if (cfg.fit_eddy) {
        // Log grid over the nonlinear coordinate, then golden-section refine.
        double best_rss = std::numeric_limits<double>::infinity();
        const double lmin = std::log(cfg.tau_min_s), lmax = std::log(cfg.tau_max_s);
        int best_i = 0;
        for (int i = 0; i < cfg.tau_grid_points; ++i) {
            const double tau =
                std::exp(lmin + (lmax - lmin) * double(i) / double(cfg.tau_grid_points - 1));
            const double rss = solve_rss(d, cfg, tau);
            if (rss < best_rss) {
                best_rss = rss;
                best_tau = tau;
                best_i = i;
            }
        }
        const double step = (lmax - lmin) / double(cfg.tau_grid_points - 1);
        const double lo = std::exp(lmin + step * std::max(best_i - 1, 0));
        const double hi =
            std::exp(lmin + step * std::min(best_i + 1, cfg.tau_grid_points - 1));
        best_tau = fit::golden_section_min([&](double tau) { return solve_rss(d, cfg, tau); }, lo,
                                           hi, 1e-5 * best_tau);
    }

    fit::LinearLsResult ls;
    solve_rss(d, cfg, best_tau, &ls);
    if (!std::isfinite(ls.condition) || ls.condition > cfg.max_condition) {
        // Name the degenerate column for the caller.
        std::string who = "offset/eddy";
        const int ncol = int(ls.x.size());
        if (ncol > 2 && !cfg.harmonics_hz.empty()) {
            // Recompute per-harmonic conditioning by dropping one at a time.
            double best_drop = ls.condition;
            for (std::size_t h = 0; h < cfg.harmonics_hz.size(); ++h) {
                FieldModelConfig cut = cfg;
                cut.harmonics_hz.erase(cut.harmonics_hz.begin() + long(h));
                fit::LinearLsResult sub;
                solve_rss(d, cut, best_tau, &sub);
                if (sub.condition < best_drop) {
                    best_drop = sub.condition;
                    who = io::format_double(cfg.harmonics_hz[h]) + " Hz harmonic";
                }
            }
        }
        throw numerical_error("estimate_params: design matrix condition " +
                              io::format_double(ls.condition) + " exceeds limit; degenerate " + who);
    }

    FieldModelParams p;
    p.condition = ls.condition;
    int c = 0;
    p.nu0_hz = ls.x[c];
    p.sigma_nu0_hz = std::sqrt(std::max(ls.covariance(c, c), 0.0));
    ++c;
    const double gyro = species.gyro_hz_per_gauss;
    if (cfg.fit_eddy) {
        const double gain = window_exp_gain(cfg, best_tau);
        p.eddy_amplitude_g = ls.x[c] / gyro / gain;
        p.sigma_eddy_amplitude_g = std::sqrt(std::max(ls.covariance(c, c), 0.0)) / gyro / gain;
        p.eddy_tau_s = best_tau;
        // 1D curvature of the profile RSS around the minimum.
        const double h = 0.02 * best_tau;
        const double r0 = solve_rss(d, cfg, best_tau);
        const double rp = solve_rss(d, cfg, best_tau + h);
        const double rm = solve_rss(d, cfg, best_tau - h);
        const double curv = (rp - 2 * r0 + rm) / (h * h);
        const int dof = std::max(int(d.t.size()) - int(ls.x.size()) - 1, 1);
        const double sigma2 = r0 / dof;
        p.sigma_eddy_tau_s = curv > 0 ? std::sqrt(2.0 * sigma2 / curv) : 0.0;
        ++c;
    }
    for (std::size_t k = 0; k < cfg.harmonics_hz.size(); ++k) {
        const double f = cfg.harmonics_hz[k];
        const double alpha = ls.x[c];     // sin coefficient (Hz)
        const double beta = ls.x[c + 1];  // cos coefficient (Hz)
        const double va = std::max(ls.covariance(c, c), 0.0);
        const double vb = std::max(ls.covariance(c + 1, c + 1), 0.0);
        const std::complex<double> h = k < cfg.harmonic_response.size()
                                           ? cfg.harmonic_response[k]
                                           : window_response(cfg, f);
        FittedHarmonic fh;
        fh.freq_hz = f;
        fh.amplitude_g = std::hypot(alpha, beta) / gyro / std::abs(h);
        fh.phase_rad = std::atan2(beta, alpha) - std::arg(h);
        fh.sigma_amplitude_g = std::sqrt(va + vb) / gyro / std::abs(h);
        p.harmonics.push_back(fh);
        c += 2;
    }
    p.residual_rms_hz = std::sqrt(ls.rss / double(d.t.size()));
    return p;
}

CompensationPlan make_plan(const FieldModelParams& params, double coil_bandwidth_hz,
                           std::vector<double>* dropped_hz) {
    CompensationPlan plan;
    plan.coil_bandwidth_hz = coil_bandwidth_hz;
    if (params.eddy_tau_s > 0 && params.eddy_amplitude_g != 0)
        plan.eddy = EddyBranch{params.eddy_amplitude_g, params.eddy_tau_s};
    for (const auto& h : params.harmonics) {
        if (h.amplitude_g == 0) continue;
        if (h.freq_hz > coil_bandwidth_hz) {
            if (dropped_hz) dropped_hz->push_back(h.freq_hz);
            continue;
        }
        plan.branches.push_back({h.freq_hz, h.amplitude_g, h.phase_rad});
    }
    plan.validate();
    return plan;
}

namespace {

double std_of_valid(const NuTimeline& t) {
    double sum = 0, sum2 = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < t.t_s.size(); ++i) {
        if (!t.valid[i]) continue;
        sum += t.nu_hz[i];
        sum2 += t.nu_hz[i] * t.nu_hz[i];
        ++n;
    }
    if (n < 2) return 0;
    const double mean = sum / double(n);
    return std::sqrt(std::max(sum2 / double(n) - mean * mean, 0.0));
}

} // namespace

std::complex<double> calibrate_harmonic_response(double freq_hz, double bias_g,
                                                 const PumpProbeSchedule& schedule,
                                                 double per_cycle_tau_s,
                                                 const AtomSpecies& species) {
    FieldTimeline probe;
    probe.bias_g = bias_g;
    const double amp = 200e-6; // small FM index: linear-response regime
    const double phase = 0.3;
    probe.harmonics = {{freq_hz, amp, phase}};
    SynthParams sp;
    sp.per_cycle_tau_s = per_cycle_tau_s;
    sp.envelope = EnvelopeModel::none;
    sp.snr = 1e9;
    sp.seed = 1;
    const NuTimeline nt = nu_timeline(synth_trace(probe, schedule, sp, species), schedule);
    double s2 = 0, c2 = 0, sc = 0, sy = 0, cy = 0;
    for (std::size_t i = 0; i < nt.t_s.size(); ++i) {
        if (!nt.valid[i]) continue;
        const double sn = std::sin(phys::two_pi * freq_hz * nt.t_s[i]);
        const double cs = std::cos(phys::two_pi * freq_hz * nt.t_s[i]);
        s2 += sn * sn;
        c2 += cs * cs;
        sc += sn * cs;
        sy += sn * nt.nu_hz[i];
        cy += cs * nt.nu_hz[i];
    }
    const double det = s2 * c2 - sc * sc;
    if (std::abs(det) < 1e-9)
        throw numerical_error("calibrate_harmonic_response: degenerate at " +
                              io::format_double(freq_hz) + " Hz");
    const double alpha = (c2 * sy - sc * cy) / det;
    const double beta = (s2 * cy - sc * sy) / det;
    const double inject = amp * species.gyro_hz_per_gauss;
    // measured = |H| inject sin(2 pi f t + phase + arg H)
    const std::complex<double> meas = std::polar(std::hypot(alpha, beta) / inject,
                                                 std::atan2(beta, alpha) - phase);
    return meas;
}

CompensationReport closed_loop(const FieldTimeline& truth, const PumpProbeSchedule& schedule,
                               const SynthParams& synth, const LoopConfig& config,
                               const AtomSpecies& species) {
    CompensationReport report;
    FieldTimeline working = truth;
    double prev_std = 0;
    int grew = 0;

    // One-time pipeline response calibration per fitted harmonic.
    FieldModelConfig model = config.model;
    model.window_pump_offset_s = schedule.pump_duration_s;
    model.window_tau_s = synth.per_cycle_tau_s;
    model.window_length_s = schedule.cycle_period_s - schedule.pump_duration_s;
    model.harmonic_response.clear();
    for (double f : model.harmonics_hz)
        model.harmonic_response.push_back(calibrate_harmonic_response(
            f, truth.bias_g, schedule, synth.per_cycle_tau_s, species));

    for (int iter = 0; iter < config.max_iterations; ++iter) {
        SynthParams sp = synth;
        sp.seed = rng::substream(synth.seed, "loop_iter") + std::uint64_t(iter);
        const PrecessionTrace trace = synth_trace(working, schedule, sp, species);
        const NuTimeline nt = nu_timeline(trace, schedule);
        const double this_std = std_of_valid(nt);

        if (iter == 0) {
            report.pre_timeline = nt;
            report.pre_std_hz = this_std;
            report.pre_spectrum = field_spectrum(nt, species);
        } else {
            report.post_timeline = nt;
            report.post_std_hz = this_std;
            const double improvement = prev_std > 0 ? (prev_std - this_std) / prev_std : 0.0;
            if (improvement < -config.convergence_improvement) {
                // Grew beyond noise level two iterations running: diverging.
                if (++grew >= 2) {
                    report.diverged = true;
                    break;
                }
            } else {
                grew = 0;
                if (std::abs(improvement) < config.convergence_improvement) {
                    report.converged = true;
                    break;
                }
            }
        }
        prev_std = this_std;

        FieldModelParams params = estimate_params(nt, model, species);
        if (iter == 0) report.first_fit = params;
        report.final_fit = params;

        // Only the configured branches are driven.
        FieldModelParams driven = params;
        driven.harmonics.clear();
        for (const auto& h : params.harmonics)
            for (double f : config.plan_harmonics_hz)
                if (std::abs(h.freq_hz - f) < 1e-6) driven.harmonics.push_back(h);
        CompensationPlan plan = make_plan(driven, config.coil_bandwidth_hz);
        if (plan.empty()) {
            report.converged = true;
            break;
        }
        report.plans.push_back(plan);
        working = apply(working, plan);
        report.iterations = iter + 1;
    }

    // Final verification pass if the loop ended without one.
    if (report.post_timeline.t_s.empty()) {
        SynthParams sp = synth;
        sp.seed = rng::substream(synth.seed, "loop_verify");
        const PrecessionTrace trace = synth_trace(working, schedule, sp, species);
        report.post_timeline = nu_timeline(trace, schedule);
        report.post_std_hz = std_of_valid(report.post_timeline);
    }
    report.post_spectrum = field_spectrum(report.post_timeline, species);

    for (double f : config.model.harmonics_hz) {
        HarmonicSuppression s;
        s.freq_hz = f;
        s.pre_amplitude_g = spectrum_amplitude_at(report.pre_spectrum, f);
        s.post_amplitude_g = spectrum_amplitude_at(report.post_spectrum, f);
        s.factor = s.post_amplitude_g > 0 ? s.pre_amplitude_g / s.post_amplitude_g
                                          : std::numeric_limits<double>::infinity();
        report.suppression.push_back(s);
    }
    return report;
}

void CompensationReport::save(const std::filesystem::path& dir) const {
    io::KvFile kv;
    kv.set_double("pre_std_hz", pre_std_hz);
    kv.set_double("post_std_hz", post_std_hz);
    kv.set("iterations", std::to_string(iterations));
    kv.set("converged", converged ? "1" : "0");
    kv.set("diverged", diverged ? "1" : "0");
    kv.set_double("eddy_amplitude_gauss", first_fit.eddy_amplitude_g);
    kv.set_double("eddy_amplitude_sigma_gauss", first_fit.sigma_eddy_amplitude_g);
    kv.set_double("eddy_tau_s", first_fit.eddy_tau_s);
    kv.set_double("eddy_tau_sigma_s", first_fit.sigma_eddy_tau_s);
    for (const auto& h : first_fit.harmonics) {
        const std::string p = "fit_" + std::to_string(int(h.freq_hz)) + "hz";
        kv.set_double(p + "_amplitude_gauss", h.amplitude_g);
        kv.set_double(p + "_phase_rad", h.phase_rad);
    }
    kv.set_double("fit_residual_rms_hz", final_fit.residual_rms_hz);
    for (const auto& s : suppression) {
        const std::string p = "suppression_" + std::to_string(int(s.freq_hz)) + "hz";
        kv.set_double(p + "_pre_gauss", s.pre_amplitude_g);
        kv.set_double(p + "_post_gauss", s.post_amplitude_g);
        kv.set_double(p + "_factor", s.factor);
    }
    io::write_text_file(dir / "report.txt", kv.serialize());

    pre_timeline.save_csv(dir / "nu_pre.csv");
    post_timeline.save_csv(dir / "nu_post.csv");
    auto save_spectrum = [&](const FieldSpectrum& s, const std::filesystem::path& path) {
        io::CsvWriter w(path);
        w.raw_row("f_hz,amp_gauss");
        for (std::size_t i = 0; i < s.freq_hz.size(); ++i)
            w.raw_row(io::format_double(s.freq_hz[i]) + "," + io::format_double(s.amplitude_g[i]));
        w.close();
    };
    save_spectrum(pre_spectrum, dir / "field_spectrum_pre.csv");
    save_spectrum(post_spectrum, dir / "field_spectrum_post.csv");
}

} // namespace faraday
