#include "faraday/fieldscape.hpp"

#include <cmath>

#include "faraday/errors.hpp"
#include "faraday/io.hpp"
#include "faraday/physconst.hpp"
#include "faraday/rng.hpp"

namespace faraday {

namespace {

bool is_line_multiple(double f, double line) {
    const double ratio = f / line;
    return ratio > 0.5 && std::abs(ratio - std::round(ratio)) < 1e-9;
}

double drift_value(const std::vector<std::pair<double, double>>& drift, double t) {
    if (drift.empty()) return 0.0;
    if (t <= drift.front().first) return drift.front().second;
    if (t >= drift.back().first) return drift.back().second;
    for (std::size_t i = 1; i < drift.size(); ++i) {
        if (t <= drift[i].first) {
            const auto& [t0, v0] = drift[i - 1];
            const auto& [t1, v1] = drift[i];
            const double f = (t - t0) / (t1 - t0);
            return v0 + f * (v1 - v0);
        }
    }
    return drift.back().second;
}

double drift_integral(const std::vector<std::pair<double, double>>& drift, double a, double b) {
    if (drift.empty() || a >= b) return 0.0;
    // Piecewise-linear: integrate exactly with trapezoids over breakpoints.
    double total = 0.0;
    std::vector<double> knots{a, b};
    for (const auto& [t, v] : drift)
        if (t > a && t < b) knots.push_back(t);
    std::sort(knots.begin(), knots.end());
    for (std::size_t i = 1; i < knots.size(); ++i) {
        const double t0 = knots[i - 1], t1 = knots[i];
        total += 0.5 * (drift_value(drift, t0) + drift_value(drift, t1)) * (t1 - t0);
    }
    return total;
}

double harmonic_sum(const std::vector<Harmonic>& hs, double t) {
    double v = 0.0;
    for (const auto& h : hs) v += h.amplitude_g * std::sin(phys::two_pi * h.freq_hz * t + h.phase_rad);
    return v;
}

double harmonic_integral(double amp, double freq, double phase, double a, double b) {
    const double w = phys::two_pi * freq;
    return amp / w * (std::cos(w * a + phase) - std::cos(w * b + phase));
}

double exp_integral(double amp, double tau, double a, double b) {
    return amp * tau * (std::exp(-a / tau) - std::exp(-b / tau));
}

} // namespace

void CompensationPlan::validate() const {
    if (eddy) {
        if (!(eddy->tau_s > 0)) throw config_error("compensation plan: eddy tau must be > 0");
        if (!std::isfinite(eddy->step_amplitude_g))
            throw config_error("compensation plan: eddy amplitude not finite");
    }
    for (const auto& b : branches) {
        if (!std::isfinite(b.amplitude_g) || !std::isfinite(b.phase_rad))
            throw config_error("compensation plan: branch parameters not finite");
        if (!is_line_multiple(b.freq_hz, line_freq_hz))
            throw config_error("compensation plan: branch at " + io::format_double(b.freq_hz) +
                               " Hz is not a line-frequency multiple");
        if (b.freq_hz > coil_bandwidth_hz)
            throw config_error("compensation plan: branch at " + io::format_double(b.freq_hz) +
                               " Hz exceeds coil bandwidth");
    }
}

double compensation_field_g(const CompensationPlan& plan, double t_s) {
    double v = 0.0;
    if (plan.eddy) v += plan.eddy->step_amplitude_g * std::exp(-t_s / plan.eddy->tau_s);
    for (const auto& b : plan.branches)
        v += b.amplitude_g * std::sin(phys::two_pi * b.freq_hz * t_s + b.phase_rad);
    return -v;
}

double compensation_integral_gs(const CompensationPlan& plan, double t0_s, double t1_s) {
    double v = 0.0;
    if (plan.eddy) v += exp_integral(plan.eddy->step_amplitude_g, plan.eddy->tau_s, t0_s, t1_s);
    for (const auto& b : plan.branches)
        v += harmonic_integral(b.amplitude_g, b.freq_hz, b.phase_rad, t0_s, t1_s);
    return -v;
}

void FieldTimeline::validate() const {
    if (!(eddy_tau_s > 0)) throw config_error("field timeline: eddy tau must be > 0");
    if (noise_g_per_rthz < 0) throw config_error("field timeline: noise density must be >= 0");
    for (const auto& h : harmonics) {
        if (h.freq_hz <= 0) throw config_error("field timeline: harmonic frequency must be > 0");
        if (!is_line_multiple(h.freq_hz, 60.0))
            throw config_error("field timeline: harmonic " + io::format_double(h.freq_hz) +
                               " Hz is not a 60 Hz multiple");
    }
    for (std::size_t i = 1; i < drift.size(); ++i)
        if (drift[i].first <= drift[i - 1].first)
            throw config_error("field timeline: drift knots must be strictly increasing");
    for (const auto& p : plans) p.validate();
}

double FieldTimeline::deterministic_field_at(double t_s) const {
    if (t_s < 0) throw config_error("field timeline: t must be >= 0");
    double v = bias_g + eddy_amplitude_g * std::exp(-t_s / eddy_tau_s) + harmonic_sum(harmonics, t_s) +
               drift_value(drift, t_s);
    for (const auto& p : plans) v += compensation_field_g(p, t_s);
    return v;
}

double FieldTimeline::field_at(double t_s) const {
    double v = deterministic_field_at(t_s);
    if (noise_g_per_rthz > 0) {
        // Band-limited white noise: one sample per 1/noise_sample_rate bin,
        // keyed by (seed, bin index) so evaluation order cannot matter.
        const auto idx = std::uint64_t(t_s * noise_sample_rate_hz);
        rng::Counter c(rng::substream(seed, "field_noise"), idx);
        v += noise_g_per_rthz * std::sqrt(0.5 * noise_sample_rate_hz) * c.normal();
    }
    return v;
}

double FieldTimeline::integral_gs(double t0_s, double t1_s) const {
    if (t0_s < 0 || t1_s < t0_s) throw config_error("field timeline: bad integral bounds");
    double v = bias_g * (t1_s - t0_s) + exp_integral(eddy_amplitude_g, eddy_tau_s, t0_s, t1_s) +
               drift_integral(drift, t0_s, t1_s);
    for (const auto& h : harmonics)
        v += harmonic_integral(h.amplitude_g, h.freq_hz, h.phase_rad, t0_s, t1_s);
    for (const auto& p : plans) v += compensation_integral_gs(p, t0_s, t1_s);
    return v;
}

double FieldTimeline::max_abs_field_g() const {
    double v = std::abs(bias_g) + std::abs(eddy_amplitude_g);
    for (const auto& h : harmonics) v += std::abs(h.amplitude_g);
    double dmax = 0.0;
    for (const auto& [t, d] : drift) dmax = std::max(dmax, std::abs(d));
    v += dmax;
    for (const auto& p : plans) {
        if (p.eddy) v += std::abs(p.eddy->step_amplitude_g);
        for (const auto& b : p.branches) v += std::abs(b.amplitude_g);
    }
    return v;
}

FieldTimeline apply(const FieldTimeline& timeline, const CompensationPlan& plan) {
    plan.validate();
    FieldTimeline out = timeline;
    out.plans.push_back(plan);
    return out;
}

std::string FieldTimeline::serialize() const {
    io::KvFile kv;
    kv.set("format", "field_timeline_v1");
    kv.set_double("bias_gauss", bias_g);
    kv.set_double("eddy_amplitude_gauss", eddy_amplitude_g);
    kv.set_double("eddy_tau_s", eddy_tau_s);
    kv.set_double("noise_gauss_per_rthz", noise_g_per_rthz);
    kv.set_double("noise_sample_rate_hz", noise_sample_rate_hz);
    kv.set("seed", std::to_string(seed));
    kv.set("harmonics", std::to_string(harmonics.size()));
    for (std::size_t i = 0; i < harmonics.size(); ++i) {
        const std::string p = "harmonic_" + std::to_string(i);
        kv.set_double(p + "_freq_hz", harmonics[i].freq_hz);
        kv.set_double(p + "_amplitude_gauss", harmonics[i].amplitude_g);
        kv.set_double(p + "_phase_rad", harmonics[i].phase_rad);
    }
    kv.set("drift_points", std::to_string(drift.size()));
    for (std::size_t i = 0; i < drift.size(); ++i) {
        const std::string p = "drift_" + std::to_string(i);
        kv.set_double(p + "_t_s", drift[i].first);
        kv.set_double(p + "_gauss", drift[i].second);
    }
    kv.set("plans", std::to_string(plans.size()));
    for (std::size_t i = 0; i < plans.size(); ++i) {
        const std::string p = "plan_" + std::to_string(i);
        kv.set_double(p + "_coil_bandwidth_hz", plans[i].coil_bandwidth_hz);
        kv.set_double(p + "_line_freq_hz", plans[i].line_freq_hz);
        kv.set(p + "_has_eddy", plans[i].eddy ? "1" : "0");
        if (plans[i].eddy) {
            kv.set_double(p + "_eddy_step_gauss", plans[i].eddy->step_amplitude_g);
            kv.set_double(p + "_eddy_tau_s", plans[i].eddy->tau_s);
        }
        kv.set(p + "_branches", std::to_string(plans[i].branches.size()));
        for (std::size_t j = 0; j < plans[i].branches.size(); ++j) {
            const std::string q = p + "_branch_" + std::to_string(j);
            kv.set_double(q + "_freq_hz", plans[i].branches[j].freq_hz);
            kv.set_double(q + "_amplitude_gauss", plans[i].branches[j].amplitude_g);
            kv.set_double(q + "_phase_rad", plans[i].branches[j].phase_rad);
        }
    }
    return kv.serialize();
}

FieldTimeline FieldTimeline::deserialize(const std::string& text, const std::string& origin) {
    io::KvFile kv = io::KvFile::parse(text, origin);
    if (kv.get("format") != "field_timeline_v1")
        throw config_error(origin + ": not a field_timeline_v1 file");
    FieldTimeline t;
    t.bias_g = kv.get_double("bias_gauss");
    t.eddy_amplitude_g = kv.get_double("eddy_amplitude_gauss");
    t.eddy_tau_s = kv.get_double("eddy_tau_s");
    t.noise_g_per_rthz = kv.get_double("noise_gauss_per_rthz");
    t.noise_sample_rate_hz = kv.get_double("noise_sample_rate_hz");
    t.seed = std::stoull(kv.get("seed"));
    const int nh = int(kv.get_double("harmonics"));
    for (int i = 0; i < nh; ++i) {
        const std::string p = "harmonic_" + std::to_string(i);
        t.harmonics.push_back({kv.get_double(p + "_freq_hz"), kv.get_double(p + "_amplitude_gauss"),
                               kv.get_double(p + "_phase_rad")});
    }
    const int nd = int(kv.get_double("drift_points"));
    for (int i = 0; i < nd; ++i) {
        const std::string p = "drift_" + std::to_string(i);
        t.drift.emplace_back(kv.get_double(p + "_t_s"), kv.get_double(p + "_gauss"));
    }
    const int np = int(kv.get_double("plans"));
    for (int i = 0; i < np; ++i) {
        const std::string p = "plan_" + std::to_string(i);
        CompensationPlan plan;
        plan.coil_bandwidth_hz = kv.get_double(p + "_coil_bandwidth_hz");
        plan.line_freq_hz = kv.get_double(p + "_line_freq_hz");
        if (kv.get(p + "_has_eddy") == "1")
            plan.eddy = EddyBranch{kv.get_double(p + "_eddy_step_gauss"), kv.get_double(p + "_eddy_tau_s")};
        const int nb = int(kv.get_double(p + "_branches"));
        for (int j = 0; j < nb; ++j) {
            const std::string q = p + "_branch_" + std::to_string(j);
            plan.branches.push_back({kv.get_double(q + "_freq_hz"),
                                     kv.get_double(q + "_amplitude_gauss"),
                                     kv.get_double(q + "_phase_rad")});
        }
        t.plans.push_back(std::move(plan));
    }
    t.validate();
    return t;
}

} // namespace faraday
