#include "faraday/spinsim.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstring>
#include <sstream>

#include "faraday/errors.hpp"
#include "faraday/io.hpp"
#include "faraday/parallel.hpp"
#include "faraday/rng.hpp"

namespace faraday {

namespace {

int checked_sample_count(double duration_s, double rate_hz, const char* what) {
    const double exact = duration_s * rate_hz;
    const double rounded = std::round(exact);
    if (std::abs(exact - rounded) > 1e-6)
        throw config_error(std::string("schedule: ") + what +
                           " must be an integer number of samples");
    return int(rounded);
}

} // namespace

int PumpProbeSchedule::samples_per_cycle() const {
    return checked_sample_count(cycle_period_s, sample_rate_hz, "cycle period");
}

int PumpProbeSchedule::pump_samples() const {
    return checked_sample_count(pump_duration_s, sample_rate_hz, "pump duration");
}

void PumpProbeSchedule::validate(double expected_nu_hz) const {
    if (cycle_period_s <= 0 || sample_rate_hz <= 0 || cycles < 0 || averages < 1)
        throw config_error("schedule: bad cycle period, sample rate, cycles, or averages");
    if (pump_duration_s < 0 || pump_duration_s >= cycle_period_s)
        throw config_error("schedule: pump duration must be in [0, cycle period)");
    (void)samples_per_cycle();
    (void)pump_samples();
    if (expected_nu_hz > 0 && sample_rate_hz < 10.0 * expected_nu_hz)
        throw config_error("schedule: sample rate below 10x the expected Larmor frequency");
}

EnvelopeModel envelope_from_tag(const std::string& tag) {
    if (tag == "trapped") return EnvelopeModel::trapped;
    if (tag == "untrapped") return EnvelopeModel::untrapped;
    if (tag == "none") return EnvelopeModel::none;
    throw config_error("unknown envelope tag: " + tag);
}

std::string envelope_tag(EnvelopeModel m) {
    switch (m) {
        case EnvelopeModel::trapped: return "trapped";
        case EnvelopeModel::untrapped: return "untrapped";
        default: return "none";
    }
}

double cycle_envelope(EnvelopeModel m, double t_s, const SynthParams& p) {
    switch (m) {
        case EnvelopeModel::trapped: return std::exp(-t_s / p.trapped_tau_s);
        case EnvelopeModel::untrapped: {
            const double u = t_s / p.fall_tau_s;
            const double u2 = u * u;
            return std::exp(-u2 * u2);
        }
        default: return 1.0;
    }
}

PrecessionTrace synth_trace(const FieldTimeline& timeline, const PumpProbeSchedule& schedule,
                            const SynthParams& params, const AtomSpecies& species, Exec exec) {
    timeline.validate();
    schedule.validate();
    if (params.snr <= 0) throw config_error("synth_trace: SNR must be > 0");
    const double nu_max = timeline.max_abs_field_g() * species.gyro_hz_per_gauss;
    if (nu_max > 0.4 * schedule.sample_rate_hz)
        throw numerical_error("synth_trace: Larmor frequency " + io::format_double(nu_max) +
                              " Hz would alias at sample rate " +
                              io::format_double(schedule.sample_rate_hz) + " Hz");

    const int spc = schedule.samples_per_cycle();
    const double dt = 1.0 / schedule.sample_rate_hz;
    const double noise_rms =
        params.amplitude_v / (params.snr * std::sqrt(double(schedule.averages)));
    const double gyro = species.gyro_hz_per_gauss;
    const bool field_noise = timeline.noise_g_per_rthz > 0;

    PrecessionTrace trace;
    trace.v.assign(std::size_t(spc) * schedule.cycles, 0.0);
    trace.sample_rate_hz = schedule.sample_rate_hz;
    trace.schedule = schedule;
    trace.envelope = params.envelope;
    trace.seed = params.seed;

    const std::uint64_t noise_key = rng::substream(params.seed, "trace_noise");
    const std::uint64_t phase_key = rng::substream(params.seed, "pump_phase");

    auto synth_cycle = [&](std::int64_t ci) {
        const double t_start = double(ci) * schedule.cycle_period_s;
        const double amp = params.amplitude_v * cycle_envelope(params.envelope, t_start, params);
        double phi0 = 0.0;
        if (params.phase_jitter_rad > 0) {
            rng::Counter pc(phase_key, std::uint64_t(ci));
            phi0 = params.phase_jitter_rad * pc.normal();
        }
        double* out = trace.v.data() + std::size_t(ci) * spc;
        double phase = phi0;
        double t_prev = t_start;
        for (int j = 0; j < spc; ++j) {
            const std::uint64_t global = std::uint64_t(ci) * spc + j;
            const double t = t_start + double(j) * dt;
            phase += phys::two_pi * gyro * timeline.integral_gs(t_prev, t);
            if (field_noise) {
                rng::Counter fc(rng::substream(timeline.seed, "field_noise_phase"), global);
                phase += phys::two_pi * gyro * timeline.noise_g_per_rthz *
                         std::sqrt(0.5 * timeline.noise_sample_rate_hz) * fc.normal() * dt;
            }
            t_prev = t;
            rng::Counter nc(noise_key, global);
            out[j] = amp * std::exp(-(t - t_start) / params.per_cycle_tau_s) * std::sin(phase) +
                     noise_rms * nc.normal();
        }
    };

    if (exec == Exec::parallel)
        parallel_for(schedule.cycles, synth_cycle);
    else
        serial_for(schedule.cycles, synth_cycle);
    return trace;
}

// ---------------------------------------------------------------------------
// Trace files

void PrecessionTrace::save_csv(const std::filesystem::path& path) const {
    io::CsvWriter w(path);
    w.raw_row("# sample_rate_hz=" + io::format_double(sample_rate_hz) +
              "; cycle_period_s=" + io::format_double(schedule.cycle_period_s) +
              "; cycles=" + std::to_string(schedule.cycles));
    w.raw_row("# pump_duration_s=" + io::format_double(schedule.pump_duration_s) +
              "; averages=" + std::to_string(schedule.averages) + "; envelope=" +
              envelope_tag(envelope) + "; seed=" + std::to_string(seed));
    w.raw_row("t_s,voltage_v");
    for (std::size_t i = 0; i < v.size(); ++i)
        w.raw_row(io::format_double(time_of(i)) + "," + io::format_double(v[i]));
    w.close();
}

namespace {

// "key=value; key=value" comment line -> pairs; complains with line numbers.
std::vector<std::pair<std::string, std::string>> parse_header_line(const std::string& line,
                                                                   const std::string& origin,
                                                                   int lineno) {
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t pos = line.find('#');
    if (pos == std::string::npos)
        throw config_error(origin + ":" + std::to_string(lineno) + ": missing '#' header");
    std::string rest = line.substr(pos + 1);
    std::size_t start = 0;
    while (start < rest.size()) {
        std::size_t stop = rest.find(';', start);
        if (stop == std::string::npos) stop = rest.size();
        std::string field = rest.substr(start, stop - start);
        std::size_t eq = field.find('=');
        if (eq != std::string::npos) {
            auto trim = [](std::string s) {
                const char* ws = " \t\r\n";
                s.erase(0, s.find_first_not_of(ws));
                s.erase(s.find_last_not_of(ws) + 1);
                return s;
            };
            std::string k = trim(field.substr(0, eq));
            std::string v = trim(field.substr(eq + 1));
            if (k.empty() || v.empty())
                throw config_error(origin + ":" + std::to_string(lineno) + ": bad header field '" +
                                   field + "'");
            out.emplace_back(k, v);
        }
        start = stop + 1;
    }
    if (out.empty())
        throw config_error(origin + ":" + std::to_string(lineno) + ": empty header line");
    return out;
}

double header_double(const std::vector<std::pair<std::string, std::string>>& fields,
                     const std::string& key, const std::string& origin, int lineno) {
    for (const auto& [k, v] : fields)
        if (k == key) {
            char* end = nullptr;
            double d = std::strtod(v.c_str(), &end);
            if (end == v.c_str() || *end != '\0')
                throw config_error(origin + ":" + std::to_string(lineno) + ": field '" + key +
                                   "' is not a number");
            return d;
        }
    throw config_error(origin + ":" + std::to_string(lineno) + ": missing header field '" + key + "'");
}

} // namespace

PrecessionTrace PrecessionTrace::load_csv(const std::filesystem::path& path) {
    const std::string text = io::read_text_file(path);
    std::istringstream ss(text);
    std::string line;
    int lineno = 0;
    PrecessionTrace trace;

    if (!std::getline(ss, line)) throw config_error(path.string() + ":1: empty trace file");
    ++lineno;
    auto h1 = parse_header_line(line, path.string(), lineno);
    trace.sample_rate_hz = header_double(h1, "sample_rate_hz", path.string(), lineno);
    trace.schedule.sample_rate_hz = trace.sample_rate_hz;
    trace.schedule.cycle_period_s = header_double(h1, "cycle_period_s", path.string(), lineno);
    trace.schedule.cycles = int(header_double(h1, "cycles", path.string(), lineno));

    if (!std::getline(ss, line))
        throw config_error(path.string() + ":2: truncated trace file");
    ++lineno;
    auto h2 = parse_header_line(line, path.string(), lineno);
    trace.schedule.pump_duration_s = header_double(h2, "pump_duration_s", path.string(), lineno);
    trace.schedule.averages = int(header_double(h2, "averages", path.string(), lineno));
    for (const auto& [k, v] : h2) {
        if (k == "envelope") trace.envelope = envelope_from_tag(v);
        if (k == "seed") trace.seed = std::stoull(v);
    }

    if (!std::getline(ss, line) || line.rfind("t_s,voltage_v", 0) != 0)
        throw config_error(path.string() + ":" + std::to_string(lineno + 1) +
                           ": expected column header 't_s,voltage_v'");
    ++lineno;

    while (std::getline(ss, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw config_error(path.string() + ":" + std::to_string(lineno) + ": expected 't,v' row");
        char* end = nullptr;
        const std::string vs = line.substr(comma + 1);
        double val = std::strtod(vs.c_str(), &end);
        if (end == vs.c_str())
            throw config_error(path.string() + ":" + std::to_string(lineno) + ": bad voltage value");
        trace.v.push_back(val);
    }
    const std::size_t expected = std::size_t(trace.schedule.total_samples());
    if (trace.v.size() != expected)
        throw config_error(path.string() + ": sample count " + std::to_string(trace.v.size()) +
                           " does not match header (" + std::to_string(expected) + ")");
    return trace;
}

namespace {

constexpr char kRawMagic[8] = {'F', 'B', 'T', 'R', 'A', 'C', 'E', '1'};

struct RawHeader {
    char magic[8];
    std::uint64_t n_samples;
    double sample_rate_hz;
    double cycle_period_s;
    double pump_duration_s;
    std::uint32_t cycles;
    std::uint32_t averages;
    std::uint64_t seed;
    std::uint32_t envelope;
    std::uint32_t reserved;
};
static_assert(sizeof(RawHeader) == 64);

} // namespace

void PrecessionTrace::save_raw(const std::filesystem::path& path) const {
    RawHeader h{};
    std::memcpy(h.magic, kRawMagic, 8);
    h.n_samples = v.size();
    h.sample_rate_hz = sample_rate_hz;
    h.cycle_period_s = schedule.cycle_period_s;
    h.pump_duration_s = schedule.pump_duration_s;
    h.cycles = std::uint32_t(schedule.cycles);
    h.averages = std::uint32_t(schedule.averages);
    h.seed = seed;
    h.envelope = std::uint32_t(envelope);
    h.reserved = 0;
    std::string out(reinterpret_cast<const char*>(&h), sizeof h);
    out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
    io::write_text_file(path, out);
}

PrecessionTrace PrecessionTrace::load_raw(const std::filesystem::path& path) {
    const std::string data = io::read_text_file(path);
    if (data.size() < sizeof(RawHeader))
        throw config_error(path.string() + ": raw trace shorter than its 64-byte header");
    RawHeader h;
    std::memcpy(&h, data.data(), sizeof h);
    if (std::memcmp(h.magic, kRawMagic, 8) != 0)
        throw config_error(path.string() + ": bad raw trace magic");
    if (data.size() != sizeof(RawHeader) + h.n_samples * sizeof(double))
        throw config_error(path.string() + ": raw trace payload size mismatch");
    PrecessionTrace trace;
    trace.sample_rate_hz = h.sample_rate_hz;
    trace.schedule.sample_rate_hz = h.sample_rate_hz;
    trace.schedule.cycle_period_s = h.cycle_period_s;
    trace.schedule.pump_duration_s = h.pump_duration_s;
    trace.schedule.cycles = int(h.cycles);
    trace.schedule.averages = int(h.averages);
    trace.seed = h.seed;
    trace.envelope = EnvelopeModel(h.envelope);
    trace.v.resize(h.n_samples);
    std::memcpy(trace.v.data(), data.data() + sizeof(RawHeader), h.n_samples * sizeof(double));
    return trace;
}

// ---------------------------------------------------------------------------
// Quantum spin model

namespace {

using Cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

// Angular-momentum matrices in the |f, m> basis, m = f..-f (row/col 0 is m=f).
struct SpinOps {
    CMat fx, fy, fz;
};

SpinOps spin_operators(int f) {
    const int dim = 2 * f + 1;
    CMat fp = CMat::Zero(dim, dim); // raising
    CMat fz = CMat::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        const double m = double(f - i);
        fz(i, i) = m;
        if (i + 1 < dim) {
            const double mlow = m - 1.0;
            fp(i, i + 1) = std::sqrt(double(f) * (f + 1.0) - mlow * (mlow + 1.0));
        }
    }
    CMat fm = fp.adjoint();
    SpinOps ops;
    ops.fx = 0.5 * (fp + fm);
    ops.fy = Cplx(0, -0.5) * (fp - fm);
    ops.fz = fz;
    return ops;
}

// Stretched state along +x: rotate |f, f> by exp(-i pi/2 F_y).
CVec stretched_x(const SpinOps& ops, int f) {
    Eigen::SelfAdjointEigenSolver<CMat> es(ops.fy);
    const int dim = 2 * f + 1;
    CVec seed = CVec::Zero(dim);
    seed(0) = 1.0; // |f, m=f>
    CVec in_eig = es.eigenvectors().adjoint() * seed;
    for (int i = 0; i < dim; ++i) {
        const double lam = es.eigenvalues()(i);
        in_eig(i) *= std::exp(Cplx(0, -phys::pi / 2.0 * lam));
    }
    return es.eigenvectors() * in_eig;
}

} // namespace

SpinEvolution quantum_evolve(const SpinModel& model, std::span<const double> t_grid) {
    if (model.f < 1) throw config_error("spin model: F must be >= 1");
    const SpinOps ops = spin_operators(model.f);
    const double omega_l = phys::two_pi * model.larmor_hz;

    // F . eps(theta) with eps = (0, sin theta, cos theta)
    CMat f_eps = std::sin(model.theta_rad) * ops.fy + std::cos(model.theta_rad) * ops.fz;
    CMat h = omega_l * ops.fz + model.beta_rad_s * (f_eps * f_eps);

    Eigen::SelfAdjointEigenSolver<CMat> es(h);
    if (es.info() != Eigen::Success)
        throw numerical_error("quantum_evolve: Hamiltonian diagonalization failed");

    CVec psi0 = stretched_x(ops, model.f);
    CVec psi0_eig = es.eigenvectors().adjoint() * psi0;

    SpinEvolution out;
    out.t_s.assign(t_grid.begin(), t_grid.end());
    out.fx.resize(t_grid.size());
    out.fy.resize(t_grid.size());
    double max_drift = 0.0, max_energy_drift = 0.0;
    double e0 = 0.0;
    const int dim = 2 * model.f + 1;
    CVec phased(dim), psi(dim);
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const double t = t_grid[i];
        for (int k = 0; k < dim; ++k)
            phased(k) = psi0_eig(k) * std::exp(Cplx(0, -es.eigenvalues()(k) * t));
        psi = es.eigenvectors() * phased;
        const double norm = psi.norm();
        max_drift = std::max(max_drift, std::abs(norm - 1.0));
        const double energy = (psi.adjoint() * h * psi).real()(0);
        if (i == 0)
            e0 = energy;
        else
            max_energy_drift =
                std::max(max_energy_drift, std::abs(energy - e0) / std::max(std::abs(e0), 1e-30));
        const double damp = std::exp(-model.damping_rate_hz * t);
        out.fx[i] = (psi.adjoint() * ops.fx * psi).real()(0) * damp;
        out.fy[i] = (psi.adjoint() * ops.fy * psi).real()(0) * damp;
    }
    out.norm_drift = max_drift;
    out.energy_drift = max_energy_drift;
    if (max_drift > 1e-8)
        throw numerical_error("quantum_evolve: norm drift " + io::format_double(max_drift) +
                              " exceeds 1e-8");
    return out;
}

PrecessionTrace revival_trace(const SpinModel& model, const PumpProbeSchedule& schedule,
                              double snr, std::uint64_t seed) {
    schedule.validate();
    if (snr <= 0) throw config_error("revival_trace: SNR must be > 0");
    if (model.larmor_hz > 0.4 * schedule.sample_rate_hz)
        throw numerical_error("revival_trace: Larmor frequency would alias");

    const int spc = schedule.samples_per_cycle();
    const double dt = 1.0 / schedule.sample_rate_hz;
    std::vector<double> t_cycle(spc);
    for (int j = 0; j < spc; ++j) t_cycle[j] = double(j) * dt;
    const SpinEvolution evo = quantum_evolve(model, t_cycle);

    PrecessionTrace trace;
    trace.v.assign(std::size_t(spc) * schedule.cycles, 0.0);
    trace.sample_rate_hz = schedule.sample_rate_hz;
    trace.schedule = schedule;
    trace.envelope = EnvelopeModel::none;
    trace.seed = seed;

    const double noise_rms = 1.0 / (snr * std::sqrt(double(schedule.averages)));
    const double scale = 1.0 / double(model.f); // V in units of the full signal
    const std::uint64_t noise_key = rng::substream(seed, "revival_noise");
    parallel_for(schedule.cycles, [&](std::int64_t ci) {
        double* out = trace.v.data() + std::size_t(ci) * spc;
        for (int j = 0; j < spc; ++j) {
            rng::Counter nc(noise_key, std::uint64_t(ci) * spc + j);
            out[j] = evo.fx[j] * scale + noise_rms * nc.normal();
        }
    });
    return trace;
}

} // namespace faraday
