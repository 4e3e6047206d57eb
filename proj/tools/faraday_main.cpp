// Scenario-driven magnetometry workbench CLI. Exit codes: 0 success,
// 2 config error, 3 numerical failure, 4 I/O error.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>

#include "faraday/atomkinetics.hpp"
#include "faraday/beamforge.hpp"
#include "faraday/compensator.hpp"
#include "faraday/errors.hpp"
#include "faraday/io.hpp"
#include "faraday/rng.hpp"
#include "faraday/scenario.hpp"
#include "faraday/spectra.hpp"
#include "faraday/units.hpp"

namespace {

constexpr const char* kVersion = "faraday 1.0.0";

namespace fs = std::filesystem;
using faraday::Scenario;

struct Outputs {
    fs::path dir;
    faraday::io::Manifest manifest;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void artifact(const std::string& kind, const fs::path& path) {
        manifest.artifacts.emplace_back(kind, path.string());
        std::cout << "ARTIFACT " << kind << " " << path.string() << "\n";
    }
    void finish() {
        manifest.version = kVersion;
        manifest.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        manifest.save(dir);
    }
};

Outputs prepare(const Scenario& sc, const std::string& out_dir) {
    Outputs o;
    o.dir = out_dir;
    std::error_code ec;
    fs::create_directories(o.dir, ec);
    if (ec) throw faraday::io_error("cannot create output directory " + out_dir);
    o.manifest.scenario_name = sc.name;
    o.manifest.scenario_hash = faraday::io::fnv1a_hash(sc.canonical_text);
    o.manifest.root_seed = sc.seed;
    return o;
}

double resolve_z_offset(const Scenario& sc) {
    if (sc.plane_mode == faraday::PlaneSelect::fixed) return sc.beam.z_offset_m;
    return faraday::optimize_z_offset(sc.beam, sc.plane_mode, sc.ring_target_m);
}

faraday::TrapPotential build_trap(const Scenario& sc, bool gravity) {
    faraday::BeamSpec spec = sc.beam;
    spec.z_offset_m = resolve_z_offset(sc);
    return faraday::crossed_trap(spec, faraday::AtomSpecies::rb85(), gravity);
}

void write_spectrum_csv(const faraday::FieldSpectrum& s, const fs::path& path,
                        const std::string& input_checksum = {}) {
    faraday::io::CsvWriter w(path);
    if (!input_checksum.empty()) w.comment("input_checksum=" + input_checksum);
    w.raw_row("f_hz,amp_gauss");
    for (std::size_t i = 0; i < s.freq_hz.size(); ++i)
        w.raw_row(faraday::io::format_double(s.freq_hz[i]) + "," +
                  faraday::io::format_double(s.amplitude_g[i]));
    w.close();
}

int cmd_beam(const Scenario& sc, const std::string& out_dir) {
    Outputs out = prepare(sc, out_dir);
    const auto& species = faraday::AtomSpecies::rb85();

    faraday::BeamSpec spec = sc.beam;
    spec.z_offset_m = resolve_z_offset(sc);

    // SLM mask export (512 x 512, 15 um pixels).
    const int mask_n = 512;
    const auto mask = faraday::slm_mask(spec, mask_n, 15e-6);
    std::vector<double> mask_d(mask.begin(), mask.end());
    faraday::io::write_p5(out.dir / "slm_mask.pgm", mask_d.data(), mask_n, mask_n);
    out.artifact("slm_mask", out.dir / "slm_mask.pgm");

    const faraday::FieldGrid input = faraday::make_input_field(spec);
    const faraday::FieldGrid plane =
        faraday::propagate(input, spec.focal_length_m + spec.z_offset_m);

    // Full-plane image plus a center crop as (x, y, value) CSV.
    std::vector<double> intensity(std::size_t(plane.n) * plane.n);
    for (int iy = 0; iy < plane.n; ++iy)
        for (int ix = 0; ix < plane.n; ++ix)
            intensity[std::size_t(iy) * plane.n + ix] = plane.intensity(ix, iy);
    faraday::io::write_p5(out.dir / "trap_plane.pgm", intensity.data(), plane.n, plane.n);
    out.artifact("trap_plane_image", out.dir / "trap_plane.pgm");

    {
        faraday::io::CsvWriter w(out.dir / "trap_plane_crop.csv");
        w.comment("x_m,y_m,intensity_w_m2 (center crop +-1 mm)");
        w.raw_row("x_m,y_m,intensity_w_m2");
        const double crop = 1e-3;
        for (int iy = 0; iy < plane.n; ++iy) {
            const double y = plane.coord(iy);
            if (std::abs(y) > crop) continue;
            for (int ix = 0; ix < plane.n; ++ix) {
                const double x = plane.coord(ix);
                if (std::abs(x) > crop) continue;
                w.raw_row(faraday::io::format_double(x) + "," + faraday::io::format_double(y) + "," +
                          faraday::io::format_double(plane.intensity(ix, iy)));
            }
        }
        w.close();
        out.artifact("trap_plane_crop", out.dir / "trap_plane_crop.csv");
    }

    const faraday::TrapPotential trap = faraday::crossed_trap(spec, species, true);
    const faraday::TrapMetrics m = faraday::trap_report(trap, species);
    faraday::io::KvFile kv;
    kv.set_double("z_offset_m", m.z_offset_m);
    kv.set_double("u_max_j", m.u_max_j);
    kv.set_double("u_max_hbar_gamma", m.u_max_hbar_gamma);
    kv.set_double("u_max_recoil", m.u_max_recoil);
    kv.set("has_ring", m.d_ring_m ? "1" : "0");
    if (m.d_ring_m) kv.set_double("d_ring_m", *m.d_ring_m);
    kv.set_double("peak_intensity_w_m2", m.peak_intensity_w_m2);
    kv.set_double("peak_scatter_rate_hz", m.peak_scatter_rate_hz);
    kv.set_double("gravity_span_j", m.gravity_span_j);
    kv.set_double("gravity_span_hbar_gamma", m.gravity_span_hbar_gamma);
    faraday::io::write_text_file(out.dir / "trap_report.txt", kv.serialize());
    out.artifact("trap_report", out.dir / "trap_report.txt");

    out.finish();
    return 0;
}

int cmd_synth(const Scenario& sc, const std::string& out_dir, const std::string& which) {
    Outputs out = prepare(sc, out_dir);
    const auto& species = faraday::AtomSpecies::rb85();
    auto synth_one = [&](faraday::EnvelopeModel env, const std::string& tag) {
        faraday::SynthParams p = sc.synth;
        p.envelope = env;
        const faraday::PrecessionTrace trace = synth_trace(sc.truth, sc.schedule, p, species);
        trace.save_csv(out.dir / ("trace_" + tag + ".csv"));
        out.artifact("trace_csv", out.dir / ("trace_" + tag + ".csv"));
        trace.save_raw(out.dir / ("trace_" + tag + ".f64"));
        out.artifact("trace_raw", out.dir / ("trace_" + tag + ".f64"));
    };
    if (which == "trapped" || which == "both")
        synth_one(faraday::EnvelopeModel::trapped, "trapped");
    if (which == "untrapped" || which == "both")
        synth_one(faraday::EnvelopeModel::untrapped, "untrapped");
    if (which == "scenario") synth_one(sc.synth.envelope, faraday::envelope_tag(sc.synth.envelope));
    out.finish();
    return 0;
}

int cmd_analyze(const std::string& trace_path, const std::string& out_dir) {
    const faraday::PrecessionTrace trace = faraday::PrecessionTrace::load_csv(trace_path);
    Scenario dummy;
    dummy.name = "analyze:" + trace_path;
    dummy.canonical_text = faraday::io::read_text_file(trace_path);
    Outputs out = prepare(dummy, out_dir);
    const auto& species = faraday::AtomSpecies::rb85();
    const std::string checksum = std::to_string(faraday::io::fnv1a_hash(dummy.canonical_text));

    const faraday::NuTimeline nt = faraday::nu_timeline(trace, trace.schedule);
    nt.save_csv(out.dir / "nu_timeline.csv", checksum);
    out.artifact("nu_timeline", out.dir / "nu_timeline.csv");

    const faraday::FieldSpectrum spec = faraday::field_spectrum(nt, species);
    write_spectrum_csv(spec, out.dir / "field_spectrum.csv", checksum);
    out.artifact("field_spectrum", out.dir / "field_spectrum.csv");

    const faraday::Raster raster = faraday::rasterize(trace, trace.schedule);
    raster.save_p5(out.dir / "raster.pgm");
    out.artifact("raster_image", out.dir / "raster.pgm");
    raster.save_csv(out.dir / "raster.csv");
    out.artifact("raster_csv", out.dir / "raster.csv");

    out.finish();
    return 0;
}

int cmd_compensate(const Scenario& sc, const std::string& out_dir) {
    Outputs out = prepare(sc, out_dir);
    const auto& species = faraday::AtomSpecies::rb85();
    const faraday::CompensationReport report =
        faraday::closed_loop(sc.truth, sc.schedule, sc.synth, sc.loop, species);
    report.save(out.dir);
    faraday::io::write_text_file(out.dir / "timeline_truth.txt", sc.truth.serialize());
    out.artifact("timeline_truth", out.dir / "timeline_truth.txt");
    faraday::FieldTimeline compensated = sc.truth;
    for (const auto& plan : report.plans) compensated = faraday::apply(compensated, plan);
    faraday::io::write_text_file(out.dir / "timeline_compensated.txt", compensated.serialize());
    out.artifact("timeline_compensated", out.dir / "timeline_compensated.txt");
    out.artifact("report", out.dir / "report.txt");
    out.artifact("nu_pre", out.dir / "nu_pre.csv");
    out.artifact("nu_post", out.dir / "nu_post.csv");
    out.artifact("field_spectrum_pre", out.dir / "field_spectrum_pre.csv");
    out.artifact("field_spectrum_post", out.dir / "field_spectrum_post.csv");
    out.finish();
    return 0;
}

int cmd_boil(const Scenario& sc, const std::string& out_dir) {
    Outputs out = prepare(sc, out_dir);
    const auto& species = faraday::AtomSpecies::rb85();
    const auto& k = sc.kinetics;

    faraday::TrapPotential trap = k.trap_on ? build_trap(sc, k.gravity)
                                            : faraday::TrapPotential::free_space(species, k.gravity);
    faraday::AtomEnsemble cloud = faraday::AtomEnsemble::thermal_cloud(
        k.samples, k.cloud_diameter_m, k.temperature_k, species,
        faraday::rng::substream(sc.seed, "kinetics_cloud"));
    cloud.weight_per_sample = k.atom_number / double(k.samples);

    faraday::ScatterSchedule sched;
    sched.trap_scattering = k.trap_on && k.trap_scattering;
    sched.trap_detuning_hz = sc.beam.detuning_hz;
    sched.probe_rate_hz = k.probe_rate_hz;
    sched.pump_photons_per_cycle = k.pump_photons_per_cycle;
    sched.pump_duration_s = sc.schedule.pump_duration_s;
    sched.cycle_period_s = sc.schedule.cycle_period_s;

    const faraday::KineticsRun run = faraday::survival_curve(
        cloud, trap, sched, k.t_total_s, k.dt_s, 400, k.aperture_radius_m);

    faraday::io::CsvWriter w(out.dir / "survival.csv");
    w.comment("fraction of initial samples remaining; weight = in-aperture fraction");
    w.raw_row("t_s,fraction,stderr,aperture_weight");
    for (const auto& p : run.curve)
        w.raw_row(faraday::io::format_double(p.t_s) + "," + faraday::io::format_double(p.fraction) +
                  "," + faraday::io::format_double(p.stderr_frac) + "," +
                  faraday::io::format_double(p.aperture_weight));
    w.close();
    out.artifact("survival", out.dir / "survival.csv");

    faraday::io::KvFile kv;
    kv.set_double("dt_s", k.dt_s);
    kv.set_double("t_total_s", k.t_total_s);
    kv.set("samples", std::to_string(k.samples));
    kv.set_double("temperature_k", k.temperature_k);
    kv.set_double("cloud_diameter_m", k.cloud_diameter_m);
    kv.set_double("aperture_radius_m", k.aperture_radius_m);
    kv.set_double("pump_photons_per_cycle", k.pump_photons_per_cycle);
    kv.set_double("probe_rate_hz", k.probe_rate_hz);
    kv.set("seed", std::to_string(sc.seed));
    kv.set_double("fitted_tau_s", run.fitted_tau_s);
    kv.set_double("weight_tau_s", run.weight_tau_s);
    kv.set_double("mean_scatter_rate_hz", run.mean_scatter_rate_hz);
    kv.set_double("mean_trap_rate_hz", run.mean_trap_rate_hz);
    kv.set_double("mean_trap_rate_2pi_hz", run.mean_trap_rate_hz / faraday::phys::two_pi);
    kv.set("total_photons", std::to_string(run.total_photons));
    kv.set_double("atom_number", k.atom_number);
    kv.set_double("weight_per_sample", cloud.weight_per_sample);
    faraday::io::write_text_file(out.dir / "boil_report.txt", kv.serialize());
    out.artifact("boil_report", out.dir / "boil_report.txt");

    out.finish();
    return 0;
}

int cmd_spin(const Scenario& sc, const std::string& out_dir) {
    Outputs out = prepare(sc, out_dir);
    const double nu_l =
        faraday::larmor_frequency_hz(sc.truth.bias_g, faraday::AtomSpecies::rb85());
    auto run_theta = [&](double theta, const std::string& tag) {
        faraday::SpinModel model;
        model.larmor_hz = nu_l;
        model.beta_rad_s = sc.spin.beta_rad_s;
        model.theta_rad = theta;
        model.damping_rate_hz = 1.0 / sc.spin.tau_s;
        const faraday::PrecessionTrace trace = faraday::revival_trace(
            model, sc.schedule, sc.spin.snr, faraday::rng::substream(sc.seed, "spin_" + tag));
        trace.save_csv(out.dir / ("revival_" + tag + ".csv"));
        out.artifact("revival_trace", out.dir / ("revival_" + tag + ".csv"));
    };
    run_theta(sc.spin.theta_a_rad, "theta_a");
    run_theta(sc.spin.theta_b_rad, "theta_b");
    out.finish();
    return 0;
}

int cmd_constants(const std::string& out_file) {
    std::string text = "key,value,unit,source\n";
    for (const auto& row : faraday::constant_table())
        text += std::string(row.key) + "," + faraday::io::format_double(row.value) + "," +
                row.unit + "," + row.source + "\n";
    if (out_file.empty())
        std::cout << text;
    else {
        faraday::io::write_text_file(out_file, text);
        std::cout << "ARTIFACT constants " << out_file << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cold-atom Faraday magnetometry workbench"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir = "out", trace_path, which = "scenario", const_out;

    auto add_scenario = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", scenario_path, "scenario file (key = value, unit-suffixed keys)")
            ->required();
        cmd->add_option("--out", out_dir, "output directory");
    };

    CLI::App* beam = app.add_subcommand("beam", "SLM mask, trap-plane intensity, trap report");
    add_scenario(beam);
    CLI::App* synth = app.add_subcommand("synth", "synthesize polarimeter traces");
    add_scenario(synth);
    synth->add_option("--envelope", which, "trapped | untrapped | both | scenario");
    CLI::App* analyze = app.add_subcommand("analyze", "trace -> nu timeline, spectra, raster");
    analyze->add_option("--trace", trace_path, "trace CSV file")->required();
    analyze->add_option("--out", out_dir, "output directory");
    CLI::App* comp = app.add_subcommand("compensate", "closed-loop field compensation");
    add_scenario(comp);
    CLI::App* boil = app.add_subcommand("boil", "Monte Carlo trap-lifetime simulation");
    add_scenario(boil);
    CLI::App* spin = app.add_subcommand("spin", "nonlinear spin revival traces (theta_a, theta_b)");
    add_scenario(spin);
    CLI::App* consts = app.add_subcommand("constants", "machine-readable constants table");
    consts->add_option("--out", const_out, "write CSV here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (consts->parsed()) return cmd_constants(const_out);
        if (analyze->parsed()) return cmd_analyze(trace_path, out_dir);
        const Scenario sc = Scenario::load(scenario_path);
        if (beam->parsed()) return cmd_beam(sc, out_dir);
        if (synth->parsed()) return cmd_synth(sc, out_dir, which);
        if (comp->parsed()) return cmd_compensate(sc, out_dir);
        if (boil->parsed()) return cmd_boil(sc, out_dir);
        if (spin->parsed()) return cmd_spin(sc, out_dir);
    } catch (const faraday::config_error& e) {
        std::cerr << "ERROR config: " << e.what() << "\n";
        return 2;
    } catch (const faraday::numerical_error& e) {
        std::cerr << "ERROR numerical: " << e.what() << "\n";
        return 3;
    } catch (const faraday::io_error& e) {
        std::cerr << "ERROR io: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "ERROR internal: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
