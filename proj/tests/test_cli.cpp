#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "faraday/errors.hpp"
#include "faraday/io.hpp"
#include "faraday/scenario.hpp"

using namespace faraday;
namespace fs = std::filesystem;

namespace {

const char* kCli = FARADAY_CLI_PATH;
const char* kScenarios = FARADAY_SCENARIO_DIR;

struct RunResult {
    int exit_code;
    std::string out;
    std::string err;
};

RunResult run(const std::string& args, const std::string& env = "") {
    const fs::path dir = fs::temp_directory_path() / "faraday_cli_test";
    fs::create_directories(dir);
    const fs::path out = dir / "stdout.txt";
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = env + std::string(kCli) + " " + args + " > " + out.string() +
                            " 2> " + err.string();
    const int rc = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WEXITSTATUS(rc);
    r.out = io::read_text_file(out);
    r.err = io::read_text_file(err);
    return r;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "faraday_cli_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string scn(const std::string& name) {
    return std::string(kScenarios) + "/" + name + ".scn";
}

} // namespace

TEST_CASE("scenario presets parse") {
    for (const char* name :
         {"default", "fig2_trapped", "fig2_untrapped", "fig4_uncompensated", "fig4_eddy",
          "fig4_60hz", "fig4_full", "fig6_noisefloor", "fig7_boil", "fig7_traponly",
          "fig8_revivals"}) {
        CAPTURE(name);
        CHECK_NOTHROW(Scenario::load(scn(name)));
    }
    // spot checks against the files
    Scenario fig6 = Scenario::load(scn("fig6_noisefloor"));
    CHECK(fig6.schedule.cycles == 256);
    CHECK(fig6.schedule.sample_rate_hz == 100e3);
    CHECK(fig6.synth.snr == doctest::Approx(1.875));
    Scenario fig7 = Scenario::load(scn("fig7_boil"));
    CHECK(fig7.kinetics.samples == 10000);
    CHECK(fig7.kinetics.pump_photons_per_cycle == 11.0);
}

TEST_CASE("unknown scenario keys are rejected with their line") {
    const fs::path bad = fs::temp_directory_path() / "bad.scn";
    {
        std::ofstream f(bad);
        f << "name = bad\nfield_bias_gauss = 0.1\nfeild_eddy_amplitude_mg = 5\n";
    }
    CHECK_THROWS_WITH_AS(Scenario::load(bad), doctest::Contains("feild_eddy_amplitude_mg"),
                         config_error);
    RunResult r = run("synth --scenario " + bad.string() + " --out /tmp/unused");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("ERROR config") != std::string::npos);
}

TEST_CASE("constants subcommand prints the table") {
    RunResult r = run("constants");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("rb85_gyro,466741.5,Hz/G") != std::string::npos);
}

TEST_CASE("synth, analyze, and reruns are bit-identical across worker counts") {
    const fs::path out1 = fresh_dir("synth1");
    const fs::path out2 = fresh_dir("synth2");
    RunResult r1 = run("synth --scenario " + scn("fig2_trapped") + " --envelope trapped --out " +
                           out1.string(),
                       "OMP_NUM_THREADS=2 ");
    CHECK(r1.exit_code == 0);
    CHECK(r1.out.find("ARTIFACT trace_csv") != std::string::npos);
    RunResult r2 = run("synth --scenario " + scn("fig2_trapped") + " --envelope trapped --out " +
                           out2.string(),
                       "OMP_NUM_THREADS=1 ");
    CHECK(r2.exit_code == 0);
    CHECK(io::read_text_file(out1 / "trace_trapped.csv") ==
          io::read_text_file(out2 / "trace_trapped.csv"));
    CHECK(io::read_text_file(out1 / "trace_trapped.f64") ==
          io::read_text_file(out2 / "trace_trapped.f64"));
    CHECK(fs::exists(out1 / "manifest.txt"));

    const fs::path adir1 = fresh_dir("analyze1");
    const fs::path adir2 = fresh_dir("analyze2");
    RunResult a1 = run("analyze --trace " + (out1 / "trace_trapped.csv").string() + " --out " +
                           adir1.string(),
                       "OMP_NUM_THREADS=2 ");
    CHECK(a1.exit_code == 0);
    RunResult a2 = run("analyze --trace " + (out1 / "trace_trapped.csv").string() + " --out " +
                           adir2.string(),
                       "OMP_NUM_THREADS=1 ");
    CHECK(a2.exit_code == 0);
    for (const char* f : {"nu_timeline.csv", "field_spectrum.csv", "raster.pgm", "raster.csv"}) {
        CAPTURE(f);
        CHECK(fs::exists(adir1 / f));
        CHECK(io::read_text_file(adir1 / f) == io::read_text_file(adir2 / f));
    }
}

TEST_CASE("zero-cycle synth writes an empty trace with a valid header") {
    const fs::path dir = fresh_dir("zero");
    const fs::path scn_path = dir / "zero.scn";
    {
        std::string base = io::read_text_file(scn("fig2_trapped"));
        std::string out;
        for (std::size_t pos = 0; pos < base.size();) {
            std::size_t end = base.find('\n', pos);
            if (end == std::string::npos) end = base.size();
            std::string line = base.substr(pos, end - pos);
            if (line.rfind("sched_cycles", 0) == 0) line = "sched_cycles = 0";
            out += line + "\n";
            pos = end + 1;
        }
        std::ofstream f(scn_path);
        f << out;
    }
    RunResult r = run("synth --scenario " + scn_path.string() + " --envelope trapped --out " +
                      dir.string());
    CHECK(r.exit_code == 0);
    PrecessionTrace back = PrecessionTrace::load_csv(dir / "trace_trapped.csv");
    CHECK(back.v.empty());
    CHECK(back.sample_rate_hz == 1e6);
}

TEST_CASE("corrupt trace file yields a config error with a line number") {
    const fs::path dir = fresh_dir("corrupt");
    const fs::path trace = dir / "trace.csv";
    {
        std::ofstream f(trace);
        f << "# sample_rate_hz=1e6; cycle_period_s=0.002; cycles=oops\nt_s,voltage_v\n";
    }
    RunResult r = run("analyze --trace " + trace.string() + " --out " + dir.string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find(":1") != std::string::npos);
}

TEST_CASE("beam command on a fixed plane emits mask, slices, and report") {
    const fs::path dir = fresh_dir("beam");
    const fs::path scn_path = dir / "beam.scn";
    {
        std::ofstream f(scn_path);
        f << "name = beam_fixed\nbeam_plane_mode = fixed\nbeam_z_offset_mm = 20.9\n"
          << "field_bias_gauss = 0.1\n";
    }
    RunResult r = run("beam --scenario " + scn_path.string() + " --out " + dir.string());
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir / "slm_mask.pgm"));
    CHECK(fs::exists(dir / "trap_plane.pgm"));
    CHECK(fs::exists(dir / "trap_plane_crop.csv"));
    CHECK(fs::exists(dir / "trap_report.txt"));
    io::KvFile report = io::KvFile::parse(io::read_text_file(dir / "trap_report.txt"), "report");
    CHECK(report.get("has_ring") == "1");
    const double d = report.get_double("d_ring_m");
    CHECK(d > 0.43e-3);
    CHECK(d < 0.53e-3);

    // charge 0: focused gaussian, no ring -> crossed_trap fails numerically
    const fs::path scn0 = dir / "beam0.scn";
    {
        std::ofstream f(scn0);
        f << "name = beam0\nbeam_plane_mode = fixed\nbeam_charge = 0\nfield_bias_gauss = 0.1\n";
    }
    RunResult r0 = run("beam --scenario " + scn0.string() + " --out " + dir.string());
    CHECK(r0.exit_code == 3);

    // coarse grid: aliasing error, nonzero exit
    const fs::path scnA = dir / "beamA.scn";
    {
        std::ofstream f(scnA);
        f << "name = beamA\nbeam_plane_mode = fixed\nbeam_grid_n = 256\n"
          << "beam_grid_pitch_um = 60\nfield_bias_gauss = 0.1\n";
    }
    RunResult ra = run("beam --scenario " + scnA.string() + " --out " + dir.string());
    CHECK(ra.exit_code == 3);
    CHECK(ra.err.find("ERROR numerical") != std::string::npos);
}

TEST_CASE("spin command writes both orientation traces") {
    const fs::path dir = fresh_dir("spin");
    RunResult r = run("spin --scenario " + scn("fig8_revivals") + " --out " + dir.string());
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir / "revival_theta_a.csv"));
    CHECK(fs::exists(dir / "revival_theta_b.csv"));
}
