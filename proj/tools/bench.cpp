// Serial-vs-OpenMP timing for the data-parallel kernels. The serial path is
// the reference implementation the tests compare against; this target checks
// the parallel path actually pays off.

#include <chrono>
#include <cstdio>

#include "faraday/atomkinetics.hpp"
#include "faraday/beamforge.hpp"
#include "faraday/parallel.hpp"
#include "faraday/spectra.hpp"
#include "faraday/spinsim.hpp"

using namespace faraday;

namespace {

template <class F>
double time_s(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(const char* name, double serial, double parallel) {
    std::printf("%-28s %8.3f s %8.3f s   x%.2f\n", name, serial, parallel, serial / parallel);
}

} // namespace

int main() {
    std::printf("threads available: %d\n\n", max_threads());
    std::printf("%-28s %10s %10s   speedup\n", "kernel", "serial", "openmp");

    const AtomSpecies& rb = AtomSpecies::rb85();

    {
        FieldTimeline tl;
        tl.bias_g = 0.1;
        tl.eddy_amplitude_g = 5e-3;
        tl.harmonics.push_back({60.0, 1.5e-3, 0.4});
        PumpProbeSchedule sched;
        sched.cycle_period_s = 1e-3;
        sched.cycles = 400;
        sched.sample_rate_hz = 500e3;
        SynthParams sp;
        PrecessionTrace a, b;
        const double ts = time_s([&] { a = synth_trace(tl, sched, sp, rb, Exec::serial); });
        const double tp = time_s([&] { b = synth_trace(tl, sched, sp, rb, Exec::parallel); });
        report("synth_trace (400 cycles)", ts, tp);

        NuTimeline na, nb;
        const double fs = time_s([&] { na = nu_timeline(a, sched, Exec::serial); });
        const double fp = time_s([&] { nb = nu_timeline(b, sched, Exec::parallel); });
        report("nu_timeline (400 fits)", fs, fp);
    }

    {
        BeamSpec spec;
        spec.z_offset_m = 0.015;
        const FieldGrid input = make_input_field(spec);
        FieldGrid a, b;
        const double ts =
            time_s([&] { a = propagate(input, spec.focal_length_m, Exec::serial); });
        const double tp =
            time_s([&] { b = propagate(input, spec.focal_length_m, Exec::parallel); });
        report("propagate (1024^2 grid)", ts, tp);
    }

    {
        BeamSpec spec;
        spec.z_offset_m = 0.015;
        const TrapPotential trap = crossed_trap(spec, rb, true);
        AtomEnsemble cloud = AtomEnsemble::thermal_cloud(2000, 500e-6, 10e-6, rb, 7);
        ScatterSchedule sched;
        sched.trap_detuning_hz = spec.detuning_hz;
        sched.probe_rate_hz = 620;
        sched.pump_photons_per_cycle = 11;
        KineticsRun ra, rb2;
        const double ts = time_s(
            [&] { ra = survival_curve(cloud, trap, sched, 0.05, 1e-6, 50, 0.0, Exec::serial); });
        const double tp = time_s(
            [&] { rb2 = survival_curve(cloud, trap, sched, 0.05, 1e-6, 50, 0.0, Exec::parallel); });
        report("survival_curve (2k x 50ms)", ts, tp);
    }

    return 0;
}
