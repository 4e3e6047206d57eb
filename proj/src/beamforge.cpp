#include "faraday/beamforge.hpp"

#include <algorithm>
#include <cmath>

#include "faraday/atomkinetics.hpp"
#include "faraday/errors.hpp"
#include "faraday/fft.hpp"
#include "faraday/io.hpp"
#include "faraday/parallel.hpp"

namespace faraday {

void BeamSpec::validate() const {
    if (charge < 0) throw config_error("beam: charge must be >= 0");
    if (waist_m <= 0 || focal_length_m <= 0 || wavelength_m <= 0 || power_w <= 0)
        throw config_error("beam: waist, focal length, wavelength, power must be > 0");
    if (detuning_hz <= 0)
        throw config_error("beam: detuning must be > 0 (blue-detuned traps only)");
    if (grid_n < 64 || (grid_n & (grid_n - 1)) != 0)
        throw config_error("beam: grid_n must be a power of two >= 64");
    if (grid_pitch_m <= 0 || slm_aperture_radius_m <= 0)
        throw config_error("beam: grid pitch and aperture must be > 0");
}

double FieldGrid::power_w() const {
    double p = 0;
    for (const auto& a : amp) p += std::norm(a);
    return p * pitch_m * pitch_m;
}

double FieldGrid::beam_diameter_m() const {
    double w = 0, r2 = 0;
    for (int iy = 0; iy < n; ++iy) {
        const double y = coord(iy);
        for (int ix = 0; ix < n; ++ix) {
            const double x = coord(ix);
            const double I = intensity(ix, iy);
            w += I;
            r2 += I * (x * x + y * y);
        }
    }
    if (w <= 0) return 0;
    return 2.0 * std::sqrt(2.0 * r2 / w);
}

double FieldGrid::intensity_bilinear(double x_m, double y_m) const {
    const double fx = x_m / pitch_m + double(n / 2);
    const double fy = y_m / pitch_m + double(n / 2);
    const int ix = int(std::floor(fx));
    const int iy = int(std::floor(fy));
    if (ix < 0 || iy < 0 || ix + 1 >= n || iy + 1 >= n) return 0.0;
    const double tx = fx - ix, ty = fy - iy;
    const double i00 = intensity(ix, iy), i10 = intensity(ix + 1, iy);
    const double i01 = intensity(ix, iy + 1), i11 = intensity(ix + 1, iy + 1);
    return i00 * (1 - tx) * (1 - ty) + i10 * tx * (1 - ty) + i01 * (1 - tx) * ty + i11 * tx * ty;
}

double slm_phase(double rho_m, double phi_rad, const BeamSpec& spec) {
    if (rho_m <= 0.0) return 0.0; // azimuth undefined on axis
    const double lens = -phys::pi * rho_m * rho_m / (spec.wavelength_m * spec.focal_length_m);
    return double(spec.charge) * phi_rad + lens;
}

std::vector<std::uint8_t> slm_mask(const BeamSpec& spec, int n_pixels, double pixel_pitch_m) {
    std::vector<std::uint8_t> mask(std::size_t(n_pixels) * n_pixels);
    for (int iy = 0; iy < n_pixels; ++iy) {
        const double y = (double(iy) - double(n_pixels / 2)) * pixel_pitch_m;
        for (int ix = 0; ix < n_pixels; ++ix) {
            const double x = (double(ix) - double(n_pixels / 2)) * pixel_pitch_m;
            const double rho = std::hypot(x, y);
            double ph = std::fmod(slm_phase(rho, std::atan2(y, x), spec), phys::two_pi);
            if (ph < 0) ph += phys::two_pi;
            mask[std::size_t(iy) * n_pixels + ix] =
                std::uint8_t(std::min(255.0, std::floor(ph / phys::two_pi * 256.0)));
        }
    }
    return mask;
}

FieldGrid make_input_field(const BeamSpec& spec) {
    spec.validate();
    FieldGrid g;
    g.n = spec.grid_n;
    g.pitch_m = spec.grid_pitch_m;
    g.z_m = 0;
    g.wavelength_m = spec.wavelength_m;
    g.amp.assign(std::size_t(g.n) * g.n, 0.0);
    const double inv_w2 = 1.0 / (spec.waist_m * spec.waist_m);
    for (int iy = 0; iy < g.n; ++iy) {
        const double y = g.coord(iy);
        for (int ix = 0; ix < g.n; ++ix) {
            const double x = g.coord(ix);
            const double rho = std::hypot(x, y);
            if (rho > spec.slm_aperture_radius_m) continue;
            const double a = std::exp(-rho * rho * inv_w2);
            g.at(ix, iy) = std::polar(a, slm_phase(rho, std::atan2(y, x), spec));
        }
    }
    const double p = g.power_w();
    if (p <= 0) throw numerical_error("make_input_field: zero power on grid");
    const double scale = std::sqrt(spec.power_w / p);
    for (auto& a : g.amp) a *= scale;
    return g;
}

namespace {

// Aliasing guard: fraction of significant pixel pairs whose phase step
// approaches pi. The few pixels ringing the vortex core always alias (the
// physical SLM has the same discretization), so a small fraction is
// tolerated; an under-sampled lens chirp covers a wide annulus and trips the
// threshold.
void check_sampling(const FieldGrid& g) {
    double peak = 0;
    for (const auto& a : g.amp) peak = std::max(peak, std::norm(a));
    if (peak <= 0) throw numerical_error("propagate: empty field");
    const double gate = 1e-6 * peak;
    std::int64_t flagged = 0, significant = 0;
    for (int iy = 0; iy < g.n; ++iy) {
        for (int ix = 0; ix + 1 < g.n; ++ix) {
            const auto& a0 = g.at(ix, iy);
            const auto& a1 = g.at(ix + 1, iy);
            if (std::norm(a0) < gate || std::norm(a1) < gate) continue;
            ++significant;
            if (std::abs(std::arg(a1 * std::conj(a0))) > 0.9 * phys::pi) ++flagged;
        }
    }
    if (significant > 0 && double(flagged) > 1e-3 * double(significant))
        throw numerical_error("propagate: phase step >= pi per pixel on " + std::to_string(flagged) +
                              " pixel pairs; grid under-samples the mask phase");
}

} // namespace

FieldGrid propagate(const FieldGrid& input, double dz_m, Exec exec) {
    if (input.wavelength_m <= 0) throw config_error("propagate: grid carries no wavelength");
    check_sampling(input);
    FieldGrid out = input;
    out.z_m = input.z_m + dz_m;
    if (dz_m == 0.0) return out;

    const int n = input.n;
    fft::forward_2d(out.amp.data(), n, n);

    const double k = phys::two_pi / input.wavelength_m;
    const double dk = phys::two_pi / (input.pitch_m * double(n));
    auto kline = [&](int i) {
        const int w = i < n / 2 ? i : i - n; // FFT frequency ordering
        return dk * double(w);
    };
    auto apply_h = [&](std::int64_t iy) {
        const double ky = kline(int(iy));
        std::complex<double>* row = out.amp.data() + std::size_t(iy) * n;
        for (int ix = 0; ix < n; ++ix) {
            const double kx = kline(ix);
            const double kr2 = kx * kx + ky * ky;
            const double kz2 = k * k - kr2;
            if (kz2 <= 0) {
                row[ix] = 0.0; // evanescent: dropped symmetrically for both signs
            } else {
                row[ix] *= std::polar(1.0, dz_m * std::sqrt(kz2));
            }
        }
    };
    if (exec == Exec::parallel)
        parallel_for(n, apply_h);
    else
        serial_for(n, apply_h);

    fft::inverse_2d(out.amp.data(), n, n);

    // Grid-extent invariant: the window must stay >= 4x the beam diameter so
    // wraparound cannot fold energy back onto the beam.
    const double extent = out.pitch_m * double(n);
    const double diameter = out.beam_diameter_m();
    if (extent < 4.0 * diameter * (1.0 - 1e-9))
        throw numerical_error("propagate: grid extent " + io::format_double(extent) +
                              " m is below 4x the beam diameter " + io::format_double(diameter) +
                              " m at z = " + io::format_double(out.z_m) + " m");
    return out;
}

namespace {

// Interpolated radius of the intensity maximum along a центр row direction.
double side_peak_radius(const FieldGrid& g, int dir) {
    const int n = g.n;
    const int iy = n / 2;
    int best = -1;
    double best_i = 0;
    for (int s = 1; s < n / 2 - 1; ++s) {
        const int ix = n / 2 + dir * s;
        const double I = g.intensity(ix, iy);
        if (I > best_i) {
            best_i = I;
            best = s;
        }
    }
    if (best <= 0) return 0;
    const double ym = g.intensity(n / 2 + dir * (best - 1), iy);
    const double y0 = g.intensity(n / 2 + dir * best, iy);
    const double yp = g.intensity(n / 2 + dir * (best + 1), iy);
    const double denom = ym - 2 * y0 + yp;
    const double off = denom != 0 ? std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5) : 0.0;
    return (double(best) + off) * g.pitch_m;
}

} // namespace

RingMetrics measure_ring(const FieldGrid& g) {
    RingMetrics m;
    const int n = g.n;
    double peak = 0;
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) peak = std::max(peak, g.intensity(ix, iy));
    const double core = g.intensity(n / 2, n / 2);
    m.core_over_peak = peak > 0 ? core / peak : 0.0;
    m.has_ring = peak > 0 && core < 0.5 * peak;
    if (!m.has_ring) {
        m.peak_intensity_w_m2 = peak;
        return m;
    }
    const double r_plus = side_peak_radius(g, +1);
    const double r_minus = side_peak_radius(g, -1);
    m.d_ring_m = r_plus + r_minus;

    // Azimuthal statistics on the ring.
    const double r_ring = 0.5 * m.d_ring_m;
    const int n_ang = 512;
    double sum = 0, sum2 = 0;
    for (int a = 0; a < n_ang; ++a) {
        const double th = phys::two_pi * double(a) / n_ang;
        const double I = g.intensity_bilinear(r_ring * std::cos(th), r_ring * std::sin(th));
        sum += I;
        sum2 += I * I;
    }
    const double mean = sum / n_ang;
    const double var = std::max(sum2 / n_ang - mean * mean, 0.0);
    m.ring_variation = mean > 0 ? std::sqrt(var) / mean : 0.0;
    m.peak_intensity_w_m2 = peak;
    return m;
}

double optimize_z_offset(const BeamSpec& spec, PlaneSelect mode, double target_m,
                         double scan_step_m, double scan_halfspan_m) {
    if (mode == PlaneSelect::fixed) return spec.z_offset_m;
    BeamSpec s = spec;
    s.validate();
    const FieldGrid input = make_input_field(s);

    // One forward transform; each candidate plane costs a transfer-function
    // multiply plus one inverse transform.
    FieldGrid spectrum = input;
    fft::forward_2d(spectrum.amp.data(), spectrum.n, spectrum.n);
    const int n = spectrum.n;
    const double k = phys::two_pi / spec.wavelength_m;
    const double dk = phys::two_pi / (spec.grid_pitch_m * double(n));
    auto plane_at = [&](double z) {
        FieldGrid g = spectrum;
        parallel_for(n, [&](std::int64_t iy) {
            const int wy = int(iy) < n / 2 ? int(iy) : int(iy) - n;
            const double ky = dk * double(wy);
            std::complex<double>* row = g.amp.data() + std::size_t(iy) * n;
            for (int ix = 0; ix < n; ++ix) {
                const int wx = ix < n / 2 ? ix : ix - n;
                const double kx = dk * double(wx);
                const double kz2 = k * k - kx * kx - ky * ky;
                if (kz2 <= 0)
                    row[ix] = 0.0;
                else
                    row[ix] *= std::polar(1.0, z * std::sqrt(kz2));
            }
        });
        fft::inverse_2d(g.amp.data(), n, n);
        g.z_m = z;
        g.wavelength_m = spec.wavelength_m;
        return g;
    };

    const double f = spec.focal_length_m;
    double best_z = 0;
    double best_metric = std::numeric_limits<double>::infinity();
    bool found = false;
    for (double dz = 0.0; dz <= scan_halfspan_m + 1e-12; dz += scan_step_m) {
        const RingMetrics rm = measure_ring(plane_at(f + dz));
        if (!rm.has_ring) continue;
        double metric;
        if (mode == PlaneSelect::ring_diameter)
            metric = std::abs(rm.d_ring_m - target_m);
        else
            metric = -rm.peak_intensity_w_m2;
        if (metric < best_metric) {
            best_metric = metric;
            best_z = dz;
            found = true;
        }
    }
    if (!found) throw numerical_error("optimize_z_offset: no ring found in scan range");

    if (mode == PlaneSelect::ring_diameter) {
        // Refine by bisection on d_ring(z) - target around the best plane.
        double lo = std::max(best_z - scan_step_m, 0.0), hi = best_z + scan_step_m;
        auto dr = [&](double z) { return measure_ring(plane_at(f + z)).d_ring_m - target_m; };
        double flo = dr(lo), fhi = dr(hi);
        if (flo * fhi < 0) {
            for (int i = 0; i < 24; ++i) {
                const double mid = 0.5 * (lo + hi);
                const double fm = dr(mid);
                if (flo * fm <= 0) {
                    hi = mid;
                    fhi = fm;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            best_z = 0.5 * (lo + hi);
        }
    }
    return best_z;
}

double dipole_potential_j(double intensity_w_m2, double detuning_hz, const AtomSpecies& species) {
    if (intensity_w_m2 < 0) throw config_error("dipole_potential: intensity must be >= 0");
    if (detuning_hz <= 0) throw config_error("dipole_potential: detuning must be > 0");
    const double gamma = species.gamma_rad_s;
    return phys::hbar * gamma * gamma * intensity_w_m2 /
           (8.0 * phys::two_pi * detuning_hz * species.i_sat_w_m2);
}

double TrapPotential::optical_intensity(double x, double y, double z) const {
    const double r1 = std::hypot(y, z); // beam along x
    const double r2 = std::hypot(x, z); // beam along y
    return intensity_w_m2.value(r1) + intensity_w_m2.value(r2);
}

double TrapPotential::potential_j(double x, double y, double z) const {
    double u = u_per_intensity * optical_intensity(x, y, z);
    if (gravity) u += mass_kg * phys::g_earth * z;
    return u;
}

void TrapPotential::force(double x, double y, double z, double& fx, double& fy, double& fz) const {
    fx = fy = fz = 0.0;
    const double r1 = std::hypot(y, z);
    const double r2 = std::hypot(x, z);
    if (r1 > 1e-12) {
        const double dU = u_per_intensity * intensity_w_m2.derivative(r1) / r1;
        fy -= dU * y;
        fz -= dU * z;
    }
    if (r2 > 1e-12) {
        const double dU = u_per_intensity * intensity_w_m2.derivative(r2) / r2;
        fx -= dU * x;
        fz -= dU * z;
    }
    if (gravity) fz -= mass_kg * phys::g_earth;
}

TrapPotential TrapPotential::free_space(const AtomSpecies& species, bool with_gravity) {
    TrapPotential t;
    t.intensity_w_m2 = fit::UniformSpline(std::vector<double>(8, 0.0), 1e-4, true);
    t.u_per_intensity = 0.0;
    t.gravity = with_gravity;
    t.mass_kg = species.mass_kg;
    t.u_max_j = 0;
    t.d_ring_m = 0;
    t.box_radius_m = 1.0; // effectively unbounded
    return t;
}

TrapPotential crossed_trap(const BeamSpec& spec, const AtomSpecies& species, bool gravity) {
    spec.validate();
    const FieldGrid input = make_input_field(spec);
    const FieldGrid plane = propagate(input, spec.focal_length_m + spec.z_offset_m);
    const RingMetrics rm = measure_ring(plane);
    if (!rm.has_ring)
        throw numerical_error("crossed_trap: no ring at the operating plane (z_off = " +
                              io::format_double(spec.z_offset_m) + " m)");

    // Azimuthally averaged radial profile, then a zero-slope-at-axis spline.
    const double r_max = std::max(4.5 * rm.d_ring_m * 0.5, 1.2e-3);
    const double dr = 3e-6;
    const int n_r = int(r_max / dr) + 1;
    std::vector<double> profile(n_r, 0.0);
    const int n_ang = 360;
    parallel_for(n_r, [&](std::int64_t i) {
        const double r = double(i) * dr;
        double sum = 0;
        for (int a = 0; a < n_ang; ++a) {
            const double th = phys::two_pi * double(a) / n_ang;
            sum += plane.intensity_bilinear(r * std::cos(th), r * std::sin(th));
        }
        profile[i] = sum / n_ang;
    });

    TrapPotential trap;
    trap.intensity_w_m2 = fit::UniformSpline(std::move(profile), dr, true);
    trap.u_per_intensity = dipole_potential_j(1.0, spec.detuning_hz, species);
    trap.detuning_hz = spec.detuning_hz;
    trap.gravity = gravity;
    trap.mass_kg = species.mass_kg;
    trap.peak_intensity_w_m2 = trap.intensity_w_m2.max_value();
    trap.u_max_j = trap.u_per_intensity * trap.peak_intensity_w_m2;
    trap.d_ring_m = rm.d_ring_m;
    trap.box_radius_m = 3.0 * 0.5 * rm.d_ring_m;
    trap.z_offset_m = spec.z_offset_m;
    return trap;
}

TrapMetrics trap_report(const TrapPotential& trap, const AtomSpecies& species) {
    TrapMetrics m;
    m.u_max_j = trap.u_max_j;
    const double hbar_gamma = phys::hbar * species.gamma_rad_s;
    m.u_max_hbar_gamma = trap.u_max_j / hbar_gamma;
    m.u_max_recoil = trap.u_max_j / recoil_energy_j(species);
    m.peak_intensity_w_m2 = trap.peak_intensity_w_m2;
    if (trap.d_ring_m > 0) {
        m.d_ring_m = trap.d_ring_m;
        m.gravity_span_j = species.mass_kg * phys::g_earth * trap.d_ring_m;
        m.gravity_span_hbar_gamma = m.gravity_span_j / hbar_gamma;
    }
    if (trap.u_per_intensity > 0)
        m.peak_scatter_rate_hz =
            scattering_rate_hz(trap.peak_intensity_w_m2, trap.detuning_hz, species);
    m.z_offset_m = trap.z_offset_m;
    return m;
}

} // namespace faraday
