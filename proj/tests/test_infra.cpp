#include <doctest.h>

#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "faraday/errors.hpp"
#include "faraday/fft.hpp"
#include "faraday/fit.hpp"
#include "faraday/io.hpp"
#include "faraday/rng.hpp"
#include "faraday/units.hpp"

using namespace faraday;

TEST_CASE("counter rng is deterministic and order-free") {
    rng::Counter a(123, 7), b(123, 7);
    for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());
    rng::Counter c(123, 8);
    CHECK(c.next_u64() != rng::Counter(123, 7).next_u64());
    CHECK(rng::substream(1, "alpha") != rng::substream(1, "beta"));
    CHECK(rng::substream(1, "alpha") != rng::substream(2, "alpha"));
}

TEST_CASE("rng moments") {
    rng::Counter c(42, 0);
    const int n = 200000;
    double su = 0, sn = 0, sn2 = 0;
    for (int i = 0; i < n; ++i) {
        const double u = c.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        su += u;
        const double g = c.normal();
        sn += g;
        sn2 += g * g;
    }
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(sn / n == doctest::Approx(0.0).epsilon(1.0)); // |mean| < ~0.007
    CHECK(std::abs(sn / n) < 0.01);
    CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));

    double sp = 0;
    for (int i = 0; i < 20000; ++i) sp += c.poisson(3.2);
    CHECK(sp / 20000 == doctest::Approx(3.2).epsilon(0.03));

    double sx = 0, sy = 0, sz = 0;
    for (int i = 0; i < 20000; ++i) {
        double x, y, z;
        c.unit_vector(x, y, z);
        CHECK(std::abs(x * x + y * y + z * z - 1.0) < 1e-12);
        sx += x;
        sy += y;
        sz += z;
    }
    CHECK(std::abs(sx / 20000) < 0.02);
    CHECK(std::abs(sy / 20000) < 0.02);
    CHECK(std::abs(sz / 20000) < 0.02);
}

namespace {

// Brute-force DFT oracle.
std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j)
            out[k] += x[j] * std::polar(1.0, -2.0 * M_PI * double(k * j) / double(n));
    return out;
}

} // namespace

TEST_CASE("fft matches the brute-force dft") {
    rng::Counter c(9, 0);
    for (std::size_t n : {16u, 64u, 200u}) { // non-power-of-two included
        std::vector<std::complex<double>> x(n);
        for (auto& v : x) v = {c.normal(), c.normal()};
        auto ref = naive_dft(x);
        auto got = x;
        fft::forward(got.data(), n);
        for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(got[k] - ref[k]) < 1e-9 * double(n));
    }
}

TEST_CASE("fft inverse round trip and parseval") {
    rng::Counter c(10, 0);
    std::vector<std::complex<double>> x(1024);
    for (auto& v : x) v = {c.normal(), c.normal()};
    auto y = x;
    fft::forward(y.data(), y.size());
    double sum_t = 0, sum_f = 0;
    for (const auto& v : x) sum_t += std::norm(v);
    for (const auto& v : y) sum_f += std::norm(v);
    CHECK(sum_f == doctest::Approx(1024.0 * sum_t).epsilon(1e-12));
    fft::inverse(y.data(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - x[i]) < 1e-12);
}

TEST_CASE("2d fft identity and dc value") {
    rng::Counter c(11, 0);
    const std::size_t n = 32;
    std::vector<std::complex<double>> x(n * n);
    for (auto& v : x) v = {c.normal(), c.normal()};
    auto y = x;
    fft::forward_2d(y.data(), n, n);
    std::complex<double> dc = 0;
    for (const auto& v : x) dc += v;
    CHECK(std::abs(y[0] - dc) < 1e-9);
    fft::inverse_2d(y.data(), n, n);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - x[i]) < 1e-12);
}

TEST_CASE("uniform spline interpolates and clamps") {
    const double dr = 0.1;
    std::vector<double> y;
    for (int i = 0; i <= 60; ++i) y.push_back(std::cos(i * dr));
    fit::UniformSpline s(y, dr, true);
    for (double r = 0.05; r < 5.9; r += 0.233) {
        CHECK(s.value(r) == doctest::Approx(std::cos(r)).epsilon(1e-4));
        CHECK(s.derivative(r) == doctest::Approx(-std::sin(r)).epsilon(2e-3));
    }
    CHECK(s.derivative(0.0) == 0.0);
    CHECK(s.value(-1.0) == y.front());
    CHECK(s.value(100.0) == y.back());
    CHECK(s.derivative(100.0) == 0.0);
}

TEST_CASE("levenberg-marquardt recovers exact model parameters") {
    // y = a exp(-t/tau), 40 points, no noise
    std::vector<double> t(40), y(40);
    for (int i = 0; i < 40; ++i) {
        t[i] = 0.05 * i;
        y[i] = 2.5 * std::exp(-t[i] / 0.7);
    }
    auto [a, tau] = fit::fit_exponential(t, y);
    CHECK(a == doctest::Approx(2.5).epsilon(1e-8));
    CHECK(tau == doctest::Approx(0.7).epsilon(1e-8));
}

TEST_CASE("linear least squares with condition estimate") {
    Eigen::MatrixXd a(5, 2);
    Eigen::VectorXd b(5);
    for (int i = 0; i < 5; ++i) {
        a(i, 0) = 1.0;
        a(i, 1) = double(i);
        b[i] = 3.0 + 2.0 * i;
    }
    auto r = fit::linear_least_squares(a, b);
    CHECK(r.x[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(r.x[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.condition < 100.0);
    CHECK(r.rss < 1e-20);
}

TEST_CASE("unit conversions round trip below 1e-12") {
    for (const char* u : {"ms", "us", "khz", "ghz", "mm", "um", "nm", "mg", "ug", "mw",
                          "mw_cm2", "deg", "uk"}) {
        const double v = 1.2345678901234;
        const double si = units::to_internal(v, u);
        CHECK(std::abs(units::from_internal(si, u) - v) / v < 1e-12);
    }
    CHECK(units::to_internal(1.6, "mw_cm2") == doctest::Approx(16.0)); // I_sat check
    CHECK_THROWS_AS(units::to_internal(1.0, "furlong"), config_error);
}

TEST_CASE("unit suffix splitting") {
    auto s = units::split_unit_suffix("eddy_tau_ms");
    REQUIRE(s.has_value());
    CHECK(s->first == "eddy_tau");
    CHECK(s->second == "ms");
    auto c = units::split_unit_suffix("peak_intensity_mw_cm2");
    REQUIRE(c.has_value());
    CHECK(c->first == "peak_intensity");
    CHECK(c->second == "mw_cm2");
    CHECK_FALSE(units::split_unit_suffix("plain_name").has_value());
}

TEST_CASE("kv file parse, errors, unknown keys") {
    const std::string text = "# comment\nalpha = 1.5\nname = run_a\n";
    io::KvFile kv = io::KvFile::parse(text, "test.kv");
    CHECK(kv.get_double("alpha") == 1.5);
    CHECK(kv.unconsumed().size() == 1);
    CHECK(kv.unconsumed()[0] == "name");
    CHECK(kv.get("name") == "run_a");
    CHECK(kv.unconsumed().empty());

    CHECK_THROWS_WITH_AS(io::KvFile::parse("nonsense line\n", "bad.kv"),
                         doctest::Contains("bad.kv:1"), config_error);
    CHECK_THROWS_AS(io::KvFile::parse("a = 1\na = 2\n", "dup.kv"), config_error);
}

TEST_CASE("format_double round trips exactly") {
    for (double v : {1.0 / 3.0, 1e-300, 6.62607015e-34, -0.0, 123456789.123456789}) {
        const std::string s = io::format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
}
