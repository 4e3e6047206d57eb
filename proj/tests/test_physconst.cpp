#include <doctest.h>

#include <cmath>
#include <set>

#include "faraday/errors.hpp"
#include "faraday/physconst.hpp"

using namespace faraday;

TEST_CASE("rb85 species entry") {
    const AtomSpecies& rb = AtomSpecies::rb85();
    CHECK(rb.gyro_hz_per_gauss == 466741.5);
    CHECK(rb.i_sat_w_m2 == 16.0); // 1.6 mW/cm^2
    CHECK(rb.hyperfine_f == 3);
    CHECK(rb.mass_kg > 0);
    CHECK(rb.gamma_rad_s > 0);
    CHECK(rb.gamma_rad_s == doctest::Approx(phys::two_pi * 6.066e6));
}

TEST_CASE("larmor frequency") {
    const AtomSpecies& rb = AtomSpecies::rb85();
    CHECK(larmor_frequency_hz(0.0, rb) == 0.0);
    // 100 mG bias -> the ~50 kHz operating point
    CHECK(larmor_frequency_hz(0.100, rb) == doctest::Approx(46674.15).epsilon(1e-12));
    // 230 uG pairs with ~110 Hz
    CHECK(larmor_frequency_hz(230e-6, rb) == doctest::Approx(107.350545).epsilon(1e-12));
    // sign carries precession sense only
    CHECK(larmor_frequency_hz(-0.1, rb) == larmor_frequency_hz(0.1, rb));
    CHECK_THROWS_AS(larmor_frequency_hz(std::nan(""), rb), config_error);
}

TEST_CASE("field from frequency") {
    const AtomSpecies& rb = AtomSpecies::rb85();
    CHECK(field_from_frequency_gauss(0.0, rb) == 0.0);
    CHECK(field_from_frequency_gauss(466741.5, rb) == doctest::Approx(1.0).epsilon(1e-13));
    // 45 Hz -> 96.4 uG (~10 nT)
    const double b45 = field_from_frequency_gauss(45.0, rb);
    CHECK(b45 == doctest::Approx(9.641311089757392e-05).epsilon(1e-12));
    CHECK(b45 * phys::gauss_to_tesla == doctest::Approx(9.64e-9).epsilon(1e-3));
    CHECK_THROWS_AS(field_from_frequency_gauss(-1.0, rb), config_error);
}

TEST_CASE("larmor and field conversions invert over the working range") {
    const AtomSpecies& rb = AtomSpecies::rb85();
    for (double b = 1e-6; b <= 10.0; b *= 3.7) {
        const double back = field_from_frequency_gauss(larmor_frequency_hz(b, rb), rb);
        CHECK(std::abs(back - b) / b < 1e-12);
    }
}

TEST_CASE("recoil energy") {
    const AtomSpecies& rb = AtomSpecies::rb85();
    const double er = recoil_energy_j(rb);
    CHECK(er / phys::h_planck == doctest::Approx(3859.69).epsilon(1e-4));
    // 10 uK sits ~54 recoil energies up, far below the ~3000 E_r trap depth
    CHECK(phys::k_boltzmann * 10e-6 / er == doctest::Approx(54.0).epsilon(0.01));

    AtomSpecies heavy = rb;
    heavy.mass_kg *= 2.0;
    CHECK(recoil_energy_j(heavy) == doctest::Approx(er / 2.0).epsilon(1e-12));
}

TEST_CASE("shot noise limit") {
    const AtomSpecies& rb = AtomSpecies::rb85();
    const double b1 = shot_noise_limit_gauss(1e6, 0.7e-3, 2e-3, rb);
    const double b2 = shot_noise_limit_gauss(1e5, 0.7e-3, 2e-3, rb);
    CHECK(b1 == doctest::Approx(1.8107544641488202e-06).epsilon(1e-12));
    CHECK(b2 == doctest::Approx(5.726108390027978e-06).epsilon(1e-12));
    // the ~2 uG and ~6 uG operating figures
    CHECK(b1 > 1.5e-6);
    CHECK(b1 < 2.5e-6);
    CHECK(b2 > 4.5e-6);
    CHECK(b2 < 7.5e-6);
    // quadrupling N halves the limit exactly
    CHECK(shot_noise_limit_gauss(4e6, 0.7e-3, 2e-3, rb) == doctest::Approx(b1 / 2).epsilon(1e-14));
    CHECK_THROWS_AS(shot_noise_limit_gauss(0.0, 1e-3, 1e-3, rb), config_error);
    CHECK_THROWS_AS(shot_noise_limit_gauss(1e6, -1.0, 1e-3, rb), config_error);
}

TEST_CASE("constants table is consistent and unique") {
    const auto table = constant_table();
    std::set<std::string> keys;
    for (const auto& row : table) {
        CHECK(std::isfinite(row.value));
        CHECK(keys.insert(row.key).second); // no duplicates
        CHECK(row.unit != nullptr);
        CHECK(row.source != nullptr);
    }
    bool found_gyro = false;
    for (const auto& row : table)
        if (std::string(row.key) == "rb85_gyro") {
            found_gyro = true;
            CHECK(row.value == AtomSpecies::rb85().gyro_hz_per_gauss);
        }
    CHECK(found_gyro);
}
