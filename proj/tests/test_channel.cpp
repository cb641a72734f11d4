// SPDX-License-Identifier: Apache-2.0
//
// isacsim — deterministic ray-traced channel simulation and radio sensing
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
//
// OFDM frame synthesis: band-limited taps, subcarrier/symbol/antenna phase
// structure, seeded noise statistics, and the single-tap channel estimator.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "isac/channel.hpp"
#include "isac/dsp.hpp"
#include "oracles.hpp"

using namespace isac;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

RadioConfig small_radio(int n_sub, int n_symb, double noise = 0.0) {
    RadioConfig r;
    r.num_subcarriers = n_sub;
    r.num_symbols = n_symb;
    r.noise_stddev = noise;
    return r;
}

double wrap_phase(double p) {
    while (p > kPi) p -= 2.0 * kPi;
    while (p < -kPi) p += 2.0 * kPi;
    return p;
}

} // namespace

TEST_CASE("integer-delay path gives a linear subcarrier phase ramp", "[channel]") {
    RadioConfig radio = small_radio(256, 4);
    auto frame = synthesize_frame(
        testutil::make_ensemble({testutil::tap_path(25, 0.37, radio)}), radio, 0, 1);

    const double slope = -2.0 * kPi * 25.0 / 256.0;
    for (int k = 0; k + 1 < 256; ++k) {
        cplx ratio = frame.at(0, k + 1, 0) / frame.at(0, k, 0);
        CHECK_THAT(std::arg(ratio), WithinAbs(slope, 1e-9));
        CHECK_THAT(std::abs(frame.at(0, k, 0)), WithinAbs(0.37, 1e-12));
    }
}

TEST_CASE("doppler rotates each symbol by a constant phase", "[channel]") {
    RadioConfig radio = small_radio(64, 100);
    const double beta = 2.0 * kPi * 17.0 / 100.0;
    auto frame = synthesize_frame(
        testutil::make_ensemble({testutil::tap_path(5, 1.0, radio, beta)}), radio, 0, 1);

    for (int k = 0; k < 64; k += 7)
        for (int n = 0; n + 1 < 100; ++n) {
            cplx ratio = frame.at(0, k, n + 1) / frame.at(0, k, n);
            CHECK_THAT(wrap_phase(std::arg(ratio) - beta), WithinAbs(0.0, 1e-9));
        }
}

TEST_CASE("array elements see a linear phase in sin(azimuth)", "[channel]") {
    RadioConfig radio = small_radio(64, 2);
    const double az = 0.3;
    const double spacing = 0.04;
    auto frame = synthesize_frame(
        testutil::make_ensemble({testutil::tap_path(9, 1.0, radio, 0.0, az)}, 4, spacing),
        radio, 0, 1);

    const double expected = 2.0 * kPi * (spacing / radio.wavelength()) * std::sin(az);
    for (int m = 0; m + 1 < 4; ++m) {
        cplx ratio = frame.at(m + 1, 20, 1) / frame.at(m, 20, 1);
        CHECK_THAT(wrap_phase(std::arg(ratio) - expected), WithinAbs(0.0, 1e-9));
    }
}

TEST_CASE("noise-only frames hit the configured variance", "[channel]") {
    RadioConfig radio = small_radio(512, 200, 0.5);
    auto frame = synthesize_frame(testutil::make_ensemble({}), radio, 0, 7);

    double power = 0.0;
    for (const auto& v : frame.data) power += std::norm(v);
    power /= double(frame.data.size());
    CHECK(frame.data.size() >= 100000);
    CHECK_THAT(power, WithinRel(0.25, 0.05));
}

TEST_CASE("noise streams are seeded and split per frame and antenna", "[channel]") {
    RadioConfig radio = small_radio(64, 16, 1.0);
    auto ens1 = testutil::make_ensemble({}, 1);
    auto ens2 = testutil::make_ensemble({}, 2);

    auto a = synthesize_frame(ens1, radio, 2, 5);
    auto b = synthesize_frame(ens1, radio, 2, 5);
    CHECK(testutil::max_abs_diff(a, b) == 0.0);

    auto other_seed = synthesize_frame(ens1, radio, 2, 6);
    CHECK(testutil::max_abs_diff(a, other_seed) > 0.0);

    auto other_frame = synthesize_frame(ens1, radio, 3, 5);
    CHECK(testutil::max_abs_diff(a, other_frame) > 0.0);

    // Antenna 0 draws the same stream no matter how many antennas exist.
    auto wide = synthesize_frame(ens2, radio, 2, 5);
    double worst = 0.0;
    for (int k = 0; k < 64; ++k)
        for (int n = 0; n < 16; ++n)
            worst = std::max(worst, std::abs(wide.at(0, k, n) - a.at(0, k, n)));
    CHECK(worst == 0.0);

    // And antenna 1 draws a different one.
    double diff = 0.0;
    for (int k = 0; k < 64; ++k)
        for (int n = 0; n < 16; ++n)
            diff = std::max(diff, std::abs(wide.at(1, k, n) - wide.at(0, k, n)));
    CHECK(diff > 0.0);
}

TEST_CASE("two paths half a sample apart occupy two neighbouring taps", "[channel]") {
    RadioConfig radio = small_radio(128, 1);
    const double bw = radio.bandwidth;
    std::vector<PathGain> paths{testutil::tap_path(40, 1.0, radio)};
    paths.push_back(paths[0]);
    paths[1].delay = 40.5 / bw; // tau + 1 / (2 B) = half a sample later
    auto frame = synthesize_frame(testutil::make_ensemble(paths), radio, 0, 1);

    std::vector<cplx> column(128);
    for (int k = 0; k < 128; ++k) column[k] = frame.at(0, k, 0);
    std::vector<cplx> taps = idft(column); // scaled by N

    int first = 0, second = 0;
    double best = -1.0, next = -1.0;
    for (int t = 0; t < 128; ++t) {
        double mag = std::abs(taps[t]);
        if (mag > best) {
            next = best;
            second = first;
            best = mag;
            first = t;
        } else if (mag > next) {
            next = mag;
            second = t;
        }
    }
    CHECK(std::min(first, second) == 40);
    CHECK(std::max(first, second) == 41);
    // Tap 40 holds the integer path plus the fractional path's near lobe
    // (~1.64 total) while tap 41 holds the far lobe alone (~0.64).
    CHECK(next > 0.3 * best);
    CHECK_THAT(next / best, WithinAbs(0.636 / 1.636, 0.02));
}

TEST_CASE("band limiting places integer delays on single exact taps", "[channel]") {
    RadioConfig radio = small_radio(64, 1);
    const cplx gain{0.7, 0.1};
    auto out = band_limit({{9.0 / radio.bandwidth, gain}}, radio);
    CHECK(out.dropped == 0);
    REQUIRE(out.taps.size() == 64);
    CHECK(out.taps[9] == gain);
    for (int t = 0; t < 64; ++t)
        if (t != 9) CHECK(out.taps[t] == cplx{0.0, 0.0});
}

TEST_CASE("band limiting splits fractional delays symmetrically", "[channel]") {
    RadioConfig radio = small_radio(64, 1);
    auto out = band_limit({{9.5 / radio.bandwidth, cplx{1.0, 0.0}}}, radio);
    CHECK(out.dropped == 0);
    CHECK_THAT(std::abs(out.taps[9]), WithinAbs(std::abs(out.taps[10]), 1e-12));
    double peak = 0.0, energy = 0.0;
    for (const auto& t : out.taps) {
        peak = std::max(peak, std::abs(t));
        energy += std::norm(t);
    }
    CHECK(peak < 0.75);   // a split pulse peaks below the on-grid tap
    CHECK(energy > 0.7);  // but the cluster retains most of the energy
    CHECK(energy < 1.01);
}

TEST_CASE("band limiting drops delays outside the unambiguous window", "[channel]") {
    RadioConfig radio = small_radio(64, 1);
    auto late = band_limit({{104.0 / radio.bandwidth, cplx{1.0, 0.0}}}, radio);
    CHECK(late.dropped == 1);
    for (const auto& t : late.taps) CHECK(t == cplx{0.0, 0.0});

    auto early = band_limit({{-5.0 / radio.bandwidth, cplx{1.0, 0.0}}}, radio);
    CHECK(early.dropped == 1);

    auto empty = band_limit({}, radio);
    CHECK(empty.dropped == 0);
    for (const auto& t : empty.taps) CHECK(t == cplx{0.0, 0.0});
}

TEST_CASE("single-tap estimator inverts the pilot grid", "[channel]") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    std::vector<cplx> h(48);
    for (auto& v : h) v = cplx{u(rng) + 2.0, u(rng)}; // bounded away from zero

    SECTION("all-ones pilots return the received grid") {
        std::vector<cplx> x(h.size(), cplx{1.0, 0.0});
        auto est = estimate_channel(x, h);
        for (std::size_t i = 0; i < h.size(); ++i) CHECK(est[i] == h[i]);
    }
    SECTION("pilot h and received h squared recover h") {
        std::vector<cplx> y(h.size());
        for (std::size_t i = 0; i < h.size(); ++i) y[i] = h[i] * h[i];
        auto est = estimate_channel(h, y);
        for (std::size_t i = 0; i < h.size(); ++i)
            CHECK(std::abs(est[i] - h[i]) <= 1e-12 * std::abs(h[i]));
    }
    SECTION("qpsk pilots round trip") {
        const double s = std::sqrt(0.5);
        std::vector<cplx> x(h.size()), y(h.size());
        std::uniform_int_distribution<int> bit(0, 1);
        for (std::size_t i = 0; i < h.size(); ++i) {
            x[i] = cplx{bit(rng) ? s : -s, bit(rng) ? s : -s};
            y[i] = h[i] * x[i];
        }
        auto est = estimate_channel(x, y);
        for (std::size_t i = 0; i < h.size(); ++i)
            CHECK(std::abs(est[i] - h[i]) <= 1e-12 * std::abs(h[i]));
    }
    SECTION("zero pilots and shape mismatches are rejected") {
        std::vector<cplx> x(h.size(), cplx{1.0, 0.0});
        x[7] = 0.0;
        CHECK_THROWS_AS(estimate_channel(x, h), ZeroPilotError);
        CHECK_THROWS_AS(estimate_channel(std::vector<cplx>(3), std::vector<cplx>(4)),
                        DimensionMismatchError);
    }
}

TEST_CASE("noiseless round trip keeps the true tap thirty dB clear", "[channel]") {
    RadioConfig radio = small_radio(256, 1);
    auto frame = synthesize_frame(
        testutil::make_ensemble({testutil::tap_path(19, 1.0, radio)}), radio, 0, 1);

    std::vector<cplx> column(256);
    for (int k = 0; k < 256; ++k) column[k] = frame.at(0, k, 0);
    auto taps = idft(column);

    double main = std::abs(taps[19]);
    double rest = 0.0;
    for (int t = 0; t < 256; ++t)
        if (t != 19) rest = std::max(rest, std::abs(taps[t]));
    REQUIRE(rest >= 0.0);
    CHECK(20.0 * std::log10(main / std::max(rest, 1e-300)) >= 30.0);
}
