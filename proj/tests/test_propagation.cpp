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
// Closed-form loss factors against hand-derived values, the Fresnel
// integrals against a fixed-step Simpson oracle, and full per-path gain
// composition including Doppler from animated surfaces.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <utility>
#include <vector>

#include "isac/fresnel.hpp"
#include "isac/propagation.hpp"
#include "oracles.hpp"

using namespace isac;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("free-space amplitude factor", "[propagation]") {
    const double lambda = 0.08;
    CHECK_THAT(free_space_loss(lambda, lambda / (4.0 * kPi)), WithinAbs(1.0, 1e-12));
    CHECK_THAT(free_space_loss(lambda, 28.0), WithinAbs(2.2736e-4, 1e-8));

    // Doubling the distance halves the amplitude.
    for (double d : {1.0, 7.3, 120.0})
        CHECK_THAT(free_space_loss(lambda, 2.0 * d),
                   WithinRel(0.5 * free_space_loss(lambda, d), 1e-15));

    CHECK_THROWS_AS(free_space_loss(lambda, 0.0), NonPositiveDistanceError);
    CHECK_THROWS_AS(free_space_loss(lambda, -1.0), NonPositiveDistanceError);
}

TEST_CASE("reflection coefficient closed forms", "[propagation]") {
    Material vacuum = testutil::plain_material("vac", 1.0);
    for (double phi : {0.0, 0.3, 1.0, 1.4})
        CHECK_THAT(reflection_loss(phi, vacuum), WithinAbs(0.0, 1e-12));

    Material eps4 = testutil::plain_material("eps4", 4.0);
    CHECK_THAT(reflection_loss(0.0, eps4), WithinAbs(-1.0 / 3.0, 1e-12));

    // Hand evaluation at 45 degrees.
    double phi = kPi / 4.0;
    double root = std::sqrt(4.0 - std::sin(phi) * std::sin(phi));
    CHECK_THAT(reflection_loss(phi, eps4),
               WithinAbs((std::cos(phi) - root) / (std::cos(phi) + root), 1e-15));

    // Dense media approach a perfect (sign-flipping) mirror.
    Material dense = testutil::plain_material("dense", 1e10);
    CHECK_THAT(reflection_loss(0.7, dense), WithinAbs(-1.0, 1e-4));

    // Magnitude never exceeds one for physical media.
    for (double eps : {1.0, 2.0, 4.0, 16.0})
        for (double a = 0.0; a < 1.57; a += 0.05) {
            Material m = testutil::plain_material("m", eps);
            CHECK(std::abs(reflection_loss(a, m)) <= 1.0 + 1e-12);
        }
}

TEST_CASE("evanescent incidence is rejected", "[propagation]") {
    Material thin = testutil::plain_material("thin");
    thin.permittivity_real = 0.5; // below-vacuum product, unreachable from scenes
    CHECK_THROWS_AS(reflection_loss(deg2rad(60.0), thin), EvanescentRegimeError);
    CHECK_NOTHROW(reflection_loss(deg2rad(30.0), thin)); // sin^2 = 0.25 < 0.5
}

TEST_CASE("scattering lobe closed forms", "[propagation]") {
    CHECK_THAT(scattering_loss(0.0, 4.0), WithinAbs(1.0, 1e-12));
    CHECK_THAT(scattering_loss(kPi, 4.0), WithinAbs(0.0, 1e-12));
    CHECK_THAT(scattering_loss(kPi / 2.0, 4.0), WithinAbs(0.25, 1e-12));
    CHECK_THAT(scattering_loss(kPi / 2.0, 2.0), WithinAbs(0.5, 1e-12));

    // Monotone non-increasing away from the specular direction.
    double prev = 2.0;
    for (double t = 0.0; t <= kPi + 1e-9; t += kPi / 64.0) {
        double v = scattering_loss(t, 4.0);
        CHECK(v <= prev + 1e-15);
        CHECK(v >= 0.0);
        prev = v;
    }
}

TEST_CASE("roughness attenuation closed forms", "[propagation]") {
    const double lambda = 0.08;
    CHECK_THAT(roughness_loss(0.3, 0.0, lambda), WithinAbs(1.0, 1e-12));
    CHECK_THAT(roughness_loss(kPi / 2.0, 0.01, lambda), WithinAbs(1.0, 1e-12));

    // rho = lambda / (8 pi) at normal incidence: q = 1/8, so the factor is
    // exp(-1/8) J0(1).
    double got = roughness_loss(0.0, lambda / (8.0 * kPi), lambda);
    CHECK_THAT(got, WithinAbs(0.6753, 2e-4));
    CHECK_THAT(got, WithinAbs(std::exp(-0.125) * testutil::bessel_j0_series(1.0), 1e-9));
}

TEST_CASE("knife-edge diffraction factor", "[propagation]") {
    CHECK_THAT(diffraction_loss(0.0), WithinAbs(0.5, 1e-12));

    // Against the Simpson-oracle Fresnel table across the working range.
    auto table = testutil::fresnel_table(5.0, 501);
    for (int i = 0; i < 501; ++i) {
        double nu = 5.0 * i / 500.0;
        auto [c, s] = table[i];
        double expected = 0.5 * std::hypot(1.0 - c - s, c + s);
        CHECK_THAT(diffraction_loss(nu), WithinAbs(expected, 1e-6));
    }
}

TEST_CASE("fresnel integrals against the fixed-step oracle", "[propagation]") {
    auto table = testutil::fresnel_table(5.0, 501);
    double worst = 0.0;
    for (int i = 0; i < 501; ++i) {
        double x = 5.0 * i / 500.0;
        auto [c, s] = fresnel_cs(x);
        worst = std::max(worst, std::abs(c - table[i].first));
        worst = std::max(worst, std::abs(s - table[i].second));
    }
    CHECK(worst <= 1e-6);

    // Frozen high-precision spot values.
    CHECK_THAT(fresnel_c(0.5), WithinAbs(0.49234422587144639, 1e-8));
    CHECK_THAT(fresnel_s(0.5), WithinAbs(0.064732432859999278, 1e-8));
    CHECK_THAT(fresnel_c(1.0), WithinAbs(0.77989340037682283, 1e-8));
    CHECK_THAT(fresnel_s(1.0), WithinAbs(0.43825914739035477, 1e-8));
    CHECK_THAT(fresnel_c(2.0), WithinAbs(0.48825340607534075, 1e-8));
    CHECK_THAT(fresnel_s(2.0), WithinAbs(0.34341567836369824, 1e-8));
    CHECK_THAT(fresnel_c(5.0), WithinAbs(0.56363118870401223, 1e-8));
    CHECK_THAT(fresnel_s(5.0), WithinAbs(0.49919138191711689, 1e-8));
}

TEST_CASE("geometric nu from a path past an edge", "[propagation]") {
    const double lambda = 0.08;
    Vec3 a{0, 0, 0}, b{100, 0, 0};

    // Edge lifted so both grazing angles are exactly 0.01 rad.
    double y = 50.0 * std::tan(0.01);
    Vec3 edge{50, y, 0};
    double alpha = std::atan2(y, 50.0);
    double d = 2.0 * std::sqrt(50.0 * 50.0 + y * y);
    double expected = std::sqrt(2.0 * d / lambda * alpha * alpha);

    CHECK_THAT(diffraction_nu(a, edge, b, lambda), WithinAbs(expected, 1e-9));
    CHECK_THAT(diffraction_nu(a, edge, b, lambda), WithinAbs(0.5, 1e-3));

    // Edge exactly on the direct line: no obstruction parameter.
    CHECK_THAT(diffraction_nu(a, {50, 0, 0}, b, lambda), WithinAbs(0.0, 1e-9));
}

TEST_CASE("backscatter lobe closed forms", "[propagation]") {
    Material m = testutil::plain_material("m", 1.0, 0.8);
    m.scatter_exponent = 2.0;
    CHECK_THAT(backscatter_loss(0.0, m), WithinAbs(0.8, 1e-12));
    CHECK_THAT(backscatter_loss(kPi / 2.0, m), WithinAbs(0.4, 1e-12));

    m.backscatter_coeff = 0.0;
    CHECK_THAT(backscatter_loss(0.0, m), WithinAbs(0.0, 1e-15));
}

TEST_CASE("antenna pattern gains", "[propagation]") {
    CHECK(pattern_gain(AntennaPattern::Isotropic, {0.3, -0.4, 0.8}) == 1.0);

    CHECK_THAT(pattern_gain(AntennaPattern::Dipole, {0, 0, 1}), WithinAbs(0.0, 1e-12));
    CHECK_THAT(pattern_gain(AntennaPattern::Dipole, {1, 0, 0}), WithinAbs(1.0, 1e-12));
    CHECK_THAT(pattern_gain(AntennaPattern::Dipole, {0.6, 0, 0.8}), WithinAbs(0.6, 1e-12));

    CHECK_THAT(pattern_gain(AntennaPattern::Patch, {1, 0, 0}), WithinAbs(1.0, 1e-12));
    Vec3 off60{std::cos(kPi / 3.0), std::sin(kPi / 3.0), 0.0};
    CHECK_THAT(pattern_gain(AntennaPattern::Patch, off60), WithinAbs(0.5, 1e-12));
    CHECK(pattern_gain(AntennaPattern::Patch, {-0.3, 0.2, 0}) == 0.0);
}

TEST_CASE("beam loss respects endpoint orientation", "[propagation]") {
    RadioEndpoint tx;
    tx.pattern = AntennaPattern::Patch;
    tx.orientation = Quat::from_axis_angle({0, 0, 1}, kPi / 2.0); // boresight -> +y

    RadioEndpoint rx;
    rx.pattern = AntennaPattern::Patch; // boresight +x

    // Wave leaves along +y (tx boresight) and arrives traveling -x (so it
    // comes from the rx boresight direction).
    CHECK_THAT(beam_loss(tx, {0, 1, 0}, rx, {-1, 0, 0}), WithinAbs(1.0, 1e-12));

    // 60 degrees off the tx boresight halves the patch gain.
    Vec3 dep{std::cos(kPi / 3.0 + kPi / 2.0), std::sin(kPi / 3.0 + kPi / 2.0), 0.0};
    CHECK_THAT(beam_loss(tx, dep, rx, {-1, 0, 0}), WithinAbs(0.5, 1e-12));

    RadioEndpoint iso_tx, iso_rx;
    CHECK(beam_loss(iso_tx, {0, 1, 0}, iso_rx, {0, 0, -1}) == 1.0);
}

TEST_CASE("direct path gain is pure free space", "[propagation]") {
    Scene s = testutil::base_scene({0, 0, 1}, {6, 0, 1});
    RadioConfig radio;

    TracedPath p;
    PathEvent emit, recv;
    emit.kind = InteractionKind::Emit;
    emit.point = s.tx.position;
    recv.kind = InteractionKind::Receive;
    recv.point = s.rx.position;
    p.events = {emit, recv};
    p.length = 6.0;

    PathGain g = path_gain(s, 0, p, radio);
    CHECK_THAT(g.amplitude, WithinRel(radio.wavelength() / (4.0 * kPi * 6.0), 1e-12));
    CHECK(g.phase == 0.0);
    CHECK_THAT(g.delay, WithinRel(6.0 / kSpeedOfLight, 1e-15));
    CHECK(g.doppler_phase_per_symbol == 0.0);
    CHECK(g.loss_breakdown.empty());
}

TEST_CASE("reflected path gain factorizes", "[propagation]") {
    Scene s = testutil::base_scene({0, 0, 1}, {2, 0, 1});
    s.materials[0].permittivity_real = 4.0;
    s.objects.push_back(testutil::axis_plate("ground", 2, 0.0, -10, 12, -10, 10));
    RadioConfig radio;

    TracedPath p;
    PathEvent emit, refl, recv;
    emit.kind = InteractionKind::Emit;
    emit.point = s.tx.position;
    refl.kind = InteractionKind::Reflect;
    refl.point = {1, 0, 0};
    refl.normal = {0, 0, 1};
    refl.object_index = 0;
    refl.object_id = "ground";
    recv.kind = InteractionKind::Receive;
    recv.point = s.rx.position;
    p.events = {emit, refl, recv};
    p.length = std::sqrt(8.0);

    PathGain g = path_gain(s, 0, p, radio);

    // A negative reflection coefficient lands in the carrier phase, not the
    // amplitude.
    CHECK(g.phase == kPi);
    REQUIRE(g.loss_breakdown.count(InteractionKind::Reflect) == 1);

    double product = 1.0;
    for (const auto& [kind, factor] : g.loss_breakdown) {
        CHECK(factor >= 0.0);
        CHECK(factor <= 1.0);
        product *= factor;
    }
    CHECK_THAT(g.amplitude, WithinRel(g.path_loss * g.beam_loss * product, 1e-12));

    // Hand value of the 45-degree reflection magnitude.
    double root = std::sqrt(4.0 - 0.5);
    double hand = std::abs((std::cos(kPi / 4.0) - root) / (std::cos(kPi / 4.0) + root));
    CHECK_THAT(g.loss_breakdown.at(InteractionKind::Reflect), WithinAbs(hand, 1e-12));

    CHECK(g.doppler_phase_per_symbol == 0.0); // static scene
}

TEST_CASE("surface motion shows up as Doppler phase", "[propagation]") {
    Scene s = testutil::base_scene({0, 0.5, 0}, {0, -0.5, 0});
    s.materials[0].backscatter_coeff = 0.5;
    s.frame_rate = 32.0; // together with a 1/32 m step: exactly 1 m/s
    s.num_frames = 2;
    s.objects.push_back(testutil::axis_plate("target", 0, 10.0, -1, 1, -1, 1));
    Keyframe k0, k1;
    k0.frame = 0;
    k1.frame = 1;
    k1.transform.translation = {-0.03125, 0, 0};
    s.objects[0].keyframes = {k0, k1};

    TracedPath p;
    PathEvent emit, back, recv;
    emit.kind = InteractionKind::Emit;
    emit.point = s.tx.position;
    back.kind = InteractionKind::Backscatter;
    back.point = {10, 0, 0};
    back.normal = {-1, 0, 0};
    back.object_index = 0;
    back.object_id = "target";
    recv.kind = InteractionKind::Receive;
    recv.point = s.rx.position;
    p.events = {emit, back, recv};
    p.length = 2.0 * std::sqrt(100.25);

    // Independent evaluation: v . (a_hat + b_hat), then 2 pi f_c v_s / c * T0.
    double v_s = 20.0 / std::sqrt(100.25);
    CHECK_THAT(path_surface_speed(s, 0, p), WithinRel(v_s, 1e-12));

    RadioConfig radio;
    double t0 = (radio.num_subcarriers + radio.cyclic_prefix) / radio.sampling_rate;
    double beta = 2.0 * kPi * (radio.carrier_freq * v_s / kSpeedOfLight) * t0;
    PathGain g = path_gain(s, 0, p, radio);
    CHECK_THAT(g.doppler_phase_per_symbol, WithinRel(beta, 1e-12));
    CHECK(g.amplitude > 0.0);
    CHECK(g.loss_breakdown.count(InteractionKind::Backscatter) == 1);

    // Reversing the motion flips the sign.
    s.objects[0].keyframes[1].transform.translation = {0.03125, 0, 0};
    PathGain away = path_gain(s, 0, p, radio);
    CHECK_THAT(away.doppler_phase_per_symbol, WithinRel(-beta, 1e-12));
}

TEST_CASE("arrival azimuth is measured against the array axis", "[propagation]") {
    Scene s = testutil::base_scene({0, 0, 0}, {10, 0, 0});
    s.rx.array.axis = {0, 1, 0};
    RadioConfig radio;

    // Arrival from 30 degrees off broadside in the xy plane.
    double az = deg2rad(30.0);
    Vec3 src{10 - std::cos(az) * 5.0, std::sin(az) * 5.0, 0};

    TracedPath p;
    PathEvent emit, recv;
    emit.kind = InteractionKind::Emit;
    emit.point = src;
    recv.kind = InteractionKind::Receive;
    recv.point = s.rx.position;
    p.events = {emit, recv};
    p.length = 5.0;

    PathGain g = path_gain(s, 0, p, radio);
    CHECK_THAT(g.arrival_azimuth, WithinAbs(az, 1e-12));
}
