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
// Per-path propagation gains. Every loss factor is an amplitude-domain
// multiplier in [0, 1]; power follows as the squared magnitude. Negative
// reflection coefficients keep their sign as a pi phase on the path rather
// than being dropped.

#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "isac/common.hpp"
#include "isac/fresnel.hpp"
#include "isac/raytracer.hpp"
#include "isac/scene.hpp"
#include "isac/vec.hpp"

namespace isac {

/// OFDM radio parameters shared by synthesis and sensing.
struct RadioConfig {
    double carrier_freq = 3.75e9;   // Hz
    double bandwidth = 100e6;       // Hz
    int num_subcarriers = 1024;     // power of two
    int cyclic_prefix = 0;          // samples
    double sampling_rate = 100e6;   // Hz
    int num_symbols = 100;
    double noise_stddev = 0.0;      // linear amplitude per complex sample

    double subcarrier_spacing() const { return bandwidth / num_subcarriers; }
    double symbol_duration() const {
        return (num_subcarriers + cyclic_prefix) / sampling_rate;
    }
    double wavelength() const { return kSpeedOfLight / carrier_freq; }

    void validate() const {
        if (carrier_freq <= 0 || bandwidth <= 0 || sampling_rate <= 0)
            throw ValidationError("radio: frequencies must be positive");
        if (num_subcarriers < 2 || (num_subcarriers & (num_subcarriers - 1)) != 0)
            throw ValidationError("radio: num_subcarriers must be a power of two >= 2");
        if (num_symbols < 1) throw ValidationError("radio: num_symbols must be >= 1");
        if (cyclic_prefix < 0) throw ValidationError("radio: cyclic_prefix must be >= 0");
        if (noise_stddev < 0) throw ValidationError("radio: noise_stddev must be >= 0");
    }
};

/// Complex gain of one path, decomposed for inspection. amplitude equals
/// path_loss * beam_loss * product(loss_breakdown values) to 1e-12 relative.
struct PathGain {
    double amplitude = 0.0;  // linear, >= 0
    double phase = 0.0;      // radians; pi per negative reflection sign
    double delay = 0.0;      // seconds, one-way along the traced geometry
    double doppler_phase_per_symbol = 0.0; // radians (2*pi*f_D*T0)
    double arrival_azimuth = 0.0;  // radians off array broadside at RX
    double path_loss = 1.0;  // free-space factor
    double beam_loss = 1.0;  // TX and RX pattern product
    std::map<InteractionKind, double> loss_breakdown;
};

// --------------------------------------------------------------------------
// Elementary loss factors

/// Free-space amplitude factor lambda / (4 pi d).
inline double free_space_loss(double wavelength, double distance) {
    if (!(distance > 0.0))
        throw NonPositiveDistanceError("free_space_loss: distance must be > 0");
    return wavelength / (4.0 * kPi * distance);
}

/// Signed specular reflection coefficient for an air-to-material interface.
/// The magnitude is the amplitude factor; a negative sign means a pi flip.
inline double reflection_loss(double incident_angle, const Material& material) {
    double mu_eps = material.permeability_real * material.permittivity_real;
    double s = std::sin(incident_angle);
    double c = std::cos(incident_angle);
    double under = mu_eps - s * s;
    if (under < 0.0)
        throw EvanescentRegimeError("reflection_loss: mu_r*eps_r < sin^2(phi)");
    double root = std::sqrt(under);
    return (c - root) / (c + root);
}

/// Attenuation of a scattered ray at angular offset theta from specular.
inline double scattering_loss(double theta, double alpha_r) {
    return std::pow(0.5 * (1.0 + std::cos(theta)), 0.5 * alpha_r);
}

/// Coherent roughness attenuation of a specular reflection.
inline double roughness_loss(double incident_angle, double roughness, double wavelength) {
    double q = kPi * roughness * std::cos(incident_angle) / wavelength;
    return std::exp(-8.0 * q * q) * std::cyl_bessel_j(0.0, 8.0 * q);
}

/// Knife-edge diffraction attenuation from the geometrical factor nu.
inline double diffraction_loss(double nu) {
    auto [c, s] = fresnel_cs(nu);
    double re = 1.0 - c - s;
    double im = c + s;
    return 0.5 * std::sqrt(re * re + im * im);
}

/// Geometrical diffraction factor nu = sqrt((2 d / lambda) a1 a2) for a path
/// A -> edge -> B, with a1, a2 the ray angles off the direct A-B line and
/// d the traversed length.
inline double diffraction_nu(const Vec3& a, const Vec3& edge_point, const Vec3& b,
                             double wavelength) {
    Vec3 direct = b - a;
    double alpha1 = angle_between(edge_point - a, direct);
    double alpha2 = angle_between(edge_point - b, a - b);
    double d = (edge_point - a).norm() + (b - edge_point).norm();
    return std::sqrt(std::max(0.0, 2.0 * d / wavelength * alpha1 * alpha2));
}

/// Retroreflection off a rough surface at incidence angle phi.
inline double backscatter_loss(double incident_angle, const Material& material) {
    return material.backscatter_coeff *
           std::pow(0.5 * (1.0 + std::cos(incident_angle)), 0.5 * material.scatter_exponent);
}

/// Normalized antenna gain toward a direction in the endpoint's local frame.
/// Dipole axis is local +z (sin pattern); patch boresight is local +x
/// (cosine pattern over the forward hemisphere).
inline double pattern_gain(AntennaPattern pattern, const Vec3& local_dir) {
    switch (pattern) {
        case AntennaPattern::Isotropic:
            return 1.0;
        case AntennaPattern::Dipole: {
            double cz = std::clamp(local_dir.z / std::max(local_dir.norm(), 1e-300), -1.0, 1.0);
            return std::sqrt(std::max(0.0, 1.0 - cz * cz));
        }
        case AntennaPattern::Patch: {
            double cx = local_dir.x / std::max(local_dir.norm(), 1e-300);
            return std::max(0.0, cx);
        }
    }
    return 1.0;
}

/// Product of the TX gain toward the departure direction and the RX gain
/// from the arrival direction; directions are given in world space.
inline double beam_loss(const RadioEndpoint& tx, const Vec3& departure_world,
                        const RadioEndpoint& rx, const Vec3& arrival_world) {
    Vec3 tx_local = tx.orientation.conjugate().rotate(departure_world);
    Vec3 rx_local = rx.orientation.conjugate().rotate(-arrival_world);
    return pattern_gain(tx.pattern, tx_local) * pattern_gain(rx.pattern, rx_local);
}

// --------------------------------------------------------------------------
// Path assembly

namespace detail {

inline double incidence_angle(const Vec3& incoming_dir, const Vec3& normal) {
    return angle_between(-incoming_dir, normal);
}

} // namespace detail

/// Summed along-path surface speed: at each moving interaction point the
/// surface velocity is projected onto the sum of the unit vectors toward the
/// previous and next path vertices (the path-length shrink rate). Positive
/// means the total path is shortening (approaching target, positive Doppler).
inline double path_surface_speed(const Scene& scene, int frame, const TracedPath& path) {
    if (scene.num_frames < 2) return 0.0;
    int f = std::min(frame, scene.num_frames - 2);
    double v_s = 0.0;
    for (std::size_t i = 1; i + 1 < path.events.size(); ++i) {
        const PathEvent& ev = path.events[i];
        if (ev.object_index < 0) continue;
        const SceneObject& obj = scene.objects[ev.object_index];
        if (obj.keyframes.size() < 2) continue;
        Vec3 v = surface_velocity(scene, obj.id, ev.point, f);
        Vec3 a_hat = (path.events[i - 1].point - ev.point).normalized();
        Vec3 b_hat = (path.events[i + 1].point - ev.point).normalized();
        v_s += v.dot(a_hat + b_hat);
    }
    return v_s;
}

/// Compose every loss factor along a traced path into a PathGain.
inline PathGain path_gain(const Scene& scene, int frame, const TracedPath& path,
                          const RadioConfig& radio) {
    if (path.events.size() < 2)
        throw ValidationError("path_gain: path must have at least emit and receive");
    const double lambda = radio.wavelength();

    PathGain g;
    g.delay = path.length / kSpeedOfLight;
    g.path_loss = free_space_loss(lambda, path.length);

    Vec3 departure = (path.events[1].point - path.events[0].point).normalized();
    const PathEvent& last_stop = path.events[path.events.size() - 2];
    Vec3 arrival = (path.events.back().point - last_stop.point).normalized();
    g.beam_loss = beam_loss(scene.tx, departure, scene.rx, arrival);

    Vec3 toward_source = -arrival;
    g.arrival_azimuth =
        std::asin(std::clamp(toward_source.dot(scene.rx.array.axis), -1.0, 1.0));

    int pi_flips = 0;
    double product = 1.0;
    for (std::size_t i = 1; i + 1 < path.events.size(); ++i) {
        const PathEvent& ev = path.events[i];
        const Material& mat = scene.material_of(scene.objects[ev.object_index]);
        Vec3 in_dir = (ev.point - path.events[i - 1].point).normalized();
        Vec3 out_dir = (path.events[i + 1].point - ev.point).normalized();
        double phi = detail::incidence_angle(in_dir, ev.normal);

        double factor = 1.0;
        switch (ev.kind) {
            case InteractionKind::Reflect: {
                double r = reflection_loss(phi, mat);
                if (r < 0.0) ++pi_flips;
                factor = std::abs(r) * roughness_loss(phi, mat.roughness_stddev, lambda);
                break;
            }
            case InteractionKind::Scatter: {
                double r = reflection_loss(phi, mat);
                if (r < 0.0) ++pi_flips;
                Vec3 specular = (in_dir + ev.normal * (2.0 * (-in_dir.dot(ev.normal))))
                                    .normalized();
                double theta = angle_between(out_dir, specular);
                factor = std::abs(r) * roughness_loss(phi, mat.roughness_stddev, lambda) *
                         scattering_loss(theta, mat.scatter_exponent);
                break;
            }
            case InteractionKind::Penetrate: {
                factor = 1.0 - std::abs(reflection_loss(phi, mat));
                break;
            }
            case InteractionKind::Diffract: {
                double nu = diffraction_nu(path.events[i - 1].point, ev.point,
                                           path.events[i + 1].point, lambda);
                factor = diffraction_loss(nu);
                break;
            }
            case InteractionKind::Backscatter: {
                factor = backscatter_loss(phi, mat);
                break;
            }
            default:
                throw ValidationError("path_gain: unexpected interior event kind");
        }
        product *= factor;
        auto [it, inserted] = g.loss_breakdown.emplace(ev.kind, factor);
        if (!inserted) it->second *= factor;
    }

    g.amplitude = g.path_loss * g.beam_loss * product;
    g.phase = (pi_flips % 2) ? kPi : 0.0;

    double v_s = path_surface_speed(scene, frame, path);
    double f_d = radio.carrier_freq * v_s / kSpeedOfLight;
    g.doppler_phase_per_symbol = 2.0 * kPi * f_d * radio.symbol_duration();
    return g;
}

} // namespace isac
