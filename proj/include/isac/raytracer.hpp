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
// Recursive probe tracer. Probing rays leave the transmitter on a fixed
// angular grid; every surface interaction spawns child probes (back-scatter,
// mirror reflection, a scatter cone, Snell penetration, an edge-diffraction
// fan) until the interaction budget is spent or the ray enters the receiver
// bounding cube. Results are independent of thread count: per-probe traces
// touch only immutable state and the merged path list is canonically sorted
// and deduplicated.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "isac/common.hpp"
#include "isac/geometry.hpp"
#include "isac/parallel.hpp"
#include "isac/scene.hpp"
#include "isac/vec.hpp"

namespace isac {

enum class InteractionKind {
    Emit,
    Reflect,
    Scatter,
    Penetrate,
    Diffract,
    Backscatter,
    Receive,
};

inline const char* interaction_name(InteractionKind k) {
    switch (k) {
        case InteractionKind::Emit: return "emit";
        case InteractionKind::Reflect: return "reflect";
        case InteractionKind::Scatter: return "scatter";
        case InteractionKind::Penetrate: return "penetrate";
        case InteractionKind::Diffract: return "diffract";
        case InteractionKind::Backscatter: return "backscatter";
        case InteractionKind::Receive: return "receive";
    }
    return "?";
}

/// One vertex of a propagation path. Emit and Receive events carry only a
/// point; surface events also carry the local normal and object identity,
/// and Diffract events the edge direction.
struct PathEvent {
    InteractionKind kind = InteractionKind::Emit;
    Vec3 point;
    Vec3 normal;    // unit, oriented toward the incoming ray; zero for endpoints
    Vec3 edge_dir;  // unit edge direction, Diffract only
    int object_index = -1;
    std::string object_id;
};

struct TracedPath {
    std::vector<PathEvent> events; // Emit first, Receive last
    double length = 0.0;           // sum of straight segment lengths, meters

    int interaction_count() const { return int(events.size()) - 2; }

    /// Signature used for canonical ordering and duplicate suppression.
    std::vector<std::pair<int, std::string>> signature() const {
        std::vector<std::pair<int, std::string>> sig;
        sig.reserve(events.size());
        for (const auto& e : events) sig.emplace_back(int(e.kind), e.object_id);
        return sig;
    }
};

struct TracerConfig {
    double probe_resolution = 1.0;   // degrees between initial probe directions
    int max_interactions = 2;        // surface-interaction budget per path
    double scatter_spread = 10.0;    // degrees, cone half-angle around specular
    double scatter_resolution = 1.0; // degrees between scatter cone rings
    double rx_cube_halfwidth = 0.0;  // meters; 0 resolves to 2 * wavelength
    double edge_margin = 0.0;        // meters; 0 resolves to 4 * wavelength
    double carrier_frequency = 3.75e9; // Hz, sets the wavelength-derived defaults
    bool enable_reflect = true;
    bool enable_scatter = true;
    bool enable_penetrate = true;
    bool enable_diffract = true;
    bool enable_backscatter = true;

    double wavelength() const { return kSpeedOfLight / carrier_frequency; }
    double resolved_cube_halfwidth() const {
        return rx_cube_halfwidth > 0.0 ? rx_cube_halfwidth : 2.0 * wavelength();
    }
    double resolved_edge_margin() const {
        return edge_margin > 0.0 ? edge_margin : 4.0 * wavelength();
    }
};

/// Probe directions on an azimuth-by-elevation grid covering the sphere.
/// Pole rows collapse to a single direction each.
inline std::vector<Vec3> initial_probes(double resolution_deg) {
    if (!(resolution_deg > 0.0) || resolution_deg > 90.0)
        throw InvalidResolutionError("probe resolution must be in (0, 90] degrees");
    if (std::abs(std::remainder(360.0, resolution_deg)) > 1e-9 ||
        std::abs(std::remainder(180.0, resolution_deg)) > 1e-9)
        throw InvalidResolutionError("probe resolution must divide 180 and 360 degrees");

    int n_az = int(std::lround(360.0 / resolution_deg));
    int n_el = int(std::lround(180.0 / resolution_deg)); // rows at -90 .. +90
    std::vector<Vec3> dirs;
    dirs.reserve(std::size_t(n_az) * (n_el - 1) + 2);
    dirs.push_back({0, 0, -1});
    for (int e = 1; e < n_el; ++e) {
        double el = deg2rad(-90.0 + e * resolution_deg);
        double ce = std::cos(el), se = std::sin(el);
        for (int a = 0; a < n_az; ++a) {
            double az = deg2rad(a * resolution_deg);
            dirs.push_back({ce * std::cos(az), ce * std::sin(az), se});
        }
    }
    dirs.push_back({0, 0, 1});
    return dirs;
}

struct ProbeChild {
    Vec3 dir;
    InteractionKind kind;
    double scatter_offset = 0.0; // radians off the specular direction, Scatter only
};

/// Child probes spawned by one surface interaction, in the fixed order
/// Backscatter, Reflect, Scatter cone, Penetrate, Diffract fan.
inline std::vector<ProbeChild> new_probes(const Vec3& incident, const Hit& hit,
                                          const Material& material,
                                          const TracerConfig& config) {
    std::vector<ProbeChild> out;
    const Vec3& n = hit.normal; // toward the incoming side
    double cos_i = -incident.dot(n);

    if (config.enable_backscatter && material.backscatter_coeff > 0.0)
        out.push_back({-incident, InteractionKind::Backscatter, 0.0});

    Vec3 specular = (incident + n * (2.0 * cos_i)).normalized();
    if (config.enable_reflect)
        out.push_back({specular, InteractionKind::Reflect, 0.0});

    if (config.enable_scatter) {
        // Rings of directions around the specular axis; ring k sits at offset
        // k * scatter_resolution, sampled so the arc step matches the ring step.
        Vec3 u = any_perpendicular(specular);
        Vec3 v = specular.cross(u);
        int rings = int(std::floor(config.scatter_spread / config.scatter_resolution + 1e-9));
        for (int k = 1; k <= rings; ++k) {
            double off = deg2rad(k * config.scatter_resolution);
            int n_psi = std::max(4, int(std::lround(360.0 * std::sin(off) /
                                                    config.scatter_resolution)));
            double co = std::cos(off), so = std::sin(off);
            for (int j = 0; j < n_psi; ++j) {
                double psi = 2.0 * kPi * j / n_psi;
                Vec3 d = specular * co + (u * std::cos(psi) + v * std::sin(psi)) * so;
                if (d.dot(n) > 0.0) // keep the cone on the outgoing side
                    out.push_back({d.normalized(), InteractionKind::Scatter, off});
            }
        }
    }

    if (config.enable_penetrate && material.penetrable) {
        // Snell refraction with eta = n_outside / n_inside.
        double eta = material.refractive_index_ratio;
        double k = 1.0 - eta * eta * (1.0 - cos_i * cos_i);
        if (k >= 0.0) {
            Vec3 t = incident * eta + n * (eta * cos_i - std::sqrt(k));
            out.push_back({t.normalized(), InteractionKind::Penetrate, 0.0});
        }
    }

    if (config.enable_diffract && hit.near_edge) {
        // Knife-edge fan: the forward shadow boundary swept +-90 degrees about
        // the edge in 1-degree steps (the Keller cone for this geometry).
        for (int a = -90; a <= 90; ++a) {
            if (a == 0) continue; // the boundary itself duplicates Penetrate
            Vec3 d = rotate_about_axis(incident, hit.edge_dir, deg2rad(double(a)));
            out.push_back({d.normalized(), InteractionKind::Diffract, 0.0});
        }
    }

    return out;
}

namespace detail {

struct TraceState {
    const FrameGeometry* geom;
    const TracerConfig* config;
    Aabb rx_cube;
    Vec3 rx;
    std::vector<TracedPath>* out;
};

inline void emit_path(TraceState& st, std::vector<PathEvent>& events, const Vec3& last_point) {
    TracedPath path;
    path.events = events;
    PathEvent recv;
    recv.kind = InteractionKind::Receive;
    recv.point = st.rx;
    path.events.push_back(recv);
    double len = 0.0;
    for (std::size_t i = 1; i < path.events.size(); ++i)
        len += (path.events[i].point - path.events[i - 1].point).norm();
    (void)last_point;
    path.length = len;
    st.out->push_back(std::move(path));
}

/// Trace one ray segment. Returns true when this branch terminated at RX
/// (the per-probe break of the tracing loop).
inline bool trace_segment(TraceState& st, std::vector<PathEvent>& events, const Vec3& origin,
                          const Vec3& dir, int depth) {
    auto hit = st.geom->intersect(origin, dir);
    double hit_t = hit ? hit->distance : std::numeric_limits<double>::infinity();

    // RX capture happens before any surface the ray would strike afterwards.
    // A segment that starts inside the cube is leaving it, not arriving (the
    // box is convex, so it can never re-enter): without this guard a TX placed
    // within the capture volume — the usual quasi-monostatic layout — would
    // swallow every probe at t ~ 0 and trace nothing.
    if (!st.rx_cube.contains(origin)) {
        if (auto t_cube = st.rx_cube.ray_entry(origin, dir, kRayEpsilon)) {
            if (*t_cube < hit_t) {
                emit_path(st, events, origin);
                return true;
            }
        }
    }
    if (!hit) return false;
    if (depth >= st.config->max_interactions) return false;

    const Material& mat = st.geom->scene().material_of(st.geom->scene().objects[hit->object_index]);
    auto children = new_probes(dir, *hit, mat, *st.config);

    for (const auto& child : children) {
        PathEvent ev;
        ev.kind = child.kind;
        ev.point = child.kind == InteractionKind::Diffract ? hit->edge_point : hit->point;
        ev.normal = hit->normal;
        ev.object_index = hit->object_index;
        ev.object_id = hit->object_id;
        if (child.kind == InteractionKind::Diffract) ev.edge_dir = hit->edge_dir;
        events.push_back(ev);
        trace_segment(st, events, ev.point, child.dir, depth + 1);
        events.pop_back();
    }
    return false;
}

inline bool signature_less(const TracedPath& a, const TracedPath& b) {
    auto sa = a.signature(), sb = b.signature();
    if (sa != sb) return sa < sb;
    return a.length < b.length;
}

} // namespace detail

/// Canonical ordering plus duplicate suppression: paths with identical event
/// signatures whose lengths differ by less than an eighth of a wavelength
/// collapse onto the shortest representative.
inline std::vector<TracedPath> canonicalize_paths(std::vector<TracedPath> paths,
                                                  double wavelength) {
    std::stable_sort(paths.begin(), paths.end(), detail::signature_less);
    std::vector<TracedPath> out;
    const double tol = wavelength / 8.0;
    for (auto& p : paths) {
        if (!out.empty() && out.back().signature() == p.signature() &&
            p.length - out.back().length < tol)
            continue; // sorted by length, so the kept anchor is the shortest
        out.push_back(std::move(p));
    }
    return out;
}

/// Trace every propagation path from TX to RX at one animation frame.
/// Deterministic for fixed (scene, config, frame) regardless of worker count.
inline std::vector<TracedPath> trace_paths(const Scene& scene, int frame,
                                           const TracerConfig& config) {
    FrameGeometry geom(scene, frame, config.resolved_edge_margin());
    const Vec3 tx = scene.tx.position;
    const Vec3 rx = scene.rx.position;
    Aabb cube = Aabb::cube(rx, config.resolved_cube_halfwidth());

    std::vector<Vec3> probes = initial_probes(config.probe_resolution);
    std::vector<std::vector<TracedPath>> per_probe(probes.size());

    parallel_for(probes.size(), [&](std::size_t i) {
        detail::TraceState st{&geom, &config, cube, rx, &per_probe[i]};
        std::vector<PathEvent> events;
        PathEvent emit;
        emit.kind = InteractionKind::Emit;
        emit.point = tx;
        events.push_back(emit);
        detail::trace_segment(st, events, tx, probes[i], 0);
    });

    std::vector<TracedPath> all;
    // The unobstructed direct path is always probed explicitly; grid probes
    // that also reach the cube merge into it during dedup.
    if (geom.segment_clear(tx, rx)) {
        TracedPath los;
        PathEvent e;
        e.kind = InteractionKind::Emit;
        e.point = tx;
        los.events.push_back(e);
        e.kind = InteractionKind::Receive;
        e.point = rx;
        los.events.push_back(e);
        los.length = (rx - tx).norm();
        all.push_back(std::move(los));
    }
    for (auto& v : per_probe)
        for (auto& p : v) all.push_back(std::move(p));

    return canonicalize_paths(std::move(all), config.wavelength());
}

} // namespace isac
