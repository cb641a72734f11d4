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

#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include "isac/vec.hpp"

namespace isac {

/// Minimum ray parameter accepted by intersection queries, to avoid
/// re-hitting the surface a ray just left.
inline constexpr double kRayEpsilon = 1e-6; // meters

struct Triangle {
    Vec3 a, b, c;

    Vec3 normal() const { return (b - a).cross(c - a).normalized(); }
    double area() const { return 0.5 * (b - a).cross(c - a).norm(); }
};

/// Moeller-Trumbore ray/triangle intersection, two-sided.
/// Returns the ray parameter t (distance for unit direction), or nothing.
inline std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir,
                                          const Triangle& tri, double t_min = kRayEpsilon) {
    constexpr double kParallelEps = 1e-12;
    Vec3 e1 = tri.b - tri.a;
    Vec3 e2 = tri.c - tri.a;
    Vec3 p = dir.cross(e2);
    double det = e1.dot(p);
    if (std::abs(det) < kParallelEps) return std::nullopt;
    double inv_det = 1.0 / det;
    Vec3 s = origin - tri.a;
    double u = s.dot(p) * inv_det;
    if (u < 0.0 || u > 1.0) return std::nullopt;
    Vec3 q = s.cross(e1);
    double v = dir.dot(q) * inv_det;
    if (v < 0.0 || u + v > 1.0) return std::nullopt;
    double t = e2.dot(q) * inv_det;
    if (t < t_min) return std::nullopt;
    return t;
}

/// Shortest distance from a point to a segment [p0, p1].
inline double point_segment_distance(const Vec3& p, const Vec3& p0, const Vec3& p1) {
    Vec3 d = p1 - p0;
    double len2 = d.norm2();
    if (len2 <= 0.0) return (p - p0).norm();
    double u = (p - p0).dot(d) / len2;
    if (u < 0.0) u = 0.0;
    if (u > 1.0) u = 1.0;
    return (p - (p0 + u * d)).norm();
}

/// Closest point on a triangle to a point (Ericson, Real-Time Collision Detection).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Triangle& tri) {
    Vec3 ab = tri.b - tri.a, ac = tri.c - tri.a, ap = p - tri.a;
    double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return tri.a;

    Vec3 bp = p - tri.b;
    double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return tri.b;

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return tri.a + ab * (d1 / (d1 - d3));

    Vec3 cp = p - tri.c;
    double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return tri.c;

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return tri.a + ac * (d2 / (d2 - d6));

    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return tri.b + (tri.c - tri.b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));

    double denom = 1.0 / (va + vb + vc);
    return tri.a + ab * (vb * denom) + ac * (vc * denom);
}

/// Axis-aligned box.
struct Aabb {
    Vec3 lo, hi;

    static Aabb cube(const Vec3& center, double halfwidth) {
        Vec3 h{halfwidth, halfwidth, halfwidth};
        return {center - h, center + h};
    }

    bool contains(const Vec3& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y &&
               p.z >= lo.z && p.z <= hi.z;
    }

    /// Slab test: entry parameter of the ray into the box, if any, for t >= t_min.
    std::optional<double> ray_entry(const Vec3& origin, const Vec3& dir,
                                    double t_min = kRayEpsilon) const {
        double t0 = t_min;
        double t1 = std::numeric_limits<double>::infinity();
        const double o[3] = {origin.x, origin.y, origin.z};
        const double d[3] = {dir.x, dir.y, dir.z};
        const double l[3] = {lo.x, lo.y, lo.z};
        const double h[3] = {hi.x, hi.y, hi.z};
        for (int i = 0; i < 3; ++i) {
            if (std::abs(d[i]) < 1e-300) {
                if (o[i] < l[i] || o[i] > h[i]) return std::nullopt;
                continue;
            }
            double inv = 1.0 / d[i];
            double ta = (l[i] - o[i]) * inv;
            double tb = (h[i] - o[i]) * inv;
            if (ta > tb) std::swap(ta, tb);
            if (ta > t0) t0 = ta;
            if (tb < t1) t1 = tb;
            if (t0 > t1) return std::nullopt;
        }
        return t0;
    }
};

/// Rotate vector v around unit axis by angle (Rodrigues).
inline Vec3 rotate_about_axis(const Vec3& v, const Vec3& axis, double angle_rad) {
    double c = std::cos(angle_rad), s = std::sin(angle_rad);
    return v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c));
}

/// Any unit vector perpendicular to the given unit vector.
inline Vec3 any_perpendicular(const Vec3& u) {
    Vec3 ref = std::abs(u.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    return u.cross(ref).normalized();
}

} // namespace isac
