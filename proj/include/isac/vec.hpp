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

#include "isac/common.hpp"

namespace isac {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    constexpr Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    constexpr double norm2() const { return dot(*this); }
    Vec3 normalized() const {
        double n = norm();
        return n > 0.0 ? *this / n : Vec3{};
    }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

/// Angle between two vectors in [0, pi].
inline double angle_between(const Vec3& a, const Vec3& b) {
    double c = a.dot(b) / (a.norm() * b.norm());
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return std::acos(c);
}

/// Unit quaternion (w, x, y, z) used for rigid rotations.
struct Quat {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    constexpr Quat() = default;
    constexpr Quat(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

    static Quat from_axis_angle(const Vec3& axis, double angle_rad) {
        Vec3 a = axis.normalized();
        double s = std::sin(angle_rad / 2.0);
        return {std::cos(angle_rad / 2.0), a.x * s, a.y * s, a.z * s};
    }

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

    Quat normalized() const {
        double n = norm();
        if (n <= 0.0) throw ValidationError("quaternion has zero norm");
        return {w / n, x / n, y / n, z / n};
    }

    constexpr Quat conjugate() const { return {w, -x, -y, -z}; }

    constexpr Quat operator*(const Quat& q) const {
        return {w * q.w - x * q.x - y * q.y - z * q.z,
                w * q.x + x * q.w + y * q.z - z * q.y,
                w * q.y - x * q.z + y * q.w + z * q.x,
                w * q.z + x * q.y - y * q.x + z * q.w};
    }

    /// Rotate a vector by this quaternion.
    Vec3 rotate(const Vec3& v) const {
        // q * (0, v) * q^-1, expanded
        Vec3 u{x, y, z};
        Vec3 t = 2.0 * u.cross(v);
        return v + w * t + u.cross(t);
    }

    constexpr bool operator==(const Quat& o) const {
        return w == o.w && x == o.x && y == o.y && z == o.z;
    }
};

/// Spherical linear interpolation; u in [0, 1].
inline Quat slerp(const Quat& a, Quat b, double u) {
    double d = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
    if (d < 0.0) { // take the short arc
        b = {-b.w, -b.x, -b.y, -b.z};
        d = -d;
    }
    if (d > 0.9995) { // nearly parallel, lerp and renormalize
        Quat q{a.w + u * (b.w - a.w), a.x + u * (b.x - a.x),
               a.y + u * (b.y - a.y), a.z + u * (b.z - a.z)};
        return q.normalized();
    }
    double theta = std::acos(d);
    double sa = std::sin((1.0 - u) * theta) / std::sin(theta);
    double sb = std::sin(u * theta) / std::sin(theta);
    return {sa * a.w + sb * b.w, sa * a.x + sb * b.x,
            sa * a.y + sb * b.y, sa * a.z + sb * b.z};
}

/// Rigid transform: rotate then translate.
struct RigidTransform {
    Quat rotation;
    Vec3 translation;

    Vec3 apply(const Vec3& p) const { return rotation.rotate(p) + translation; }
    Vec3 apply_dir(const Vec3& d) const { return rotation.rotate(d); }

    RigidTransform inverse() const {
        Quat r = rotation.conjugate();
        return {r, -r.rotate(translation)};
    }

    constexpr bool operator==(const RigidTransform& o) const {
        return rotation == o.rotation && translation == o.translation;
    }
};

inline RigidTransform interpolate(const RigidTransform& a, const RigidTransform& b, double u) {
    return {slerp(a.rotation, b.rotation, u),
            a.translation + u * (b.translation - a.translation)};
}

} // namespace isac
