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
// Fresnel cosine/sine integrals C(x) = ∫₀ˣ cos(πt²/2) dt and
// S(x) = ∫₀ˣ sin(πt²/2) dt, evaluated by adaptive Simpson quadrature of the
// defining integrals. The integrand oscillates faster as t grows, so the
// domain is cut into unit-length panels that are each refined independently.

#pragma once

#include <cmath>
#include <utility>

#include "isac/common.hpp"

namespace isac {
namespace detail {

template <typename F>
double adaptive_simpson(F f, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double integrate(F f, double a, double b, double tol) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

} // namespace detail

/// C(x) and S(x) for x >= 0, each accurate to ~1e-9 absolute.
inline std::pair<double, double> fresnel_cs(double x) {
    auto fc = [](double t) { return std::cos(0.5 * kPi * t * t); };
    auto fs = [](double t) { return std::sin(0.5 * kPi * t * t); };
    double c = 0.0, s = 0.0;
    double lo = 0.0;
    while (lo < x) {
        double hi = std::min(lo + 1.0, x);
        c += detail::integrate(fc, lo, hi, 1e-10);
        s += detail::integrate(fs, lo, hi, 1e-10);
        lo = hi;
    }
    return {c, s};
}

inline double fresnel_c(double x) { return fresnel_cs(x).first; }
inline double fresnel_s(double x) { return fresnel_cs(x).second; }

} // namespace isac
