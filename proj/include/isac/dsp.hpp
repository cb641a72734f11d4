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
// Discrete Fourier transform wrappers with one sign convention for the whole
// codebase: dft() is the unnormalized forward transform with kernel
// e^{-j 2 pi k n / N}; idft() is the unnormalized inverse with kernel
// e^{+j 2 pi k n / N}. Neither applies a 1/N factor; callers that need a
// normalized inverse divide explicitly. Any length is supported.

#pragma once

#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "isac/common.hpp"

namespace isac {

using cplx = std::complex<double>;

namespace detail {
inline Eigen::FFT<double>& fft_engine() {
    thread_local Eigen::FFT<double> engine;
    return engine;
}
} // namespace detail

/// Unnormalized forward DFT: X[k] = sum_n x[n] e^{-j 2 pi k n / N}.
inline std::vector<cplx> dft(const std::vector<cplx>& x) {
    if (x.empty()) return {};
    std::vector<cplx> out(x.size());
    detail::fft_engine().fwd(out, x);
    return out;
}

/// Unnormalized inverse DFT: x[n] = sum_k X[k] e^{+j 2 pi k n / N}.
inline std::vector<cplx> idft(const std::vector<cplx>& x) {
    if (x.empty()) return {};
    std::vector<cplx> tmp(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) tmp[i] = std::conj(x[i]);
    std::vector<cplx> out(x.size());
    detail::fft_engine().fwd(out, tmp);
    for (auto& v : out) v = std::conj(v);
    return out;
}

/// Index permutation that moves DC to the center: out[j] = in[(j + N/2) % N]
/// for even N, matching the usual fftshift of a length-N spectrum.
inline std::size_t fftshift_source_index(std::size_t j, std::size_t n) {
    return (j + (n + 1) / 2) % n;
}

} // namespace isac
