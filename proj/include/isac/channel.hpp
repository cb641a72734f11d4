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
// OFDM MIMO channel synthesis. Paths are laid into a band-limited impulse
// response per receive antenna (windowed-sinc fractional delays), zero-padded
// to the subcarrier count, transformed with the dft() convention from
// dsp.hpp, phase-rotated per symbol by each path's Doppler increment, and
// finally disturbed by seeded circular complex Gaussian noise:
//
//   H[m][k][n] = sum_l a_l e^{j theta_ant(m,l)} e^{-j 2 pi k df tau_l}
//                e^{j n beta_l} + N[m][k][n]
//
// The tensor is stored antenna-major, then subcarrier, then symbol, the same
// layout the dataset module writes to disk.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "isac/common.hpp"
#include "isac/dsp.hpp"
#include "isac/parallel.hpp"
#include "isac/propagation.hpp"

namespace isac {

struct GroundTruth {
    std::string object_id;
    double range = 0.0;        // meters, total traced path length convention
    double azimuth = 0.0;      // radians off array broadside
    double radial_speed = 0.0; // m/s, path-length shrink rate
};

struct ChannelFrame {
    int num_antennas = 0;
    int num_subcarriers = 0;
    int num_symbols = 0;
    std::vector<cplx> data; // [antenna][subcarrier][symbol], antenna-major
    RadioConfig radio;
    int frame_index = 0;
    std::vector<GroundTruth> ground_truth;

    void resize(int n_ant, int n_sub, int n_symb) {
        num_antennas = n_ant;
        num_subcarriers = n_sub;
        num_symbols = n_symb;
        data.assign(std::size_t(n_ant) * n_sub * n_symb, cplx{0.0, 0.0});
    }

    std::size_t index(int m, int k, int n) const {
        return (std::size_t(m) * num_subcarriers + k) * num_symbols + n;
    }
    cplx& at(int m, int k, int n) { return data[index(m, k, n)]; }
    const cplx& at(int m, int k, int n) const { return data[index(m, k, n)]; }

    bool same_shape(const ChannelFrame& o) const {
        return num_antennas == o.num_antennas && num_subcarriers == o.num_subcarriers &&
               num_symbols == o.num_symbols;
    }
};

/// Path list plus the receive-array geometry that turns each path's arrival
/// azimuth into per-element phase offsets.
struct PathEnsemble {
    std::vector<PathGain> paths;
    int antenna_count = 1;
    double element_spacing = 0.0; // meters; 0 resolves to lambda/2

    double resolved_spacing(double wavelength) const {
        return element_spacing > 0.0 ? element_spacing : 0.5 * wavelength;
    }
};

// --------------------------------------------------------------------------
// Deterministic noise

namespace detail {

/// Bit-mixing (splitmix64 finalizer) so per-(seed, frame, antenna) streams
/// are decorrelated regardless of how callers enumerate them.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic standard-normal generator: explicit Box-Muller over doubles
/// built from raw mt19937_64 words, so no library-defined distribution enters
/// the byte stream.
class NormalSource {
  public:
    explicit NormalSource(std::uint64_t seed) : gen_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform_open();
        double u2 = uniform_open();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * kPi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    double uniform_open() {
        // (0, 1]: zero is excluded so log() stays finite.
        return (double(gen_() >> 11) + 1.0) * 0x1.0p-53;
    }

    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace detail

// --------------------------------------------------------------------------
// Operations

/// Band-limited impulse response over N_sub taps at the sample rate equal to
/// the bandwidth. Fractional delays spread over a Hann-windowed 64-tap sinc
/// cluster; integer delays land on a single tap. Paths beyond the
/// unambiguous window [0, N_sub/bandwidth) are dropped and counted.
struct BandLimited {
    std::vector<cplx> taps;
    int dropped = 0;
};

inline BandLimited band_limit(const std::vector<std::pair<double, cplx>>& delays_and_gains,
                              const RadioConfig& radio) {
    constexpr int kHalfSupport = 32;
    BandLimited out;
    out.taps.assign(radio.num_subcarriers, cplx{0.0, 0.0});
    for (const auto& [delay, gain] : delays_and_gains) {
        double d = delay * radio.bandwidth; // delay in samples
        if (!(d >= 0.0) || d >= double(radio.num_subcarriers)) {
            ++out.dropped;
            continue;
        }
        long nearest = std::lround(d);
        if (std::abs(d - double(nearest)) < 1e-12) {
            // On-sample path: exact single tap, no windowing loss.
            if (nearest < radio.num_subcarriers) out.taps[nearest] += gain;
            continue;
        }
        long lo = long(std::ceil(d)) - kHalfSupport;
        long hi = long(std::floor(d)) + kHalfSupport;
        for (long i = std::max(lo, 0L); i <= std::min(hi, long(radio.num_subcarriers) - 1);
             ++i) {
            double x = double(i) - d;
            double sinc = std::sin(kPi * x) / (kPi * x);
            double hann = 0.5 * (1.0 + std::cos(kPi * x / kHalfSupport));
            out.taps[i] += gain * (sinc * hann);
        }
    }
    return out;
}

/// Assemble the frame tensor for one animation frame. Deterministic for a
/// given (ensemble, radio, frame_index, seed) regardless of the worker count:
/// the noise stream is split per (frame, antenna).
inline ChannelFrame synthesize_frame(const PathEnsemble& ensemble, const RadioConfig& radio,
                                     int frame_index, std::uint64_t seed) {
    radio.validate();
    if (ensemble.antenna_count < 1)
        throw DimensionMismatchError("synthesize_frame: antenna_count must be >= 1");

    const int n_ant = ensemble.antenna_count;
    const int n_sub = radio.num_subcarriers;
    const int n_symb = radio.num_symbols;
    const double lambda = radio.wavelength();
    const double spacing = ensemble.resolved_spacing(lambda);

    ChannelFrame frame;
    frame.resize(n_ant, n_sub, n_symb);
    frame.radio = radio;
    frame.frame_index = frame_index;

    parallel_for(std::size_t(n_ant), [&](std::size_t mi) {
        int m = int(mi);
        // Per-path complex gains at this antenna; the per-symbol Doppler
        // rotation keeps each path's tap cluster separate.
        std::vector<std::pair<double, cplx>> base;
        base.reserve(ensemble.paths.size());
        for (const auto& p : ensemble.paths) {
            double theta_ant =
                2.0 * kPi * (spacing / lambda) * m * std::sin(p.arrival_azimuth);
            cplx a = std::polar(p.amplitude, p.phase + theta_ant);
            base.emplace_back(p.delay, a);
        }

        std::vector<std::pair<double, cplx>> rotated(base.size());
        std::vector<cplx> taps;
        for (int n = 0; n < n_symb; ++n) {
            for (std::size_t l = 0; l < base.size(); ++l) {
                double beta = ensemble.paths[l].doppler_phase_per_symbol;
                rotated[l] = {base[l].first,
                              base[l].second * std::polar(1.0, double(n) * beta)};
            }
            taps = band_limit(rotated, radio).taps;
            std::vector<cplx> spectrum = dft(taps);
            for (int k = 0; k < n_sub; ++k) frame.at(m, k, n) = spectrum[k];
        }

        if (radio.noise_stddev > 0.0) {
            detail::NormalSource noise(
                detail::mix64(seed ^ detail::mix64(std::uint64_t(frame_index) * 0x10001ULL + mi)));
            double comp = radio.noise_stddev / std::sqrt(2.0);
            for (int k = 0; k < n_sub; ++k)
                for (int n = 0; n < n_symb; ++n)
                    frame.at(m, k, n) += cplx{comp * noise.next(), comp * noise.next()};
        }
    });

    return frame;
}

/// Single-tap channel estimate H = Y / X per resource element.
inline std::vector<cplx> estimate_channel(const std::vector<cplx>& tx_grid,
                                          const std::vector<cplx>& rx_grid) {
    if (tx_grid.size() != rx_grid.size())
        throw DimensionMismatchError("estimate_channel: grid sizes differ");
    std::vector<cplx> h(tx_grid.size());
    for (std::size_t i = 0; i < tx_grid.size(); ++i) {
        if (tx_grid[i] == cplx{0.0, 0.0})
            throw ZeroPilotError("estimate_channel: zero pilot at element " +
                                 std::to_string(i));
        h[i] = rx_grid[i] / tx_grid[i];
    }
    return h;
}

} // namespace isac
