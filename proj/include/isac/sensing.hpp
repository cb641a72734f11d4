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
// Radar-style estimators over channel tensors: the range-Doppler periodogram
// and the range-azimuth 2D MUSIC spectrum. Transform sign conventions are
// the ones fixed in dsp.hpp: delay recovery is the e^{+j} inverse transform
// over subcarriers, Doppler recovery the e^{-j} forward transform over
// symbols.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "isac/channel.hpp"
#include "isac/common.hpp"
#include "isac/dsp.hpp"
#include "isac/parallel.hpp"

namespace isac {

enum class ImageSource { Periodogram, Music };
enum class SecondAxisKind { Azimuth, Doppler };

/// Non-negative 2D spectrum with physical axes. Rows index range bins; the
/// second axis is azimuth (radians) or Doppler (Hz), always strictly
/// increasing.
struct RadarImage {
    int rows = 0;
    int cols = 0;
    std::vector<double> values; // row-major, rows*cols entries, >= 0
    std::vector<double> range_axis;
    std::vector<double> second_axis;
    SecondAxisKind second_kind = SecondAxisKind::Doppler;
    ImageSource source = ImageSource::Periodogram;

    double& at(int r, int c) { return values[std::size_t(r) * cols + c]; }
    double at(int r, int c) const { return values[std::size_t(r) * cols + c]; }
};

// --------------------------------------------------------------------------
// Periodogram

/// Range-Doppler periodogram of one antenna's subcarrier-by-symbol grid:
/// P[k][n] = |DFT_symbols(IDFT_subcarriers(H))|^2. Range bin k maps to
/// k*c0/bandwidth one-way (or half that with round_trip_range); the Doppler
/// axis is shifted so frequencies increase monotonically through zero.
inline RadarImage periodogram(const std::vector<cplx>& grid, int n_sub, int n_symb,
                              const RadioConfig& radio, bool round_trip_range = false) {
    if (n_sub < 2 || n_symb < 2)
        throw DimensionTooSmallError("periodogram: need at least 2x2 input");
    if (grid.size() != std::size_t(n_sub) * n_symb)
        throw DimensionMismatchError("periodogram: grid size does not match dims");

    // Inverse transform over subcarriers, per symbol.
    std::vector<cplx> stage(std::size_t(n_sub) * n_symb);
    std::vector<cplx> column(n_sub);
    for (int n = 0; n < n_symb; ++n) {
        for (int p = 0; p < n_sub; ++p) column[p] = grid[std::size_t(p) * n_symb + n];
        std::vector<cplx> taps = idft(column);
        for (int k = 0; k < n_sub; ++k) stage[std::size_t(k) * n_symb + n] = taps[k];
    }

    RadarImage img;
    img.rows = n_sub;
    img.cols = n_symb;
    img.values.assign(std::size_t(n_sub) * n_symb, 0.0);
    img.second_kind = SecondAxisKind::Doppler;
    img.source = ImageSource::Periodogram;

    // Forward transform over symbols, per range bin, then center DC.
    std::vector<cplx> row(n_symb);
    for (int k = 0; k < n_sub; ++k) {
        for (int n = 0; n < n_symb; ++n) row[n] = stage[std::size_t(k) * n_symb + n];
        std::vector<cplx> spec = dft(row);
        for (int j = 0; j < n_symb; ++j) {
            cplx v = spec[fftshift_source_index(j, n_symb)];
            img.at(k, j) = std::norm(v);
        }
    }

    double range_per_bin = kSpeedOfLight / radio.bandwidth / (round_trip_range ? 2.0 : 1.0);
    img.range_axis.resize(n_sub);
    for (int k = 0; k < n_sub; ++k) img.range_axis[k] = k * range_per_bin;
    img.second_axis.resize(n_symb);
    double doppler_step = 1.0 / (n_symb * radio.symbol_duration());
    for (int j = 0; j < n_symb; ++j)
        img.second_axis[j] = (j - n_symb / 2) * doppler_step;
    return img;
}

inline RadarImage periodogram(const ChannelFrame& frame, int antenna = 0,
                              bool round_trip_range = false) {
    std::vector<cplx> grid(std::size_t(frame.num_subcarriers) * frame.num_symbols);
    for (int k = 0; k < frame.num_subcarriers; ++k)
        for (int n = 0; n < frame.num_symbols; ++n)
            grid[std::size_t(k) * frame.num_symbols + n] = frame.at(antenna, k, n);
    return periodogram(grid, frame.num_subcarriers, frame.num_symbols, frame.radio,
                       round_trip_range);
}

/// Unnormalized inverse DFT of a subcarrier vector into time taps; tap s
/// collects a path whose phase slope is e^{-j 2 pi p s / N}.
inline std::vector<cplx> delay_profile(const std::vector<cplx>& subcarriers) {
    if (subcarriers.size() < 2)
        throw DimensionTooSmallError("delay_profile: need at least 2 subcarriers");
    return idft(subcarriers);
}

// --------------------------------------------------------------------------
// Covariance and MUSIC

struct CovarianceOptions {
    int decimation = 16;   // keep every decimation-th subcarrier
    bool smoothing = true; // forward spatial smoothing over subcarrier subarrays
    int subarray = 0;      // subarray length in kept subcarriers; 0 = half
};

/// Covariance of stacked antenna-by-subcarrier snapshots, one per symbol,
/// averaged with 1/N. The stacked vector is Kronecker-ordered antenna-major:
/// v[m*L + j] = H[m][sub[j]][n], matching steering vectors a(phi) (x) b(d).
/// With smoothing, forward subarrays over the kept subcarriers are averaged
/// in as extra snapshots to decorrelate coherent multipath. Kept bins are
/// ordered by signed baseband frequency (upper-half FFT bins carry negative
/// frequencies), which keeps every subarray contiguous in physical frequency:
/// a path at any delay — fractional taps included — then contributes the same
/// complex exponential to each window up to a constant phase, which is what
/// forward smoothing needs to stay rank-preserving.
struct Covariance {
    Eigen::MatrixXcd r;
    std::vector<int> subcarriers; // original subcarrier index per vector slot
    int antennas = 0;
    int subarray_len = 0; // kept-subcarrier count per snapshot vector
};

inline Covariance covariance(const ChannelFrame& frame, const CovarianceOptions& options) {
    if (frame.num_antennas < 1 || frame.num_subcarriers < 2 || frame.num_symbols < 1)
        throw DimensionMismatchError("covariance: empty channel tensor");
    if (options.decimation < 1)
        throw DimensionMismatchError("covariance: decimation must be >= 1");

    std::vector<int> kept;
    for (int k = 0; k < frame.num_subcarriers; k += options.decimation) kept.push_back(k);
    int n_kept = int(kept.size());
    if (n_kept < 2) throw DimensionTooSmallError("covariance: fewer than 2 kept subcarriers");

    auto signed_bin = [&](int k) {
        return k < frame.num_subcarriers / 2 ? k : k - frame.num_subcarriers;
    };
    std::stable_sort(kept.begin(), kept.end(),
                     [&](int a, int b) { return signed_bin(a) < signed_bin(b); });

    int sub_len = n_kept;
    int n_shifts = 1;
    if (options.smoothing) {
        sub_len = options.subarray > 0 ? options.subarray : n_kept / 2;
        sub_len = std::clamp(sub_len, 1, n_kept);
        n_shifts = n_kept - sub_len + 1;
    }

    const int n_ant = frame.num_antennas;
    const int dim = n_ant * sub_len;
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(dim, dim);
    Eigen::VectorXcd v(dim);
    for (int n = 0; n < frame.num_symbols; ++n) {
        for (int s = 0; s < n_shifts; ++s) {
            for (int m = 0; m < n_ant; ++m)
                for (int j = 0; j < sub_len; ++j)
                    v[m * sub_len + j] = frame.at(m, kept[s + j], n);
            r.noalias() += v * v.adjoint();
        }
    }
    r /= double(frame.num_symbols) * double(n_shifts);

    Covariance out;
    out.r = std::move(r);
    out.subcarriers.assign(kept.begin(), kept.begin() + sub_len);
    out.antennas = n_ant;
    out.subarray_len = sub_len;
    return out;
}

struct MusicConfig {
    int signal_subspace_dim = 0;      // Q; 0 selects eigenvalues > 10x median
    std::vector<double> range_grid;   // meters
    std::vector<double> azimuth_grid; // radians
    bool round_trip_range = false;    // halve the steering range if true

    static std::vector<double> linspace(double lo, double hi, double step) {
        std::vector<double> g;
        for (double v = lo; v <= hi + 1e-12; v += step) g.push_back(v);
        return g;
    }

    static MusicConfig defaults() {
        MusicConfig c;
        c.range_grid = linspace(0.0, 50.0, 0.25);
        c.azimuth_grid = linspace(deg2rad(-90.0), deg2rad(90.0), deg2rad(1.0));
        return c;
    }
};

namespace detail {

inline int auto_subspace_dim(const Eigen::VectorXd& eigenvalues_ascending) {
    const int dim = int(eigenvalues_ascending.size());
    Eigen::VectorXd sorted = eigenvalues_ascending;
    double median = sorted[dim / 2];
    double floor = sorted[dim - 1] * 1e-12;
    double threshold = 10.0 * std::max(median, floor);
    int q = 0;
    for (int i = 0; i < dim; ++i)
        if (sorted[i] > threshold) ++q;
    return std::clamp(q, 1, dim - 1);
}

} // namespace detail

/// 2D MUSIC pseudo-spectrum over a range-azimuth grid. The steering vector
/// is s(d, phi) = a(phi) (x) b(d) with a[m] = e^{+j 2 pi m (spacing/lambda)
/// sin phi} and b[j] = e^{-j 2 pi f_j d / c0}, unit-normalized; the value
/// is 1 / ||U_N^H s||^2, evaluated as 1 / (1 - ||U_S^H s||^2). f_j is the
/// signed baseband frequency of subcarrier k_j: k_j df below the Nyquist
/// bin and (k_j - N) df above it, since FFT bins in the upper half of the
/// grid carry negative frequencies. For delays on the tap lattice the two
/// conventions agree exactly (the phases differ by whole turns); for
/// fractional delays only the signed mapping matches the band-limited
/// synthesis across the full band.
inline RadarImage music_spectrum(const Covariance& cov, const MusicConfig& config,
                                 const RadioConfig& radio, double element_spacing) {
    const int dim = int(cov.r.rows());
    if (cov.r.cols() != dim || dim < 2)
        throw DimensionMismatchError("music_spectrum: covariance must be square, dim >= 2");
    if (config.range_grid.empty() || config.azimuth_grid.empty())
        throw ValidationError("music_spectrum: empty evaluation grid");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(cov.r);
    if (solver.info() != Eigen::Success)
        throw EigendecompositionError("music_spectrum: eigendecomposition failed");
    Eigen::VectorXd evals = solver.eigenvalues(); // ascending

    int q = config.signal_subspace_dim;
    if (q == 0) q = detail::auto_subspace_dim(evals);
    if (q < 1 || q >= dim)
        throw QOutOfRangeError("music_spectrum: Q must satisfy 1 <= Q < dim");
    Eigen::MatrixXcd u_signal = solver.eigenvectors().rightCols(q);

    const double lambda = radio.wavelength();
    const double spacing = element_spacing > 0.0 ? element_spacing : 0.5 * lambda;
    const double df = radio.subcarrier_spacing();
    const int n_ant = cov.antennas;
    const int sub_len = cov.subarray_len;
    const double range_scale = config.round_trip_range ? 2.0 : 1.0;

    RadarImage img;
    img.rows = int(config.range_grid.size());
    img.cols = int(config.azimuth_grid.size());
    img.values.assign(std::size_t(img.rows) * img.cols, 0.0);
    img.range_axis = config.range_grid;
    img.second_axis = config.azimuth_grid;
    img.second_kind = SecondAxisKind::Azimuth;
    img.source = ImageSource::Music;

    // Steering factors are separable; precompute the azimuth part per column.
    std::vector<Eigen::VectorXcd> a_vecs(img.cols, Eigen::VectorXcd(n_ant));
    for (int c = 0; c < img.cols; ++c) {
        double s = std::sin(config.azimuth_grid[c]);
        for (int m = 0; m < n_ant; ++m)
            a_vecs[c][m] = std::polar(1.0, 2.0 * kPi * (spacing / lambda) * m * s);
    }

    std::vector<double> freqs(sub_len, 0.0);
    for (int j = 0; j < sub_len; ++j) {
        int k = cov.subcarriers[j];
        freqs[j] = (k < radio.num_subcarriers / 2 ? k : k - radio.num_subcarriers) * df;
    }

    parallel_for(std::size_t(img.rows), [&](std::size_t ri) {
        int r = int(ri);
        Eigen::VectorXcd b(sub_len);
        double d = config.range_grid[r] * range_scale;
        for (int j = 0; j < sub_len; ++j)
            b[j] = std::polar(1.0, -2.0 * kPi * freqs[j] * d / kSpeedOfLight);
        Eigen::VectorXcd s(dim);
        for (int c = 0; c < img.cols; ++c) {
            for (int m = 0; m < n_ant; ++m)
                s.segment(m * sub_len, sub_len) = a_vecs[c][m] * b;
            s /= std::sqrt(double(dim));
            double signal_frac = (u_signal.adjoint() * s).squaredNorm();
            img.at(r, c) = 1.0 / std::max(1.0 - signal_frac, 1e-15);
        }
    });
    return img;
}

} // namespace isac
