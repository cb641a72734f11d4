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
// Peak detection on radar images and the four evaluation metrics: detection
// probability, SINR-style power ratio, peak prominence, and peak isolation.
// Physical distances between cells use (range.cos az, range.sin az) meters
// for azimuth images; Doppler images fall back to range distance only.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "isac/common.hpp"
#include "isac/sensing.hpp"

namespace isac {

struct Peak {
    int row = 0;             // range bin
    int col = 0;             // second-axis bin
    double range = 0.0;      // meters
    double second = 0.0;     // radians (azimuth) or Hz (doppler)
    double power = 0.0;      // linear
    double prominence = 0.0; // normalized, in [0, 1]
    bool is_target = false;
};

struct DetectionGate {
    double range_gate = 0.08; // meters; default one wavelength at 3.75 GHz
    int second_axis_cells = 2;
};

struct ProminenceResult {
    double ratio = 1.0;      // P_signal / P_col, >= 1; +inf when the col is 0
    double normalized = 0.0; // 1 - P_col / P_signal, in [0, 1]
};

namespace detail {

inline bool is_strict_local_max(const RadarImage& img, int r, int c) {
    double v = img.at(r, c);
    for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            int rr = r + dr, cc = c + dc;
            if (rr < 0 || rr >= img.rows || cc < 0 || cc >= img.cols) continue;
            if (img.at(rr, cc) >= v) return false;
        }
    return true;
}

/// Position of a cell in meters. Azimuth images live in polar coordinates;
/// Doppler images only have a meaningful range coordinate.
inline std::pair<double, double> cell_position(const RadarImage& img, int r, int c) {
    double range = img.range_axis[r];
    if (img.second_kind == SecondAxisKind::Azimuth) {
        double az = img.second_axis[c];
        return {range * std::cos(az), range * std::sin(az)};
    }
    return {range, 0.0};
}

inline double squared_distance(std::pair<double, double> a, std::pair<double, double> b) {
    double dx = a.first - b.first, dy = a.second - b.second;
    return dx * dx + dy * dy;
}

inline int nearest_axis_index(const std::vector<double>& axis, double value) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < axis.size(); ++i) {
        double d = std::abs(axis[i] - value);
        if (d < best_d) {
            best_d = d;
            best = int(i);
        }
    }
    return best;
}

} // namespace detail

/// All strict 8-neighborhood local maxima whose power reaches 1.1 times the
/// image mean, sorted by power descending (ties by row, then column).
inline std::vector<Peak> detect_peaks(const RadarImage& img) {
    if (img.rows == 0 || img.cols == 0)
        throw EmptyInputError("detect_peaks: empty image");
    double mean = 0.0;
    for (double v : img.values) mean += v;
    mean /= double(img.values.size());
    double threshold = 1.1 * mean;

    std::vector<Peak> peaks;
    for (int r = 0; r < img.rows; ++r)
        for (int c = 0; c < img.cols; ++c) {
            double v = img.at(r, c);
            if (v < threshold) continue;
            if (!detail::is_strict_local_max(img, r, c)) continue;
            Peak p;
            p.row = r;
            p.col = c;
            p.range = img.range_axis[r];
            p.second = img.second_axis[c];
            p.power = v;
            peaks.push_back(p);
        }
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
        if (a.power != b.power) return a.power > b.power;
        if (a.row != b.row) return a.row < b.row;
        return a.col < b.col;
    });
    return peaks;
}

/// Prominence of a detected peak: descend radially in the 8 compass
/// directions until the value first rises; the highest of the per-direction
/// valley floors is the enclosing col P_c. Throws if any neighbor exceeds
/// the cell; a flat plateau is allowed and yields normalized prominence 0.
inline ProminenceResult prominence_metric(const RadarImage& img, const Peak& peak) {
    if (peak.row < 0 || peak.row >= img.rows || peak.col < 0 || peak.col >= img.cols)
        throw PeakNotMaximumError("prominence_metric: peak cell outside the image");
    double center = img.at(peak.row, peak.col);
    for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            int rr = peak.row + dr, cc = peak.col + dc;
            if (rr < 0 || rr >= img.rows || cc < 0 || cc >= img.cols) continue;
            if (img.at(rr, cc) > center)
                throw PeakNotMaximumError("prominence_metric: peak is not a local maximum");
        }

    static constexpr int kDirs[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                        {0, 1},   {1, -1}, {1, 0},  {1, 1}};
    double p_signal = img.at(peak.row, peak.col);
    double p_col = 0.0;
    for (const auto& d : kDirs) {
        double prev = p_signal;
        double valley = 0.0;
        int r = peak.row + d[0], c = peak.col + d[1];
        bool rose = false;
        while (r >= 0 && r < img.rows && c >= 0 && c < img.cols) {
            double v = img.at(r, c);
            if (v > prev) { // gradient sign change: prev is this direction's floor
                valley = prev;
                rose = true;
                break;
            }
            prev = v;
            r += d[0];
            c += d[1];
        }
        if (!rose) valley = prev; // ran off the image while still descending
        p_col = std::max(p_col, valley);
    }

    ProminenceResult res;
    res.ratio = p_col > 0.0 ? p_signal / p_col : std::numeric_limits<double>::infinity();
    res.normalized = p_signal > 0.0 ? 1.0 - p_col / p_signal : 0.0;
    return res;
}

/// detect_peaks plus per-peak normalized prominence in one call.
inline std::vector<Peak> detect_peaks_with_prominence(const RadarImage& img) {
    std::vector<Peak> peaks = detect_peaks(img);
    for (auto& p : peaks) p.prominence = prominence_metric(img, p).normalized;
    return peaks;
}

/// True when a peak lies within the detection gate of the ground truth:
/// range within range_gate meters and the second axis within a few cells.
inline bool within_gate(const RadarImage& img, const Peak& peak, double truth_range,
                        double truth_second, const DetectionGate& gate) {
    if (std::abs(peak.range - truth_range) > gate.range_gate) return false;
    int truth_col = detail::nearest_axis_index(img.second_axis, truth_second);
    return std::abs(peak.col - truth_col) <= gate.second_axis_cells;
}

/// Mark peaks that fall inside the gate around ground truth.
inline void mark_targets(const RadarImage& img, std::vector<Peak>& peaks, double truth_range,
                         double truth_second, const DetectionGate& gate) {
    for (auto& p : peaks)
        p.is_target = within_gate(img, p, truth_range, truth_second, gate);
}

/// Percentage of iterations with a successful detection.
inline double probability_of_detection(const std::vector<bool>& detections) {
    if (detections.empty())
        throw EmptyInputError("probability_of_detection: no iterations");
    std::size_t hits = 0;
    for (bool b : detections) hits += b ? 1 : 0;
    return 100.0 * double(hits) / double(detections.size());
}

/// Power in the cell nearest ground truth divided by the total power outside
/// the gate-radius disc around it. Returns +inf when nothing lies outside.
inline double sinr_metric(const RadarImage& img, double truth_range, double truth_second,
                          double gate_radius) {
    if (img.rows == 0 || img.cols == 0) throw EmptyInputError("sinr_metric: empty image");
    if (truth_range < img.range_axis.front() - 1e-9 ||
        truth_range > img.range_axis.back() + 1e-9 ||
        truth_second < img.second_axis.front() - 1e-9 ||
        truth_second > img.second_axis.back() + 1e-9)
        throw TruthOutOfBoundsError("sinr_metric: ground truth outside image axes");

    int tr = detail::nearest_axis_index(img.range_axis, truth_range);
    int tc = detail::nearest_axis_index(img.second_axis, truth_second);
    auto truth_pos = detail::cell_position(img, tr, tc);

    double p_signal = img.at(tr, tc);
    double p_rest = 0.0;
    for (int r = 0; r < img.rows; ++r)
        for (int c = 0; c < img.cols; ++c) {
            auto pos = detail::cell_position(img, r, c);
            if (detail::squared_distance(pos, truth_pos) > gate_radius * gate_radius)
                p_rest += img.at(r, c);
        }
    if (p_rest <= 0.0) return std::numeric_limits<double>::infinity();
    return p_signal / p_rest;
}

/// Squared distance in meters to the nearest other peak; +inf for a lone
/// peak. The target must be one of the listed peaks (matched by cell).
inline double isolation_metric(const std::vector<Peak>& peaks, const Peak& target,
                               const RadarImage& img) {
    bool found = false;
    for (const auto& p : peaks)
        if (p.row == target.row && p.col == target.col) found = true;
    if (!found) throw TargetNotInListError("isolation_metric: target peak not in list");

    auto tp = detail::cell_position(img, target.row, target.col);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : peaks) {
        if (p.row == target.row && p.col == target.col) continue;
        best = std::min(best, detail::squared_distance(detail::cell_position(img, p.row, p.col), tp));
    }
    return best;
}

} // namespace isac
