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
// Human-readable sidecar exports: radar images as CSV matrices or ASCII PGM
// heatmaps, traced paths as a text dump, and per-path loss breakdowns as
// CSV. Every writer is deterministic: fixed float formatting, no timestamps.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "isac/common.hpp"
#include "isac/propagation.hpp"
#include "isac/raytracer.hpp"
#include "isac/sensing.hpp"

namespace isac {
namespace detail {

inline std::string fmt_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(text.data(), std::streamsize(text.size()));
    if (!out) throw IoError("write failed: " + path);
}

} // namespace detail

/// CSV matrix: first row is the second axis, first column the range axis,
/// top-left corner the axis kind label.
inline std::string image_to_csv(const RadarImage& img) {
    std::string out = img.second_kind == SecondAxisKind::Azimuth ? "range_m\\azimuth_rad"
                                                                 : "range_m\\doppler_hz";
    for (double v : img.second_axis) out += "," + detail::fmt_double(v);
    out += "\n";
    for (int r = 0; r < img.rows; ++r) {
        out += detail::fmt_double(img.range_axis[r]);
        for (int c = 0; c < img.cols; ++c) out += "," + detail::fmt_double(img.at(r, c));
        out += "\n";
    }
    return out;
}

/// ASCII PGM (P2) heatmap on a decibel scale: full white is the image
/// maximum, black is 60 dB below it (or everything, for an all-zero image).
/// Row 0 of the image is the top scanline.
inline std::string image_to_pgm(const RadarImage& img, double floor_db = 60.0) {
    double peak = 0.0;
    for (double v : img.values) peak = std::max(peak, v);
    std::string out = "P2\n" + std::to_string(img.cols) + " " + std::to_string(img.rows) +
                      "\n65535\n";
    for (int r = 0; r < img.rows; ++r) {
        for (int c = 0; c < img.cols; ++c) {
            int pixel = 0;
            double v = img.at(r, c);
            if (peak > 0.0 && v > 0.0) {
                double db = 10.0 * std::log10(v / peak);
                double t = (db + floor_db) / floor_db;
                pixel = int(std::lround(std::clamp(t, 0.0, 1.0) * 65535.0));
            }
            out += std::to_string(pixel);
            out += c + 1 == img.cols ? '\n' : ' ';
        }
    }
    return out;
}

/// Text dump of traced paths: one block per path listing every event with
/// its kind, object and coordinates (see docs/path-dump-format.md).
inline std::string paths_to_text(const std::vector<TracedPath>& paths) {
    std::string out = "# isacsim path dump\n# paths: " + std::to_string(paths.size()) + "\n";
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const TracedPath& p = paths[i];
        out += "path " + std::to_string(i) + " length_m " + detail::fmt_double(p.length) +
               " interactions " + std::to_string(p.interaction_count()) + "\n";
        for (const auto& e : p.events) {
            out += "  ";
            out += interaction_name(e.kind);
            if (!e.object_id.empty()) out += " object " + e.object_id;
            out += " at " + detail::fmt_double(e.point.x) + " " + detail::fmt_double(e.point.y) +
                   " " + detail::fmt_double(e.point.z) + "\n";
        }
    }
    return out;
}

/// Loss breakdown CSV: one row per path with every factor, the delay and the
/// per-symbol Doppler phase.
inline std::string loss_breakdown_csv(const std::vector<TracedPath>& paths,
                                      const std::vector<PathGain>& gains) {
    std::string out =
        "path,length_m,delay_s,amplitude,phase_rad,doppler_phase_per_symbol_rad,"
        "arrival_azimuth_rad,path_loss,beam_loss,reflect,scatter,penetrate,diffract,"
        "backscatter\n";
    auto factor = [](const PathGain& g, InteractionKind k) {
        auto it = g.loss_breakdown.find(k);
        return it == g.loss_breakdown.end() ? 1.0 : it->second;
    };
    for (std::size_t i = 0; i < paths.size() && i < gains.size(); ++i) {
        const PathGain& g = gains[i];
        out += std::to_string(i) + "," + detail::fmt_double(paths[i].length) + "," +
               detail::fmt_double(g.delay) + "," + detail::fmt_double(g.amplitude) + "," +
               detail::fmt_double(g.phase) + "," +
               detail::fmt_double(g.doppler_phase_per_symbol) + "," +
               detail::fmt_double(g.arrival_azimuth) + "," + detail::fmt_double(g.path_loss) +
               "," + detail::fmt_double(g.beam_loss) + "," +
               detail::fmt_double(factor(g, InteractionKind::Reflect)) + "," +
               detail::fmt_double(factor(g, InteractionKind::Scatter)) + "," +
               detail::fmt_double(factor(g, InteractionKind::Penetrate)) + "," +
               detail::fmt_double(factor(g, InteractionKind::Diffract)) + "," +
               detail::fmt_double(factor(g, InteractionKind::Backscatter)) + "\n";
    }
    return out;
}

} // namespace isac
