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
// Experiment orchestration: a RunConfig JSON drives trace -> propagate ->
// synthesize -> clutter -> sense -> metrics -> record. Given identical
// configs (seeds included) the whole output directory is byte-reproducible.
//
// SNR convention: the sweep scales the noise floor against the strongest
// clean path of frame 0, noise_stddev = a_max * 10^(-snr_db / 20), so 0 dB
// means per-sample noise power equal to the strongest path's power.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "isac/channel.hpp"
#include "isac/clutter.hpp"
#include "isac/common.hpp"
#include "isac/dataset.hpp"
#include "isac/export.hpp"
#include "isac/metrics.hpp"
#include "isac/propagation.hpp"
#include "isac/raytracer.hpp"
#include "isac/scene.hpp"
#include "isac/sensing.hpp"
#include "isac/version.hpp"

namespace isac {

enum class ClutterKind { None, Reference, Dynamic };

inline const char* clutter_name(ClutterKind k) {
    switch (k) {
        case ClutterKind::None: return "none";
        case ClutterKind::Reference: return "reference";
        case ClutterKind::Dynamic: return "dynamic";
    }
    return "none";
}

struct SensingConfig {
    bool periodogram = true;
    bool music = true;
    int music_q = 0; // 0 = automatic subspace split
    CovarianceOptions covariance;
    double range_min = 0.0, range_max = 50.0, range_step = 0.25;
    double azimuth_min_deg = -90.0, azimuth_max_deg = 90.0, azimuth_step_deg = 1.0;
    bool round_trip_range = false;

    MusicConfig music_config() const {
        MusicConfig c;
        c.signal_subspace_dim = music_q;
        c.range_grid = MusicConfig::linspace(range_min, range_max, range_step);
        c.azimuth_grid = MusicConfig::linspace(deg2rad(azimuth_min_deg),
                                               deg2rad(azimuth_max_deg),
                                               deg2rad(azimuth_step_deg));
        c.round_trip_range = round_trip_range;
        return c;
    }
};

struct RunConfig {
    std::string scene_path;
    std::string output_dir = "out";
    RadioConfig radio;
    TracerConfig tracer;
    SensingConfig sensing;
    std::vector<ClutterKind> clutter_methods{ClutterKind::None};
    double dynamic_epsilon = 0.01;
    int reference_noise_realizations = 16;
    std::string target_object; // ground-truth object; excluded for H_ref
    std::vector<double> snr_db;       // empty = use radio.noise_stddev directly
    std::vector<std::uint64_t> seeds{1};
    std::vector<int> frames;          // empty = all scene frames
    std::string metrics_image = "auto"; // "music", "periodogram" or "auto"
    bool store_frames = true;
    bool store_images = true;
};

// --------------------------------------------------------------------------
// Config parsing

namespace detail {

inline ClutterKind parse_clutter_kind(const std::string& s) {
    if (s == "none") return ClutterKind::None;
    if (s == "reference") return ClutterKind::Reference;
    if (s == "dynamic") return ClutterKind::Dynamic;
    throw ParseError("unknown clutter method: " + s);
}

} // namespace detail

inline RunConfig parse_run_config_text(const std::string& text,
                                       const std::string& base_dir = ".") {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("run config: ") + e.what());
    }

    RunConfig cfg;
    try {
        std::filesystem::path scene = doc.at("scene").get<std::string>();
        cfg.scene_path = scene.is_absolute() ? scene.string()
                                             : (std::filesystem::path(base_dir) / scene).string();
        cfg.output_dir = doc.value("output_dir", cfg.output_dir);

        if (doc.contains("radio")) {
            const auto& r = doc["radio"];
            cfg.radio.carrier_freq = r.value("carrier_freq", cfg.radio.carrier_freq);
            cfg.radio.bandwidth = r.value("bandwidth", cfg.radio.bandwidth);
            cfg.radio.num_subcarriers = r.value("num_subcarriers", cfg.radio.num_subcarriers);
            cfg.radio.cyclic_prefix = r.value("cyclic_prefix", cfg.radio.cyclic_prefix);
            cfg.radio.sampling_rate = r.value("sampling_rate", cfg.radio.sampling_rate);
            cfg.radio.num_symbols = r.value("num_symbols", cfg.radio.num_symbols);
            cfg.radio.noise_stddev = r.value("noise_stddev", cfg.radio.noise_stddev);
        }

        if (doc.contains("tracer")) {
            const auto& t = doc["tracer"];
            cfg.tracer.probe_resolution = t.value("probe_resolution", cfg.tracer.probe_resolution);
            cfg.tracer.max_interactions = t.value("max_interactions", cfg.tracer.max_interactions);
            cfg.tracer.scatter_spread = t.value("scatter_spread", cfg.tracer.scatter_spread);
            cfg.tracer.scatter_resolution =
                t.value("scatter_resolution", cfg.tracer.scatter_resolution);
            cfg.tracer.rx_cube_halfwidth =
                t.value("rx_cube_halfwidth", cfg.tracer.rx_cube_halfwidth);
            cfg.tracer.edge_margin = t.value("edge_margin", cfg.tracer.edge_margin);
            if (t.contains("enable")) {
                cfg.tracer.enable_reflect = cfg.tracer.enable_scatter =
                    cfg.tracer.enable_penetrate = cfg.tracer.enable_diffract =
                        cfg.tracer.enable_backscatter = false;
                for (const auto& e : t["enable"]) {
                    std::string kind = e.get<std::string>();
                    if (kind == "reflect") cfg.tracer.enable_reflect = true;
                    else if (kind == "scatter") cfg.tracer.enable_scatter = true;
                    else if (kind == "penetrate") cfg.tracer.enable_penetrate = true;
                    else if (kind == "diffract") cfg.tracer.enable_diffract = true;
                    else if (kind == "backscatter") cfg.tracer.enable_backscatter = true;
                    else throw ParseError("unknown interaction kind: " + kind);
                }
            }
        }
        cfg.tracer.carrier_frequency = cfg.radio.carrier_freq;

        if (doc.contains("sensing")) {
            const auto& s = doc["sensing"];
            cfg.sensing.periodogram = s.value("periodogram", cfg.sensing.periodogram);
            cfg.sensing.music = s.value("music", cfg.sensing.music);
            cfg.sensing.music_q = s.value("music_q", cfg.sensing.music_q);
            cfg.sensing.covariance.decimation =
                s.value("decimation", cfg.sensing.covariance.decimation);
            cfg.sensing.covariance.smoothing =
                s.value("smoothing", cfg.sensing.covariance.smoothing);
            cfg.sensing.covariance.subarray = s.value("subarray", cfg.sensing.covariance.subarray);
            cfg.sensing.range_min = s.value("range_min", cfg.sensing.range_min);
            cfg.sensing.range_max = s.value("range_max", cfg.sensing.range_max);
            cfg.sensing.range_step = s.value("range_step", cfg.sensing.range_step);
            cfg.sensing.azimuth_min_deg = s.value("azimuth_min_deg", cfg.sensing.azimuth_min_deg);
            cfg.sensing.azimuth_max_deg = s.value("azimuth_max_deg", cfg.sensing.azimuth_max_deg);
            cfg.sensing.azimuth_step_deg =
                s.value("azimuth_step_deg", cfg.sensing.azimuth_step_deg);
            cfg.sensing.round_trip_range =
                s.value("round_trip_range", cfg.sensing.round_trip_range);
        }

        if (doc.contains("clutter_methods")) {
            cfg.clutter_methods.clear();
            for (const auto& m : doc["clutter_methods"])
                cfg.clutter_methods.push_back(detail::parse_clutter_kind(m.get<std::string>()));
        }
        cfg.dynamic_epsilon = doc.value("dynamic_epsilon", cfg.dynamic_epsilon);
        if (cfg.dynamic_epsilon <= 0.0 || cfg.dynamic_epsilon >= 1.0)
            throw ValidationError("dynamic_epsilon must be in (0, 1)");
        cfg.reference_noise_realizations =
            doc.value("reference_noise_realizations", cfg.reference_noise_realizations);
        cfg.target_object = doc.value("target_object", cfg.target_object);

        if (doc.contains("snr_db")) {
            cfg.snr_db.clear();
            for (const auto& v : doc["snr_db"]) cfg.snr_db.push_back(v.get<double>());
        }
        if (doc.contains("seeds")) {
            cfg.seeds.clear();
            for (const auto& v : doc["seeds"]) cfg.seeds.push_back(v.get<std::uint64_t>());
        }
        if (doc.contains("frames")) {
            cfg.frames.clear();
            for (const auto& v : doc["frames"]) cfg.frames.push_back(v.get<int>());
        }
        cfg.metrics_image = doc.value("metrics_image", cfg.metrics_image);
        cfg.store_frames = doc.value("store_frames", cfg.store_frames);
        cfg.store_images = doc.value("store_images", cfg.store_images);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("run config: ") + e.what());
    }

    cfg.radio.validate();
    if (cfg.seeds.empty()) throw ValidationError("run config: seeds must be non-empty");
    if (cfg.clutter_methods.empty())
        throw ValidationError("run config: clutter_methods must be non-empty");
    return cfg;
}

inline RunConfig parse_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open run config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config_text(ss.str(),
                                 std::filesystem::path(path).parent_path().string());
}

// --------------------------------------------------------------------------
// Ground truth

/// Ground truth for the target object at one frame. The range convention
/// matches the traced paths: total TX -> surface -> RX length at the mesh
/// point nearest the TX/RX midpoint. radial_speed is the path-length shrink
/// rate at that point (positive = approaching).
inline GroundTruth ground_truth_for(const Scene& scene, const std::string& object_id,
                                    int frame) {
    const SceneObject* obj = scene.find_object(object_id);
    if (!obj) throw UnknownObjectError("ground truth: unknown object " + object_id);

    RigidTransform tf = obj->transform_at(frame);
    Vec3 mid = (scene.tx.position + scene.rx.position) * 0.5;
    double best = std::numeric_limits<double>::infinity();
    Vec3 best_point;
    for (std::size_t t = 0; t < obj->triangles.size(); ++t) {
        Triangle lt = obj->local_triangle(t);
        Triangle wt{tf.apply(lt.a), tf.apply(lt.b), tf.apply(lt.c)};
        Vec3 p = closest_point_on_triangle(mid, wt);
        double d = (p - mid).norm();
        if (d < best) {
            best = d;
            best_point = p;
        }
    }

    GroundTruth gt;
    gt.object_id = object_id;
    gt.range = (scene.tx.position - best_point).norm() + (best_point - scene.rx.position).norm();
    Vec3 toward = (best_point - scene.rx.position).normalized();
    gt.azimuth = std::asin(std::clamp(toward.dot(scene.rx.array.axis), -1.0, 1.0));
    if (scene.num_frames >= 2 && obj->keyframes.size() >= 2) {
        int f = std::min(frame, scene.num_frames - 2);
        Vec3 v = surface_velocity(scene, object_id, best_point, f);
        Vec3 a_hat = (scene.tx.position - best_point).normalized();
        Vec3 b_hat = (scene.rx.position - best_point).normalized();
        gt.radial_speed = v.dot(a_hat + b_hat);
    }
    return gt;
}

// --------------------------------------------------------------------------
// Pipeline pieces

/// Trace one frame and convert to a path ensemble (paths sorted and
/// deduplicated by the tracer; gains evaluated in path order).
inline PathEnsemble build_ensemble(const Scene& scene, int frame, const TracerConfig& tracer,
                                   const RadioConfig& radio,
                                   std::vector<TracedPath>* traced_out = nullptr) {
    std::vector<TracedPath> paths = trace_paths(scene, frame, tracer);
    PathEnsemble ens;
    ens.paths.reserve(paths.size());
    for (const auto& p : paths) ens.paths.push_back(path_gain(scene, frame, p, radio));
    ens.antenna_count = scene.rx.array.count;
    ens.element_spacing = scene.rx.array.spacing_m;
    if (traced_out) *traced_out = std::move(paths);
    return ens;
}

inline double strongest_amplitude(const PathEnsemble& ens) {
    double a = 0.0;
    for (const auto& p : ens.paths) a = std::max(a, p.amplitude);
    return a;
}

/// Averaged background measurement for the reference method: the scene
/// without the target, synthesized over n independent noise realizations.
inline ChannelFrame reference_background(const PathEnsemble& background_paths,
                                         const RadioConfig& radio, int frame_index,
                                         std::uint64_t seed, int realizations) {
    ChannelFrame avg = synthesize_frame(background_paths, radio, frame_index,
                                        detail::mix64(seed ^ 0x5245464245415631ULL));
    for (int i = 1; i < realizations; ++i) {
        ChannelFrame next =
            synthesize_frame(background_paths, radio, frame_index,
                             detail::mix64(seed ^ (0x5245464245415631ULL + std::uint64_t(i))));
        for (std::size_t j = 0; j < avg.data.size(); ++j) avg.data[j] += next.data[j];
    }
    double inv = 1.0 / double(std::max(realizations, 1));
    for (auto& v : avg.data) v *= inv;
    return avg;
}

struct MetricsRow {
    int frame = 0;
    ClutterKind method = ClutterKind::None;
    double snr_db = 0.0;
    std::uint64_t seed = 0;
    bool detected = false;
    double sinr = 0.0;
    double prominence_norm = 0.0; // 0 when not detected
    double prominence_ratio = 0.0;
    double isolation = 0.0;       // +inf when fewer than 2 peaks
    int peak_count = 0;
};

inline std::string metrics_csv_header() {
    return "frame,method,snr_db,seed,detected,sinr,prominence_norm,prominence_ratio,"
           "isolation_m2,peak_count\n";
}

inline std::string metrics_csv_row(const MetricsRow& r) {
    std::string out;
    out += std::to_string(r.frame);
    out += ",";
    out += clutter_name(r.method);
    out += "," + detail::fmt_double(r.snr_db);
    out += "," + std::to_string(r.seed);
    out += r.detected ? ",1" : ",0";
    out += "," + detail::fmt_double(r.sinr);
    out += "," + detail::fmt_double(r.prominence_norm);
    out += "," + detail::fmt_double(r.prominence_ratio);
    out += "," + detail::fmt_double(r.isolation);
    out += "," + std::to_string(r.peak_count);
    out += "\n";
    return out;
}

/// Metrics of one image against ground truth: detection gate is one
/// wavelength in range and two cells on the second axis.
inline MetricsRow evaluate_image(const RadarImage& img, const GroundTruth& truth,
                                 const RadioConfig& radio) {
    DetectionGate gate;
    gate.range_gate = radio.wavelength();

    double truth_second = truth.azimuth;
    if (img.second_kind == SecondAxisKind::Doppler)
        truth_second = radio.carrier_freq * truth.radial_speed / kSpeedOfLight;

    MetricsRow row;
    std::vector<Peak> peaks = detect_peaks_with_prominence(img);
    mark_targets(img, peaks, truth.range, truth_second, gate);
    row.peak_count = int(peaks.size());

    const Peak* target = nullptr;
    for (const auto& p : peaks)
        if (p.is_target && (!target || p.power > target->power)) target = &p;
    row.detected = target != nullptr;
    row.sinr = sinr_metric(img, truth.range, truth_second, gate.range_gate);
    if (target) {
        ProminenceResult prom = prominence_metric(img, *target);
        row.prominence_norm = prom.normalized;
        row.prominence_ratio = std::isinf(prom.ratio) ? 0.0 : prom.ratio;
        row.isolation = isolation_metric(peaks, *target, img);
    } else {
        row.isolation = std::numeric_limits<double>::infinity();
    }
    return row;
}

// --------------------------------------------------------------------------
// Experiment driver

struct RunResult {
    ExperimentRecord record;
    std::vector<MetricsRow> rows;
};

namespace detail {

class StageTimer {
  public:
    StageTimer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

inline void log_line(std::ostream* log, const std::string& line) {
    if (log) *log << line << "\n";
}

/// Taps that band-limited interpolation would place outside the delay grid.
inline int dropped_tap_count(const PathEnsemble& ens, const RadioConfig& radio) {
    std::vector<std::pair<double, cplx>> entries;
    entries.reserve(ens.paths.size());
    for (const auto& p : ens.paths) entries.emplace_back(p.delay, cplx{p.amplitude, 0.0});
    return band_limit(entries, radio).dropped;
}

} // namespace detail

/// Execute the full pipeline described by the config. Writes nothing; the
/// CLI persists the returned record and sidecar files. When log is non-null,
/// per-stage timings and path/tap counters are emitted there.
inline RunResult run_experiment(const RunConfig& cfg, std::ostream* log = nullptr) {
    Scene scene = parse_scene(cfg.scene_path);
    if (!cfg.target_object.empty() && !scene.find_object(cfg.target_object))
        throw UnknownObjectError("run config: target_object " + cfg.target_object +
                                 " not in scene");

    Scene background = scene;
    if (!cfg.target_object.empty()) {
        background.objects.erase(
            std::remove_if(background.objects.begin(), background.objects.end(),
                           [&](const SceneObject& o) { return o.id == cfg.target_object; }),
            background.objects.end());
    }

    std::vector<int> frames = cfg.frames;
    if (frames.empty())
        for (int f = 0; f < scene.num_frames; ++f) frames.push_back(f);
    for (int f : frames)
        if (f < 0 || f >= scene.num_frames)
            throw FrameOutOfRangeError("run config: frame " + std::to_string(f) +
                                       " outside scene");

    std::vector<double> snrs = cfg.snr_db;
    bool snr_is_nominal = snrs.empty();
    if (snr_is_nominal) snrs.push_back(0.0); // single pass at configured noise_stddev

    RunResult result;
    ExperimentRecord& rec = result.record;
    rec.manifest["software_version"] = kVersion;
    rec.manifest["scene"] = std::filesystem::path(cfg.scene_path).filename().string();
    rec.manifest["scene_sha"] = std::to_string(std::hash<std::string>{}(serialize_scene(scene)));
    rec.manifest["radio"] = detail::radio_to_json(cfg.radio);
    rec.manifest["seeds"] = cfg.seeds;
    rec.manifest["snr_db"] = cfg.snr_db;
    rec.manifest["target_object"] = cfg.target_object;

    std::string metrics_csv = metrics_csv_header();

    for (int frame : frames) {
        detail::StageTimer trace_timer;
        PathEnsemble ensemble = build_ensemble(scene, frame, cfg.tracer, cfg.radio);
        {
            char line[160];
            std::snprintf(line, sizeof(line),
                          "[trace] frame %d: %zu paths, %d dropped taps, %.3f s", frame,
                          ensemble.paths.size(), detail::dropped_tap_count(ensemble, cfg.radio),
                          trace_timer.seconds());
            detail::log_line(log, line);
        }
        PathEnsemble background_ensemble;
        bool needs_reference = false;
        for (auto m : cfg.clutter_methods) needs_reference |= m == ClutterKind::Reference;
        if (needs_reference)
            background_ensemble = build_ensemble(background, frame, cfg.tracer, cfg.radio);

        GroundTruth truth;
        bool have_truth = !cfg.target_object.empty();
        if (have_truth) truth = ground_truth_for(scene, cfg.target_object, frame);

        double ref_amp = strongest_amplitude(ensemble);

        for (std::size_t si = 0; si < snrs.size(); ++si) {
            RadioConfig radio = cfg.radio;
            if (!snr_is_nominal) {
                if (ref_amp <= 0.0)
                    throw ValidationError("snr sweep: no nonzero path to reference");
                radio.noise_stddev = ref_amp * std::pow(10.0, -snrs[si] / 20.0);
            }

            for (std::size_t ki = 0; ki < cfg.seeds.size(); ++ki) {
                std::uint64_t seed = cfg.seeds[ki];
                detail::StageTimer pass_timer;
                ChannelFrame measured = synthesize_frame(ensemble, radio, frame, seed);
                measured.frame_index = frame;
                if (have_truth) measured.ground_truth = {truth};

                bool primary = si == 0 && ki == 0;
                if (primary && cfg.store_frames) rec.frames.push_back(measured);

                ChannelFrame reference;
                if (needs_reference)
                    reference = reference_background(background_ensemble, radio, frame, seed,
                                                     cfg.reference_noise_realizations);

                for (ClutterKind method : cfg.clutter_methods) {
                    ChannelFrame cleaned;
                    switch (method) {
                        case ClutterKind::None: cleaned = measured; break;
                        case ClutterKind::Reference:
                            cleaned = remove_reference(measured, reference);
                            break;
                        case ClutterKind::Dynamic:
                            cleaned = remove_dynamic(measured, cfg.dynamic_epsilon);
                            break;
                    }

                    std::optional<RadarImage> pgram;
                    if (cfg.sensing.periodogram)
                        pgram = periodogram(cleaned, 0, cfg.sensing.round_trip_range);
                    std::optional<RadarImage> music;
                    if (cfg.sensing.music) {
                        Covariance cov = covariance(cleaned, cfg.sensing.covariance);
                        double spacing = scene.rx.array.spacing_m > 0.0
                                             ? scene.rx.array.spacing_m
                                             : 0.5 * radio.wavelength();
                        music = music_spectrum(cov, cfg.sensing.music_config(), radio, spacing);
                    }

                    if (primary && cfg.store_images) {
                        char prefix[96];
                        std::snprintf(prefix, sizeof(prefix), "f%04d/%s", frame,
                                      clutter_name(method));
                        if (pgram)
                            rec.images.push_back(
                                {std::string(prefix) + "/periodogram", *pgram});
                        if (music)
                            rec.images.push_back({std::string(prefix) + "/music", *music});
                    }

                    if (have_truth) {
                        const RadarImage* eval = nullptr;
                        if (cfg.metrics_image == "music" && music) eval = &*music;
                        else if (cfg.metrics_image == "periodogram" && pgram) eval = &*pgram;
                        else eval = music ? &*music : (pgram ? &*pgram : nullptr);
                        if (eval) {
                            MetricsRow row = evaluate_image(*eval, truth, radio);
                            row.frame = frame;
                            row.method = method;
                            row.snr_db = snr_is_nominal ? 0.0 : snrs[si];
                            row.seed = seed;
                            result.rows.push_back(row);
                            metrics_csv += metrics_csv_row(row);
                        }
                    }
                }
                {
                    char line[160];
                    std::snprintf(line, sizeof(line),
                                  "[sense] frame %d snr %.1f seed %llu: %zu methods, %.3f s",
                                  frame, snrs[si], (unsigned long long)seed,
                                  cfg.clutter_methods.size(), pass_timer.seconds());
                    detail::log_line(log, line);
                }
            }
        }
    }

    rec.metrics_csv = metrics_csv;
    return result;
}

/// Aggregate sweep table: one row per (frame, method, SNR) with P_D and the
/// seed-averaged metric values (detected cases only for prominence and
/// finite-isolation averages).
inline std::string sweep_csv(const std::vector<MetricsRow>& rows) {
    struct Bucket {
        std::vector<bool> detections;
        double sinr_sum = 0.0;
        int sinr_n = 0;
        double prom_sum = 0.0;
        int prom_n = 0;
        double iso_sum = 0.0;
        int iso_n = 0;
    };
    std::map<std::tuple<int, int, double>, Bucket> buckets;
    for (const auto& r : rows) {
        Bucket& b = buckets[{r.frame, int(r.method), r.snr_db}];
        b.detections.push_back(r.detected);
        if (std::isfinite(r.sinr)) {
            b.sinr_sum += r.sinr;
            ++b.sinr_n;
        }
        if (r.detected) {
            b.prom_sum += r.prominence_norm;
            ++b.prom_n;
            if (std::isfinite(r.isolation)) {
                b.iso_sum += r.isolation;
                ++b.iso_n;
            }
        }
    }
    std::string out =
        "frame,method,snr_db,p_detection_pct,sinr_mean,prominence_norm_mean,isolation_m2_mean\n";
    for (const auto& [key, b] : buckets) {
        auto [frame, method, snr] = key;
        out += std::to_string(frame);
        out += ",";
        out += clutter_name(ClutterKind(method));
        out += "," + detail::fmt_double(snr);
        out += "," + detail::fmt_double(probability_of_detection(b.detections));
        out += "," + detail::fmt_double(b.sinr_n ? b.sinr_sum / b.sinr_n : 0.0);
        out += "," + detail::fmt_double(b.prom_n ? b.prom_sum / b.prom_n : 0.0);
        out += "," + detail::fmt_double(b.iso_n ? b.iso_sum / b.iso_n
                                                : std::numeric_limits<double>::infinity());
        out += "\n";
    }
    return out;
}

/// Persist a run result under output_dir: the record container, the metrics
/// CSV, and PGM/CSV sidecars for every stored image.
inline void write_outputs(const RunResult& result, const std::string& output_dir) {
    std::filesystem::create_directories(output_dir);
    std::filesystem::path dir(output_dir);
    write_record(result.record, (dir / "record.isacrec").string());
    detail::write_text_file((dir / "metrics.csv").string(), result.record.metrics_csv);
    for (const auto& [name, img] : result.record.images) {
        std::string flat = name;
        std::replace(flat.begin(), flat.end(), '/', '_');
        detail::write_text_file((dir / (flat + ".pgm")).string(), image_to_pgm(img));
        detail::write_text_file((dir / (flat + ".csv")).string(), image_to_csv(img));
    }
}

} // namespace isac
