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
// Command line front end. Subcommands:
//   run <config>          full pipeline, record + image exports
//   sweep <config>        full pipeline plus the aggregate metric table
//   trace-debug <config>  path dump and per-path loss breakdown, no synthesis
//   convert <record>      re-export a stored record as CSV or PGM
// Worker count comes from the ISACSIM_THREADS environment variable.

#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "isac/export.hpp"
#include "isac/pipeline.hpp"
#include "isac/version.hpp"

namespace {

// Every command reports failures as "error [<stage>]: <what>" so an abort
// always names the pipeline stage that raised it.
int cmd_run(const std::string& config_path, const std::string& out_override, bool quiet) {
    const char* stage = "config";
    try {
        isac::RunConfig cfg = isac::parse_run_config(config_path);
        if (!out_override.empty()) cfg.output_dir = out_override;
        stage = "pipeline";
        isac::RunResult result = isac::run_experiment(cfg, quiet ? nullptr : &std::cerr);
        stage = "write";
        isac::write_outputs(result, cfg.output_dir);
        if (!quiet)
            std::cerr << "[run] wrote " << cfg.output_dir << " ("
                      << result.record.frames.size() << " frames, "
                      << result.record.images.size() << " images, " << result.rows.size()
                      << " metric rows)\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error [" << stage << "]: " << e.what() << "\n";
        return 1;
    }
}

int cmd_sweep(const std::string& config_path, const std::string& out_override, bool quiet) {
    const char* stage = "config";
    try {
        isac::RunConfig cfg = isac::parse_run_config(config_path);
        if (!out_override.empty()) cfg.output_dir = out_override;
        if (cfg.snr_db.empty())
            throw isac::ValidationError("sweep: snr_db must be non-empty");
        if (cfg.clutter_methods.size() < 2)
            throw isac::ValidationError("sweep: need at least two clutter methods to compare");
        stage = "pipeline";
        isac::RunResult result = isac::run_experiment(cfg, quiet ? nullptr : &std::cerr);
        stage = "write";
        isac::write_outputs(result, cfg.output_dir);
        std::string table = isac::sweep_csv(result.rows);
        isac::detail::write_text_file(
            (std::filesystem::path(cfg.output_dir) / "sweep.csv").string(), table);
        std::cout << table;
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error [" << stage << "]: " << e.what() << "\n";
        return 1;
    }
}

int cmd_trace_debug(const std::string& config_path, const std::string& out_override,
                    bool quiet) {
    const char* stage = "config";
    try {
        isac::RunConfig cfg = isac::parse_run_config(config_path);
        if (!out_override.empty()) cfg.output_dir = out_override;
        isac::Scene scene = isac::parse_scene(cfg.scene_path);

        std::vector<int> frames = cfg.frames;
        if (frames.empty())
            for (int f = 0; f < scene.num_frames; ++f) frames.push_back(f);

        stage = "trace";
        std::filesystem::create_directories(cfg.output_dir);
        std::filesystem::path dir(cfg.output_dir);
        for (int frame : frames) {
            std::vector<isac::TracedPath> traced;
            isac::PathEnsemble ens =
                isac::build_ensemble(scene, frame, cfg.tracer, cfg.radio, &traced);
            char stem[32];
            std::snprintf(stem, sizeof(stem), "f%04d", frame);
            isac::detail::write_text_file((dir / (std::string(stem) + "_paths.txt")).string(),
                                          isac::paths_to_text(traced));
            isac::detail::write_text_file((dir / (std::string(stem) + "_losses.csv")).string(),
                                          isac::loss_breakdown_csv(traced, ens.paths));
            if (!quiet)
                std::cerr << "[trace-debug] frame " << frame << ": " << traced.size()
                          << " paths\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error [" << stage << "]: " << e.what() << "\n";
        return 1;
    }
}

int cmd_convert(const std::string& record_path, bool csv, bool pgm,
                const std::string& out_dir) {
    const char* stage = "read";
    try {
        isac::ExperimentRecord rec = isac::read_record(record_path);
        stage = "write";
        std::filesystem::create_directories(out_dir);
        std::filesystem::path dir(out_dir);
        for (const auto& named : rec.images) {
            std::string flat = named.name;
            std::replace(flat.begin(), flat.end(), '/', '_');
            if (csv)
                isac::detail::write_text_file((dir / (flat + ".csv")).string(),
                                              isac::image_to_csv(named.image));
            if (pgm)
                isac::detail::write_text_file((dir / (flat + ".pgm")).string(),
                                              isac::image_to_pgm(named.image));
        }
        if (csv && !rec.metrics_csv.empty())
            isac::detail::write_text_file((dir / "metrics.csv").string(), rec.metrics_csv);
        std::cout << "converted " << rec.images.size() << " images from " << record_path
                  << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error [" << stage << "]: " << e.what() << "\n";
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"isacsim: deterministic ray-traced ISAC channel and sensing simulator"};
    app.set_version_flag("--version", std::string(isac::kVersion));
    app.require_subcommand(1);

    std::string config_path, record_path, out_override, convert_out = ".";
    bool quiet = false, want_csv = false, want_pgm = false;

    CLI::App* run = app.add_subcommand("run", "Run the full pipeline from a config file");
    run->add_option("config", config_path, "Run configuration JSON")->required();
    run->add_option("--output-dir", out_override, "Override the configured output directory");
    run->add_flag("--quiet", quiet, "Suppress progress logging");

    CLI::App* sweep =
        app.add_subcommand("sweep", "Run the pipeline and emit the aggregate metric table");
    sweep->add_option("config", config_path, "Run configuration JSON")->required();
    sweep->add_option("--output-dir", out_override, "Override the configured output directory");
    sweep->add_flag("--quiet", quiet, "Suppress progress logging");

    CLI::App* trace = app.add_subcommand(
        "trace-debug", "Trace paths and dump geometry plus loss breakdowns, no synthesis");
    trace->add_option("config", config_path, "Run configuration JSON")->required();
    trace->add_option("--output-dir", out_override, "Override the configured output directory");
    trace->add_flag("--quiet", quiet, "Suppress progress logging");

    CLI::App* convert =
        app.add_subcommand("convert", "Export images from a stored record as CSV or PGM");
    convert->add_option("record", record_path, "Record file written by run/sweep")->required();
    convert->add_flag("--csv", want_csv, "Write CSV matrices");
    convert->add_flag("--pgm", want_pgm, "Write PGM heatmaps");
    convert->add_option("--out", convert_out, "Output directory (default: current)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_override, quiet);
        if (sweep->parsed()) return cmd_sweep(config_path, out_override, quiet);
        if (trace->parsed()) return cmd_trace_debug(config_path, out_override, quiet);
        if (convert->parsed()) {
            if (!want_csv && !want_pgm) {
                std::cerr << "convert: pass --csv and/or --pgm\n";
                return 2;
            }
            return cmd_convert(record_path, want_csv, want_pgm, convert_out);
        }
    } catch (const isac::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
