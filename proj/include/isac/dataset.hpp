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
// Self-describing experiment container (see docs/container-format.md for the
// bit-exact layout):
//
//   8 bytes  magic "ISACREC1"
//   u32      format version (currently 1)
//   u32      manifest length, then that many bytes of sorted-key JSON
//   u32      block count
//   blocks   u16 name length, name, u8 kind, u8 ndim, ndim x u64 dims,
//            u64 payload length, payload, u32 CRC32 of the payload
//
// All integers little-endian. Channel tensors are stored as complex64
// (float32 real/imag pairs, a documented quantization of the double-precision
// in-memory values); radar images and axes as float64. Writes go to a
// temporary file renamed into place, so a crashed run never leaves a partial
// record under the target name.

#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>
#include <zlib.h>

#include "isac/channel.hpp"
#include "isac/common.hpp"
#include "isac/sensing.hpp"

namespace isac {

static_assert(std::endian::native == std::endian::little,
              "container writer assumes a little-endian host");

inline constexpr char kRecordMagic[8] = {'I', 'S', 'A', 'C', 'R', 'E', 'C', '1'};
inline constexpr std::uint32_t kRecordVersion = 1;

struct NamedImage {
    std::string name;
    RadarImage image;
};

struct ExperimentRecord {
    nlohmann::json manifest = nlohmann::json::object();
    std::vector<ChannelFrame> frames;
    std::vector<NamedImage> images;
    std::string metrics_csv;
};

inline bool operator==(const GroundTruth& a, const GroundTruth& b) {
    return a.object_id == b.object_id && a.range == b.range && a.azimuth == b.azimuth &&
           a.radial_speed == b.radial_speed;
}

inline bool operator==(const RadioConfig& a, const RadioConfig& b) {
    return a.carrier_freq == b.carrier_freq && a.bandwidth == b.bandwidth &&
           a.num_subcarriers == b.num_subcarriers && a.cyclic_prefix == b.cyclic_prefix &&
           a.sampling_rate == b.sampling_rate && a.num_symbols == b.num_symbols &&
           a.noise_stddev == b.noise_stddev;
}

inline bool operator==(const ChannelFrame& a, const ChannelFrame& b) {
    return a.same_shape(b) && a.data == b.data && a.radio == b.radio &&
           a.frame_index == b.frame_index && a.ground_truth == b.ground_truth;
}

inline bool operator==(const RadarImage& a, const RadarImage& b) {
    return a.rows == b.rows && a.cols == b.cols && a.values == b.values &&
           a.range_axis == b.range_axis && a.second_axis == b.second_axis &&
           a.second_kind == b.second_kind && a.source == b.source;
}

inline bool operator==(const NamedImage& a, const NamedImage& b) {
    return a.name == b.name && a.image == b.image;
}

inline bool operator==(const ExperimentRecord& a, const ExperimentRecord& b) {
    return a.manifest == b.manifest && a.frames == b.frames && a.images == b.images &&
           a.metrics_csv == b.metrics_csv;
}

namespace detail {

enum class BlockKind : std::uint8_t { Complex64 = 0, Float64 = 1, Bytes = 2 };

struct Block {
    std::string name;
    BlockKind kind;
    std::vector<std::uint64_t> dims;
    std::string payload;
};

inline void put_bytes(std::string& out, const void* p, std::size_t n) {
    out.append(static_cast<const char*>(p), n);
}
template <typename T>
void put_int(std::string& out, T v) {
    put_bytes(out, &v, sizeof(T));
}

inline std::uint32_t payload_crc(const std::string& payload) {
    return std::uint32_t(
        ::crc32(0L, reinterpret_cast<const Bytef*>(payload.data()), uInt(payload.size())));
}

inline void append_block(std::string& out, const Block& b) {
    put_int<std::uint16_t>(out, std::uint16_t(b.name.size()));
    put_bytes(out, b.name.data(), b.name.size());
    put_int<std::uint8_t>(out, std::uint8_t(b.kind));
    put_int<std::uint8_t>(out, std::uint8_t(b.dims.size()));
    for (auto d : b.dims) put_int<std::uint64_t>(out, d);
    put_int<std::uint64_t>(out, b.payload.size());
    put_bytes(out, b.payload.data(), b.payload.size());
    put_int<std::uint32_t>(out, payload_crc(b.payload));
}

inline std::string complex64_payload(const std::vector<cplx>& data) {
    std::string payload;
    payload.reserve(data.size() * 8);
    for (const auto& v : data) {
        float re = float(v.real()), im = float(v.imag());
        put_bytes(payload, &re, 4);
        put_bytes(payload, &im, 4);
    }
    return payload;
}

inline std::string float64_payload(const std::vector<double>& data) {
    std::string payload;
    payload.resize(data.size() * 8);
    std::memcpy(payload.data(), data.data(), payload.size());
    return payload;
}

/// Bounds-checked sequential reader over the in-memory file image.
class Cursor {
  public:
    Cursor(const std::string& buf) : buf_(buf) {}

    const char* take(std::size_t n) {
        if (pos_ + n > buf_.size())
            throw IoError("record truncated: need " + std::to_string(n) + " bytes at offset " +
                          std::to_string(pos_));
        const char* p = buf_.data() + pos_;
        pos_ += n;
        return p;
    }
    template <typename T>
    T take_int() {
        T v;
        std::memcpy(&v, take(sizeof(T)), sizeof(T));
        return v;
    }
    bool done() const { return pos_ == buf_.size(); }

  private:
    const std::string& buf_;
    std::size_t pos_ = 0;
};

inline Block read_block(Cursor& cur) {
    Block b;
    auto name_len = cur.take_int<std::uint16_t>();
    b.name.assign(cur.take(name_len), name_len);
    b.kind = BlockKind(cur.take_int<std::uint8_t>());
    auto ndim = cur.take_int<std::uint8_t>();
    for (int i = 0; i < ndim; ++i) b.dims.push_back(cur.take_int<std::uint64_t>());
    auto payload_len = cur.take_int<std::uint64_t>();
    b.payload.assign(cur.take(payload_len), std::size_t(payload_len));
    auto crc = cur.take_int<std::uint32_t>();
    if (crc != payload_crc(b.payload))
        throw ChecksumMismatchError("record block '" + b.name + "': CRC32 mismatch");
    return b;
}

inline std::vector<cplx> complex64_values(const Block& b) {
    if (b.payload.size() % 8 != 0)
        throw IoError("block '" + b.name + "': complex64 payload not a multiple of 8");
    std::vector<cplx> out(b.payload.size() / 8);
    const char* p = b.payload.data();
    for (auto& v : out) {
        float re, im;
        std::memcpy(&re, p, 4);
        std::memcpy(&im, p + 4, 4);
        v = cplx{double(re), double(im)};
        p += 8;
    }
    return out;
}

inline std::vector<double> float64_values(const Block& b) {
    if (b.payload.size() % 8 != 0)
        throw IoError("block '" + b.name + "': float64 payload not a multiple of 8");
    std::vector<double> out(b.payload.size() / 8);
    std::memcpy(out.data(), b.payload.data(), b.payload.size());
    return out;
}

inline nlohmann::json radio_to_json(const RadioConfig& r) {
    return {{"carrier_freq", r.carrier_freq},
            {"bandwidth", r.bandwidth},
            {"num_subcarriers", r.num_subcarriers},
            {"cyclic_prefix", r.cyclic_prefix},
            {"sampling_rate", r.sampling_rate},
            {"num_symbols", r.num_symbols},
            {"noise_stddev", r.noise_stddev}};
}

inline RadioConfig radio_from_json(const nlohmann::json& j) {
    RadioConfig r;
    r.carrier_freq = j.at("carrier_freq").get<double>();
    r.bandwidth = j.at("bandwidth").get<double>();
    r.num_subcarriers = j.at("num_subcarriers").get<int>();
    r.cyclic_prefix = j.at("cyclic_prefix").get<int>();
    r.sampling_rate = j.at("sampling_rate").get<double>();
    r.num_symbols = j.at("num_symbols").get<int>();
    r.noise_stddev = j.at("noise_stddev").get<double>();
    return r;
}

} // namespace detail

/// Serialize a record to the container byte image.
inline std::string serialize_record(const ExperimentRecord& record) {
    using detail::Block;
    using detail::BlockKind;

    std::vector<Block> blocks;
    nlohmann::json manifest = record.manifest;
    manifest["format_version"] = kRecordVersion;
    manifest["frame_count"] = record.frames.size();

    nlohmann::json frame_meta = nlohmann::json::array();
    for (std::size_t i = 0; i < record.frames.size(); ++i) {
        const ChannelFrame& f = record.frames[i];
        char name[64];
        std::snprintf(name, sizeof(name), "frame/%04zu/data", i);
        Block b;
        b.name = name;
        b.kind = BlockKind::Complex64;
        b.dims = {std::uint64_t(f.num_antennas), std::uint64_t(f.num_subcarriers),
                  std::uint64_t(f.num_symbols)};
        b.payload = detail::complex64_payload(f.data);
        blocks.push_back(std::move(b));

        nlohmann::json truth = nlohmann::json::array();
        for (const auto& g : f.ground_truth)
            truth.push_back({{"object_id", g.object_id},
                             {"range", g.range},
                             {"azimuth", g.azimuth},
                             {"radial_speed", g.radial_speed}});
        frame_meta.push_back({{"frame_index", f.frame_index},
                              {"radio", detail::radio_to_json(f.radio)},
                              {"ground_truth", truth}});
    }
    manifest["frames"] = frame_meta;

    nlohmann::json image_meta = nlohmann::json::array();
    for (const auto& [name, img] : record.images) {
        auto block_of = [&](const std::string& suffix, const std::vector<double>& v,
                            std::vector<std::uint64_t> dims) {
            Block b;
            b.name = "image/" + name + "/" + suffix;
            b.kind = BlockKind::Float64;
            b.dims = std::move(dims);
            b.payload = detail::float64_payload(v);
            blocks.push_back(std::move(b));
        };
        block_of("values", img.values, {std::uint64_t(img.rows), std::uint64_t(img.cols)});
        block_of("range_axis", img.range_axis, {std::uint64_t(img.range_axis.size())});
        block_of("second_axis", img.second_axis, {std::uint64_t(img.second_axis.size())});
        image_meta.push_back(
            {{"name", name},
             {"second_kind", img.second_kind == SecondAxisKind::Azimuth ? "azimuth" : "doppler"},
             {"source", img.source == ImageSource::Music ? "music" : "periodogram"}});
    }
    manifest["images"] = image_meta;

    if (!record.metrics_csv.empty()) {
        Block b;
        b.name = "metrics.csv";
        b.kind = BlockKind::Bytes;
        b.payload = record.metrics_csv;
        blocks.push_back(std::move(b));
    }

    std::uint32_t combined = 0;
    for (const auto& b : blocks)
        combined = std::uint32_t(::crc32(combined, reinterpret_cast<const Bytef*>(b.payload.data()),
                                         uInt(b.payload.size())));
    manifest["payload_crc32"] = combined;

    std::string out;
    detail::put_bytes(out, kRecordMagic, sizeof(kRecordMagic));
    detail::put_int<std::uint32_t>(out, kRecordVersion);
    std::string manifest_text = manifest.dump();
    detail::put_int<std::uint32_t>(out, std::uint32_t(manifest_text.size()));
    detail::put_bytes(out, manifest_text.data(), manifest_text.size());
    detail::put_int<std::uint32_t>(out, std::uint32_t(blocks.size()));
    for (const auto& b : blocks) detail::append_block(out, b);
    return out;
}

/// Parse a container byte image back into a record.
inline ExperimentRecord parse_record(const std::string& buf) {
    detail::Cursor cur(buf);
    const char* magic = cur.take(sizeof(kRecordMagic));
    if (std::memcmp(magic, kRecordMagic, sizeof(kRecordMagic)) != 0)
        throw IoError("not a record file: bad magic");
    auto version = cur.take_int<std::uint32_t>();
    if (version != kRecordVersion)
        throw VersionUnsupportedError("record format version " + std::to_string(version) +
                                      " not supported");
    auto manifest_len = cur.take_int<std::uint32_t>();
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(std::string(cur.take(manifest_len), manifest_len));
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(std::string("record manifest: ") + e.what());
    }

    auto block_count = cur.take_int<std::uint32_t>();
    std::vector<detail::Block> blocks;
    blocks.reserve(block_count);
    for (std::uint32_t i = 0; i < block_count; ++i) blocks.push_back(detail::read_block(cur));
    if (!cur.done()) throw IoError("record has trailing bytes after the last block");

    std::uint32_t combined = 0;
    for (const auto& b : blocks)
        combined = std::uint32_t(::crc32(combined, reinterpret_cast<const Bytef*>(b.payload.data()),
                                         uInt(b.payload.size())));
    if (manifest.contains("payload_crc32") &&
        manifest["payload_crc32"].get<std::uint32_t>() != combined)
        throw ChecksumMismatchError("record: manifest payload hash does not match blocks");

    ExperimentRecord rec;
    auto frame_meta = manifest.value("frames", nlohmann::json::array());

    for (const auto& b : blocks) {
        if (b.name.rfind("frame/", 0) == 0) {
            if (b.dims.size() != 3) throw IoError("block '" + b.name + "': expected 3 dims");
            ChannelFrame f;
            f.num_antennas = int(b.dims[0]);
            f.num_subcarriers = int(b.dims[1]);
            f.num_symbols = int(b.dims[2]);
            f.data = detail::complex64_values(b);
            if (f.data.size() != std::size_t(f.num_antennas) * f.num_subcarriers * f.num_symbols)
                throw IoError("block '" + b.name + "': payload does not match dims");
            std::size_t idx = rec.frames.size();
            if (idx < frame_meta.size()) {
                const auto& meta = frame_meta[idx];
                f.frame_index = meta.value("frame_index", int(idx));
                if (meta.contains("radio")) f.radio = detail::radio_from_json(meta["radio"]);
                for (const auto& g : meta.value("ground_truth", nlohmann::json::array())) {
                    GroundTruth gt;
                    gt.object_id = g.value("object_id", std::string());
                    gt.range = g.value("range", 0.0);
                    gt.azimuth = g.value("azimuth", 0.0);
                    gt.radial_speed = g.value("radial_speed", 0.0);
                    f.ground_truth.push_back(gt);
                }
            }
            rec.frames.push_back(std::move(f));
        } else if (b.name == "metrics.csv") {
            rec.metrics_csv = b.payload;
        }
    }

    for (const auto& meta : manifest.value("images", nlohmann::json::array())) {
        NamedImage ni;
        ni.name = meta.at("name").get<std::string>();
        ni.image.second_kind = meta.value("second_kind", std::string("doppler")) == "azimuth"
                                   ? SecondAxisKind::Azimuth
                                   : SecondAxisKind::Doppler;
        ni.image.source = meta.value("source", std::string("periodogram")) == "music"
                              ? ImageSource::Music
                              : ImageSource::Periodogram;
        for (const auto& b : blocks) {
            if (b.name == "image/" + ni.name + "/values") {
                if (b.dims.size() != 2) throw IoError("block '" + b.name + "': expected 2 dims");
                ni.image.rows = int(b.dims[0]);
                ni.image.cols = int(b.dims[1]);
                ni.image.values = detail::float64_values(b);
                if (ni.image.values.size() != std::size_t(ni.image.rows) * ni.image.cols)
                    throw IoError("block '" + b.name + "': payload does not match dims");
            } else if (b.name == "image/" + ni.name + "/range_axis") {
                ni.image.range_axis = detail::float64_values(b);
            } else if (b.name == "image/" + ni.name + "/second_axis") {
                ni.image.second_axis = detail::float64_values(b);
            }
        }
        rec.images.push_back(std::move(ni));
    }

    if (manifest.contains("frame_count") &&
        manifest["frame_count"].get<std::size_t>() != rec.frames.size())
        throw IoError("record: manifest frame_count does not match stored frames");

    // Drop the structural keys the writer injects so that parsing inverts
    // serialization exactly; they are recomputed on every write.
    for (const char* key : {"format_version", "frame_count", "frames", "images", "payload_crc32"})
        manifest.erase(key);

    rec.manifest = std::move(manifest);
    return rec;
}

/// Atomic write: serialize, write to <path>.tmp, rename into place.
inline void write_record(const ExperimentRecord& record, const std::string& path) {
    std::string bytes = serialize_record(record);
    std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out.write(bytes.data(), std::streamsize(bytes.size()));
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) throw IoError("rename failed: " + tmp.string() + " -> " + target.string() + ": " +
                          ec.message());
}

inline ExperimentRecord read_record(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open record: " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_record(buf);
}

} // namespace isac
