#pragma once

// Waveform files: raw little-endian float32 samples at `path`, metadata in
// `path + ".json"`.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scap/error.hpp"
#include "scap/signal.hpp"

namespace scap {

inline constexpr int waveform_schema_version = 1;

struct WaveformMeta {
    double sample_rate = 0.0;
    std::string format;
    std::string cfg_digest;
    int training_len = 0;
    std::uint64_t sample_count = 0;
};

inline std::string sidecar_path(const std::string& path) { return path + ".json"; }

namespace detail {

inline std::uint32_t to_le(std::uint32_t v)
{
    if constexpr (std::endian::native == std::endian::big) {
        return __builtin_bswap32(v);
    }
    return v;
}

} // namespace detail

inline void export_waveform(const SampledSignal& signal, const std::string& path, const std::string& format,
                            int training_len)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw runtime_failure("cannot open " + path + " for writing");
    }
    for (double v : signal.samples) {
        const auto bits = detail::to_le(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
    nlohmann::json meta = {
        {"schema_version", waveform_schema_version},
        {"sample_rate", signal.sample_rate},
        {"format", format},
        {"cfg_digest", signal.digest},
        {"training_len", training_len},
        {"sample_count", signal.samples.size()},
        {"sample_format", "f32le"},
    };
    std::ofstream side(sidecar_path(path));
    if (!side) {
        throw runtime_failure("cannot open " + sidecar_path(path) + " for writing");
    }
    side << meta.dump(2) << '\n';
}

inline WaveformMeta read_waveform_meta(const std::string& path)
{
    std::ifstream in(sidecar_path(path));
    if (!in) {
        throw config_error("missing waveform sidecar " + sidecar_path(path));
    }
    try {
        nlohmann::json j;
        in >> j;
        detail::require(j.at("schema_version").get<int>() == waveform_schema_version,
                        "unsupported waveform schema_version");
        detail::require(j.at("sample_format").get<std::string>() == "f32le", "unsupported sample format");
        WaveformMeta m;
        m.sample_rate = j.at("sample_rate").get<double>();
        m.format = j.at("format").get<std::string>();
        m.cfg_digest = j.at("cfg_digest").get<std::string>();
        m.training_len = j.at("training_len").get<int>();
        m.sample_count = j.at("sample_count").get<std::uint64_t>();
        detail::require(m.sample_rate > 0.0, "waveform sample rate must be positive");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("malformed waveform sidecar " + sidecar_path(path) + ": " + e.what());
    }
}

inline SampledSignal import_waveform(const std::string& path, WaveformMeta* meta_out = nullptr)
{
    const auto meta = read_waveform_meta(path);
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) {
        throw config_error("cannot open " + path);
    }
    const auto bytes = static_cast<std::uint64_t>(in.tellg());
    if (bytes != meta.sample_count * sizeof(float)) {
        throw config_error("waveform length mismatch: " + path + " holds " + std::to_string(bytes) +
                           " bytes, sidecar declares " + std::to_string(meta.sample_count) + " samples");
    }
    in.seekg(0);
    std::vector<std::uint32_t> raw(meta.sample_count);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
    if (!in) {
        throw runtime_failure("short read on " + path);
    }
    SampledSignal sig;
    sig.sample_rate = meta.sample_rate;
    sig.digest = meta.cfg_digest;
    sig.samples.reserve(raw.size());
    for (auto r : raw) {
        sig.samples.push_back(static_cast<double>(std::bit_cast<float>(detail::to_le(r))));
    }
    sig.stages.push_back("import:" + path);
    if (meta_out != nullptr) {
        *meta_out = meta;
    }
    return sig;
}

} // namespace scap
