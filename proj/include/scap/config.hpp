#pragma once

// Experiment definitions: JSON schema (schema_version 1) and the figure presets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scap/bank_io.hpp"
#include "scap/channel.hpp"
#include "scap/error.hpp"
#include "scap/filters.hpp"
#include "scap/metrics.hpp"
#include "scap/modems.hpp"

namespace scap {

inline constexpr int experiment_schema_version = 1;

enum class BandMode { all_active, isolated };

inline const char* to_string(BandMode m) { return m == BandMode::all_active ? "all_active" : "isolated"; }

inline BandMode band_mode_from_string(const std::string& s)
{
    if (s == "all_active") return BandMode::all_active;
    if (s == "isolated") return BandMode::isolated;
    throw config_error("unknown band mode: " + s);
}

inline const char* to_string(SyncMode m) { return m == SyncMode::analytic ? "analytic" : "training"; }

inline SyncMode sync_mode_from_string(const std::string& s)
{
    if (s == "analytic") return SyncMode::analytic;
    if (s == "training") return SyncMode::training;
    throw config_error("unknown sync mode: " + s);
}

struct ModemParams {
    int chi = 4;
    int span = 16;
    int training_len = 512;
    int frame_symbols = 8192; ///< payload symbols per frame (per branch)
    int mcap_subbands = 4;
    NormMode norm = NormMode::unit_energy;
    SyncMode sync = SyncMode::training;
    bool cpe = true;
    std::map<Format, double> beta{{Format::scap, 1.0}, {Format::mcap, 0.1}, {Format::ook, 1.0}};
    std::map<Format, std::vector<int>> levels; ///< per format; missing -> binary on every band
};

struct StopRule {
    std::uint64_t min_errors = 100; ///< 0 disables the error criterion (fixed bit budget)
    std::uint64_t max_bits = 10'000'000;
};

struct DumpRequest {
    enum class Kind { eye, psd } kind = Kind::psd;
    Format format = Format::scap;
    std::size_t rate_index = 0;
    std::size_t snr_index = 0;
    int psd_segment = 1024;
};

struct SweepGrid {
    std::vector<double> rates_bps; ///< aggregate gross bit rate, strictly increasing
    std::vector<double> snr_db;    ///< per-sample SNR; +infinity (JSON null) disables noise
    BandMode band_mode = BandMode::all_active;
    StopRule stop;
    std::vector<double> thresholds{fec_threshold, error_free_threshold};
};

struct OutputPaths {
    std::string points_csv = "points.csv";
    std::string summary_csv = "summary.csv";
    std::string failures_csv = "failures.csv";
};

struct ExperimentConfig {
    std::string name = "custom";
    std::vector<Format> formats{Format::scap, Format::mcap, Format::ook};
    ModemParams modem;
    ChannelConfig channel; ///< snr_db and seed are overridden per point
    SweepGrid sweep;
    std::uint64_t master_seed = 1;
    OutputPaths outputs;
    std::vector<DumpRequest> dumps;

    void validate() const
    {
        detail::require(!formats.empty(), "no formats selected");
        detail::require(!sweep.rates_bps.empty(), "rate grid is empty");
        detail::require(!sweep.snr_db.empty(), "SNR grid is empty");
        for (std::size_t i = 0; i < sweep.rates_bps.size(); ++i) {
            detail::require(sweep.rates_bps[i] > 0.0 && std::isfinite(sweep.rates_bps[i]), "rates must be positive");
            if (i > 0) {
                detail::require(sweep.rates_bps[i] > sweep.rates_bps[i - 1], "rate grid must be strictly increasing");
            }
        }
        for (std::size_t i = 1; i < sweep.snr_db.size(); ++i) {
            detail::require(sweep.snr_db[i] > sweep.snr_db[i - 1], "SNR grid must be strictly increasing");
        }
        detail::require(sweep.stop.max_bits > 0, "stop rule needs max_bits > 0");
        detail::require(modem.frame_symbols >= 1, "frame_symbols must be >= 1");
        detail::require(modem.training_len >= 0, "training_len must be >= 0");
        detail::require(modem.mcap_subbands >= 1, "mcap_subbands must be >= 1");
        for (double t : sweep.thresholds) {
            detail::require(t > 0.0 && t < 1.0, "thresholds must lie in (0, 1)");
        }
        for (const auto& d : dumps) {
            detail::require(d.rate_index < sweep.rates_bps.size() && d.snr_index < sweep.snr_db.size(),
                            "dump request outside the sweep grid");
        }
        channel.validate();
    }
};

// ---------------------------------------------------------------- JSON

namespace detail {

inline double snr_from_json(const nlohmann::json& v)
{
    return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
}

inline nlohmann::json snr_to_json(double v)
{
    return std::isinf(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
}

} // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c)
{
    nlohmann::json j;
    j["schema_version"] = experiment_schema_version;
    j["name"] = c.name;
    auto& formats = j["formats"] = nlohmann::json::array();
    for (auto f : c.formats) {
        formats.push_back(to_string(f));
    }
    auto& m = j["modem"];
    m["chi"] = c.modem.chi;
    m["span"] = c.modem.span;
    m["training_len"] = c.modem.training_len;
    m["frame_symbols"] = c.modem.frame_symbols;
    m["mcap_subbands"] = c.modem.mcap_subbands;
    m["norm"] = to_string(c.modem.norm);
    m["sync"] = to_string(c.modem.sync);
    m["cpe"] = c.modem.cpe;
    for (const auto& [f, b] : c.modem.beta) {
        m["beta"][to_string(f)] = b;
    }
    m["levels"] = nlohmann::json::object();
    for (const auto& [f, l] : c.modem.levels) {
        m["levels"][to_string(f)] = l;
    }
    auto& ch = j["channel"];
    ch["f3db_lp_hz"] = std::isinf(c.channel.f3db_lp) ? nlohmann::json(nullptr) : nlohmann::json(c.channel.f3db_lp);
    ch["lowpass_order"] = c.channel.lowpass_order;
    ch["f_hp_hz"] = c.channel.f_hp;
    ch["clip"] = c.channel.clip ? nlohmann::json{{"lower", c.channel.clip->lower}, {"upper", c.channel.clip->upper}}
                                : nlohmann::json(nullptr);
    auto& s = j["sweep"];
    s["rates_bps"] = c.sweep.rates_bps;
    s["snr_db"] = nlohmann::json::array();
    for (double v : c.sweep.snr_db) {
        s["snr_db"].push_back(detail::snr_to_json(v));
    }
    s["band_mode"] = to_string(c.sweep.band_mode);
    s["stop"] = {{"min_errors", c.sweep.stop.min_errors}, {"max_bits", c.sweep.stop.max_bits}};
    s["thresholds"] = c.sweep.thresholds;
    j["master_seed"] = c.master_seed;
    j["outputs"] = {{"points_csv", c.outputs.points_csv},
                    {"summary_csv", c.outputs.summary_csv},
                    {"failures_csv", c.outputs.failures_csv}};
    j["dumps"] = nlohmann::json::array();
    for (const auto& d : c.dumps) {
        j["dumps"].push_back({{"kind", d.kind == DumpRequest::Kind::eye ? "eye" : "psd"},
                              {"format", to_string(d.format)},
                              {"rate_index", d.rate_index},
                              {"snr_index", d.snr_index},
                              {"psd_segment", d.psd_segment}});
    }
    return j;
}

/// Missing keys keep their defaults; unknown keys are rejected so typos surface.
inline ExperimentConfig experiment_from_json(const nlohmann::json& j)
{
    auto check_keys = [](const nlohmann::json& obj, std::initializer_list<const char*> allowed, const char* where) {
        detail::require(obj.is_object(), std::string(where) + " must be an object");
        for (const auto& [k, v] : obj.items()) {
            const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; });
            detail::require(ok, std::string("unknown key '") + k + "' in " + where);
        }
    };
    try {
        check_keys(j, {"schema_version", "name", "formats", "modem", "channel", "sweep", "master_seed", "outputs", "dumps"},
                   "experiment");
        detail::require(j.at("schema_version").get<int>() == experiment_schema_version,
                        "unsupported experiment schema_version");
        ExperimentConfig c;
        c.name = j.value("name", c.name);
        if (j.contains("formats")) {
            c.formats.clear();
            for (const auto& f : j.at("formats")) {
                c.formats.push_back(format_from_string(f.get<std::string>()));
            }
        }
        if (j.contains("modem")) {
            const auto& m = j.at("modem");
            check_keys(m, {"chi", "span", "training_len", "frame_symbols", "mcap_subbands", "norm", "sync", "cpe", "beta", "levels"},
                       "modem");
            c.modem.chi = m.value("chi", c.modem.chi);
            c.modem.span = m.value("span", c.modem.span);
            c.modem.training_len = m.value("training_len", c.modem.training_len);
            c.modem.frame_symbols = m.value("frame_symbols", c.modem.frame_symbols);
            c.modem.mcap_subbands = m.value("mcap_subbands", c.modem.mcap_subbands);
            if (m.contains("norm")) c.modem.norm = norm_mode_from_string(m.at("norm").get<std::string>());
            if (m.contains("sync")) c.modem.sync = sync_mode_from_string(m.at("sync").get<std::string>());
            c.modem.cpe = m.value("cpe", c.modem.cpe);
            if (m.contains("beta")) {
                for (const auto& [k, v] : m.at("beta").items()) {
                    c.modem.beta[format_from_string(k)] = v.get<double>();
                }
            }
            if (m.contains("levels")) {
                for (const auto& [k, v] : m.at("levels").items()) {
                    c.modem.levels[format_from_string(k)] = v.get<std::vector<int>>();
                }
            }
        }
        if (j.contains("channel")) {
            const auto& ch = j.at("channel");
            check_keys(ch, {"f3db_lp_hz", "rise_time_s", "lowpass_order", "f_hp_hz", "clip"}, "channel");
            detail::require(!(ch.contains("f3db_lp_hz") && ch.contains("rise_time_s")),
                            "give either f3db_lp_hz or rise_time_s, not both");
            if (ch.contains("f3db_lp_hz")) {
                c.channel.f3db_lp = ch.at("f3db_lp_hz").is_null() ? std::numeric_limits<double>::infinity()
                                                                  : ch.at("f3db_lp_hz").get<double>();
            }
            if (ch.contains("rise_time_s")) {
                c.channel.f3db_lp = rise_time_to_bandwidth(ch.at("rise_time_s").get<double>());
            }
            c.channel.lowpass_order = ch.value("lowpass_order", c.channel.lowpass_order);
            c.channel.f_hp = ch.value("f_hp_hz", c.channel.f_hp);
            if (ch.contains("clip") && !ch.at("clip").is_null()) {
                c.channel.clip = ClipLimits{ch.at("clip").at("lower").get<double>(), ch.at("clip").at("upper").get<double>()};
            }
        }
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            check_keys(s, {"rates_bps", "snr_db", "band_mode", "stop", "thresholds"}, "sweep");
            if (s.contains("rates_bps")) c.sweep.rates_bps = s.at("rates_bps").get<std::vector<double>>();
            if (s.contains("snr_db")) {
                for (const auto& v : s.at("snr_db")) {
                    c.sweep.snr_db.push_back(detail::snr_from_json(v));
                }
            }
            if (s.contains("band_mode")) c.sweep.band_mode = band_mode_from_string(s.at("band_mode").get<std::string>());
            if (s.contains("stop")) {
                c.sweep.stop.min_errors = s.at("stop").value("min_errors", c.sweep.stop.min_errors);
                c.sweep.stop.max_bits = s.at("stop").value("max_bits", c.sweep.stop.max_bits);
            }
            if (s.contains("thresholds")) c.sweep.thresholds = s.at("thresholds").get<std::vector<double>>();
        }
        c.master_seed = j.value("master_seed", c.master_seed);
        if (j.contains("outputs")) {
            const auto& o = j.at("outputs");
            c.outputs.points_csv = o.value("points_csv", c.outputs.points_csv);
            c.outputs.summary_csv = o.value("summary_csv", c.outputs.summary_csv);
            c.outputs.failures_csv = o.value("failures_csv", c.outputs.failures_csv);
        }
        if (j.contains("dumps")) {
            for (const auto& d : j.at("dumps")) {
                DumpRequest r;
                const auto kind = d.at("kind").get<std::string>();
                detail::require(kind == "eye" || kind == "psd", "dump kind must be eye or psd");
                r.kind = kind == "eye" ? DumpRequest::Kind::eye : DumpRequest::Kind::psd;
                r.format = format_from_string(d.at("format").get<std::string>());
                r.rate_index = d.value("rate_index", std::size_t{0});
                r.snr_index = d.value("snr_index", std::size_t{0});
                r.psd_segment = d.value("psd_segment", r.psd_segment);
                c.dumps.push_back(r);
            }
        }
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("malformed experiment config: ") + e.what());
    }
}

inline ExperimentConfig load_experiment(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw config_error("cannot open " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error(path + ": " + e.what());
    }
    return experiment_from_json(j);
}

// ---------------------------------------------------------------- presets

/// n points spaced evenly in log between lo and hi, rounded to whole bit/s.
inline std::vector<double> log_grid(double lo, double hi, int n)
{
    detail::require(n >= 2 && lo > 0.0 && hi > lo, "invalid log grid");
    std::vector<double> out;
    for (int i = 0; i < n; ++i) {
        out.push_back(std::round(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1))));
    }
    return out;
}

/// Per-sample SNR of the figure presets. At this value the OOK series crosses
/// BER 1e-6 near the middle of the shared rate grid.
inline constexpr double figure_preset_snr_db = 11.0;

inline ExperimentConfig figure_preset_base(const std::string& name)
{
    ExperimentConfig c;
    c.name = name;
    c.channel.f3db_lp = rise_time_to_bandwidth(694e-9);
    c.sweep.rates_bps = log_grid(0.75e6, 8e6, 15);
    c.sweep.snr_db = {figure_preset_snr_db};
    c.sweep.stop = {0, 1'000'000};
    c.master_seed = 20150801;
    return c;
}

inline ExperimentConfig preset(const std::string& name)
{
    if (name == "fig7") {
        auto c = figure_preset_base(name);
        c.formats = {Format::scap};
        return c;
    }
    if (name == "fig8") {
        auto c = figure_preset_base(name);
        c.formats = {Format::mcap};
        return c;
    }
    if (name == "fig9") {
        return figure_preset_base(name);
    }
    if (name == "wander") {
        // Low rates need a finer grid so the 504 kHz pole stays below Nyquist.
        auto c = figure_preset_base(name);
        c.formats = {Format::scap};
        c.modem.chi = 32;
        c.sweep.rates_bps = {50e3, 200e3, 1e6};
        c.sweep.stop = {0, 400'000};
        c.channel.f_hp = 1e3;
        return c;
    }
    throw config_error("unknown preset: " + name + " (available: fig7, fig8, fig9, wander)");
}

inline std::vector<std::string> preset_names() { return {"fig7", "fig8", "fig9", "wander"}; }

} // namespace scap
