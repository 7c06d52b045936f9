#pragma once

// Sweep orchestration: one point = (format, rate, SNR, band run). Points are
// pure functions of the config and their coordinates, evaluated on a worker
// pool and merged in canonical order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "scap/channel.hpp"
#include "scap/config.hpp"
#include "scap/error.hpp"
#include "scap/filters.hpp"
#include "scap/metrics.hpp"
#include "scap/modems.hpp"
#include "scap/seeds.hpp"
#include "scap/spectral.hpp"

namespace scap {

/// Seed-derivation tags, first coordinate of every derived seed.
enum class SeedTag : std::uint64_t { payload = 1, noise = 2 };

inline std::size_t band_count_of(const ExperimentConfig& cfg, Format f)
{
    switch (f) {
    case Format::scap: return 4;
    case Format::mcap: return static_cast<std::size_t>(cfg.modem.mcap_subbands);
    case Format::ook: return 1;
    }
    return 0;
}

inline std::vector<int> levels_of(const ExperimentConfig& cfg, Format f)
{
    const auto it = cfg.modem.levels.find(f);
    if (it != cfg.modem.levels.end()) {
        detail::require(it->second.size() == band_count_of(cfg, f),
                        fmt::format("levels for {} must list one entry per sub-band", to_string(f)));
        return it->second;
    }
    return std::vector<int>(band_count_of(cfg, f), 2);
}

/// Modem configuration for a format at an aggregate gross bit rate.
inline ModemConfig modem_for(const ExperimentConfig& cfg, Format f, double rate_bps)
{
    const auto levels = levels_of(cfg, f);
    int total_bits = 0;
    for (int l : levels) {
        total_bits += (f == Format::mcap ? 2 : 1) * bits_per_level(l);
    }
    FilterSpec spec;
    spec.beta = cfg.modem.beta.at(f);
    spec.symbol_period = total_bits / rate_bps;
    spec.chi = cfg.modem.chi;
    spec.span = cfg.modem.span;
    std::shared_ptr<const FilterBank> bank;
    switch (f) {
    case Format::scap: bank = std::make_shared<const FilterBank>(make_scap_bank(spec, {cfg.modem.norm, false})); break;
    case Format::mcap: bank = std::make_shared<const FilterBank>(make_mcap_bank(spec, cfg.modem.mcap_subbands, cfg.modem.norm)); break;
    case Format::ook: bank = std::make_shared<const FilterBank>(make_ook_bank(spec, cfg.modem.norm)); break;
    }
    auto m = make_modem_config(f, bank, cfg.modem.training_len);
    m.symbol_rate = 1.0 / spec.symbol_period;
    m.levels_per_band = levels;
    m.sync = cfg.modem.sync;
    m.cpe = cfg.modem.cpe;
    m.validate();
    return m;
}

struct PointCoord {
    Format format = Format::scap;
    std::size_t rate_index = 0;
    std::size_t snr_index = 0;
    int band_run = -1; ///< -1: every band active; otherwise the single active band (isolated mode)
};

struct PointResult {
    PointCoord coord;
    double rate_bps = 0.0;
    double symbol_rate = 0.0;
    double snr_db = 0.0;
    std::vector<int> bits_per_symbol;  ///< per band
    std::vector<BerRecord> band_ber;   ///< per band; empty entries for silent bands
    BerRecord aggregate;
    int frames = 0;
    bool ok = false;
    std::string status = "pending"; ///< "ok", "config_error" or "runtime_failure"
    std::string message;
};

namespace detail {

inline std::uint64_t coord_key(const PointCoord& c)
{
    return static_cast<std::uint64_t>(c.band_run + 1);
}

struct FrameOutput {
    std::vector<BitStream> tx;
    DemodResult rx;
    SampledSignal received;
};

inline FrameOutput run_frame(const ExperimentConfig& cfg, const ModemConfig& modem, const PointCoord& c, double snr_db,
                             int frame, std::size_t symbols)
{
    FrameOutput out;
    const auto fmt_id = static_cast<std::uint64_t>(c.format);
    for (std::size_t b = 0; b < modem.band_count(); ++b) {
        if (!modem.band_active(b)) {
            out.tx.emplace_back();
            continue;
        }
        const auto seed = derive_seed(cfg.master_seed, {static_cast<std::uint64_t>(SeedTag::payload), fmt_id, c.rate_index,
                                                        c.snr_index, coord_key(c), static_cast<std::uint64_t>(frame), b});
        out.tx.push_back(prbs15(prbs15_seed_from(seed), symbols * static_cast<std::size_t>(modem.bits_per_symbol(b))));
    }
    ChannelConfig ch = cfg.channel;
    ch.snr_db = snr_db;
    ch.seed = derive_seed(cfg.master_seed, {static_cast<std::uint64_t>(SeedTag::noise), fmt_id, c.rate_index, c.snr_index,
                                            coord_key(c), static_cast<std::uint64_t>(frame)});
    out.received = apply_channel(modulate(out.tx, modem), ch);
    out.rx = demodulate(out.received, modem, symbols);
    return out;
}

} // namespace detail

/// Frames of cfg.modem.frame_symbols until the stop rule fires: at least
/// min_errors errors (if non-zero) or max_bits payload bits.
inline PointResult run_point(const ExperimentConfig& cfg, const PointCoord& c)
{
    PointResult res;
    res.coord = c;
    res.rate_bps = cfg.sweep.rates_bps.at(c.rate_index);
    res.snr_db = cfg.sweep.snr_db.at(c.snr_index);
    try {
        auto modem = modem_for(cfg, c.format, res.rate_bps);
        if (c.band_run >= 0) {
            modem.active_bands.assign(modem.band_count(), false);
            modem.active_bands.at(static_cast<std::size_t>(c.band_run)) = true;
        }
        res.symbol_rate = modem.symbol_rate;
        std::size_t active_bits_per_symbol = 0;
        for (std::size_t b = 0; b < modem.band_count(); ++b) {
            res.bits_per_symbol.push_back(modem.bits_per_symbol(b));
            if (modem.band_active(b)) {
                active_bits_per_symbol += static_cast<std::size_t>(modem.bits_per_symbol(b));
            }
        }
        std::vector<std::uint64_t> errors(modem.band_count(), 0);
        std::vector<std::uint64_t> sent(modem.band_count(), 0);
        std::uint64_t total_sent = 0;
        std::uint64_t total_errors = 0;
        const auto& stop = cfg.sweep.stop;
        while (total_sent < stop.max_bits && !(stop.min_errors > 0 && total_errors >= stop.min_errors)) {
            const std::uint64_t remaining = stop.max_bits - total_sent;
            const auto symbols = static_cast<std::size_t>(std::min<std::uint64_t>(
                static_cast<std::uint64_t>(cfg.modem.frame_symbols),
                (remaining + active_bits_per_symbol - 1) / active_bits_per_symbol));
            const auto frame = detail::run_frame(cfg, modem, c, res.snr_db, res.frames, symbols);
            for (std::size_t b = 0; b < modem.band_count(); ++b) {
                if (!modem.band_active(b)) {
                    continue;
                }
                const auto e = count_bit_errors(frame.tx[b].bits, frame.rx.band_bits[b].bits);
                errors[b] += e;
                sent[b] += frame.tx[b].size();
                total_errors += e;
                total_sent += frame.tx[b].size();
            }
            ++res.frames;
        }
        std::vector<BerRecord> active;
        for (std::size_t b = 0; b < modem.band_count(); ++b) {
            res.band_ber.push_back(make_ber_record(errors[b], sent[b]));
            if (modem.band_active(b)) {
                active.push_back(res.band_ber.back());
            }
        }
        res.aggregate = aggregate_ber(active);
        res.ok = true;
        res.status = "ok";
    } catch (const config_error& e) {
        res.status = "config_error";
        res.message = e.what();
    } catch (const std::exception& e) {
        res.status = "runtime_failure";
        res.message = e.what();
    }
    return res;
}

/// All point coordinates in canonical order: format, rate, SNR, band run.
inline std::vector<PointCoord> enumerate_points(const ExperimentConfig& cfg)
{
    std::vector<PointCoord> pts;
    for (auto f : cfg.formats) {
        for (std::size_t r = 0; r < cfg.sweep.rates_bps.size(); ++r) {
            for (std::size_t k = 0; k < cfg.sweep.snr_db.size(); ++k) {
                if (cfg.sweep.band_mode == BandMode::all_active) {
                    pts.push_back({f, r, k, -1});
                } else {
                    for (std::size_t b = 0; b < band_count_of(cfg, f); ++b) {
                        pts.push_back({f, r, k, static_cast<int>(b)});
                    }
                }
            }
        }
    }
    return pts;
}

struct RateSummary {
    std::string series; ///< e.g. "scap:all@13dB", "mcap:s2@13dB"
    double threshold = 0.0;
    double rate_gross = 0.0;
    double rate_net = 0.0;
    std::string status;
};

struct SweepResult {
    std::vector<PointResult> points; ///< canonical order
    std::vector<RateSummary> summary;

    [[nodiscard]] std::size_t failures() const
    {
        return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const auto& p) { return !p.ok; }));
    }
};

inline std::string snr_label(double snr)
{
    return std::isinf(snr) ? std::string("inf") : fmt::format("{}", snr);
}

inline std::string band_label(std::size_t band, BandMode mode)
{
    return mode == BandMode::all_active ? fmt::format("s{}", band + 1) : fmt::format("s{}:isolated", band + 1);
}

/// Fraction of transmitted symbols carrying payload.
inline double payload_fraction(const ExperimentConfig& cfg)
{
    const double f = cfg.modem.frame_symbols;
    return f / (f + cfg.modem.training_len);
}

/// Threshold crossings for every (format, SNR, series) curve.
inline std::vector<RateSummary> summarize(const ExperimentConfig& cfg, const std::vector<PointResult>& points)
{
    std::vector<RateSummary> out;
    const double net = payload_fraction(cfg);
    for (auto f : cfg.formats) {
        const std::size_t nb = band_count_of(cfg, f);
        for (std::size_t k = 0; k < cfg.sweep.snr_db.size(); ++k) {
            // series index nb = aggregate (all-active mode only)
            const std::size_t nseries = cfg.sweep.band_mode == BandMode::all_active ? nb + 1 : nb;
            for (std::size_t s = 0; s < nseries; ++s) {
                const bool aggregate = s == nb;
                const std::string label = aggregate ? "all" : band_label(s, cfg.sweep.band_mode);
                std::vector<RatePoint> series;
                bool failed = false;
                for (const auto& p : points) {
                    if (p.coord.format != f || p.coord.snr_index != k) {
                        continue;
                    }
                    if (cfg.sweep.band_mode == BandMode::isolated && p.coord.band_run != static_cast<int>(s)) {
                        continue;
                    }
                    if (!p.ok) {
                        failed = true;
                        continue;
                    }
                    const auto& rec = aggregate ? p.aggregate : p.band_ber[s];
                    const double rate = aggregate ? p.rate_bps : p.symbol_rate * p.bits_per_symbol[s];
                    series.push_back({rate, rec.ber, rec.bits_sent});
                }
                for (double th : cfg.sweep.thresholds) {
                    RateSummary r;
                    r.series = fmt::format("{}:{}@{}dB", to_string(f), label, snr_label(cfg.sweep.snr_db[k]));
                    r.threshold = th;
                    if (series.empty()) {
                        r.status = "no_data";
                    } else {
                        const auto a = achievable_rate(series, th);
                        r.rate_gross = a.rate;
                        r.rate_net = a.rate * net;
                        r.status = to_string(a.status);
                    }
                    if (failed) {
                        r.status += ";partial";
                    }
                    out.push_back(r);
                }
            }
        }
    }
    return out;
}

struct SweepOptions {
    int threads = 1; ///< 0 -> hardware concurrency
    std::optional<std::uint64_t> schedule_seed; ///< permute evaluation order (results unaffected)
    std::function<void(const PointResult&, std::size_t done, std::size_t total)> progress;
};

inline SweepResult run_sweep(const ExperimentConfig& cfg, const SweepOptions& opt = {})
{
    cfg.validate();
    const auto coords = enumerate_points(cfg);
    std::vector<std::size_t> schedule(coords.size());
    std::iota(schedule.begin(), schedule.end(), std::size_t{0});
    if (opt.schedule_seed) {
        std::mt19937_64 rng(*opt.schedule_seed);
        std::shuffle(schedule.begin(), schedule.end(), rng);
    }
    SweepResult res;
    res.points.resize(coords.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < schedule.size(); i = next++) {
            const auto idx = schedule[i];
            res.points[idx] = run_point(cfg, coords[idx]);
            const auto d = ++done;
            if (opt.progress) {
                std::lock_guard lock(progress_mutex);
                opt.progress(res.points[idx], d, coords.size());
            }
        }
    };
    int threads = opt.threads > 0 ? opt.threads : static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
    threads = std::min<int>(threads, static_cast<int>(std::max<std::size_t>(1, coords.size())));
    {
        std::vector<std::jthread> pool;
        for (int t = 1; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        worker();
    }
    res.summary = summarize(cfg, res.points);
    return res;
}

// ---------------------------------------------------------------- CSV

inline constexpr const char* points_csv_header =
    "format,subband,symbol_rate_hz,bits_per_symbol,snr_db,bits_sent,bit_errors,ber,ci_low,ci_high";
inline constexpr const char* summary_csv_header = "format,threshold,rate_bps_gross,rate_bps_net,status";
inline constexpr const char* failures_csv_header = "format,rate_bps,snr_db,subband,status,message";

namespace detail {

inline std::string csv_quote(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        out += c == '"' ? std::string("\"\"") : std::string(1, c);
    }
    return out + "\"";
}

inline void write_ber_row(std::ostream& os, const char* format, const std::string& subband, double symbol_rate,
                          int bps, double snr, const BerRecord& r)
{
    os << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", format, subband, symbol_rate, bps, snr_label(snr), r.bits_sent,
                      r.bit_errors, r.ber, r.ci_low, r.ci_high);
}

} // namespace detail

inline void write_points_csv(std::ostream& os, const ExperimentConfig& cfg, const SweepResult& res)
{
    os << points_csv_header << '\n';
    for (const auto& p : res.points) {
        if (!p.ok) {
            continue;
        }
        const char* f = to_string(p.coord.format);
        for (std::size_t b = 0; b < p.band_ber.size(); ++b) {
            if (p.coord.band_run >= 0 && static_cast<int>(b) != p.coord.band_run) {
                continue;
            }
            detail::write_ber_row(os, f, band_label(b, cfg.sweep.band_mode), p.symbol_rate, p.bits_per_symbol[b],
                                  p.snr_db, p.band_ber[b]);
        }
        if (p.coord.band_run < 0) {
            const int total = std::accumulate(p.bits_per_symbol.begin(), p.bits_per_symbol.end(), 0);
            detail::write_ber_row(os, f, "all", p.symbol_rate, total, p.snr_db, p.aggregate);
        }
    }
}

inline void write_summary_csv(std::ostream& os, const SweepResult& res)
{
    os << summary_csv_header << '\n';
    for (const auto& s : res.summary) {
        os << fmt::format("{},{},{},{},{}\n", s.series, s.threshold, s.rate_gross, s.rate_net, s.status);
    }
}

inline void write_failures_csv(std::ostream& os, const SweepResult& res)
{
    os << failures_csv_header << '\n';
    for (const auto& p : res.points) {
        if (p.ok) {
            continue;
        }
        os << fmt::format("{},{},{},{},{},{}\n", to_string(p.coord.format), p.rate_bps, snr_label(p.snr_db),
                          p.coord.band_run < 0 ? std::string("all") : fmt::format("s{}", p.coord.band_run + 1), p.status,
                          detail::csv_quote(p.message));
    }
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw runtime_failure("cannot open " + path.string() + " for writing");
    }
    return out;
}

} // namespace detail

/// PSD or eye CSV for one requested grid point (first frame only).
inline std::filesystem::path write_dump(const ExperimentConfig& cfg, const DumpRequest& d, const std::filesystem::path& dir)
{
    const PointCoord c{d.format, d.rate_index, d.snr_index, -1};
    const auto modem = modem_for(cfg, d.format, cfg.sweep.rates_bps.at(d.rate_index));
    const auto frame = detail::run_frame(cfg, modem, c, cfg.sweep.snr_db.at(d.snr_index), 0,
                                         static_cast<std::size_t>(cfg.modem.frame_symbols));
    const auto path = dir / fmt::format("dump_{}_{}_r{}_snr{}.csv", d.kind == DumpRequest::Kind::eye ? "eye" : "psd",
                                        to_string(d.format), d.rate_index, d.snr_index);
    auto out = detail::open_output(path);
    if (d.kind == DumpRequest::Kind::psd) {
        const auto s = psd(frame.received, static_cast<std::size_t>(d.psd_segment));
        out << "freq_hz,psd\n";
        for (std::size_t k = 0; k < s.psd.size(); ++k) {
            out << fmt::format("{},{}\n", s.freq_hz[k], s.psd[k]);
        }
    } else {
        const auto mf = matched_filter(frame.received.samples, modem.bank->taps[0]);
        const long offset = modem.bank->stagger_samples(0) + frame.rx.timing_offset;
        const auto traces = eye_data(mf, modem.samples_per_symbol(), offset);
        out << "trace,sample,value\n";
        for (std::size_t t = 0; t < traces.size(); ++t) {
            for (std::size_t i = 0; i < traces[t].size(); ++i) {
                out << fmt::format("{},{},{}\n", t, i, traces[t][i]);
            }
        }
    }
    return path;
}

/// Writes points, summary and failures CSVs (and dumps) under `dir`.
inline void write_sweep_outputs(const ExperimentConfig& cfg, const SweepResult& res, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    {
        auto out = detail::open_output(dir / cfg.outputs.points_csv);
        write_points_csv(out, cfg, res);
    }
    {
        auto out = detail::open_output(dir / cfg.outputs.summary_csv);
        write_summary_csv(out, res);
    }
    {
        auto out = detail::open_output(dir / cfg.outputs.failures_csv);
        write_failures_csv(out, res);
    }
    for (const auto& d : cfg.dumps) {
        write_dump(cfg, d, dir);
    }
}

} // namespace scap
