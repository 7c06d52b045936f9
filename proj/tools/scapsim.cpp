// scapsim: command-line front end for the modem, channel and sweep harness.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure,
// 3 sweep finished with failed points.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "scap/bank_io.hpp"
#include "scap/bits.hpp"
#include "scap/channel.hpp"
#include "scap/config.hpp"
#include "scap/harness.hpp"
#include "scap/metrics.hpp"
#include "scap/modems.hpp"
#include "scap/seeds.hpp"
#include "scap/spectral.hpp"
#include "scap/waveform_io.hpp"

namespace fs = std::filesystem;
using namespace scap;

namespace {

enum ExitCode : int { ok = 0, config_failure = 1, runtime_fault = 2, partial_sweep = 3 };

struct GlobalOptions {
    std::string config_path;
    std::string preset_name;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    int threads = 0;
};

ExperimentConfig resolve_config(const GlobalOptions& g)
{
    if (!g.config_path.empty() && !g.preset_name.empty()) {
        throw config_error("--config and --preset are mutually exclusive");
    }
    ExperimentConfig cfg = !g.config_path.empty() ? load_experiment(g.config_path)
                         : !g.preset_name.empty() ? preset(g.preset_name)
                                                  : preset("fig9");
    if (g.seed) {
        cfg.master_seed = *g.seed;
    }
    cfg.validate();
    return cfg;
}

fs::path out_path(const GlobalOptions& g, const std::string& name)
{
    fs::create_directories(g.out_dir);
    return fs::path(g.out_dir) / name;
}

std::vector<BitStream> prbs_payload(const ExperimentConfig& cfg, const ModemConfig& modem, std::size_t symbols)
{
    std::vector<BitStream> out;
    for (std::size_t b = 0; b < modem.band_count(); ++b) {
        const auto seed = derive_seed(cfg.master_seed, {static_cast<std::uint64_t>(SeedTag::payload),
                                                        static_cast<std::uint64_t>(modem.format), b});
        out.push_back(prbs15(prbs15_seed_from(seed), symbols * static_cast<std::size_t>(modem.bits_per_symbol(b))));
    }
    return out;
}

/// Splits a band-major bit file into per-band streams.
std::vector<BitStream> split_bits(const BitStream& all, const ModemConfig& modem)
{
    const auto per_symbol = static_cast<std::size_t>(modem.total_bits_per_symbol());
    if (all.empty() || all.size() % per_symbol != 0) {
        throw config_error(fmt::format("bit file holds {} bits, not a positive multiple of {} bits per symbol",
                                       all.size(), per_symbol));
    }
    const std::size_t symbols = all.size() / per_symbol;
    std::vector<BitStream> out;
    std::size_t pos = 0;
    for (std::size_t b = 0; b < modem.band_count(); ++b) {
        const std::size_t n = symbols * static_cast<std::size_t>(modem.bits_per_symbol(b));
        BitStream s;
        s.origin = BitOrigin::file;
        s.bits.assign(all.bits.begin() + static_cast<long>(pos), all.bits.begin() + static_cast<long>(pos + n));
        out.push_back(std::move(s));
        pos += n;
    }
    return out;
}

BitStream concat(const std::vector<BitStream>& bands)
{
    BitStream all;
    for (const auto& b : bands) {
        all.bits.insert(all.bits.end(), b.bits.begin(), b.bits.end());
    }
    return all;
}

void print_summary(const SweepResult& res)
{
    for (const auto& s : res.summary) {
        fmt::print("{:<28} threshold={:<8g} gross={:<12.6g} net={:<12.6g} {}\n", s.series, s.threshold, s.rate_gross,
                   s.rate_net, s.status);
    }
}

int cmd_gen_filters(const GlobalOptions& g, const std::string& format, std::optional<double> rate, std::string output)
{
    const auto cfg = resolve_config(g);
    const auto f = format_from_string(format);
    const auto modem = modem_for(cfg, f, rate.value_or(cfg.sweep.rates_bps.front()));
    if (output.empty()) {
        output = out_path(g, fmt::format("bank_{}.json", format)).string();
    }
    save_bank(*modem.bank, output);
    fmt::print("{}: {} branches x {} taps, n_ss={}, fs={:g} Hz\n", output, modem.bank->branch_count(),
               modem.bank->tap_count(), modem.samples_per_symbol(), modem.sample_rate());
    return ok;
}

struct ModulateArgs {
    std::string format;
    std::optional<double> rate;
    std::optional<std::size_t> symbols;
    std::string bits_path;
    std::optional<double> snr_db;
    std::string output;
};

int cmd_modulate(const GlobalOptions& g, const ModulateArgs& a)
{
    const auto cfg = resolve_config(g);
    const auto f = format_from_string(a.format);
    const auto modem = modem_for(cfg, f, a.rate.value_or(cfg.sweep.rates_bps.front()));
    const auto bands = a.bits_path.empty()
                           ? prbs_payload(cfg, modem, a.symbols.value_or(static_cast<std::size_t>(cfg.modem.frame_symbols)))
                           : split_bits(read_bit_file(a.bits_path), modem);
    auto sig = modulate(bands, modem);
    if (a.snr_db) {
        ChannelConfig ch = cfg.channel;
        ch.snr_db = *a.snr_db;
        ch.seed = derive_seed(cfg.master_seed, {static_cast<std::uint64_t>(SeedTag::noise), static_cast<std::uint64_t>(f)});
        sig = apply_channel(sig, ch);
    }
    const auto wave = a.output.empty() ? out_path(g, fmt::format("tx_{}.f32", a.format)).string() : a.output;
    export_waveform(sig, wave, a.format, modem.training_len);
    const auto bits_file = wave + ".bits";
    write_bit_file(bits_file, concat(bands));
    fmt::print("{}: {} samples at {:g} Hz; payload bits in {}\n", wave, sig.size(), sig.sample_rate, bits_file);
    return ok;
}

int cmd_demodulate(const GlobalOptions& g, const std::string& input, const std::string& reference, std::string output)
{
    auto cfg = resolve_config(g);
    WaveformMeta meta;
    const auto sig = import_waveform(input, &meta);
    const auto f = format_from_string(meta.format);
    cfg.modem.training_len = meta.training_len;
    // The bit rate follows from the sample rate: fs / n_ss symbols per second.
    const auto probe = modem_for(cfg, f, 1.0);
    const double rate = sig.sample_rate / probe.samples_per_symbol() * probe.total_bits_per_symbol();
    const auto modem = modem_for(cfg, f, rate);
    if (!meta.cfg_digest.empty() && meta.cfg_digest != modem.digest()) {
        throw config_error(fmt::format("waveform was produced by a different modem configuration (digest {} vs {})",
                                       meta.cfg_digest, modem.digest()));
    }
    const auto res = demodulate(sig, modem);
    if (output.empty()) {
        output = out_path(g, fmt::format("rx_{}.bits", meta.format)).string();
    }
    write_bit_file(output, res.bits);
    fmt::print("{}: {} bits, timing offset {} samples\n", output, res.bits.size(), res.timing_offset);
    if (!reference.empty()) {
        const auto ref = split_bits(read_bit_file(reference), modem);
        std::vector<BerRecord> records;
        for (std::size_t b = 0; b < ref.size(); ++b) {
            records.push_back(ber(ref[b], res.band_bits[b]));
            const auto& r = records.back();
            fmt::print("s{} bits={} errors={} ber={:.3e} ci=[{:.3e}, {:.3e}]\n", b + 1, r.bits_sent, r.bit_errors, r.ber,
                       r.ci_low, r.ci_high);
        }
        const auto all = aggregate_ber(records);
        fmt::print("all bits={} errors={} ber={:.3e} ci=[{:.3e}, {:.3e}]\n", all.bits_sent, all.bit_errors, all.ber,
                   all.ci_low, all.ci_high);
    }
    return ok;
}

int cmd_simulate(const GlobalOptions& g, const std::string& format, std::optional<double> rate,
                 std::optional<double> snr, int band)
{
    auto cfg = resolve_config(g);
    const auto f = format_from_string(format);
    cfg.formats = {f};
    cfg.sweep.rates_bps = {rate.value_or(cfg.sweep.rates_bps.front())};
    cfg.sweep.snr_db = {snr.value_or(cfg.sweep.snr_db.front())};
    if (band > 0) {
        cfg.sweep.band_mode = BandMode::isolated;
    }
    const auto p = run_point(cfg, {f, 0, 0, band > 0 ? band - 1 : -1});
    if (!p.ok) {
        throw runtime_failure(fmt::format("{}: {}", p.status, p.message));
    }
    SweepResult res;
    res.points = {p};
    write_points_csv(std::cout, cfg, res);
    return ok;
}

int cmd_sweep(const GlobalOptions& g, bool quiet, std::optional<std::uint64_t> schedule_seed)
{
    const auto cfg = resolve_config(g);
    SweepOptions opt;
    opt.threads = g.threads;
    opt.schedule_seed = schedule_seed;
    if (!quiet) {
        opt.progress = [](const PointResult& p, std::size_t done, std::size_t total) {
            fmt::print(stderr, "[{}/{}] {} {:g} b/s {} dB: {}\n", done, total, to_string(p.coord.format), p.rate_bps,
                       snr_label(p.snr_db), p.ok ? fmt::format("ber={:.3e}", p.aggregate.ber) : p.status);
        };
    }
    const auto res = run_sweep(cfg, opt);
    write_sweep_outputs(cfg, res, g.out_dir);
    print_summary(res);
    if (res.failures() > 0) {
        fmt::print(stderr, "{} of {} points failed; see {}\n", res.failures(), res.points.size(),
                   (fs::path(g.out_dir) / cfg.outputs.failures_csv).string());
        return partial_sweep;
    }
    return ok;
}

struct DumpArgs {
    std::string format = "scap";
    std::size_t rate_index = 0;
    std::size_t snr_index = 0;
    std::size_t segment = 1024;
    std::string input;
};

int cmd_dump(const GlobalOptions& g, DumpRequest::Kind kind, const DumpArgs& a)
{
    if (kind == DumpRequest::Kind::psd && !a.input.empty()) {
        const auto sig = import_waveform(a.input);
        const auto s = psd(sig, a.segment);
        const auto path = out_path(g, fs::path(a.input).filename().string() + ".psd.csv");
        auto out = detail::open_output(path);
        out << "freq_hz,psd\n";
        for (std::size_t k = 0; k < s.psd.size(); ++k) {
            fmt::print(out, "{},{}\n", s.freq_hz[k], s.psd[k]);
        }
        fmt::print("{}\n", path.string());
        return ok;
    }
    const auto cfg = resolve_config(g);
    DumpRequest d;
    d.kind = kind;
    d.format = format_from_string(a.format);
    d.rate_index = a.rate_index;
    d.snr_index = a.snr_index;
    d.psd_segment = a.segment;
    if (d.rate_index >= cfg.sweep.rates_bps.size() || d.snr_index >= cfg.sweep.snr_db.size()) {
        throw config_error("dump grid index out of range");
    }
    fs::create_directories(g.out_dir);
    fmt::print("{}\n", write_dump(cfg, d, g.out_dir).string());
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"sCAP / m-CAP / OOK modem and PLED-VLC link simulator"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    std::uint64_t seed = 0;
    app.add_option("--config", g.config_path, "Experiment JSON file")->check(CLI::ExistingFile);
    app.add_option("--preset", g.preset_name, "Named experiment: fig7, fig8, fig9, wander");
    auto* seed_opt = app.add_option("--seed", seed, "Override the master seed");
    app.add_option("--out-dir", g.out_dir, "Directory for output files")->capture_default_str();
    app.add_option("--threads", g.threads, "Sweep workers; 0 uses every core")->capture_default_str();

    std::function<int()> action;

    auto* gen = app.add_subcommand("gen-filters", "Write a filter bank as JSON");
    std::string gen_format = "scap";
    std::optional<double> gen_rate;
    std::string gen_output;
    gen->add_option("--format", gen_format, "scap, mcap or ook")->capture_default_str();
    gen->add_option("--rate-bps", gen_rate, "Aggregate bit rate (default: first grid rate)");
    gen->add_option("-o,--output", gen_output, "Output path");
    gen->callback([&] { action = [&] { return cmd_gen_filters(g, gen_format, gen_rate, gen_output); }; });

    auto* mod = app.add_subcommand("modulate", "Write a transmit waveform and its payload bits");
    ModulateArgs mod_args;
    mod_args.format = "scap";
    mod->add_option("--format", mod_args.format, "scap, mcap or ook")->capture_default_str();
    mod->add_option("--rate-bps", mod_args.rate, "Aggregate bit rate (default: first grid rate)");
    mod->add_option("--symbols", mod_args.symbols, "Payload symbols per branch for PRBS payloads");
    mod->add_option("--bits", mod_args.bits_path, "Band-major payload bit file instead of PRBS")->check(CLI::ExistingFile);
    mod->add_option("--snr-db", mod_args.snr_db, "Pass through the configured channel at this SNR");
    mod->add_option("-o,--output", mod_args.output, "Waveform path");
    mod->callback([&] { action = [&] { return cmd_modulate(g, mod_args); }; });

    auto* demod = app.add_subcommand("demodulate", "Recover bits from a waveform file");
    std::string demod_input;
    std::string demod_reference;
    std::string demod_output;
    demod->add_option("-i,--input", demod_input, "Waveform path")->required()->check(CLI::ExistingFile);
    demod->add_option("--reference", demod_reference, "Transmitted bit file; prints BER")->check(CLI::ExistingFile);
    demod->add_option("-o,--output", demod_output, "Recovered bit file");
    demod->callback([&] { action = [&] { return cmd_demodulate(g, demod_input, demod_reference, demod_output); }; });

    auto* sim = app.add_subcommand("simulate", "Run one BER point and print its CSV rows");
    std::string sim_format = "scap";
    std::optional<double> sim_rate;
    std::optional<double> sim_snr;
    int sim_band = 0;
    sim->add_option("--format", sim_format, "scap, mcap or ook")->capture_default_str();
    sim->add_option("--rate-bps", sim_rate, "Aggregate bit rate (default: first grid rate)");
    sim->add_option("--snr-db", sim_snr, "Per-sample SNR (default: first grid SNR)");
    sim->add_option("--band", sim_band, "Run only this 1-based sub-band; 0 runs all")->check(CLI::NonNegativeNumber);
    sim->callback([&] { action = [&] { return cmd_simulate(g, sim_format, sim_rate, sim_snr, sim_band); }; });

    auto* sweep = app.add_subcommand("sweep", "Run the configured grid and write CSV outputs");
    bool quiet = false;
    std::optional<std::uint64_t> schedule_seed;
    sweep->add_flag("-q,--quiet", quiet, "No per-point progress");
    sweep->add_option("--schedule-seed", schedule_seed, "Shuffle evaluation order (outputs unchanged)");
    sweep->callback([&] { action = [&] { return cmd_sweep(g, quiet, schedule_seed); }; });

    DumpArgs psd_args;
    auto* psd_cmd = app.add_subcommand("psd", "Welch PSD of a waveform file or of one grid point");
    psd_cmd->add_option("-i,--input", psd_args.input, "Waveform path")->check(CLI::ExistingFile);
    psd_cmd->add_option("--format", psd_args.format, "Grid point format")->capture_default_str();
    psd_cmd->add_option("--rate-index", psd_args.rate_index, "Grid rate index")->capture_default_str();
    psd_cmd->add_option("--snr-index", psd_args.snr_index, "Grid SNR index")->capture_default_str();
    psd_cmd->add_option("--segment", psd_args.segment, "Welch segment length")->capture_default_str();
    psd_cmd->callback([&] { action = [&] { return cmd_dump(g, DumpRequest::Kind::psd, psd_args); }; });

    DumpArgs eye_args;
    auto* eye_cmd = app.add_subcommand("eye", "Eye traces of sub-band 1 at one grid point");
    eye_cmd->add_option("--format", eye_args.format, "Grid point format")->capture_default_str();
    eye_cmd->add_option("--rate-index", eye_args.rate_index, "Grid rate index")->capture_default_str();
    eye_cmd->add_option("--snr-index", eye_args.snr_index, "Grid SNR index")->capture_default_str();
    eye_cmd->callback([&] { action = [&] { return cmd_dump(g, DumpRequest::Kind::eye, eye_args); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : config_failure;
    }
    if (seed_opt->count() > 0) {
        g.seed = seed;
    }

    try {
        return action();
    } catch (const config_error& e) {
        fmt::print(stderr, "configuration error: {}\n", e.what());
        return config_failure;
    } catch (const std::exception& e) {
        fmt::print(stderr, "runtime failure: {}\n", e.what());
        return runtime_fault;
    }
}
