// Acceptance checks. One PASS/FAIL line per criterion; exits non-zero if any
// selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "scap/bits.hpp"
#include "scap/channel.hpp"
#include "scap/config.hpp"
#include "scap/filters.hpp"
#include "scap/harness.hpp"
#include "scap/metrics.hpp"
#include "scap/modems.hpp"

namespace fs = std::filesystem;
using namespace scap;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_s; ///< wall-clock limit; infinity when none is set
    std::function<Outcome(const fs::path&)> run;
};

constexpr double no_budget = std::numeric_limits<double>::infinity();

// ------------------------------------------------------------ 1
Outcome orthogonality(const fs::path&)
{
    FilterSpec spec;
    spec.beta = 1.0;
    spec.chi = 4;
    spec.span = 16;
    const auto bank = make_scap_bank(spec);
    const auto with = orthogonality_residual(bank);
    const double worst = max_cross_residual_db(with);
    double isi = 0.0;
    for (const auto& taps : bank.taps) {
        isi = std::max(isi, matched_cascade_isi(taps, bank.samples_per_symbol()));
    }
    const std::vector<int> none(bank.branch_count(), 0);
    const auto without = orthogonality_residual(bank, none);
    const double staggered = branch_crosstalk_db(with, 1);
    const double unstaggered = branch_crosstalk_db(without, 1);
    const bool pass = worst <= -40.0 && isi <= 1e-3 && unstaggered - staggered >= 20.0;
    return {pass, fmt::format("worst cross residual {:.1f} dB, ISI {:.2e} of peak, f1 crosstalk {:.1f} dB staggered "
                              "vs {:.1f} dB unstaggered",
                              worst, isi, staggered, unstaggered)};
}

// ------------------------------------------------------------ 2
Outcome loopback(const fs::path&)
{
    constexpr std::size_t target_bits = 100'000;
    std::string detail;
    bool pass = true;
    for (auto f : {Format::scap, Format::mcap, Format::ook}) {
        FilterSpec spec;
        spec.symbol_period = 1e-6;
        std::shared_ptr<const FilterBank> bank;
        switch (f) {
        case Format::scap: bank = std::make_shared<const FilterBank>(make_scap_bank(spec)); break;
        case Format::mcap:
            spec.beta = 0.1;
            bank = std::make_shared<const FilterBank>(make_mcap_bank(spec, 4));
            break;
        case Format::ook: bank = std::make_shared<const FilterBank>(make_ook_bank(spec)); break;
        }
        const auto cfg = make_modem_config(f, bank, 512);
        const auto symbols = target_bits / static_cast<std::size_t>(cfg.total_bits_per_symbol());
        std::vector<BitStream> bands;
        BitStream sent;
        for (std::size_t b = 0; b < cfg.band_count(); ++b) {
            bands.push_back(prbs15(static_cast<std::uint32_t>(11 + b), symbols * static_cast<std::size_t>(cfg.bits_per_symbol(b))));
            sent.bits.insert(sent.bits.end(), bands.back().bits.begin(), bands.back().bits.end());
        }
        const auto r = ber(sent, demodulate(modulate(bands, cfg), cfg, symbols).bits);
        pass = pass && r.bit_errors == 0 && r.bits_sent >= target_bits;
        detail += fmt::format("{}{} {}/{}", detail.empty() ? "" : ", ", to_string(f), r.bit_errors, r.bits_sent);
    }
    return {pass, "errors/bits: " + detail};
}

// ------------------------------------------------------------ 3
Outcome awgn_calibration(const fs::path&)
{
    // Antipodal RRC 2-PAM on sub-band 1 of the sCAP modem, every other band
    // silent. Per-sample SNR = Eb/N0 - 10 log10(n_ss / 2).
    constexpr std::size_t bits = 1'000'000;
    FilterSpec spec;
    spec.symbol_period = 1e-6;
    auto cfg = make_modem_config(Format::scap, std::make_shared<const FilterBank>(make_scap_bank(spec)), 512);
    cfg.active_bands = {true, false, false, false};
    std::vector<BitStream> bands(4);
    bands[0] = prbs15(0x1234, bits);
    const auto tx = modulate(bands, cfg);
    const int nss = cfg.samples_per_symbol();
    bool pass = true;
    std::string detail;
    for (double ebn0 : {4.0, 5.0, 6.0, 7.0, 8.0}) {
        const double snr = ebn0 - 10.0 * std::log10(nss / 2.0);
        const auto rx = awgn(tx, snr, derive_seed(7, {static_cast<std::uint64_t>(ebn0)}));
        const auto r = ber(bands[0], demodulate(rx, cfg, bits).band_bits[0]);
        const double offset = bpsk_ebn0_db_for(r.ber) - ebn0;
        pass = pass && r.bit_errors > 0 && std::abs(offset) <= 0.5;
        detail += fmt::format("{}{:g} dB: {:.3e} vs {:.3e} ({:+.2f} dB)", detail.empty() ? "" : "; ", ebn0, r.ber,
                              bpsk_ber(ebn0), offset);
    }
    return {pass, detail};
}

// ------------------------------------------------------------ 4
double rate_or_bound(const RateSummary& s)
{
    if (s.status.rfind("not_reached_above", 0) == 0) {
        return std::numeric_limits<double>::infinity();
    }
    if (s.status.rfind("not_reached_below", 0) == 0) {
        return 0.0;
    }
    return s.rate_gross;
}

/// Sub-band ranking at the FEC threshold: higher achievable rate is better;
/// ties (both beyond the grid) fall back to the BER at the top grid rate.
struct BandScore {
    double rate;
    double top_ber;
    bool better_than(const BandScore& o) const { return rate != o.rate ? rate > o.rate : top_ber < o.top_ber; }
};

std::vector<BandScore> band_scores(const ExperimentConfig& cfg, const SweepResult& res, Format f)
{
    const auto nb = band_count_of(cfg, f);
    const std::size_t top = cfg.sweep.rates_bps.size() - 1;
    std::vector<BandScore> out(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        const auto series = fmt::format("{}:{}@{}dB", to_string(f), band_label(b, cfg.sweep.band_mode),
                                        snr_label(cfg.sweep.snr_db[0]));
        for (const auto& s : res.summary) {
            if (s.series == series && s.threshold == fec_threshold) {
                out[b].rate = rate_or_bound(s);
            }
        }
        for (const auto& p : res.points) {
            if (p.coord.format == f && p.coord.rate_index == top) {
                out[b].top_ber = p.band_ber[b].ber;
            }
        }
    }
    return out;
}

const RateSummary& aggregate_summary(const ExperimentConfig& cfg, const SweepResult& res, Format f)
{
    const auto series = fmt::format("{}:all@{}dB", to_string(f), snr_label(cfg.sweep.snr_db[0]));
    for (const auto& s : res.summary) {
        if (s.series == series && s.threshold == fec_threshold) {
            return s;
        }
    }
    throw runtime_failure("missing summary series " + series);
}

std::string describe(const std::vector<BandScore>& v)
{
    std::string out;
    for (std::size_t b = 0; b < v.size(); ++b) {
        out += fmt::format("{}s{}={}", b ? " " : "", b + 1,
                           std::isinf(v[b].rate) ? fmt::format(">grid(top BER {:.1e})", v[b].top_ber)
                                                 : fmt::format("{:.3g}", v[b].rate));
    }
    return out;
}

Outcome rate_ordering(const fs::path& work)
{
    const auto cfg = preset("fig9");
    SweepOptions opt;
    opt.threads = 0;
    const auto res = run_sweep(cfg, opt);
    write_sweep_outputs(cfg, res, work / "fig9");
    if (res.failures() > 0) {
        return {false, fmt::format("{} grid points failed", res.failures())};
    }

    const auto scap = band_scores(cfg, res, Format::scap);
    bool a = true;
    for (std::size_t b = 1; b < scap.size(); ++b) {
        a = a && scap[0].better_than(scap[b]);
    }
    for (std::size_t b = 0; b + 1 < scap.size(); ++b) {
        a = a && scap[b].better_than(scap.back());
    }

    const auto mcap = band_scores(cfg, res, Format::mcap);
    bool b_ok = true;
    for (std::size_t b = 0; b + 1 < mcap.size(); ++b) {
        b_ok = b_ok && mcap[b].better_than(mcap[b + 1]);
    }

    const auto& s_all = aggregate_summary(cfg, res, Format::scap);
    const auto& m_all = aggregate_summary(cfg, res, Format::mcap);
    const auto& o_all = aggregate_summary(cfg, res, Format::ook);
    const bool reached = s_all.status == "reached" && m_all.status == "reached" && o_all.status == "reached";
    const double ratio = s_all.rate_gross / m_all.rate_gross;
    const bool c = reached && ratio >= 1.15;
    const bool d = reached && s_all.rate_gross > o_all.rate_gross;

    return {a && b_ok && c && d,
            fmt::format("SNR {} dB; (a) {} sCAP {}; (b) {} 4-CAP {}; (c) {} sCAP/4-CAP = {:.3g}/{:.3g} Mb/s = {:.2f}; "
                        "(d) {} OOK {:.3g} Mb/s",
                        snr_label(cfg.sweep.snr_db[0]), a ? "ok" : "FAIL", describe(scap), b_ok ? "ok" : "FAIL",
                        describe(mcap), c ? "ok" : "FAIL", s_all.rate_gross / 1e6, m_all.rate_gross / 1e6, ratio,
                        d ? "ok" : "FAIL", o_all.rate_gross / 1e6)};
}

// ------------------------------------------------------------ 5
Outcome baseline_wander(const fs::path& work)
{
    auto ac = preset("wander");
    auto dc = ac;
    dc.channel.f_hp = 0.0;
    SweepOptions opt;
    opt.threads = 0;
    const auto with = run_sweep(ac, opt);
    const auto without = run_sweep(dc, opt);
    write_sweep_outputs(ac, with, work / "wander_ac");
    write_sweep_outputs(dc, without, work / "wander_dc");
    if (with.failures() + without.failures() > 0) {
        return {false, "grid points failed"};
    }
    const auto& lo_ac = with.points.front().band_ber[0];
    const auto& lo_dc = without.points.front().band_ber[0];
    const auto& hi_ac = with.points.back().band_ber[0];
    const auto& hi_dc = without.points.back().band_ber[0];
    // A zero-error baseline counts as one error for the ratio.
    const double floor_dc = std::max(lo_dc.ber, 1.0 / static_cast<double>(lo_dc.bits_sent));
    const bool raised = lo_ac.ber >= 10.0 * floor_dc;
    const bool within_noise = hi_ac.ci_low <= hi_dc.ci_high && hi_dc.ci_low <= hi_ac.ci_high;
    return {raised && within_noise,
            fmt::format("s1 at {:g} b/s: {:.2e} with DC block vs {:.2e} without (floor {:.1e}); at {:g} b/s: "
                        "[{:.1e}, {:.1e}] vs [{:.1e}, {:.1e}]",
                        with.points.front().rate_bps, lo_ac.ber, lo_dc.ber, floor_dc, with.points.back().rate_bps,
                        hi_ac.ci_low, hi_ac.ci_high, hi_dc.ci_low, hi_dc.ci_high)};
}

// ------------------------------------------------------------ 6
std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism(const fs::path& work)
{
    const auto cfg = preset("fig9");
    struct Run {
        const char* dir;
        int threads;
        std::optional<std::uint64_t> schedule;
    };
    const unsigned hw = std::max(2U, std::thread::hardware_concurrency());
    const std::vector<Run> runs{{"det_a", 1, std::nullopt}, {"det_b", 1, std::nullopt},
                                {"det_c", static_cast<int>(hw), 0xC0FFEE}};
    for (const auto& r : runs) {
        SweepOptions opt;
        opt.threads = r.threads;
        opt.schedule_seed = r.schedule;
        write_sweep_outputs(cfg, run_sweep(cfg, opt), work / r.dir);
    }
    bool same = true;
    std::string detail;
    for (const auto& file : {cfg.outputs.points_csv, cfg.outputs.summary_csv, cfg.outputs.failures_csv}) {
        const auto ref = slurp(work / runs[0].dir / file);
        for (std::size_t i = 1; i < runs.size(); ++i) {
            const bool eq = !ref.empty() && ref == slurp(work / runs[i].dir / file);
            same = same && eq;
            if (!eq) {
                detail += fmt::format(" {} differs in {}", file, runs[i].dir);
            }
        }
    }
    return {same, fmt::format("3 fig9 runs (1, 1 and {} workers, last shuffled):{}", hw,
                              same ? " points/summary/failures CSV byte-identical" : detail)};
}

// ------------------------------------------------------------ 7
double rrc_direct(double x, double beta)
{
    const double pi = std::numbers::pi;
    const double q = 4.0 * beta * x;
    return (std::sin(pi * x * (1.0 - beta)) + q * std::cos(pi * x * (1.0 + beta))) / (pi * x * (1.0 - q * q));
}

double eps_limit(double x0, double beta)
{
    constexpr double eps = 1e-6;
    return 0.5 * (rrc_direct(x0 - eps, beta) + rrc_direct(x0 + eps, beta));
}

Outcome rrc_numerics(const fs::path&)
{
    double worst = 0.0;
    for (double beta : {0.1, 0.25, 0.5, 1.0}) {
        FilterSpec spec;
        spec.beta = beta;
        const auto taps = make_rrc(spec);
        const auto grid = tap_grid(spec);
        const double nss = spec.samples_per_symbol();
        const double x0 = 1.0 / (4.0 * beta);
        for (std::size_t i = 0; i < taps.size(); ++i) {
            const double x = static_cast<double>(grid[i]) / nss;
            if (grid[i] == 0) {
                worst = std::max(worst, std::abs(taps[i] - eps_limit(0.0, beta)));
            } else if (std::abs(std::abs(x) - x0) < 1e-12) {
                worst = std::max(worst, std::abs(taps[i] - eps_limit(x0, beta)));
            }
        }
    }
    FilterSpec unity;
    unity.beta = 1.0;
    const auto f0 = make_rrc(unity);
    const double peak = f0[f0.size() / 2];
    const double peak_err = std::abs(peak - 4.0 / std::numbers::pi);
    return {worst <= 1e-6 && peak_err <= 1e-9,
            fmt::format("max singular-point deviation {:.2e}; f0(0) - 4/pi = {:.1e}", worst, peak_err)};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance checks"};
    int only = 0;
    std::string work_dir = "acceptance_work";
    app.add_option("--criterion", only, "Run one criterion (1-7); 0 runs all")->check(CLI::Range(0, 7));
    app.add_option("--work-dir", work_dir, "Scratch directory for sweep outputs");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria{
        {1, "orthogonality", 5.0, orthogonality},
        {2, "loopback", 10.0, loopback},
        {3, "awgn_calibration", 120.0, awgn_calibration},
        {4, "rate_ordering", 900.0, rate_ordering},
        {5, "baseline_wander", 120.0, baseline_wander},
        {6, "determinism", no_budget, determinism},
        {7, "rrc_numerics", no_budget, rrc_numerics},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        if (only != 0 && c.id != only) {
            continue;
        }
        const fs::path work = fs::path(work_dir) / fmt::format("criterion{}", c.id);
        fs::create_directories(work);
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run(work);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_budget = elapsed <= c.budget_s;
        const bool pass = o.pass && in_budget;
        failed += pass ? 0 : 1;
        fmt::print("{} criterion {} {}: {} [{:.1f} s{}]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail, elapsed,
                   std::isinf(c.budget_s) ? "" : fmt::format(" of {:g} s", c.budget_s));
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
