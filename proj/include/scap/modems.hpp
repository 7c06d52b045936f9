#pragma once

// sCAP, m-CAP and OOK transmit/receive chains.
//
// Transmit: map -> prepend training -> zero-pad upsample -> pulse shape ->
// per-branch T/2 stagger -> sum -> unit average power.
// Receive: matched filter per branch, sampled at each branch's own instant
// (so a single timing phase serves every branch), CPE/gain correction from
// the training prefix, de-mapping.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "scap/bits.hpp"
#include "scap/cpe.hpp"
#include "scap/error.hpp"
#include "scap/filters.hpp"
#include "scap/pam.hpp"
#include "scap/seeds.hpp"
#include "scap/signal.hpp"

namespace scap {

enum class Format { scap, mcap, ook };

/// analytic: sample at the known transmit/receive filter delay plus
/// ModemConfig::timing_offset. training: for each CPE group, search the offset
/// that maximises the correlation of its matched-filter outputs with the
/// training prefix.
enum class SyncMode { analytic, training };

inline const char* to_string(Format f)
{
    switch (f) {
    case Format::scap: return "scap";
    case Format::mcap: return "mcap";
    case Format::ook: return "ook";
    }
    return "?";
}

inline Format format_from_string(const std::string& s)
{
    if (s == "scap") return Format::scap;
    if (s == "mcap") return Format::mcap;
    if (s == "ook") return Format::ook;
    throw config_error("unknown modulation format: " + s);
}

struct ModemConfig {
    Format format = Format::scap;
    std::vector<int> levels_per_band;  ///< PAM alphabet size per sub-band (per dimension for m-CAP)
    double symbol_rate = 1.0;          ///< 1/T, hertz
    int training_len = 512;            ///< known symbols per branch, excluded from BER
    std::shared_ptr<const FilterBank> bank;
    std::vector<int> stagger;          ///< per branch, units of T/2
    bool cpe = true;
    SyncMode sync = SyncMode::analytic;
    int sync_radius = -1;              ///< samples searched either side; -1 -> n_ss/2
    int timing_offset = 0;             ///< extra analytic delay, samples
    std::uint64_t training_seed = 0x5CA9;
    /// Empty: every sub-band carries data. Otherwise one flag per sub-band;
    /// silent sub-bands transmit zeros (training included).
    std::vector<bool> active_bands;

    [[nodiscard]] bool band_active(std::size_t band) const
    {
        return active_bands.empty() || active_bands.at(band);
    }

    [[nodiscard]] int samples_per_symbol() const { return bank->samples_per_symbol(); }
    [[nodiscard]] double sample_rate() const { return symbol_rate * samples_per_symbol(); }

    [[nodiscard]] std::size_t band_count() const
    {
        return format == Format::mcap ? bank->branch_count() / 2 : bank->branch_count();
    }

    /// Bits carried by one symbol period of sub-band s (0-based).
    [[nodiscard]] int bits_per_symbol(std::size_t band) const
    {
        const int k = bits_per_level(levels_per_band.at(band));
        return format == Format::mcap ? 2 * k : k;
    }

    [[nodiscard]] int total_bits_per_symbol() const
    {
        int total = 0;
        for (std::size_t s = 0; s < band_count(); ++s) {
            total += bits_per_symbol(s);
        }
        return total;
    }

    void validate() const
    {
        detail::require(bank != nullptr, "modem config has no filter bank");
        detail::require(symbol_rate > 0.0 && std::isfinite(symbol_rate), "symbol rate must be positive");
        detail::require(std::abs(bank->spec.symbol_period * symbol_rate - 1.0) < 1e-9,
                        "filter bank symbol period does not match the symbol rate");
        detail::require(training_len >= 0, "training length must be >= 0");
        detail::require(stagger.size() == bank->branch_count(), "stagger map size mismatch");
        for (int s : stagger) {
            detail::require(s == 0 || s == 1, "stagger entries must be 0 or T/2");
        }
        if (std::any_of(stagger.begin(), stagger.end(), [](int s) { return s != 0; })) {
            detail::require(samples_per_symbol() % 2 == 0, "T/2 stagger needs an even n_ss");
        }
        detail::require(levels_per_band.size() == band_count(), "levels_per_band size mismatch");
        if (!active_bands.empty()) {
            detail::require(active_bands.size() == band_count(), "active_bands size mismatch");
            detail::require(std::any_of(active_bands.begin(), active_bands.end(), [](bool a) { return a; }),
                            "at least one sub-band must be active");
        }
        for (int l : levels_per_band) {
            bits_per_level(l);
        }
        switch (format) {
        case Format::scap:
            detail::require(bank->kind == BankKind::scap && bank->branch_count() == 4, "sCAP needs the 4-branch sCAP bank");
            break;
        case Format::mcap:
            detail::require(bank->kind == BankKind::mcap && bank->branch_count() % 2 == 0, "m-CAP needs an m-CAP bank");
            break;
        case Format::ook:
            detail::require(bank->kind == BankKind::ook && bank->branch_count() == 1, "OOK needs a single pulse");
            detail::require(levels_per_band[0] == 2, "OOK is binary");
            break;
        }
    }

    /// Digest of everything that shapes the waveform.
    [[nodiscard]] std::string digest() const
    {
        return digest_hex(fmt::format("{}|{}|{:.17g}|{}|{:.17g}|{}|{}|{}|{}|{}|{}", to_string(format),
                                      fmt::join(levels_per_band, ","), symbol_rate, training_len, bank->spec.beta,
                                      bank->spec.chi, bank->spec.span, to_string(bank->norm_mode),
                                      fmt::join(stagger, ","), training_seed, fmt::join(active_bands, ",")));
    }
};

/// Modem configuration with the bank's calibrated stagger map and binary
/// signalling on every band.
inline ModemConfig make_modem_config(Format format, std::shared_ptr<const FilterBank> bank, int training_len = 512)
{
    ModemConfig cfg;
    cfg.format = format;
    cfg.symbol_rate = 1.0 / bank->spec.symbol_period;
    cfg.training_len = training_len;
    cfg.stagger = bank->stagger;
    cfg.bank = std::move(bank);
    cfg.levels_per_band.assign(cfg.band_count(), 2);
    return cfg;
}

/// Branches corrected together (a Hilbert pair) or alone.
struct BranchGroup {
    int first = 0;
    int second = -1; ///< quadrature branch, -1 for a real branch
};

inline std::vector<BranchGroup> cpe_groups(const ModemConfig& cfg)
{
    switch (cfg.format) {
    case Format::scap: return {{0, -1}, {1, 2}, {3, -1}};
    case Format::mcap: {
        std::vector<BranchGroup> g;
        for (std::size_t s = 0; s < cfg.band_count(); ++s) {
            g.push_back({static_cast<int>(2 * s), static_cast<int>(2 * s + 1)});
        }
        return g;
    }
    case Format::ook: return {{0, -1}};
    }
    return {};
}

/// Per-branch symbol sequences for one sub-band's bits.
namespace detail {

inline std::vector<std::vector<double>> band_to_branches(const ModemConfig& cfg, std::size_t band,
                                                         std::span<const std::uint8_t> bits)
{
    const int levels = cfg.levels_per_band[band];
    switch (cfg.format) {
    case Format::scap: return {pam_map(bits, levels)};
    case Format::ook: return {ook_map(bits)};
    case Format::mcap: {
        const auto k = static_cast<std::size_t>(bits_per_level(levels));
        require(bits.size() % (2 * k) == 0, "m-CAP band bit count must be a multiple of 2 log2(levels)");
        const std::size_t nsym = bits.size() / (2 * k);
        std::vector<std::uint8_t> ib;
        std::vector<std::uint8_t> qb;
        ib.reserve(nsym * k);
        qb.reserve(nsym * k);
        for (std::size_t m = 0; m < nsym; ++m) {
            ib.insert(ib.end(), bits.begin() + static_cast<long>(2 * k * m), bits.begin() + static_cast<long>(2 * k * m + k));
            qb.insert(qb.end(), bits.begin() + static_cast<long>(2 * k * m + k), bits.begin() + static_cast<long>(2 * k * (m + 1)));
        }
        return {pam_map(ib, levels), pam_map(qb, levels)};
    }
    }
    return {};
}

inline int first_branch_of_band(const ModemConfig& cfg, std::size_t band)
{
    return static_cast<int>(cfg.format == Format::mcap ? 2 * band : band);
}

} // namespace detail

/// Known training symbols for every branch (deterministic in training_seed).
inline std::vector<std::vector<double>> training_symbols(const ModemConfig& cfg)
{
    std::vector<std::vector<double>> out(cfg.bank->branch_count());
    for (std::size_t band = 0; band < cfg.band_count(); ++band) {
        const auto nbits = static_cast<std::size_t>(cfg.training_len) * static_cast<std::size_t>(cfg.bits_per_symbol(band));
        const auto seed = prbs15_seed_from(derive_seed(cfg.training_seed, {band}));
        const auto bits = prbs15(seed, nbits);
        auto branches = detail::band_to_branches(cfg, band, bits.bits);
        if (!cfg.band_active(band)) {
            for (auto& br : branches) {
                std::fill(br.begin(), br.end(), 0.0);
            }
        }
        const int b0 = detail::first_branch_of_band(cfg, band);
        for (std::size_t k = 0; k < branches.size(); ++k) {
            out[static_cast<std::size_t>(b0) + k] = std::move(branches[k]);
        }
    }
    return out;
}

/// Length of the composite for `symbols` symbols per branch.
inline std::size_t composite_length(const FilterBank& bank, std::size_t symbols)
{
    const auto nss = static_cast<std::size_t>(bank.samples_per_symbol());
    return symbols * nss + bank.tap_count() - 1 + nss;
}

/// Sum of pulse-shaped branches before power normalisation. Symbol m of
/// branch b starts at sample m * n_ss + stagger_samples[b]; its pulse peak
/// sits at that index plus the centre tap.
inline std::vector<double> compose_branches(const FilterBank& bank, std::span<const std::vector<double>> symbols,
                                            std::span<const int> stagger_samples)
{
    detail::require(symbols.size() == bank.branch_count(), "one symbol sequence per branch required");
    detail::require(stagger_samples.size() == bank.branch_count(), "stagger map size mismatch");
    const std::size_t nsym = symbols.front().size();
    for (const auto& s : symbols) {
        detail::require(s.size() == nsym, "branch symbol counts differ");
    }
    const auto nss = static_cast<std::size_t>(bank.samples_per_symbol());
    std::vector<double> out(composite_length(bank, nsym), 0.0);
    for (std::size_t b = 0; b < symbols.size(); ++b) {
        detail::require(stagger_samples[b] >= 0 && static_cast<std::size_t>(stagger_samples[b]) < nss,
                        "stagger must be within one symbol period");
        const auto& h = bank.taps[b];
        for (std::size_t m = 0; m < nsym; ++m) {
            const double a = symbols[b][m];
            if (a == 0.0) {
                continue;
            }
            double* y = out.data() + m * nss + static_cast<std::size_t>(stagger_samples[b]);
            for (std::size_t j = 0; j < h.size(); ++j) {
                y[j] += a * h[j];
            }
        }
    }
    return out;
}

inline std::vector<int> stagger_in_samples(const ModemConfig& cfg)
{
    std::vector<int> s(cfg.stagger.size());
    for (std::size_t b = 0; b < s.size(); ++b) {
        s[b] = cfg.stagger[b] * cfg.samples_per_symbol() / 2;
    }
    return s;
}

/// Scales x to unit mean square; an all-zero waveform is left untouched.
inline double normalize_power(std::vector<double>& x)
{
    const double p = mean_square(x);
    if (p <= 0.0) {
        return 1.0;
    }
    const double scale = 1.0 / std::sqrt(p);
    for (double& v : x) {
        v *= scale;
    }
    return scale;
}

/// Any format: one bit stream per sub-band.
inline SampledSignal modulate(std::span<const BitStream> bits_per_band, const ModemConfig& cfg)
{
    cfg.validate();
    detail::require(bits_per_band.size() == cfg.band_count(), "one bit stream per sub-band required");

    auto branch_syms = training_symbols(cfg);
    std::size_t payload = std::numeric_limits<std::size_t>::max();
    for (std::size_t band = 0; band < cfg.band_count(); ++band) {
        if (!cfg.band_active(band)) {
            continue;
        }
        const auto bps = static_cast<std::size_t>(cfg.bits_per_symbol(band));
        detail::require(bits_per_band[band].size() % bps == 0, "band bit count is not a whole number of symbols");
        const std::size_t nsym = bits_per_band[band].size() / bps;
        detail::require(payload == std::numeric_limits<std::size_t>::max() || payload == nsym,
                        "mismatched stream lengths: every sub-band must carry the same number of symbols");
        payload = nsym;
        auto branches = detail::band_to_branches(cfg, band, bits_per_band[band].bits);
        const int b0 = detail::first_branch_of_band(cfg, band);
        for (std::size_t k = 0; k < branches.size(); ++k) {
            auto& dst = branch_syms[static_cast<std::size_t>(b0) + k];
            dst.insert(dst.end(), branches[k].begin(), branches[k].end());
        }
    }
    for (std::size_t band = 0; band < cfg.band_count(); ++band) {
        if (cfg.band_active(band)) {
            continue;
        }
        const int b0 = detail::first_branch_of_band(cfg, band);
        const std::size_t nb = cfg.format == Format::mcap ? 2 : 1;
        for (std::size_t k = 0; k < nb; ++k) {
            auto& dst = branch_syms[static_cast<std::size_t>(b0) + k];
            dst.resize(dst.size() + payload, 0.0);
        }
    }

    const auto stagger = stagger_in_samples(cfg);
    SampledSignal sig;
    sig.samples = compose_branches(*cfg.bank, branch_syms, stagger);
    normalize_power(sig.samples);
    sig.sample_rate = cfg.sample_rate();
    sig.digest = cfg.digest();
    sig.stages.push_back(fmt::format("modulate:{}", to_string(cfg.format)));
    return sig;
}

inline SampledSignal scap_modulate(std::span<const BitStream> bits_per_band, const ModemConfig& cfg)
{
    detail::require(cfg.format == Format::scap, "scap_modulate needs an sCAP config");
    detail::require(bits_per_band.size() == 4, "sCAP carries exactly four branches");
    return modulate(bits_per_band, cfg);
}

inline SampledSignal mcap_modulate(std::span<const BitStream> bits_per_band, const ModemConfig& cfg)
{
    detail::require(cfg.format == Format::mcap, "mcap_modulate needs an m-CAP config");
    return modulate(bits_per_band, cfg);
}

inline SampledSignal ook_modulate(const BitStream& bits, const ModemConfig& cfg)
{
    detail::require(cfg.format == Format::ook, "ook_modulate needs an OOK config");
    return modulate(std::span<const BitStream>(&bits, 1), cfg);
}

struct DemodResult {
    std::vector<std::vector<double>> branch_symbols; ///< corrected soft payload symbols per branch
    std::vector<BitStream> band_bits;                ///< recovered payload bits per sub-band
    BitStream bits;                                  ///< band-major concatenation of band_bits
    std::vector<CpeEstimate> cpe;                    ///< one per cpe_groups() entry
    int timing_offset = 0;                           ///< first active group's offset, samples
    std::vector<int> group_offsets;                  ///< one per cpe_groups() entry, samples
};

namespace detail {

/// Matched-filter output sum_j y[start + j] h[j], zero outside the signal.
inline double matched_output(std::span<const double> y, std::span<const double> h, long start)
{
    const long n = static_cast<long>(y.size());
    const long len = static_cast<long>(h.size());
    const long lo = std::max(0L, -start);
    const long hi = std::min(len, n - start);
    double acc = 0.0;
    for (long j = lo; j < hi; ++j) {
        acc += y[static_cast<std::size_t>(start + j)] * h[static_cast<std::size_t>(j)];
    }
    return acc;
}

/// Matched outputs of `branch` filter sampled at the symbol instants of
/// `instant_branch`, for symbols [first, first + count).
inline std::vector<double> sample_branch(std::span<const double> y, const ModemConfig& cfg,
                                         const std::vector<int>& stagger, int branch, int instant_branch,
                                         int offset, std::size_t first, std::size_t count)
{
    const long nss = cfg.samples_per_symbol();
    const auto& h = cfg.bank->taps[static_cast<std::size_t>(branch)];
    std::vector<double> out(count);
    for (std::size_t m = 0; m < count; ++m) {
        const long start = static_cast<long>(first + m) * nss + stagger[static_cast<std::size_t>(instant_branch)] + offset;
        out[m] = matched_output(y, h, start);
    }
    return out;
}

struct GroupSamples {
    std::vector<cplx> z_first;  ///< complex output at the first branch's instants
    std::vector<cplx> z_second; ///< complex output at the second branch's instants
    std::vector<double> real;   ///< real branch output
};

inline GroupSamples sample_group(std::span<const double> y, const ModemConfig& cfg, const std::vector<int>& stagger,
                                 const BranchGroup& g, int offset, std::size_t first, std::size_t count)
{
    GroupSamples out;
    if (g.second < 0) {
        out.real = sample_branch(y, cfg, stagger, g.first, g.first, offset, first, count);
        return out;
    }
    const auto ii = sample_branch(y, cfg, stagger, g.first, g.first, offset, first, count);
    const auto qi = sample_branch(y, cfg, stagger, g.second, g.first, offset, first, count);
    out.z_first.resize(count);
    if (stagger[static_cast<std::size_t>(g.first)] == stagger[static_cast<std::size_t>(g.second)]) {
        for (std::size_t m = 0; m < count; ++m) {
            out.z_first[m] = {ii[m], qi[m]};
        }
        out.z_second = out.z_first;
        return out;
    }
    const auto iq = sample_branch(y, cfg, stagger, g.first, g.second, offset, first, count);
    const auto qq = sample_branch(y, cfg, stagger, g.second, g.second, offset, first, count);
    out.z_second.resize(count);
    for (std::size_t m = 0; m < count; ++m) {
        out.z_first[m] = {ii[m], qi[m]};
        out.z_second[m] = {iq[m], qq[m]};
    }
    return out;
}

/// Squared normalised correlation of one group's training outputs with the
/// known training symbols (in [0, 1]).
inline double training_correlation(const GroupSamples& s, const BranchGroup& g,
                                   const std::vector<std::vector<double>>& known, bool unipolar)
{
    if (g.second < 0) {
        const auto& k = known[static_cast<std::size_t>(g.first)];
        const double n = static_cast<double>(k.size());
        double mk = 0.0, mr = 0.0;
        if (unipolar) {
            for (std::size_t i = 0; i < k.size(); ++i) {
                mk += k[i];
                mr += s.real[i];
            }
            mk /= n;
            mr /= n;
        }
        double kr = 0.0, kk = 0.0, rr = 0.0;
        for (std::size_t i = 0; i < k.size(); ++i) {
            const double a = k[i] - mk;
            const double r = s.real[i] - mr;
            kr += a * r;
            kk += a * a;
            rr += r * r;
        }
        return (kk > 0.0 && rr > 0.0) ? kr * kr / (kk * rr) : 0.0;
    }
    const auto& a = known[static_cast<std::size_t>(g.first)];
    const auto& b = known[static_cast<std::size_t>(g.second)];
    cplx num{};
    double kk = 0.0, rr = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += a[i] * s.z_first[i] + cplx(0.0, -b[i]) * s.z_second[i];
        kk += a[i] * a[i] + b[i] * b[i];
        rr += std::norm(s.z_first[i]) + std::norm(s.z_second[i]);
    }
    return (kk > 0.0 && rr > 0.0) ? std::norm(num) / (kk * rr) : 0.0;
}

} // namespace detail

namespace detail {

inline std::size_t band_of_branch(const ModemConfig& cfg, int branch)
{
    return static_cast<std::size_t>(cfg.format == Format::mcap ? branch / 2 : branch);
}

inline bool group_active(const ModemConfig& cfg, const BranchGroup& g)
{
    return cfg.band_active(band_of_branch(cfg, g.first)) ||
           (g.second >= 0 && cfg.band_active(band_of_branch(cfg, g.second)));
}

} // namespace detail

/// Number of symbol periods a received waveform holds.
inline std::size_t symbols_in(const ModemConfig& cfg, std::size_t samples)
{
    const auto nss = static_cast<std::size_t>(cfg.samples_per_symbol());
    const std::size_t overhead = cfg.bank->tap_count() - 1 + nss;
    detail::require(samples >= overhead, "signal shorter than the filter transient");
    return (samples - overhead) / nss;
}

/// payload_symbols = 0 infers the count from the signal length.
inline DemodResult demodulate(const SampledSignal& signal, const ModemConfig& cfg, std::size_t payload_symbols = 0)
{
    cfg.validate();
    if (cfg.cpe) {
        detail::require(cfg.training_len >= min_training_len, "CPE enabled but training_len < 16");
    }
    if (cfg.sync == SyncMode::training) {
        detail::require(cfg.training_len >= min_training_len, "training sync needs training_len >= 16");
    }
    if (signal.sample_rate > 0.0) {
        detail::require(std::abs(signal.sample_rate / cfg.sample_rate() - 1.0) < 1e-9,
                        "signal sample rate does not match the modem configuration");
    }
    const std::span<const double> y(signal.samples);
    const std::size_t total = symbols_in(cfg, y.size());
    const auto tr = static_cast<std::size_t>(cfg.training_len);
    if (payload_symbols == 0) {
        detail::require(total > tr, "signal shorter than filter transient plus training");
        payload_symbols = total - tr;
    }
    detail::require(tr + payload_symbols <= total, "signal shorter than filter transient plus training");

    const auto groups = cpe_groups(cfg);
    const auto stagger = stagger_in_samples(cfg);
    const auto known = training_symbols(cfg);
    const bool unipolar = cfg.format == Format::ook;

    DemodResult res;
    res.group_offsets.assign(groups.size(), cfg.timing_offset);
    if (cfg.sync == SyncMode::training) {
        const int radius = cfg.sync_radius >= 0 ? cfg.sync_radius : cfg.samples_per_symbol() / 2;
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            const auto& g = groups[gi];
            if (!detail::group_active(cfg, g)) {
                continue;
            }
            double best = -1.0;
            for (int step = 0; step <= 2 * radius; ++step) {
                // 0, +1, -1, +2, -2, ... so ties resolve towards the analytic instant.
                const int d = cfg.timing_offset + ((step % 2) ? (step + 1) / 2 : -(step / 2));
                const auto s = detail::sample_group(y, cfg, stagger, g, d, 0, tr);
                const double metric = detail::training_correlation(s, g, known, unipolar);
                if (metric > best + 1e-12) {
                    best = metric;
                    res.group_offsets[gi] = d;
                }
            }
        }
    }
    res.timing_offset = cfg.timing_offset;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        if (detail::group_active(cfg, groups[gi])) {
            res.timing_offset = res.group_offsets[gi];
            break;
        }
    }

    const std::size_t count = tr + payload_symbols;
    res.branch_symbols.assign(cfg.bank->branch_count(), {});
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& g = groups[gi];
        CpeEstimate est;
        if (!detail::group_active(cfg, g)) {
            res.cpe.push_back(est);
            continue;
        }
        const auto s = detail::sample_group(y, cfg, stagger, g, res.group_offsets[gi], 0, count);
        const bool use_cpe = cfg.cpe;
        if (g.second < 0) {
            const auto& k = known[static_cast<std::size_t>(g.first)];
            if (use_cpe) {
                const std::span<const double> rx(s.real.data(), tr);
                est = unipolar ? estimate_gain_offset(rx, k) : estimate_gain(rx, k);
            }
            auto corrected = cpe_correct(std::span<const double>(s.real).subspan(tr), est);
            res.branch_symbols[static_cast<std::size_t>(g.first)] = std::move(corrected);
        } else {
            if (use_cpe) {
                est = estimate_cpe_pair(std::span<const cplx>(s.z_first.data(), tr), known[static_cast<std::size_t>(g.first)],
                                        std::span<const cplx>(s.z_second.data(), tr), known[static_cast<std::size_t>(g.second)]);
            }
            std::vector<double> ib(payload_symbols);
            std::vector<double> qb(payload_symbols);
            for (std::size_t m = 0; m < payload_symbols; ++m) {
                ib[m] = (s.z_first[tr + m] / est.gain).real();
                qb[m] = (s.z_second[tr + m] / est.gain).imag();
            }
            res.branch_symbols[static_cast<std::size_t>(g.first)] = std::move(ib);
            res.branch_symbols[static_cast<std::size_t>(g.second)] = std::move(qb);
        }
        res.cpe.push_back(est);
    }

    for (std::size_t band = 0; band < cfg.band_count(); ++band) {
        const int levels = cfg.levels_per_band[band];
        const auto b0 = static_cast<std::size_t>(detail::first_branch_of_band(cfg, band));
        BitStream bits;
        if (!cfg.band_active(band)) {
            res.band_bits.push_back(std::move(bits));
            continue;
        }
        if (cfg.format == Format::ook) {
            for (double v : res.branch_symbols[b0]) {
                bits.bits.push_back(v > 1.0 ? 1 : 0);
            }
        } else if (cfg.format == Format::scap) {
            bits = pam_demap(res.branch_symbols[b0], levels);
        } else {
            const auto ib = pam_demap(res.branch_symbols[b0], levels);
            const auto qb = pam_demap(res.branch_symbols[b0 + 1], levels);
            const auto k = static_cast<std::size_t>(bits_per_level(levels));
            for (std::size_t m = 0; m < payload_symbols; ++m) {
                bits.bits.insert(bits.bits.end(), ib.bits.begin() + static_cast<long>(m * k), ib.bits.begin() + static_cast<long>((m + 1) * k));
                bits.bits.insert(bits.bits.end(), qb.bits.begin() + static_cast<long>(m * k), qb.bits.begin() + static_cast<long>((m + 1) * k));
            }
        }
        res.bits.bits.insert(res.bits.bits.end(), bits.bits.begin(), bits.bits.end());
        res.band_bits.push_back(std::move(bits));
    }
    return res;
}

} // namespace scap
