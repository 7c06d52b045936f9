#pragma once

// Pulse-shape synthesis for staggered CAP (sCAP), multi-band CAP and OOK.
//
// Time is measured on a grid of n_ss samples per symbol period T; every tap
// array is odd-length, centred on t = 0 and spans `span` symbol periods.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "scap/error.hpp"

namespace scap {

enum class NormMode { peak_unity, unit_energy };
enum class BankKind { scap, mcap, ook };

/// Tolerance on |4*beta*t/T - 1| below which a grid point is treated as the
/// RRC singularity. Only exact grid hits are special-cased.
inline constexpr double rrc_singularity_tol = 1e-9;

/// Residual dB values are floored here so exact zeros stay finite.
inline constexpr double residual_floor_db = -300.0;

struct FilterSpec {
    double beta = 1.0;          ///< excess bandwidth, 0 < beta <= 1
    double symbol_period = 1.0; ///< T in seconds
    int chi = 4;                ///< oversampling factor
    int span = 16;              ///< filter length in symbol periods (even)

    /// n_ss = chi * ceil(2 (1 + beta)).
    [[nodiscard]] int samples_per_symbol() const
    {
        // 2(1+beta) is evaluated in doubles; nudge down so exact integers
        // such as beta = 0.5 or 1.0 do not round up through representation error.
        const auto base = static_cast<int>(std::ceil(2.0 * (1.0 + beta) - 1e-9));
        return chi * base;
    }

    [[nodiscard]] std::size_t tap_count() const
    {
        return static_cast<std::size_t>(span) * static_cast<std::size_t>(samples_per_symbol()) + 1;
    }

    [[nodiscard]] double sample_rate() const { return samples_per_symbol() / symbol_period; }

    void validate() const
    {
        detail::require(beta > 0.0 && beta <= 1.0, "beta must lie in (0, 1]");
        detail::require(symbol_period > 0.0 && std::isfinite(symbol_period), "symbol period must be positive");
        detail::require(chi >= 1, "oversampling factor chi must be >= 1");
        detail::require(span >= 2, "span must be at least 2 symbol periods");
        detail::require(span % 2 == 0, "span must be even");
    }
};

namespace detail {

inline double rrc_limit_at_zero(double beta) { return (1.0 - beta) + 4.0 * beta / std::numbers::pi; }

inline double rrc_limit_at_quarter(double beta)
{
    const double a = std::numbers::pi / (4.0 * beta);
    return beta / std::numbers::sqrt2 *
           ((1.0 + 2.0 / std::numbers::pi) * std::sin(a) + (1.0 - 2.0 / std::numbers::pi) * std::cos(a));
}

} // namespace detail

/// Root-raised-cosine value at normalised time x = t/T (unit symbol period).
/// The three removable singularities (x = 0, x = +-1/(4 beta)) return their
/// analytic limits.
inline double rrc_value(double x, double beta)
{
    x = std::abs(x); // even function; keeps f(n) == f(-n) bit-exact
    if (x < 1e-12) {
        return detail::rrc_limit_at_zero(beta);
    }
    const double q = 4.0 * beta * x;
    if (std::abs(q - 1.0) < rrc_singularity_tol) {
        return detail::rrc_limit_at_quarter(beta);
    }
    const double xi = std::numbers::pi * x;
    return (q * std::cos(xi * (1.0 + beta)) + std::sin(xi * (1.0 - beta))) / (xi * (1.0 - q * q));
}

/// Grid offsets m in [-span*n_ss/2, span*n_ss/2] as signed integers.
inline std::vector<long> tap_grid(const FilterSpec& spec)
{
    const long half = static_cast<long>(spec.span) * spec.samples_per_symbol() / 2;
    std::vector<long> grid(static_cast<std::size_t>(2 * half + 1));
    std::iota(grid.begin(), grid.end(), -half);
    return grid;
}

/// Symmetric RRC taps (raw amplitude, peak 1 - beta + 4 beta / pi).
inline std::vector<double> make_rrc(const FilterSpec& spec)
{
    spec.validate();
    const double nss = spec.samples_per_symbol();
    const auto grid = tap_grid(spec);
    std::vector<double> taps(grid.size());
    std::transform(grid.begin(), grid.end(), taps.begin(),
                   [&](long m) { return rrc_value(static_cast<double>(m) / nss, spec.beta); });
    return taps;
}

inline double energy(std::span<const double> taps)
{
    return std::inner_product(taps.begin(), taps.end(), taps.begin(), 0.0);
}

inline std::vector<double> normalized(std::span<const double> taps, NormMode mode)
{
    double scale = 0.0;
    if (mode == NormMode::unit_energy) {
        scale = std::sqrt(energy(taps));
    } else {
        for (double v : taps) {
            scale = std::max(scale, std::abs(v));
        }
    }
    detail::require(scale > 0.0, "cannot normalise an all-zero pulse");
    std::vector<double> out(taps.begin(), taps.end());
    for (double& v : out) {
        v /= scale;
    }
    return out;
}

struct FilterBank {
    BankKind kind = BankKind::scap;
    FilterSpec spec;
    NormMode norm_mode = NormMode::unit_energy;
    std::vector<std::string> names;
    std::vector<std::vector<double>> raw_taps; ///< as synthesised (sqrt(2) factors included)
    std::vector<std::vector<double>> taps;     ///< raw_taps normalised per norm_mode
    std::vector<double> carrier_hz;            ///< per branch, 0 for baseband pulses
    double b_sub_hz = 0.0;                     ///< centre sub-band bandwidth
    std::vector<int> stagger;                  ///< per branch, in units of T/2 (0 or 1)

    [[nodiscard]] std::size_t branch_count() const { return taps.size(); }
    [[nodiscard]] std::size_t tap_count() const { return taps.empty() ? 0 : taps.front().size(); }
    [[nodiscard]] std::size_t center_index() const { return tap_count() / 2; }
    [[nodiscard]] int samples_per_symbol() const { return spec.samples_per_symbol(); }

    /// Stagger of branch b in samples.
    [[nodiscard]] int stagger_samples(std::size_t b) const
    {
        return stagger.at(b) * samples_per_symbol() / 2;
    }

    [[nodiscard]] std::vector<int> stagger_samples() const
    {
        std::vector<int> out(branch_count());
        for (std::size_t b = 0; b < out.size(); ++b) {
            out[b] = stagger_samples(b);
        }
        return out;
    }

    /// Carrier of the sCAP Hilbert pair, f_c1 (== f_c2).
    [[nodiscard]] double fc1() const { return carrier_hz.at(1); }
    [[nodiscard]] double fc2() const { return carrier_hz.at(2); }
    [[nodiscard]] double fc3() const { return carrier_hz.at(3); }

    /// Re-normalise every branch from raw_taps.
    void set_norm_mode(NormMode mode)
    {
        norm_mode = mode;
        taps.clear();
        for (const auto& raw : raw_taps) {
            taps.push_back(normalized(raw, mode));
        }
    }
};

/// Squared-magnitude peak of off-diagonal residuals, in dB.
using ResidualMatrix = std::vector<std::vector<double>>;

namespace detail {

inline double to_db(double ratio)
{
    if (!(ratio > 0.0)) {
        return residual_floor_db;
    }
    return std::max(20.0 * std::log10(ratio), residual_floor_db);
}

/// sum_n a[n] * b[n - shift] over the common support (same centre index).
inline double shifted_inner(std::span<const double> a, std::span<const double> b, long shift)
{
    const long n = static_cast<long>(a.size());
    const long lo = std::max(0L, shift);
    const long hi = std::min(n, static_cast<long>(b.size()) + shift);
    double acc = 0.0;
    for (long i = lo; i < hi; ++i) {
        acc += a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i - shift)];
    }
    return acc;
}

inline void check_same_grid(const FilterBank& bank)
{
    require(!bank.taps.empty(), "filter bank is empty");
    for (const auto& t : bank.taps) {
        require(t.size() == bank.taps.front().size(), "filter bank members differ in length");
    }
}

} // namespace detail

/// Peak normalised cross-correlation between branches over all integer
/// symbol lags, with branch j delayed by stagger_samples[j] relative to i.
/// Entry (i, j) in dB; diagonal entries exclude lag 0 and measure ISI.
inline ResidualMatrix orthogonality_residual(const FilterBank& bank, std::span<const int> stagger_samples)
{
    detail::check_same_grid(bank);
    detail::require(stagger_samples.size() == bank.branch_count(), "stagger map size mismatch");
    const long nss = bank.samples_per_symbol();
    for (int s : stagger_samples) {
        detail::require(2 * s % nss == 0, "stagger entries must be multiples of T/2");
    }
    const std::size_t nb = bank.branch_count();
    const long len = static_cast<long>(bank.tap_count());
    const long kmax = len / nss + 2;

    std::vector<double> e(nb);
    for (std::size_t i = 0; i < nb; ++i) {
        e[i] = energy(bank.taps[i]);
    }

    ResidualMatrix out(nb, std::vector<double>(nb, residual_floor_db));
    for (std::size_t i = 0; i < nb; ++i) {
        for (std::size_t j = 0; j < nb; ++j) {
            double peak = 0.0;
            for (long k = -kmax; k <= kmax; ++k) {
                if (i == j && k == 0) {
                    continue;
                }
                const long shift = k * nss + stagger_samples[j] - stagger_samples[i];
                const double c = detail::shifted_inner(bank.taps[i], bank.taps[j], shift);
                peak = std::max(peak, std::abs(c));
            }
            out[i][j] = detail::to_db(peak / std::sqrt(e[i] * e[j]));
        }
    }
    return out;
}

inline ResidualMatrix orthogonality_residual(const FilterBank& bank)
{
    const auto s = bank.stagger_samples();
    return orthogonality_residual(bank, s);
}

/// Worst off-diagonal entry of a residual matrix.
inline double max_cross_residual_db(const ResidualMatrix& m)
{
    double worst = residual_floor_db;
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m.size(); ++j) {
            if (i != j) {
                worst = std::max(worst, m[i][j]);
            }
        }
    }
    return worst;
}

/// Largest off-diagonal entry in row `branch` (crosstalk seen by that branch).
inline double branch_crosstalk_db(const ResidualMatrix& m, std::size_t branch)
{
    double worst = residual_floor_db;
    for (std::size_t j = 0; j < m.size(); ++j) {
        if (j != branch) {
            worst = std::max(worst, m[branch][j]);
        }
    }
    return worst;
}

/// Matched cascade p * p(-n) sampled every symbol: max |non-peak| / peak.
inline double matched_cascade_isi(std::span<const double> taps, int samples_per_symbol)
{
    const double peak = energy(taps);
    double worst = 0.0;
    const long len = static_cast<long>(taps.size());
    for (long shift = samples_per_symbol; shift < len; shift += samples_per_symbol) {
        worst = std::max(worst, std::abs(detail::shifted_inner(taps, taps, shift)));
    }
    return worst / peak;
}

/// Exhaustive search over {0, T/2} stagger maps (branch 0 pinned to 0) for
/// the one minimising the worst cross-branch residual. Ties go to the map
/// with fewer staggered branches, then to the lexicographically smaller one.
inline std::vector<int> calibrate_stagger(const FilterBank& bank)
{
    detail::check_same_grid(bank);
    const std::size_t nb = bank.branch_count();
    detail::require(nb <= 12, "stagger calibration limited to 12 branches");
    const int half = bank.samples_per_symbol() / 2;
    detail::require(bank.samples_per_symbol() % 2 == 0, "T/2 stagger needs an even n_ss");

    std::vector<int> best;
    double best_db = std::numeric_limits<double>::infinity();
    int best_count = 0;
    for (unsigned mask = 0; mask < (1U << (nb - 1)); ++mask) {
        std::vector<int> units(nb, 0);
        std::vector<int> samples(nb, 0);
        int count = 0;
        for (std::size_t b = 1; b < nb; ++b) {
            if (mask & (1U << (b - 1))) {
                units[b] = 1;
                samples[b] = half;
                ++count;
            }
        }
        const double db = max_cross_residual_db(orthogonality_residual(bank, samples));
        // 0.5 dB slack so numerically equivalent maps resolve by simplicity.
        if (db < best_db - 0.5 || (std::abs(db - best_db) <= 0.5 && count < best_count)) {
            best_db = db;
            best = units;
            best_count = count;
        }
    }
    return best;
}

struct ScapBankOptions {
    NormMode norm = NormMode::unit_energy;
    bool allow_non_unity_beta = false;
};

/// The four sCAP pulses: f0 (RRC PAM), f1/f2 (sqrt(2)-scaled cosine/sine
/// Hilbert pair at f_c1 = B_sub/2) and f3 (cosine at f_c3 = 2 f_c1, no sqrt(2)),
/// with B_sub = (1 + beta)/T. The stagger map is calibrated on construction.
inline FilterBank make_scap_bank(const FilterSpec& spec, const ScapBankOptions& opt = {})
{
    spec.validate();
    if (!opt.allow_non_unity_beta) {
        detail::require(spec.beta == 1.0, "sCAP requires beta = 1 unless explicitly overridden");
    }
    const double T = spec.symbol_period;
    const double b_sub = (1.0 + spec.beta) / T;
    const double fc1 = 0.5 * b_sub;
    const double fc3 = 2.0 * fc1;
    const double nyquist = spec.samples_per_symbol() / (2.0 * T);
    detail::require(fc3 + (1.0 + spec.beta) / (2.0 * T) <= nyquist * (1.0 + 1e-12),
                    "sCAP bank aliases: raise chi so f_c3 + (1+beta)/(2T) fits below Nyquist");

    const auto f0 = make_rrc(spec);
    const auto grid = tap_grid(spec);
    const double dt = T / spec.samples_per_symbol();
    std::vector<double> f1(f0.size());
    std::vector<double> f2(f0.size());
    std::vector<double> f3(f0.size());
    for (std::size_t i = 0; i < f0.size(); ++i) {
        const double t = static_cast<double>(grid[i]) * dt;
        f1[i] = std::numbers::sqrt2 * f0[i] * std::cos(2.0 * std::numbers::pi * fc1 * t);
        f2[i] = std::numbers::sqrt2 * f0[i] * std::sin(2.0 * std::numbers::pi * fc1 * t);
        f3[i] = f0[i] * std::cos(2.0 * std::numbers::pi * fc3 * t);
    }

    FilterBank bank;
    bank.kind = BankKind::scap;
    bank.spec = spec;
    bank.names = {"f0", "f1", "f2", "f3"};
    bank.raw_taps = {f0, f1, f2, f3};
    bank.carrier_hz = {0.0, fc1, fc1, fc3};
    bank.b_sub_hz = b_sub;
    bank.stagger.assign(4, 0);
    bank.set_norm_mode(opt.norm);
    bank.stagger = calibrate_stagger(bank);
    return bank;
}

/// Carrier of m-CAP sub-band s (1-based): (2s - 1)(1 + beta) / (2T).
inline double mcap_carrier(const FilterSpec& spec, int subband)
{
    return (2.0 * subband - 1.0) * (1.0 + spec.beta) / (2.0 * spec.symbol_period);
}

/// m Hilbert pairs (I = f0 cos, Q = f0 sin) on a common grid, unstaggered.
inline FilterBank make_mcap_bank(const FilterSpec& spec, int subbands, NormMode norm = NormMode::unit_energy)
{
    spec.validate();
    detail::require(subbands >= 1, "m-CAP needs at least one sub-band");
    const double T = spec.symbol_period;
    const double nyquist = spec.samples_per_symbol() / (2.0 * T);
    detail::require(mcap_carrier(spec, subbands) + (1.0 + spec.beta) / (2.0 * T) <= nyquist * (1.0 + 1e-12),
                    "m-CAP bank aliases: raise chi so the top sub-band fits below Nyquist");

    const auto f0 = make_rrc(spec);
    const auto grid = tap_grid(spec);
    const double dt = T / spec.samples_per_symbol();

    FilterBank bank;
    bank.kind = BankKind::mcap;
    bank.spec = spec;
    bank.b_sub_hz = (1.0 + spec.beta) / T;
    for (int s = 1; s <= subbands; ++s) {
        const double fc = mcap_carrier(spec, s);
        std::vector<double> i_pulse(f0.size());
        std::vector<double> q_pulse(f0.size());
        for (std::size_t n = 0; n < f0.size(); ++n) {
            const double t = static_cast<double>(grid[n]) * dt;
            i_pulse[n] = f0[n] * std::cos(2.0 * std::numbers::pi * fc * t);
            q_pulse[n] = f0[n] * std::sin(2.0 * std::numbers::pi * fc * t);
        }
        bank.names.push_back("s" + std::to_string(s) + "i");
        bank.names.push_back("s" + std::to_string(s) + "q");
        bank.raw_taps.push_back(std::move(i_pulse));
        bank.raw_taps.push_back(std::move(q_pulse));
        bank.carrier_hz.push_back(fc);
        bank.carrier_hz.push_back(fc);
    }
    bank.stagger.assign(bank.raw_taps.size(), 0);
    bank.set_norm_mode(norm);
    return bank;
}

/// Single RRC pulse for pulse-shaped OOK.
inline FilterBank make_ook_bank(const FilterSpec& spec, NormMode norm = NormMode::unit_energy)
{
    FilterBank bank;
    bank.kind = BankKind::ook;
    bank.spec = spec;
    bank.names = {"f0"};
    bank.raw_taps = {make_rrc(spec)};
    bank.carrier_hz = {0.0};
    bank.b_sub_hz = (1.0 + spec.beta) / spec.symbol_period;
    bank.stagger = {0};
    bank.set_norm_mode(norm);
    return bank;
}

inline const char* to_string(BankKind k)
{
    switch (k) {
    case BankKind::scap: return "scap";
    case BankKind::mcap: return "mcap";
    case BankKind::ook: return "ook";
    }
    return "?";
}

inline const char* to_string(NormMode m)
{
    return m == NormMode::unit_energy ? "unit-energy" : "peak-unity";
}

} // namespace scap
