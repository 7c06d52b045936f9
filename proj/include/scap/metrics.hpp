#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <tuple>
#include <utility>

#include "scap/bits.hpp"
#include "scap/error.hpp"

namespace scap {

/// FEC threshold of a 7 %-overhead hard-decision code.
inline constexpr double fec_threshold = 3.8e-3;
/// BER treated as error free.
inline constexpr double error_free_threshold = 1e-6;

struct BerRecord {
    std::uint64_t bits_sent = 0;
    std::uint64_t bit_errors = 0;
    double ber = 0.0;
    double ci_low = 0.0;  ///< Wilson 95 % interval
    double ci_high = 1.0;

    friend bool operator==(const BerRecord&, const BerRecord&) = default;
};

inline constexpr double z95 = 1.959963984540054;

/// Wilson score interval for `errors` successes in `n` trials.
inline std::pair<double, double> wilson_interval(std::uint64_t errors, std::uint64_t n, double z = z95)
{
    if (n == 0) {
        return {0.0, 1.0};
    }
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(errors) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    const double low = errors == 0 ? 0.0 : std::max(0.0, centre - half);
    const double high = errors == n ? 1.0 : std::min(1.0, centre + half);
    return {low, high};
}

inline BerRecord make_ber_record(std::uint64_t errors, std::uint64_t bits)
{
    detail::require(errors <= bits, "more errors than bits");
    BerRecord r;
    r.bits_sent = bits;
    r.bit_errors = errors;
    r.ber = bits == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(bits);
    std::tie(r.ci_low, r.ci_high) = wilson_interval(errors, bits);
    return r;
}

inline std::uint64_t count_bit_errors(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx)
{
    detail::require(tx.size() == rx.size(), "bit streams differ in length");
    std::uint64_t e = 0;
    for (std::size_t i = 0; i < tx.size(); ++i) {
        e += (tx[i] != rx[i]) ? 1U : 0U;
    }
    return e;
}

/// Bit-by-bit comparison.
inline BerRecord ber(const BitStream& tx, const BitStream& rx)
{
    return make_ber_record(count_bit_errors(tx.bits, rx.bits), tx.size());
}

/// Sum of errors over sum of bits.
inline BerRecord aggregate_ber(std::span<const BerRecord> per_band)
{
    detail::require(!per_band.empty(), "aggregate BER needs at least one record");
    std::uint64_t e = 0;
    std::uint64_t n = 0;
    for (const auto& r : per_band) {
        e += r.bit_errors;
        n += r.bits_sent;
    }
    return make_ber_record(e, n);
}

/// Gaussian tail probability.
inline double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// Inverse of q_function on (0, 0.5].
inline double q_function_inverse(double p)
{
    detail::require(p > 0.0 && p < 1.0, "probability must lie in (0, 1)");
    double lo = -40.0;
    double hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (q_function(mid) > p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Antipodal 2-PAM over AWGN.
inline double bpsk_ber(double ebn0_db) { return q_function(std::sqrt(2.0 * std::pow(10.0, ebn0_db / 10.0))); }

/// Eb/N0 at which antipodal 2-PAM reaches `ber`.
inline double bpsk_ebn0_db_for(double ber_value)
{
    const double x = q_function_inverse(ber_value);
    return 10.0 * std::log10(x * x / 2.0);
}

struct RatePoint {
    double rate = 0.0; ///< bits/s
    double ber = 0.0;
    std::uint64_t bits_sent = 0; ///< 0 when unknown (synthetic series)
};

enum class RateStatus {
    reached,           ///< crossing bracketed and interpolated
    not_reached_above, ///< every point at or below threshold; rate = highest tested
    not_reached_below, ///< every point above threshold; rate = lowest tested
};

inline const char* to_string(RateStatus s)
{
    switch (s) {
    case RateStatus::reached: return "reached";
    case RateStatus::not_reached_above: return "not_reached_above";
    case RateStatus::not_reached_below: return "not_reached_below";
    }
    return "?";
}

struct RateResult {
    RateStatus status = RateStatus::reached;
    double rate = 0.0;
};

namespace detail {

/// log10 of a BER, zero replaced by the 95 % upper bound when the bit count
/// is known (1e-12 otherwise) and capped at the threshold.
inline double log_ber_floored(const RatePoint& p, double threshold)
{
    double v = p.ber;
    if (v <= 0.0) {
        v = p.bits_sent > 0 ? wilson_interval(0, p.bits_sent).second : 1e-12;
        v = std::min(v, threshold);
    }
    return std::log10(v);
}

} // namespace detail

/// Highest rate at which BER stays at or below `threshold`: the last grid
/// point meeting the threshold and its successor are interpolated linearly in
/// log10(BER). No extrapolation outside the tested grid.
inline RateResult achievable_rate(std::span<const RatePoint> series, double threshold)
{
    detail::require(!series.empty(), "empty BER series");
    detail::require(threshold > 0.0 && threshold < 1.0, "threshold must lie in (0, 1)");
    for (std::size_t i = 1; i < series.size(); ++i) {
        detail::require(series[i].rate > series[i - 1].rate, "rates must be strictly increasing");
    }
    std::size_t last_ok = series.size();
    for (std::size_t i = series.size(); i-- > 0;) {
        if (series[i].ber <= threshold) {
            last_ok = i;
            break;
        }
    }
    if (last_ok == series.size()) {
        return {RateStatus::not_reached_below, series.front().rate};
    }
    if (last_ok + 1 == series.size()) {
        return {RateStatus::not_reached_above, series.back().rate};
    }
    const auto& a = series[last_ok];
    const auto& b = series[last_ok + 1];
    const double la = detail::log_ber_floored(a, threshold);
    const double lb = std::log10(b.ber);
    const double lt = std::log10(threshold);
    const double t = lb > la ? std::clamp((lt - la) / (lb - la), 0.0, 1.0) : 0.0;
    return {RateStatus::reached, a.rate + t * (b.rate - a.rate)};
}

} // namespace scap
