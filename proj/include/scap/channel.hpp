#pragma once

// Parametric PLED link: clip -> first-order low-pass -> DC block -> AWGN.
// Receiver gains are not modelled; the CPE/gain corrector absorbs any scalar.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "scap/error.hpp"
#include "scap/signal.hpp"

namespace scap {

struct ClipLimits {
    double lower = -1.0;
    double upper = 1.0;
};

struct ChannelConfig {
    /// Low-pass -3 dB frequency; +infinity disables the stage.
    double f3db_lp = std::numeric_limits<double>::infinity();
    /// Number of identical cascaded first-order sections (overall -3 dB kept at f3db_lp).
    int lowpass_order = 1;
    /// DC-block corner; 0 disables.
    double f_hp = 0.0;
    /// Per-sample SNR at the channel output; +infinity disables noise.
    double snr_db = std::numeric_limits<double>::infinity();
    std::optional<ClipLimits> clip;
    std::uint64_t seed = 1;

    void validate() const
    {
        detail::require(f3db_lp > 0.0, "low-pass cutoff must be > 0");
        detail::require(lowpass_order >= 1, "low-pass order must be >= 1");
        detail::require(f_hp >= 0.0 && std::isfinite(f_hp), "DC-block cutoff must be >= 0");
        detail::require(!std::isnan(snr_db), "SNR must not be NaN");
        if (clip) {
            detail::require(clip->lower < clip->upper, "clip lower bound must be below the upper bound");
        }
    }
};

/// 10-90 % rise time of a first-order system to its -3 dB bandwidth.
inline double rise_time_to_bandwidth(double t_rise)
{
    detail::require(t_rise > 0.0, "rise time must be positive");
    return 0.35 / t_rise;
}

namespace detail {

/// y[n] = b0 x[n] + b1 x[n-1] - a1 y[n-1], starting from rest.
inline void first_order_section(std::vector<double>& x, double b0, double b1, double a1)
{
    double x1 = 0.0;
    double y1 = 0.0;
    for (double& v : x) {
        const double y = b0 * v + b1 * x1 - a1 * y1;
        x1 = v;
        y1 = y;
        v = y;
    }
}

/// Prewarped analogue corner for a bilinear-transformed pole at f.
inline double prewarped(double f, double fs) { return 2.0 * fs * std::tan(std::numbers::pi * f / fs); }

} // namespace detail

/// Single-pole low-pass (bilinear, prewarped): unit DC gain, 1/sqrt(2) at f3db.
inline SampledSignal lowpass_first_order(SampledSignal signal, double f3db)
{
    detail::require(signal.sample_rate > 0.0, "signal has no sample rate");
    detail::require(f3db > 0.0 && f3db < signal.sample_rate / 2.0, "low-pass cutoff must lie below Nyquist");
    const double fs = signal.sample_rate;
    const double wc = detail::prewarped(f3db, fs);
    const double k = 2.0 * fs;
    detail::first_order_section(signal.samples, wc / (k + wc), wc / (k + wc), (wc - k) / (k + wc));
    signal.stages.push_back(fmt::format("lowpass:{}", f3db));
    return signal;
}

/// Cascade of `order` identical sections whose combined -3 dB point is f3db.
inline SampledSignal lowpass(SampledSignal signal, double f3db, int order)
{
    detail::require(order >= 1, "low-pass order must be >= 1");
    if (order == 1) {
        return lowpass_first_order(std::move(signal), f3db);
    }
    const double section = f3db / std::sqrt(std::pow(2.0, 1.0 / order) - 1.0);
    for (int i = 0; i < order; ++i) {
        signal = lowpass_first_order(std::move(signal), section);
    }
    return signal;
}

/// Single-pole high-pass modelling an AC coupling capacitor; f_hp = 0 is a no-op.
inline SampledSignal dc_block(SampledSignal signal, double f_hp)
{
    if (f_hp == 0.0) {
        return signal;
    }
    detail::require(signal.sample_rate > 0.0, "signal has no sample rate");
    detail::require(f_hp > 0.0 && f_hp < signal.sample_rate / 2.0, "DC-block cutoff must lie in (0, Nyquist)");
    const double fs = signal.sample_rate;
    const double wc = detail::prewarped(f_hp, fs);
    const double k = 2.0 * fs;
    detail::first_order_section(signal.samples, k / (k + wc), -k / (k + wc), (wc - k) / (k + wc));
    signal.stages.push_back(fmt::format("dc_block:{}", f_hp));
    return signal;
}

inline SampledSignal clip(SampledSignal signal, const ClipLimits& limits)
{
    for (double& v : signal.samples) {
        v = std::clamp(v, limits.lower, limits.upper);
    }
    signal.stages.push_back(fmt::format("clip:{}:{}", limits.lower, limits.upper));
    return signal;
}

/// Adds N(0, P / 10^(snr/10)) noise, P being the measured mean square of the
/// input. snr_db = +infinity returns the input unchanged.
inline SampledSignal awgn(SampledSignal signal, double snr_db, std::uint64_t seed)
{
    if (std::isinf(snr_db) && snr_db > 0.0) {
        return signal;
    }
    detail::require(std::isfinite(snr_db), "SNR must be finite or +infinity");
    const double p = mean_square(signal.samples);
    detail::require(p > 0.0 && std::isfinite(p), "AWGN needs an input with finite, non-zero power");
    const double sigma = std::sqrt(p / std::pow(10.0, snr_db / 10.0));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& v : signal.samples) {
        v += noise(rng);
    }
    signal.stages.push_back(fmt::format("awgn:{}", snr_db));
    return signal;
}

inline SampledSignal apply_channel(SampledSignal signal, const ChannelConfig& cfg)
{
    cfg.validate();
    if (cfg.clip) {
        signal = clip(std::move(signal), *cfg.clip);
    }
    if (std::isfinite(cfg.f3db_lp)) {
        signal = lowpass(std::move(signal), cfg.f3db_lp, cfg.lowpass_order);
    }
    signal = dc_block(std::move(signal), cfg.f_hp);
    signal = awgn(std::move(signal), cfg.snr_db, cfg.seed);
    return signal;
}

} // namespace scap
