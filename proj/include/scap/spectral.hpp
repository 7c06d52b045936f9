#pragma once

// Welch PSD and eye-diagram helpers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include <fftw3.h>

#include "scap/error.hpp"
#include "scap/signal.hpp"

namespace scap {

struct Spectrum {
    std::vector<double> freq_hz;
    std::vector<double> psd; ///< one-sided, units^2 / Hz
    double bin_width_hz = 0.0;

    /// Sum of psd * bin width over [f_lo, f_hi).
    [[nodiscard]] double band_power(double f_lo, double f_hi) const
    {
        double p = 0.0;
        for (std::size_t k = 0; k < psd.size(); ++k) {
            if (freq_hz[k] >= f_lo && freq_hz[k] < f_hi) {
                p += psd[k];
            }
        }
        return p * bin_width_hz;
    }

    [[nodiscard]] double total_power() const { return band_power(-1.0, freq_hz.empty() ? 0.0 : freq_hz.back() + 1.0); }
};

namespace detail {

/// FFTW planning is not thread-safe; execution on distinct buffers is.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

struct FftwDeleter {
    void operator()(fftw_plan_s* p) const
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(p);
    }
};

/// Real-to-complex transform of a fixed length with owned buffers.
class RealFft {
public:
    explicit RealFft(std::size_t n)
        : n_(n), in_(fftw_alloc_real(n)), out_(fftw_alloc_complex(n / 2 + 1))
    {
        require(in_ && out_, "FFTW allocation failed");
        std::lock_guard lock(fftw_planner_mutex());
        plan_.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE));
        require(plan_ != nullptr, "FFTW planning failed");
    }

    [[nodiscard]] std::span<double> input() { return {in_.get(), n_}; }

    /// Executes and returns |X[k]|^2 for k = 0..n/2.
    std::vector<double> power()
    {
        fftw_execute(plan_.get());
        std::vector<double> p(n_ / 2 + 1);
        for (std::size_t k = 0; k < p.size(); ++k) {
            p[k] = out_.get()[k][0] * out_.get()[k][0] + out_.get()[k][1] * out_.get()[k][1];
        }
        return p;
    }

private:
    struct FreeDeleter {
        void operator()(void* p) const { fftw_free(p); }
    };
    std::size_t n_;
    std::unique_ptr<double, FreeDeleter> in_;
    std::unique_ptr<fftw_complex, FreeDeleter> out_;
    std::unique_ptr<fftw_plan_s, FftwDeleter> plan_;
};

inline std::vector<double> hann_window(std::size_t n)
{
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    }
    return w;
}

} // namespace detail

/// Averaged periodogram with a periodic Hann window and 50 % overlap,
/// one-sided and scaled so that sum(psd) * bin width equals the mean square.
inline Spectrum psd(std::span<const double> x, double sample_rate, std::size_t segment_len)
{
    detail::require(segment_len >= 8 && segment_len % 2 == 0, "segment length must be even and >= 8");
    detail::require(x.size() >= segment_len, "signal shorter than one PSD segment");
    detail::require(sample_rate > 0.0, "sample rate must be positive");
    const auto w = detail::hann_window(segment_len);
    double wss = 0.0;
    for (double v : w) {
        wss += v * v;
    }
    detail::RealFft fft(segment_len);
    const std::size_t hop = segment_len / 2;
    const std::size_t nbins = segment_len / 2 + 1;
    std::vector<double> acc(nbins, 0.0);
    std::size_t segments = 0;
    for (std::size_t start = 0; start + segment_len <= x.size(); start += hop) {
        auto in = fft.input();
        for (std::size_t i = 0; i < segment_len; ++i) {
            in[i] = x[start + i] * w[i];
        }
        const auto p = fft.power();
        for (std::size_t k = 0; k < nbins; ++k) {
            acc[k] += p[k];
        }
        ++segments;
    }
    Spectrum s;
    s.bin_width_hz = sample_rate / static_cast<double>(segment_len);
    s.freq_hz.resize(nbins);
    s.psd.resize(nbins);
    const double scale = 1.0 / (sample_rate * wss * static_cast<double>(segments));
    for (std::size_t k = 0; k < nbins; ++k) {
        s.freq_hz[k] = static_cast<double>(k) * s.bin_width_hz;
        const bool edge = (k == 0) || (k == nbins - 1);
        s.psd[k] = acc[k] * scale * (edge ? 1.0 : 2.0);
    }
    return s;
}

inline Spectrum psd(const SampledSignal& signal, std::size_t segment_len)
{
    return psd(signal.samples, signal.sample_rate, segment_len);
}

/// Matched-filter output aligned so that index i corresponds to the filter
/// window starting at sample i: out[i] = sum_j x[i + j] h[j].
inline std::vector<double> matched_filter(std::span<const double> x, std::span<const double> h)
{
    detail::require(x.size() >= h.size(), "signal shorter than the filter");
    std::vector<double> out(x.size() - h.size() + 1, 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < h.size(); ++j) {
            acc += x[i + j] * h[j];
        }
        out[i] = acc;
    }
    return out;
}

/// Two-symbol-wide traces. Trace k covers samples
/// [offset + k n_ss - n_ss/2, offset + k n_ss + 3 n_ss/2), so the decision
/// instant sits at index n_ss/2 and the next one at 3 n_ss/2.
inline std::vector<std::vector<double>> eye_data(std::span<const double> x, int samples_per_symbol, long offset)
{
    detail::require(samples_per_symbol >= 2, "eye needs at least 2 samples per symbol");
    const long nss = samples_per_symbol;
    const long width = 2 * nss;
    std::vector<std::vector<double>> traces;
    for (long k = 0;; ++k) {
        const long start = offset + k * nss - nss / 2;
        if (start < 0) {
            continue;
        }
        if (start + width > static_cast<long>(x.size())) {
            break;
        }
        traces.emplace_back(x.begin() + start, x.begin() + start + width);
    }
    detail::require(traces.size() >= 2, "signal too short for an eye diagram");
    return traces;
}

/// Vertical opening: smallest decision sample sent as a symbol above
/// `threshold` minus the largest one sent below it. Negative when closed.
inline double eye_opening(std::span<const double> decision_samples, std::span<const double> sent, double threshold = 0.0)
{
    detail::require(decision_samples.size() == sent.size(), "decision samples and sent symbols differ in length");
    double lo_max = -INFINITY;
    double hi_min = INFINITY;
    for (std::size_t i = 0; i < sent.size(); ++i) {
        if (sent[i] > threshold) {
            hi_min = std::min(hi_min, decision_samples[i]);
        } else {
            lo_max = std::max(lo_max, decision_samples[i]);
        }
    }
    detail::require(std::isfinite(lo_max) && std::isfinite(hi_min), "eye needs symbols on both sides of the threshold");
    return hi_min - lo_max;
}

} // namespace scap
