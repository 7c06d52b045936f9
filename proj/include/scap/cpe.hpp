#pragma once

// Common phase error (CPE) / gain correction from a known training prefix.
//
// Hilbert-pair branches are handled jointly as complex symbols. For a
// staggered pair the complex matched-filter output is taken at each branch's
// own sampling instant; the in-phase branch then reads Re(z / h) at its
// instants and the quadrature branch Im(z / h) at its instants.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "scap/error.hpp"

namespace scap {

using cplx = std::complex<double>;

inline constexpr int min_training_len = 16;

/// received ~= gain * known (+ offset for unipolar branches).
struct CpeEstimate {
    cplx gain{1.0, 0.0};
    double offset = 0.0;

    /// Rotation the corrector applies, radians.
    [[nodiscard]] double correction_angle() const { return -std::arg(gain); }
    /// Scale the corrector applies.
    [[nodiscard]] double correction_gain() const { return 1.0 / std::abs(gain); }
};

namespace detail {

inline void check_training(std::size_t n, std::size_t m)
{
    require(n == m, "training observation and reference lengths differ");
    require(n >= static_cast<std::size_t>(min_training_len), "CPE needs at least 16 training symbols");
}

} // namespace detail

/// Complex least-squares gain: sum(conj(known) rx) / sum |known|^2. Its angle
/// is the angle of the mean of conj(known) * rx.
inline CpeEstimate estimate_cpe(std::span<const cplx> rx, std::span<const cplx> known)
{
    detail::check_training(rx.size(), known.size());
    cplx num{};
    double den = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += std::conj(known[i]) * rx[i];
        den += std::norm(known[i]);
    }
    detail::require(den > 0.0, "training symbols carry no energy");
    return {num / den, 0.0};
}

/// Staggered-pair form. z_i: complex outputs at in-phase instants, z_q: at
/// quadrature instants; a, b: the known in-phase and quadrature symbols.
inline CpeEstimate estimate_cpe_pair(std::span<const cplx> z_i, std::span<const double> a,
                                     std::span<const cplx> z_q, std::span<const double> b)
{
    detail::check_training(z_i.size(), a.size());
    detail::check_training(z_q.size(), b.size());
    cplx num{};
    double den = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        num += a[k] * z_i[k];
        den += a[k] * a[k];
    }
    for (std::size_t k = 0; k < b.size(); ++k) {
        num += cplx(0.0, -b[k]) * z_q[k];
        den += b[k] * b[k];
    }
    detail::require(den > 0.0, "training symbols carry no energy");
    return {num / den, 0.0};
}

/// Real least-squares gain for a bipolar PAM branch.
inline CpeEstimate estimate_gain(std::span<const double> rx, std::span<const double> known)
{
    detail::check_training(rx.size(), known.size());
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += known[i] * rx[i];
        den += known[i] * known[i];
    }
    detail::require(den > 0.0, "training symbols carry no energy");
    return {cplx(num / den, 0.0), 0.0};
}

/// Least-squares gain and offset (rx ~= g * known + o) for unipolar branches.
inline CpeEstimate estimate_gain_offset(std::span<const double> rx, std::span<const double> known)
{
    detail::check_training(rx.size(), known.size());
    const double n = static_cast<double>(rx.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sx += known[i];
        sy += rx[i];
        sxx += known[i] * known[i];
        sxy += known[i] * rx[i];
    }
    const double var = sxx - sx * sx / n;
    detail::require(var > 0.0, "unipolar training must contain both levels");
    const double g = (sxy - sx * sy / n) / var;
    return {cplx(g, 0.0), (sy - g * sx) / n};
}

inline std::vector<cplx> cpe_correct(std::span<const cplx> rx, const CpeEstimate& est)
{
    std::vector<cplx> out(rx.size());
    for (std::size_t i = 0; i < rx.size(); ++i) {
        out[i] = rx[i] / est.gain;
    }
    return out;
}

inline std::vector<double> cpe_correct(std::span<const double> rx, const CpeEstimate& est)
{
    std::vector<double> out(rx.size());
    for (std::size_t i = 0; i < rx.size(); ++i) {
        out[i] = (rx[i] - est.offset) / est.gain.real();
    }
    return out;
}

/// Estimate on the leading training symbols of rx, then correct all of rx.
inline std::vector<cplx> cpe_correct(std::span<const cplx> rx, std::span<const cplx> training,
                                     CpeEstimate* estimate = nullptr)
{
    detail::require(rx.size() >= training.size(), "fewer received symbols than training symbols");
    const auto est = estimate_cpe(rx.first(training.size()), training);
    if (estimate != nullptr) {
        *estimate = est;
    }
    return cpe_correct(rx, est);
}

inline std::vector<double> cpe_correct(std::span<const double> rx, std::span<const double> training,
                                       CpeEstimate* estimate = nullptr)
{
    detail::require(rx.size() >= training.size(), "fewer received symbols than training symbols");
    const auto est = estimate_gain(rx.first(training.size()), training);
    if (estimate != nullptr) {
        *estimate = est;
    }
    return cpe_correct(rx, est);
}

} // namespace scap
