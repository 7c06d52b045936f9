#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>

#include "scap/cpe.hpp"
#include "scap/metrics.hpp"
#include "scap/modems.hpp"

using namespace scap;

namespace {

std::shared_ptr<const FilterBank> scap_bank(double symbol_rate = 1.0)
{
    FilterSpec s;
    s.beta = 1.0;
    s.symbol_period = 1.0 / symbol_rate;
    return std::make_shared<const FilterBank>(make_scap_bank(s));
}

std::shared_ptr<const FilterBank> mcap_bank(double symbol_rate = 1.0)
{
    FilterSpec s;
    s.beta = 0.1;
    s.symbol_period = 1.0 / symbol_rate;
    return std::make_shared<const FilterBank>(make_mcap_bank(s, 4));
}

std::shared_ptr<const FilterBank> ook_bank(double symbol_rate = 1.0)
{
    FilterSpec s;
    s.beta = 1.0;
    s.symbol_period = 1.0 / symbol_rate;
    return std::make_shared<const FilterBank>(make_ook_bank(s));
}

std::vector<BitStream> payload(const ModemConfig& cfg, std::size_t symbols, std::uint64_t seed = 3)
{
    std::vector<BitStream> out;
    for (std::size_t b = 0; b < cfg.band_count(); ++b) {
        out.push_back(prbs15(prbs15_seed_from(derive_seed(seed, {b})), symbols * cfg.bits_per_symbol(b)));
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

} // namespace

class Loopback : public ::testing::TestWithParam<std::tuple<Format, SyncMode>> {};

TEST_P(Loopback, IdealChannelIsErrorFree)
{
    const auto [format, sync] = GetParam();
    auto bank = format == Format::scap ? scap_bank() : format == Format::mcap ? mcap_bank() : ook_bank();
    auto cfg = make_modem_config(format, bank, 64);
    cfg.sync = sync;
    const auto bits = payload(cfg, 2000);
    const auto sig = modulate(bits, cfg);
    const auto res = demodulate(sig, cfg);
    EXPECT_EQ(res.bits, concat(bits));
    EXPECT_EQ(res.timing_offset, 0);
}

INSTANTIATE_TEST_SUITE_P(AllFormats, Loopback,
                         ::testing::Combine(::testing::Values(Format::scap, Format::mcap, Format::ook),
                                            ::testing::Values(SyncMode::analytic, SyncMode::training)));

TEST(Modulate, UnitAveragePower)
{
    for (auto format : {Format::scap, Format::mcap, Format::ook}) {
        auto bank = format == Format::scap ? scap_bank() : format == Format::mcap ? mcap_bank() : ook_bank();
        const auto cfg = make_modem_config(format, bank, 32);
        const auto sig = modulate(payload(cfg, 500), cfg);
        EXPECT_NEAR(mean_square(sig.samples), 1.0, 1e-9) << to_string(format);
        EXPECT_EQ(sig.digest, cfg.digest());
    }
}

TEST(Modulate, MultiLevelScapLoopback)
{
    auto cfg = make_modem_config(Format::scap, scap_bank(), 64);
    cfg.levels_per_band = {4, 8, 4, 2};
    const auto bits = payload(cfg, 1000);
    const auto res = demodulate(modulate(bits, cfg), cfg);
    EXPECT_EQ(res.bits, concat(bits));
    EXPECT_EQ(cfg.total_bits_per_symbol(), 2 + 3 + 2 + 1);
}

TEST(Modulate, MultiLevelMcapLoopback)
{
    auto cfg = make_modem_config(Format::mcap, mcap_bank(), 64);
    cfg.levels_per_band = {4, 4, 2, 2};
    const auto bits = payload(cfg, 1000);
    EXPECT_EQ(demodulate(modulate(bits, cfg), cfg).bits, concat(bits));
}

TEST(Modulate, DeterministicWaveform)
{
    const auto cfg = make_modem_config(Format::scap, scap_bank(), 32);
    const auto bits = payload(cfg, 300);
    EXPECT_EQ(modulate(bits, cfg).samples, modulate(bits, cfg).samples);
}

TEST(Modulate, ZeroPayloadWithoutTrainingIsSilent)
{
    auto cfg = make_modem_config(Format::ook, ook_bank(), 0);
    cfg.cpe = false;
    BitStream zeros;
    zeros.bits.assign(100, 0);
    const auto sig = ook_modulate(zeros, cfg);
    for (double v : sig.samples) {
        ASSERT_EQ(v, 0.0);
    }
}

TEST(Modulate, SingleBranchEqualsShapedPam)
{
    const auto bank = scap_bank();
    const auto stagger = bank->stagger_samples();
    const std::size_t n = 50;
    const auto a = pam_map(prbs15(11, n), 2);
    std::vector<std::vector<double>> syms(4, std::vector<double>(n, 0.0));
    syms[1] = a;
    const auto y = compose_branches(*bank, syms, stagger);
    // Reference: direct convolution of the zero-padded symbols with f1, delayed by T/2.
    const auto up = upsample_zero_pad(a, bank->samples_per_symbol());
    const auto& h = bank->taps[1];
    std::vector<double> ref(y.size(), 0.0);
    for (std::size_t i = 0; i < up.size(); ++i) {
        for (std::size_t j = 0; j < h.size(); ++j) {
            ref[i + j + static_cast<std::size_t>(stagger[1])] += up[i] * h[j];
        }
    }
    for (std::size_t i = 0; i < y.size(); ++i) {
        ASSERT_NEAR(y[i], ref[i], 1e-12);
    }
}

TEST(Modulate, CompositeIsLinearBeforeNormalisation)
{
    const auto bank = scap_bank();
    const auto stagger = bank->stagger_samples();
    const std::size_t n = 40;
    std::vector<std::vector<double>> a(4, std::vector<double>(n, 0.0));
    std::vector<std::vector<double>> b(4, std::vector<double>(n, 0.0));
    a[0] = pam_map(prbs15(1, n), 2);
    a[3] = pam_map(prbs15(2, n), 2);
    b[1] = pam_map(prbs15(3, n), 2);
    b[2] = pam_map(prbs15(4, n), 2);
    auto sum = a;
    sum[1] = b[1];
    sum[2] = b[2];
    const auto ya = compose_branches(*bank, a, stagger);
    const auto yb = compose_branches(*bank, b, stagger);
    const auto ys = compose_branches(*bank, sum, stagger);
    for (std::size_t i = 0; i < ys.size(); ++i) {
        ASSERT_NEAR(ys[i], ya[i] + yb[i], 1e-12);
    }
}

TEST(Modulate, RejectsMismatchedBandLengths)
{
    const auto cfg = make_modem_config(Format::scap, scap_bank(), 32);
    auto bits = payload(cfg, 100);
    bits[2].bits.pop_back();
    EXPECT_THROW(modulate(bits, cfg), config_error);
}

TEST(Modulate, RejectsStaggerOffGrid)
{
    auto cfg = make_modem_config(Format::scap, scap_bank(), 32);
    cfg.stagger = {0, 2, 0, 0};
    EXPECT_THROW(cfg.validate(), config_error);
}

TEST(Demodulate, RejectsShortTrainingWithCpe)
{
    auto cfg = make_modem_config(Format::scap, scap_bank(), 8);
    const auto sig = modulate(payload(cfg, 100), cfg);
    EXPECT_THROW(demodulate(sig, cfg), config_error);
    cfg.cpe = false;
    EXPECT_NO_THROW(demodulate(sig, cfg));
}

TEST(Demodulate, TrainingSyncFindsDelay)
{
    auto cfg = make_modem_config(Format::scap, scap_bank(), 128);
    cfg.sync = SyncMode::training;
    const auto bits = payload(cfg, 500);
    auto sig = modulate(bits, cfg);
    sig.samples.insert(sig.samples.begin(), 5, 0.0);
    const auto res = demodulate(sig, cfg, 500);
    EXPECT_EQ(res.timing_offset, 5);
    ASSERT_EQ(res.group_offsets.size(), 3U);
    EXPECT_EQ(res.group_offsets[0], 5);
    EXPECT_EQ(res.group_offsets[2], 5);
    // The complex pair absorbs a one-sample slip into its phase estimate.
    EXPECT_LE(std::abs(res.group_offsets[1] - 5), 1);
    EXPECT_EQ(res.bits, concat(bits));
}

TEST(Demodulate, TrainingSyncIsPerGroup)
{
    // Sub-band 1 arrives on time, sub-band 4 three samples late.
    auto base = make_modem_config(Format::scap, scap_bank(), 128);
    auto first = base;
    first.active_bands = {true, false, false, false};
    auto last = base;
    last.active_bands = {false, false, false, true};
    const auto bits = payload(base, 500);
    auto sig = modulate(bits, first);
    const auto late = modulate(bits, last);
    for (std::size_t i = 3; i < sig.samples.size(); ++i) {
        sig.samples[i] += late.samples[i - 3];
    }
    auto rx_cfg = base;
    rx_cfg.sync = SyncMode::training;
    rx_cfg.active_bands = {true, false, false, true};
    const auto res = demodulate(sig, rx_cfg, 500);
    ASSERT_EQ(res.group_offsets.size(), 3U);
    EXPECT_EQ(res.group_offsets[0], 0);
    EXPECT_EQ(res.group_offsets[2], 3);
    EXPECT_EQ(res.band_bits[0], bits[0]);
    EXPECT_EQ(res.band_bits[3], bits[3]);
}

TEST(Demodulate, GainIsAbsorbedByCorrection)
{
    for (auto format : {Format::scap, Format::mcap, Format::ook}) {
        auto bank = format == Format::scap ? scap_bank() : format == Format::mcap ? mcap_bank() : ook_bank();
        const auto cfg = make_modem_config(format, bank, 64);
        const auto bits = payload(cfg, 500);
        auto sig = modulate(bits, cfg);
        const auto reference = demodulate(sig, cfg);
        for (double& v : sig.samples) {
            v *= 0.7;
        }
        const auto res = demodulate(sig, cfg);
        EXPECT_EQ(res.bits, concat(bits)) << to_string(format);
        EXPECT_NEAR(res.cpe.front().correction_gain() / reference.cpe.front().correction_gain(), 1.0 / 0.7, 1e-9)
            << to_string(format);
    }
}

TEST(Demodulate, IsolatedBandCarriesOnlyItsPayload)
{
    auto cfg = make_modem_config(Format::scap, scap_bank(), 64);
    cfg.active_bands = {false, false, true, false};
    auto bits = payload(cfg, 400);
    for (std::size_t b : {0U, 1U, 3U}) {
        bits[b].bits.clear();
    }
    const auto res = demodulate(modulate(bits, cfg), cfg);
    EXPECT_EQ(res.band_bits[2], bits[2]);
    EXPECT_TRUE(res.band_bits[0].empty());
    EXPECT_TRUE(res.band_bits[3].empty());
}

TEST(Demodulate, IsolatedMcapBandConcentratesEnergy)
{
    auto cfg = make_modem_config(Format::mcap, mcap_bank(), 32);
    cfg.active_bands = {false, true, false, false};
    auto bits = payload(cfg, 300);
    const auto sig = modulate(bits, cfg);
    EXPECT_NEAR(mean_square(sig.samples), 1.0, 1e-9);
    EXPECT_EQ(demodulate(sig, cfg).band_bits[1], bits[1]);
}

TEST(Cpe, RecoversRotationAndGain)
{
    const double angle = 10.0 * std::numbers::pi / 180.0;
    const cplx g = std::polar(0.7, angle);
    const auto a = pam_map(prbs15(21, 256), 2);
    const auto b = pam_map(prbs15(22, 256), 2);
    std::vector<cplx> known(256);
    std::vector<cplx> rx(256);
    for (std::size_t i = 0; i < 256; ++i) {
        known[i] = {a[i], b[i]};
        rx[i] = g * known[i];
    }
    CpeEstimate est;
    const auto fixed = cpe_correct(rx, known, &est);
    EXPECT_NEAR(est.correction_angle(), -angle, 1e-12);
    EXPECT_NEAR(est.correction_gain(), 1.0 / 0.7, 1e-12);
    for (std::size_t i = 0; i < 256; ++i) {
        EXPECT_NEAR(std::abs(fixed[i] - known[i]), 0.0, 1e-12);
    }
}

TEST(Cpe, NegativeRotation)
{
    const double angle = -10.0 * std::numbers::pi / 180.0;
    std::vector<cplx> known;
    std::vector<cplx> rx;
    for (int i = 0; i < 64; ++i) {
        known.emplace_back(i % 2 ? 1.0 : -1.0, i % 3 ? 1.0 : -1.0);
        rx.push_back(std::polar(1.0, angle) * known.back());
    }
    EXPECT_NEAR(estimate_cpe(rx, known).correction_angle(), -angle, 1e-12);
}

TEST(Cpe, UnipolarGainAndOffset)
{
    const auto bits = prbs15(9, 100);
    const auto known = ook_map(bits.bits);
    std::vector<double> rx(known.size());
    for (std::size_t i = 0; i < rx.size(); ++i) {
        rx[i] = 0.4 * known[i] - 0.3;
    }
    const auto est = estimate_gain_offset(rx, known);
    EXPECT_NEAR(est.gain.real(), 0.4, 1e-12);
    EXPECT_NEAR(est.offset, -0.3, 1e-12);
}

TEST(Cpe, RejectsShortTraining)
{
    std::vector<cplx> v(8, cplx(1.0, 0.0));
    EXPECT_THROW(estimate_cpe(v, v), config_error);
}
