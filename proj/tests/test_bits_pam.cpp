#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "scap/bits.hpp"
#include "scap/pam.hpp"
#include "scap/seeds.hpp"

using namespace scap;

TEST(Prbs15, MaximalPeriodAndBalance)
{
    const auto s = prbs15(1, 2 * prbs15_period);
    const auto ones = std::accumulate(s.bits.begin(), s.bits.begin() + prbs15_period, 0);
    EXPECT_EQ(ones, 16384);
    for (std::size_t i = 0; i < prbs15_period; ++i) {
        ASSERT_EQ(s.bits[i], s.bits[i + prbs15_period]);
    }
    // No shorter period divides 2^15 - 1 = 7 * 31 * 151.
    for (std::size_t p : {7U, 31U, 151U, 217U, 1057U, 4681U}) {
        bool periodic = true;
        for (std::size_t i = 0; i + p < prbs15_period && periodic; ++i) {
            periodic = s.bits[i] == s.bits[i + p];
        }
        EXPECT_FALSE(periodic) << p;
    }
}

TEST(Prbs15, RunLengthsMatchMaximalSequence)
{
    // An m-sequence of degree 15 has exactly one run of 15 ones and one of 14 zeros.
    const auto s = prbs15(0x1234, prbs15_period);
    std::vector<int> ones_runs(16, 0);
    std::vector<int> zero_runs(16, 0);
    std::size_t i = 0;
    // Start after a transition so the cyclic wrap does not split a run.
    while (s.bits[i] == s.bits[prbs15_period - 1]) {
        ++i;
    }
    const std::size_t start = i;
    std::size_t n = 0;
    while (n < prbs15_period) {
        const auto v = s.bits[(start + n) % prbs15_period];
        int len = 0;
        while (n < prbs15_period && s.bits[(start + n) % prbs15_period] == v) {
            ++len;
            ++n;
        }
        (v ? ones_runs : zero_runs)[static_cast<std::size_t>(len)]++;
    }
    EXPECT_EQ(ones_runs[15], 1);
    EXPECT_EQ(zero_runs[14], 1);
    EXPECT_EQ(zero_runs[15], 0);
}

TEST(Prbs15, RejectsInvalidSeeds)
{
    EXPECT_THROW(prbs15(0, 10), config_error);
    EXPECT_THROW(prbs15(0x8000, 10), config_error);
    EXPECT_GE(prbs15_seed_from(0), 1U);
    EXPECT_LE(prbs15_seed_from(~0ULL), 0x7fffU);
}

TEST(Seeds, DerivedStreamsAreUncorrelated)
{
    const std::size_t n = 20000;
    const auto a = prbs15(prbs15_seed_from(derive_seed(7, {0, 1, 2})), n);
    const auto b = prbs15(prbs15_seed_from(derive_seed(7, {0, 1, 3})), n);
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        c += (a.bits[i] ? 1.0 : -1.0) * (b.bits[i] ? 1.0 : -1.0);
    }
    EXPECT_LE(std::abs(c / n), 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Seeds, DistinctCoordinatesGiveDistinctSeeds)
{
    std::set<std::uint64_t> seen;
    for (std::uint64_t f = 0; f < 3; ++f) {
        for (std::uint64_t r = 0; r < 15; ++r) {
            for (std::uint64_t k = 0; k < 20; ++k) {
                seen.insert(derive_seed(42, {f, r, k}));
            }
        }
    }
    EXPECT_EQ(seen.size(), 3U * 15U * 20U);
    EXPECT_NE(derive_seed(42, {1, 2}), derive_seed(42, {2, 1}));
}

TEST(BitFile, RoundTripAndLayout)
{
    const auto path = std::filesystem::temp_directory_path() / "scap_bits_roundtrip.txt";
    const auto s = prbs15(99, 170);
    write_bit_file(path.string(), s);
    std::ifstream in(path);
    std::string line;
    std::vector<std::size_t> lengths;
    while (std::getline(in, line)) {
        lengths.push_back(line.size());
    }
    EXPECT_EQ(lengths, (std::vector<std::size_t>{80, 80, 10}));
    EXPECT_EQ(read_bit_file(path.string()), s);
    std::filesystem::remove(path);
}

TEST(BitFile, RejectsForeignCharacters)
{
    const auto path = std::filesystem::temp_directory_path() / "scap_bits_bad.txt";
    {
        std::ofstream out(path);
        out << "0101x\n";
    }
    EXPECT_THROW(read_bit_file(path.string()), config_error);
    std::filesystem::remove(path);
}

TEST(Pam, AlphabetsHaveUnitPower)
{
    for (int levels : {2, 4, 8, 16}) {
        const auto a = pam_alphabet(levels);
        double p = 0.0;
        for (double v : a) {
            p += v * v;
        }
        EXPECT_NEAR(p / levels, 1.0, 1e-12) << levels;
    }
    EXPECT_NEAR(pam_level(0, 4), -3.0 / std::sqrt(5.0), 1e-15);
    EXPECT_NEAR(pam_level(3, 4), 3.0 / std::sqrt(5.0), 1e-15);
}

TEST(Pam, GrayNeighboursDifferInOneBit)
{
    for (int levels : {4, 8, 16}) {
        const int k = bits_per_level(levels);
        std::vector<double> symbols(pam_alphabet(levels));
        const auto bits = pam_demap(symbols, levels);
        for (int i = 0; i + 1 < levels; ++i) {
            int diff = 0;
            for (int b = 0; b < k; ++b) {
                diff += bits.bits[static_cast<std::size_t>(i * k + b)] != bits.bits[static_cast<std::size_t>((i + 1) * k + b)];
            }
            EXPECT_EQ(diff, 1) << levels << " level " << i;
        }
    }
}

TEST(Pam, MapDemapRoundTrip)
{
    for (int levels : {2, 4, 8}) {
        const auto bits = prbs15(5, 3 * 960);
        EXPECT_EQ(pam_demap(pam_map(bits, levels), levels), bits) << levels;
    }
}

TEST(Pam, TwoLevelIsAntipodal)
{
    const std::vector<std::uint8_t> bits{0, 1, 1, 0};
    EXPECT_EQ(pam_map(bits, 2), (std::vector<double>{-1.0, 1.0, 1.0, -1.0}));
}

TEST(Pam, RejectsBadInput)
{
    EXPECT_THROW(bits_per_level(3), config_error);
    EXPECT_THROW(bits_per_level(1), config_error);
    const std::vector<std::uint8_t> odd{1, 0, 1};
    EXPECT_THROW(pam_map(odd, 4), config_error);
}

TEST(Pam, UpsampleZeroPad)
{
    const std::vector<double> s{1.0, -1.0};
    EXPECT_EQ(upsample_zero_pad(s, 3), (std::vector<double>{1.0, 0.0, 0.0, -1.0, 0.0, 0.0}));
}
