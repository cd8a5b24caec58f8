#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "qtraj/rng.hpp"
#include "qtraj/sampling.hpp"
#include "qtraj/stats.hpp"

using namespace qtraj;

namespace {

const DoubleSlitParams params{};

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::vector<double> normals(std::size_t n, SeededStream stream, double shift = 0.0) {
    StreamEngine rng(stream);
    std::vector<double> out(n);
    for (auto& v : out) v = shift + rng.normal();
    return out;
}

}  // namespace

TEST(Histogram, EmptyInputGivesZeroCounts) {
    const auto h = build_histogram(std::vector<double>{}, {10, -1.0, 1.0});
    EXPECT_EQ(h.n_bins(), 10u);
    EXPECT_EQ(h.in_range(), 0u);
    for (double d : h.density) EXPECT_EQ(d, 0.0);
}

TEST(Histogram, AllValuesInOneBin) {
    const std::vector<double> v(37, 0.31);
    const auto h = build_histogram(v, {4, 0.0, 1.0});
    EXPECT_EQ(h.counts[1], 37u);
    EXPECT_EQ(h.in_range(), 37u);
    EXPECT_DOUBLE_EQ(h.density[1], 4.0);
}

TEST(Histogram, OutOfRangeAndNonFiniteAreTallied) {
    const std::vector<double> v{-2.0, -1.0, 0.0, 1.0, 3.0, std::numeric_limits<double>::quiet_NaN(),
                                std::numeric_limits<double>::infinity()};
    const auto h = build_histogram(v, {2, -1.0, 1.0});
    EXPECT_EQ(h.below, 1u);
    EXPECT_EQ(h.above, 1u);
    EXPECT_EQ(h.nonfinite, 2u);
    EXPECT_EQ(h.counts[0], 1u);  // lower edge is inclusive
    EXPECT_EQ(h.counts[1], 2u);  // upper edge lands in the last bin
}

TEST(Histogram, DensityIntegratesToOne) {
    const auto v = normals(5000, {3, 0});
    const auto h = build_histogram(v, {37, -2.0, 3.0});
    double total = 0.0;
    for (std::size_t i = 0; i < h.n_bins(); ++i) total += h.density[i] * h.width(i);
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Histogram, RejectsEmptyRange) {
    EXPECT_THROW(build_histogram(std::vector<double>{1.0}, {10, 1.0, 1.0}), std::invalid_argument);
    EXPECT_THROW(build_histogram(std::vector<double>{1.0}, {0, 0.0, 1.0}), std::invalid_argument);
}

TEST(Histogram, RevisedInitialMomentaWithinPoissonBand) {
    constexpr std::size_t n = 40000;
    const auto ics = make_initial_conditions(n, {1, 0}, params, 0.0, Theory::revised);
    std::vector<double> p;
    for (const auto& ic : ics) p.push_back(ic.p0);
    const double sp = params.sigma_p();
    const auto h = build_histogram(p, {200, -6.0 * sp, 6.0 * sp});
    std::size_t ok = 0;
    for (std::size_t i = 0; i < h.n_bins(); ++i) {
        // Expected count from the exact bin probability (Simpson on the bin).
        const double a = h.edges[i], b = h.edges[i + 1];
        const double prob = (b - a) / 6.0 *
                            (momentum_density(a, params) + 4.0 * momentum_density(0.5 * (a + b), params) +
                             momentum_density(b, params));
        const double expected = n * prob;
        const double band = 4.0 * std::sqrt(expected) / (n * h.width(i));
        if (std::abs(h.density[i] - expected / (n * h.width(i))) <= band) ++ok;
    }
    EXPECT_GE(ok, 190u);
}

TEST(Ks, CriticalCoefficients) {
    EXPECT_DOUBLE_EQ(ks_coefficient(0.01), 1.63);
    EXPECT_DOUBLE_EQ(ks_coefficient(0.05), 1.36);
    EXPECT_NEAR(ks_coefficient(0.10), 1.224, 1e-3);
    EXPECT_THROW(ks_coefficient(0.0), std::invalid_argument);
}

TEST(Ks, SelfConsistencyAcrossRepetitions) {
    int passed = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed)
        passed += ks_test(normals(10000, {seed, 0}), normal_cdf, 0.01).passed;
    EXPECT_GE(passed, 99);
}

TEST(Ks, GrossShiftFails) {
    const auto r = ks_test(normals(10000, {1, 0}, 2.0), normal_cdf, 0.01);
    EXPECT_FALSE(r.passed);
    EXPECT_GT(r.statistic, 0.5);
}

TEST(Ks, SingleValue) {
    const std::vector<double> one{0.0};
    const auto r = ks_test(one, normal_cdf, 0.01);
    EXPECT_DOUBLE_EQ(r.statistic, 0.5);
    EXPECT_DOUBLE_EQ(r.critical_at_alpha, 1.63);
    EXPECT_TRUE(r.passed);
    EXPECT_EQ(r.n, 1u);
}

TEST(Ks, PassedIffBelowCritical) {
    const auto r = ks_test(normals(50, {2, 0}), normal_cdf, 0.05);
    EXPECT_EQ(r.passed, r.statistic < r.critical_at_alpha);
    EXPECT_THROW(ks_test(std::vector<double>{}, normal_cdf, 0.05), std::invalid_argument);
}

TEST(TabulatedCdf, ReproducesNormalCdf) {
    const TabulatedCdf cdf([](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }, -9.0, 9.0, 400);
    for (double x : {-9.5, -3.0, -0.7, 0.0, 0.123, 1.9, 4.0, 10.0})
        EXPECT_NEAR(cdf(x), normal_cdf(x), 1e-8) << "x=" << x;
}

TEST(TabulatedCdf, PositionAndMomentumOraclesAreNormalized) {
    for (double t : {0.0, 3.5, 5.0}) EXPECT_NEAR(position_cdf(params, t).total(), 1.0, 1e-9);
    EXPECT_NEAR(momentum_cdf(params).total(), 1.0, 1e-9);
    EXPECT_NEAR(momentum_cdf(params)(0.0), 0.5, 1e-12);
    EXPECT_NEAR(position_cdf(params, 2.0)(0.0), 0.5, 1e-12);
}

TEST(DipMetric, DirectMomentumDrawsPeakAtCentre) {
    const double sp = params.sigma_p();
    const auto p = sample_momenta(40000, {8, 0}, params);
    const auto h = build_histogram(p, {200, -6.0 * sp, 6.0 * sp});
    EXPECT_GT(central_dip_metric(h, sp), 1.0);
    EXPECT_GT(density_dip_metric([](double q) { return momentum_density(q, params); }, sp), 1.0);
}

TEST(DipMetric, FlatHistogramGivesOne) {
    Histogram h = build_histogram(std::vector<double>{}, {24, -6.0, 6.0});
    std::fill(h.density.begin(), h.density.end(), 1.0 / 12.0);
    EXPECT_DOUBLE_EQ(central_dip_metric(h, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(side_band_peak_density(h, 1.0), 1.0 / 12.0);
}

TEST(DipMetric, TwinPeaksGiveADip) {
    // Two narrow peaks at +-1 with nothing at the centre.
    std::vector<double> v;
    for (int i = 0; i < 1000; ++i) {
        v.push_back(1.0 + 0.01 * (i % 7));
        v.push_back(-1.0 - 0.01 * (i % 7));
    }
    const auto h = build_histogram(v, {60, -3.0, 3.0});
    EXPECT_LT(central_dip_metric(h, 1.0), 0.1);
    EXPECT_GT(side_band_peak_density(h, 1.0), 1.0);
}
