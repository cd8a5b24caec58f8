#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "qtraj/ensemble.hpp"

using namespace qtraj;

namespace {

const DoubleSlitParams params{};

EnsembleConfig small_config(Theory theory, std::size_t n, unsigned threads = 0) {
    auto c = EnsembleConfig::defaults(params);
    c.theory = theory;
    c.n_traj = n;
    c.master_seed = 2024;
    c.threads = threads;
    return c;
}

// The ensembles are shared across tests in this file.
const EnsembleResult& dbb_ensemble() {
    static const EnsembleResult r = run_ensemble(small_config(Theory::dbb, 1500), params);
    return r;
}

const EnsembleResult& revised_ensemble() {
    static const EnsembleResult r = run_ensemble(small_config(Theory::revised, 1500), params);
    return r;
}

}  // namespace

TEST(Ensemble, InitialSliceReturnsInitialConditions) {
    const auto& r = revised_ensemble();
    const auto xs = slice_values(r, 0.0, Observable::position);
    const auto ps = slice_values(r, 0.0, Observable::momentum);
    ASSERT_EQ(xs.values.size(), r.trajectories.size());
    for (std::size_t i = 0; i < xs.values.size(); ++i) {
        EXPECT_EQ(xs.values[i], r.trajectories[i].ic.x0);
        EXPECT_EQ(ps.values[i], r.trajectories[i].ic.p0);
    }
}

TEST(Ensemble, DbbInitialMomentumSliceIsZero) {
    for (double p : slice_values(dbb_ensemble(), 0.0, Observable::momentum).values) EXPECT_EQ(p, 0.0);
}

TEST(Ensemble, SliceAtRecordedTimeIsExact) {
    const auto& r = dbb_ensemble();
    const auto& tr = r.trajectories[17];
    const Sample s = tr.samples[5];
    const auto slice = slice_values(r, s.t, Observable::position);
    ASSERT_EQ(slice.trajectory_ids[17], 17u);
    EXPECT_EQ(slice.values[17], s.x);
}

TEST(Ensemble, SliceBetweenSamplesInterpolatesPosition) {
    const auto& r = dbb_ensemble();
    const auto& s = r.trajectories[3].samples;
    const double t = 0.25 * s[2].t + 0.75 * s[3].t;
    const auto slice = slice_values(r, t, Observable::position);
    EXPECT_DOUBLE_EQ(slice.values[3], s[2].x + (t - s[2].t) / (s[3].t - s[2].t) * (s[3].x - s[2].x));
    const auto mom = slice_values(r, t, Observable::momentum);
    EXPECT_DOUBLE_EQ(mom.values[3], p_bb(slice.values[3], t, params));
}

TEST(Ensemble, SliceOutsideWindowThrows) {
    EXPECT_THROW(slice_values(dbb_ensemble(), -0.1, Observable::position), SliceOutOfRange);
    EXPECT_THROW(slice_values(dbb_ensemble(), 5.01, Observable::momentum), SliceOutOfRange);
}

TEST(Ensemble, ContributingPlusExcludedIsEnsembleSize) {
    for (const auto* r : {&dbb_ensemble(), &revised_ensemble()}) {
        for (double t : {0.0, 1.0, 3.5, 5.0}) {
            for (auto obs : {Observable::position, Observable::momentum}) {
                const auto rep = analyse_slice(*r, t, obs);
                EXPECT_EQ(rep.contributing + rep.excluded, r->trajectories.size());
            }
        }
    }
}

TEST(Ensemble, StalledTrajectoriesCanBeKeptFrozen) {
    const auto& r = revised_ensemble();
    const auto counts = r.counts();
    ASSERT_GT(counts.node_stalled, 0u);
    const auto without = slice_values(r, 5.0, Observable::position, false);
    const auto with = slice_values(r, 5.0, Observable::position, true);
    EXPECT_EQ(with.values.size(), without.values.size() + counts.node_stalled);
    EXPECT_EQ(without.values.size(), counts.completed);
}

TEST(Ensemble, StatusCountsAddUp) {
    const auto c = revised_ensemble().counts();
    EXPECT_EQ(c.completed + c.exited_domain + c.node_stalled, 1500u);
    const auto d = dbb_ensemble().counts();
    EXPECT_EQ(d.completed, 1500u);
}

TEST(Ensemble, RevisedStallFractionRegressionBound) {
    // Observed with these defaults: about 13% node_stalled and 22%
    // exited_domain at n = 4000; the bounds guard against regressions.
    const auto c = revised_ensemble().counts();
    EXPECT_LT(static_cast<double>(c.node_stalled) / 1500.0, 0.17);
    EXPECT_LT(static_cast<double>(c.exited_domain) / 1500.0, 0.27);
}

TEST(Ensemble, DbbHasNoCrossings) {
    const auto& r = dbb_ensemble();
    EXPECT_EQ(count_crossings(r, recorded_times(r)), 0u);
    for (const auto& tr : r.trajectories)
        for (const auto& s : tr.samples) EXPECT_EQ(std::signbit(s.x), std::signbit(tr.ic.x0));
}

TEST(Ensemble, RevisedTrajectoriesCross) {
    const auto& r = revised_ensemble();
    EXPECT_GT(count_crossings(r, recorded_times(r)), 0u);
}

TEST(Ensemble, CrossingCounterCountsSwaps) {
    EnsembleResult r;
    r.config = small_config(Theory::dbb, 3);
    r.params = params;
    auto make = [](double a, double b) {
        Trajectory t;
        t.samples = {{0.0, a, 0.0}, {5.0, b, 0.0}};
        return t;
    };
    r.trajectories = {make(0.0, 2.0), make(1.0, 1.0), make(2.0, 0.0)};
    EXPECT_EQ(count_crossings(r, {0.0, 5.0}), 3u);
}

TEST(Ensemble, DigestIsDeterministicAndThreadIndependent) {
    const auto one = run_ensemble(small_config(Theory::revised, 300, 1), params);
    const auto four = run_ensemble(small_config(Theory::revised, 300, 4), params);
    const auto again = run_ensemble(small_config(Theory::revised, 300, 4), params);
    EXPECT_EQ(one.digest(), four.digest());
    EXPECT_EQ(four.digest(), again.digest());
    auto other = small_config(Theory::revised, 300, 4);
    other.master_seed = 2025;
    EXPECT_NE(run_ensemble(other, params).digest(), one.digest());
}

TEST(Ensemble, PrefixOfLargerEnsembleIsIdentical) {
    const auto small = run_ensemble(small_config(Theory::dbb, 50), params);
    const auto& big = dbb_ensemble();
    for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(small.trajectories[i].samples, big.trajectories[i].samples);
}

TEST(Ensemble, DbbPositionsMatchDensity) {
    const auto& r = dbb_ensemble();
    for (double t : {0.0, 3.5, 5.0}) EXPECT_TRUE(analyse_slice(r, t, Observable::position).ks.passed) << "t=" << t;
}

TEST(Ensemble, MomentumReportCarriesDipMetrics) {
    const auto rep = analyse_slice(dbb_ensemble(), 3.5, Observable::momentum);
    ASSERT_TRUE(rep.central_dip.has_value());
    EXPECT_GT(*rep.oracle_central_dip, 1.0);
    EXPECT_GT(*rep.side_band_peak, 0.0);
    EXPECT_EQ(rep.oracle.size(), rep.histogram.n_bins());
    EXPECT_FALSE(analyse_slice(dbb_ensemble(), 3.5, Observable::position).central_dip.has_value());
}

TEST(Ensemble, ConfigValidation) {
    auto c = small_config(Theory::dbb, 10);
    c.slice_times = {6.0};
    EXPECT_THROW(run_ensemble(c, params), std::invalid_argument);
    c = small_config(Theory::dbb, 0);
    EXPECT_THROW(run_ensemble(c, params), std::invalid_argument);
}
