#pragma once

// Analytic self-checks of the wave function and guidance fields, run by
// `qtraj verify`.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qtraj/quadrature.hpp"
#include "qtraj/rng.hpp"
#include "qtraj/sampling.hpp"
#include "qtraj/wavefield.hpp"

namespace qtraj {

struct CheckResult {
    std::string name;
    bool passed = false;
    double worst = 0.0;      // largest observed value of the checked quantity
    double threshold = 0.0;  // pass iff worst < threshold
    std::size_t points = 0;
};

struct VerifyOptions {
    std::size_t points = 10000;
    std::size_t revised_fields = 100;
    std::size_t anchoring_samples = 1000;
    std::uint64_t seed = 20240917;
    double t_max = 5.0;
    std::vector<double> normalization_times{0.0, 1.0, 3.5, 5.0};
    /// Points with rho below this fraction of max rho are skipped.
    double node_exclusion = 1e-3;
    /// Continuity residual must stay below this multiple of the truncation estimate.
    double continuity_margin = 10.0;
};

/// Spatial and temporal difference steps used by the residual checks:
/// h_x = sigma / 200, h_t = T / 2000 with T = 2 m sigma^2 / hbar.
inline double residual_step_x(const DoubleSlitParams& p) { return p.sigma / 200.0; }
inline double residual_step_t(const DoubleSlitParams& p) { return p.characteristic_time() / 2000.0; }

struct InteriorPoint {
    double x;
    double t;
};

/// Uniform draws over |x| < X + 3 sigma(t), 0 <= t <= t_max, keeping only
/// points outside the node-exclusion band.
inline std::vector<InteriorPoint> interior_points(const DoubleSlitParams& params, std::size_t n, double t_max,
                                                  double exclusion, StreamEngine& rng) {
    std::vector<InteriorPoint> pts;
    pts.reserve(n);
    while (pts.size() < n) {
        const double t = t_max * rng.uniform();
        const double reach = params.x_half + 3.0 * params.width(t);
        const double x = reach * (2.0 * rng.uniform() - 1.0);
        const WaveSnapshot snap(params, t);
        if (snap.rho(x) > exclusion * snap.rho_max_estimate()) pts.push_back({x, t});
    }
    return pts;
}

inline CheckResult check_schrodinger(const DoubleSlitParams& params, const VerifyOptions& opt) {
    StreamEngine rng({opt.seed, 1});
    const auto pts = interior_points(params, opt.points, opt.t_max, opt.node_exclusion, rng);
    CheckResult r{"schrodinger_residual", false, 0.0, 1e-4, pts.size()};
    for (const auto& pt : pts)
        r.worst = std::max(r.worst, std::abs(schrodinger_residual(pt.x, pt.t, params, residual_step_x(params),
                                                                  residual_step_t(params))));
    r.passed = r.worst < r.threshold;
    return r;
}

/// Largest ratio |continuity residual| / truncation estimate. The dBB field is
/// probed at opt.points points; the revised check spreads opt.points over
/// opt.revised_fields random initial conditions.
inline CheckResult check_continuity(const DoubleSlitParams& params, const VerifyOptions& opt, Theory theory) {
    StreamEngine rng({opt.seed, theory == Theory::dbb ? 2u : 3u});
    const double hx = residual_step_x(params);
    const double ht = residual_step_t(params);
    CheckResult r{theory == Theory::dbb ? "continuity_dbb" : "continuity_revised", false, 0.0,
                  opt.continuity_margin, 0};
    auto probe = [&](const GuidanceField& field, const std::vector<InteriorPoint>& pts) {
        for (const auto& pt : pts) {
            const double res = continuity_residual(pt.x, pt.t, field, params, hx, ht);
            const double bound = continuity_truncation_bound(pt.x, pt.t, field, params, hx, ht);
            r.worst = std::max(r.worst, std::abs(res) / bound);
            ++r.points;
        }
    };
    if (theory == Theory::dbb) {
        probe(GuidanceField::dbb(params), interior_points(params, opt.points, opt.t_max, opt.node_exclusion, rng));
    } else {
        const PositionSampler positions(params, 0.0);
        const MomentumSampler momenta(params);
        const std::size_t per_field = std::max<std::size_t>(1, opt.points / opt.revised_fields);
        for (std::size_t f = 0; f < opt.revised_fields; ++f) {
            const auto ic = make_initial_condition({opt.seed, 1000 + f}, positions, momenta, Theory::revised);
            probe(GuidanceField(params, ic), interior_points(params, per_field, opt.t_max, opt.node_exclusion, rng));
        }
    }
    r.passed = r.worst < r.threshold;
    return r;
}

/// Integration window for rho(., t): X + 12 sigma + 4 spread(t) either side.
inline double normalization_reach(const DoubleSlitParams& params, double t) {
    return params.x_half + 12.0 * params.sigma + 4.0 * params.spread(t);
}

inline double position_norm(const DoubleSlitParams& params, double t) {
    const WaveSnapshot snap(params, t);
    const double reach = normalization_reach(params, t);
    return integrate_panels([&snap](double x) { return snap.rho(x); }, -reach, reach, 64, 1e-12);
}

inline double momentum_norm(const DoubleSlitParams& params) {
    const double reach = 10.0 * params.sigma_p();
    return integrate_panels([&params](double p) { return momentum_density(p, params); }, -reach, reach, 64, 1e-12);
}

inline CheckResult check_normalization(const DoubleSlitParams& params, const VerifyOptions& opt) {
    CheckResult r{"normalization", false, 0.0, 1e-6, 0};
    for (double t : opt.normalization_times) {
        r.worst = std::max(r.worst, std::abs(position_norm(params, t) - 1.0));
        ++r.points;
    }
    r.worst = std::max(r.worst, std::abs(momentum_norm(params) - 1.0));
    ++r.points;
    r.passed = r.worst < r.threshold;
    return r;
}

/// |p_revised(x0, t0) - p0| over random initial conditions (t0 drawn in
/// [0, t_max], x0 from rho(., t0), p0 from the momentum density), and the dBB
/// momentum at t = 0 over sampled positions, which must be exactly zero.
inline CheckResult check_anchoring(const DoubleSlitParams& params, const VerifyOptions& opt) {
    CheckResult r{"anchoring", false, 0.0, 1e-12, 0};
    StreamEngine rng({opt.seed, 4});
    const MomentumSampler momenta(params);
    for (std::size_t i = 0; i < opt.anchoring_samples; ++i) {
        InitialCondition ic;
        ic.t0 = i == 0 ? 0.0 : opt.t_max * rng.uniform();
        ic.x0 = PositionSampler(params, ic.t0).draw(rng);
        ic.p0 = momenta.draw(rng);
        ic.theory = Theory::revised;
        if (!WaveSnapshot(params, ic.t0).try_p_bb(ic.x0)) continue;
        r.worst = std::max(r.worst, std::abs(p_revised(ic.x0, ic.t0, ic, params) - ic.p0));
        ++r.points;
    }
    const auto dbb = make_initial_conditions(opt.anchoring_samples, {opt.seed, 5000}, params, 0.0, Theory::dbb);
    for (const auto& ic : dbb) {
        r.worst = std::max(r.worst, ic.p0 == 0.0 ? 0.0 : std::abs(ic.p0) + r.threshold);
        ++r.points;
    }
    r.passed = r.worst < r.threshold;
    return r;
}

inline std::vector<CheckResult> run_all_checks(const DoubleSlitParams& params, const VerifyOptions& opt) {
    return {check_schrodinger(params, opt), check_continuity(params, opt, Theory::dbb),
            check_continuity(params, opt, Theory::revised), check_normalization(params, opt),
            check_anchoring(params, opt)};
}

}  // namespace qtraj
