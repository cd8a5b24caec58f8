#pragma once

// Rejection samplers for the initial position density |psi(x, t0)|^2 and the
// momentum-space density, plus assembly of initial conditions.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "qtraj/initial_condition.hpp"
#include "qtraj/rng.hpp"
#include "qtraj/wavefield.hpp"

namespace qtraj {

/// A proposal had target density above envelope * bound. This is a defect in
/// the envelope constant, never a data condition.
class EnvelopeViolation : public std::logic_error {
public:
    explicit EnvelopeViolation(const std::string& what) : std::logic_error(what) {}
};

namespace detail {
inline double gaussian_pdf(double x, double width) {
    const double z = x / width;
    return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * width);
}
// Equality between target and envelope is attained (e.g. at x = 0, t = 0), so
// the check allows for rounding in the two evaluation paths.
inline constexpr double envelope_slack = 1e-9;
}  // namespace detail

/// Draws from rho(x, t0). Proposal: equal-weight mixture of the two packet
/// densities (centres -X, +X, width sigma(t0)). Since
/// |psi_l + psi_r|^2 <= 2(|psi_l|^2 + |psi_r|^2), rho <= (4/N) * mixture.
class PositionSampler {
public:
    PositionSampler(const DoubleSlitParams& params, double t0)
        : snap_(params, t0), width_(params.width(t0)), bound_(4.0 / norm_constant(params)) {}

    double envelope(double x) const {
        const double x_half = snap_.params().x_half;
        return 0.5 * (detail::gaussian_pdf(x + x_half, width_) + detail::gaussian_pdf(x - x_half, width_));
    }

    double bound() const { return bound_; }
    const WaveSnapshot& snapshot() const { return snap_; }

    double draw(StreamEngine& rng) const {
        const double x_half = snap_.params().x_half;
        for (;;) {
            const double centre = rng.coin() ? x_half : -x_half;
            const double x = centre + width_ * rng.normal();
            const double target = snap_.rho(x);
            const double cap = bound_ * envelope(x);
            if (target > cap * (1.0 + detail::envelope_slack))
                throw EnvelopeViolation("position sampler: rho exceeds envelope at x=" + std::to_string(x));
            if (rng.uniform() * cap < target) return x;
        }
    }

private:
    WaveSnapshot snap_;
    double width_;
    double bound_;
};

/// Draws from the momentum density: Gaussian proposal of width sigma_p,
/// accepted with probability cos^2(X p / hbar).
class MomentumSampler {
public:
    explicit MomentumSampler(const DoubleSlitParams& params) : params_(params) {
        const double r = params.x_half / params.sigma;
        bound_ = 2.0 / (1.0 + std::exp(-0.5 * r * r));
    }

    double bound() const { return bound_; }

    double draw(StreamEngine& rng) const {
        const double sp = params_.sigma_p();
        const double hbar = params_.units.hbar;
        for (;;) {
            const double p = sp * rng.normal();
            const double target = momentum_density(p, params_);
            const double cap = bound_ * detail::gaussian_pdf(p, sp);
            if (target > cap * (1.0 + detail::envelope_slack))
                throw EnvelopeViolation("momentum sampler: density exceeds envelope at p=" + std::to_string(p));
            const double c = std::cos(params_.x_half * p / hbar);
            if (rng.uniform() < c * c) return p;
        }
    }

private:
    DoubleSlitParams params_;
    double bound_ = 1.0;
};

inline std::vector<double> sample_positions(std::size_t n, SeededStream stream, const DoubleSlitParams& params,
                                            double t0) {
    if (n == 0) throw std::invalid_argument("sample_positions: n must be at least 1");
    const PositionSampler sampler(params, t0);
    StreamEngine rng(stream);
    std::vector<double> out(n);
    for (auto& x : out) x = sampler.draw(rng);
    return out;
}

inline std::vector<double> sample_momenta(std::size_t n, SeededStream stream, const DoubleSlitParams& params) {
    if (n == 0) throw std::invalid_argument("sample_momenta: n must be at least 1");
    const MomentumSampler sampler(params);
    StreamEngine rng(stream);
    std::vector<double> out(n);
    for (auto& p : out) p = sampler.draw(rng);
    return out;
}

/// Initial condition drawn from a single stream: position first (redrawn while
/// below the node floor), then, for the revised law, an independent momentum.
/// Both theories therefore share positions for the same stream.
inline InitialCondition make_initial_condition(SeededStream stream, const PositionSampler& positions,
                                               const MomentumSampler& momenta, Theory theory) {
    StreamEngine rng(stream);
    const WaveSnapshot& snap = positions.snapshot();
    InitialCondition ic;
    ic.t0 = snap.time();
    ic.theory = theory;
    for (;;) {
        ic.x0 = positions.draw(rng);
        if (auto p = snap.try_p_bb(ic.x0)) {
            ic.p0 = *p;
            break;
        }
    }
    if (theory == Theory::revised) ic.p0 = momenta.draw(rng);
    return ic;
}

/// Trajectory i uses stream_index first.stream_index + i.
inline std::vector<InitialCondition> make_initial_conditions(std::size_t n, SeededStream first,
                                                             const DoubleSlitParams& params, double t0,
                                                             Theory theory) {
    if (n == 0) throw std::invalid_argument("make_initial_conditions: n must be at least 1");
    const PositionSampler positions(params, t0);
    const MomentumSampler momenta(params);
    std::vector<InitialCondition> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(make_initial_condition({first.master_seed, first.stream_index + i}, positions, momenta,
                                             theory));
    return out;
}

}  // namespace qtraj
