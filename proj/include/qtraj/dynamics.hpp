#pragma once

// Single-trajectory integration of m dx/dt = p(x, t) under either guidance law.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qtraj/initial_condition.hpp"
#include "qtraj/wavefield.hpp"

namespace qtraj {

enum class TrajectoryStatus { completed, exited_domain, node_stalled };

inline std::string_view to_string(TrajectoryStatus status) {
    switch (status) {
        case TrajectoryStatus::completed: return "completed";
        case TrajectoryStatus::exited_domain: return "exited_domain";
        case TrajectoryStatus::node_stalled: return "node_stalled";
    }
    return "unknown";
}

inline TrajectoryStatus parse_status(std::string_view text) {
    if (text == "completed") return TrajectoryStatus::completed;
    if (text == "exited_domain") return TrajectoryStatus::exited_domain;
    if (text == "node_stalled") return TrajectoryStatus::node_stalled;
    throw std::invalid_argument("unknown trajectory status '" + std::string(text) + "'");
}

struct Sample {
    double t = 0.0;
    double x = 0.0;
    double p = 0.0;

    friend bool operator==(const Sample&, const Sample&) = default;
};

struct IntegrationSchedule {
    double t0 = 0.0;        // ps
    double t_final = 5.0;   // ps
    double dt_base = 0.005; // ps
    std::size_t record_stride = 20;
    double dt_min = 0.005 / 1048576.0;  // ps
    double max_speed = 0.0;             // nm/ps
    double x_bound = 0.0;               // nm, |x| beyond this ends the trajectory
    /// Extra times at which a sample is always recorded (e.g. slice times).
    std::vector<double> record_times;

    /// max_speed = 50 sigma_p / m and x_bound = X + 40 sigma.
    static IntegrationSchedule defaults(const DoubleSlitParams& params) {
        IntegrationSchedule s;
        s.max_speed = 50.0 * params.sigma_p() / params.units.mass;
        s.x_bound = params.x_half + 40.0 * params.sigma;
        return s;
    }

    void validate() const {
        if (!(t_final > t0)) throw std::invalid_argument("IntegrationSchedule: t_final must exceed t0");
        if (!(dt_min > 0.0) || !(dt_min <= dt_base))
            throw std::invalid_argument("IntegrationSchedule: need 0 < dt_min <= dt_base");
        if (record_stride < 1) throw std::invalid_argument("IntegrationSchedule: record_stride must be >= 1");
        if (!(max_speed > 0.0)) throw std::invalid_argument("IntegrationSchedule: max_speed must be positive");
        if (!(x_bound > 0.0)) throw std::invalid_argument("IntegrationSchedule: x_bound must be positive");
    }
};

struct Trajectory {
    std::vector<Sample> samples;
    TrajectoryStatus status = TrajectoryStatus::completed;
    InitialCondition ic;
    std::size_t rejected_steps = 0;

    /// Time of the last recorded sample.
    double end_time() const { return samples.empty() ? ic.t0 : samples.back().t; }
};

/// p_field(x, t) / m for the law in ic.theory.
inline double guidance_velocity(Theory theory, InitialCondition ic, double x, double t,
                                const DoubleSlitParams& params) {
    ic.theory = theory;
    return GuidanceField(params, ic).momentum(x, t) / params.units.mass;
}

namespace detail {

struct Checkpoint {
    double t;
    bool record;
};

// Base grid t0 + k dt_base (last point clipped to t_final) merged with the
// extra record times.
inline std::vector<Checkpoint> checkpoints(const IntegrationSchedule& s) {
    const double span = s.t_final - s.t0;
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(span / s.dt_base - 1e-9)));
    const double snap = 1e-9 * s.dt_base;
    std::vector<Checkpoint> out;
    out.reserve(steps + s.record_times.size());
    for (std::size_t k = 1; k <= steps; ++k) {
        const double t = k == steps ? s.t_final : s.t0 + static_cast<double>(k) * s.dt_base;
        out.push_back({t, k % s.record_stride == 0 || k == steps});
    }
    for (double t : s.record_times) {
        if (!(t > s.t0 && t <= s.t_final)) continue;
        auto it = std::lower_bound(out.begin(), out.end(), t - snap,
                                   [](const Checkpoint& c, double v) { return c.t < v; });
        if (it != out.end() && std::abs(it->t - t) <= snap)
            it->record = true;
        else
            out.insert(it, {t, true});
    }
    return out;
}

}  // namespace detail

/// Classical RK4 with step halving. A step is retried at half size when any
/// stage (or the end point) falls below the node floor, the result is not
/// finite, or |dx| > max_speed * dt; the step size doubles back toward dt_base
/// after each accepted step. Recording happens every record_stride base steps,
/// at t_final, and at each schedule.record_times entry.
///
/// Termination: |x| > x_bound gives exited_domain (the exit sample is kept).
/// When the step size drops below dt_min the trajectory is node_stalled
/// (the last accepted state is kept as a final sample),
/// except when it is outside both packet centres and moving outward: such a
/// trajectory is running away through the low-density tail and is reported
/// as exited_domain.
inline Trajectory integrate(const InitialCondition& ic, const IntegrationSchedule& schedule,
                            const DoubleSlitParams& params) {
    schedule.validate();
    const GuidanceField field(params, ic);
    const double m = params.units.mass;

    Trajectory traj;
    traj.ic = ic;
    const auto start = field.at(ic.t0).try_momentum(ic.x0);
    if (!start) throw std::invalid_argument("integrate: initial position lies below the node floor");

    double t = ic.t0;
    double x = ic.x0;
    // The revised field reproduces p0 at the anchor only up to rounding; store it exactly.
    double p = ic.theory == Theory::revised ? ic.p0 : *start;
    double dt = schedule.dt_base;
    double last_dx = 0.0;
    traj.samples.push_back({t, x, p});

    for (const auto& cp : detail::checkpoints(schedule)) {
        while (t < cp.t) {
            double h = std::min(dt, cp.t - t);
            const bool lands = cp.t - t - h <= 1e-9 * schedule.dt_base;
            if (lands) h = cp.t - t;
            const double t_next = lands ? cp.t : t + h;

            std::optional<double> p_next;
            double x_next = x;
            {
                const auto mid = field.at(t + 0.5 * h);
                const double k1 = p / m;
                const auto q2 = mid.try_momentum(x + 0.5 * h * k1);
                const auto q3 = q2 ? mid.try_momentum(x + 0.5 * h * (*q2 / m)) : std::nullopt;
                std::optional<double> q4;
                if (q3) q4 = field.at(t + h).try_momentum(x + h * (*q3 / m));
                if (q4) {
                    x_next = x + h / 6.0 * (k1 + 2.0 * (*q2 / m) + 2.0 * (*q3 / m) + *q4 / m);
                    if (std::isfinite(x_next) && std::abs(x_next - x) <= schedule.max_speed * h)
                        p_next = field.at(t_next).try_momentum(x_next);
                }
            }

            if (!p_next || !std::isfinite(*p_next)) {
                ++traj.rejected_steps;
                dt = 0.5 * h;
                if (dt < schedule.dt_min) {
                    const bool escaping = std::abs(x) > params.x_half && x * last_dx > 0.0;
                    traj.status = escaping ? TrajectoryStatus::exited_domain : TrajectoryStatus::node_stalled;
                    if (t > traj.samples.back().t) traj.samples.push_back({t, x, p});
                    return traj;
                }
                continue;
            }

            last_dx = x_next - x;
            x = x_next;
            t = t_next;
            p = *p_next;
            dt = std::min(2.0 * dt, schedule.dt_base);

            if (std::abs(x) > schedule.x_bound) {
                traj.samples.push_back({t, x, p});
                traj.status = TrajectoryStatus::exited_domain;
                return traj;
            }
        }
        if (cp.record) traj.samples.push_back({t, x, p});
    }
    traj.status = TrajectoryStatus::completed;
    return traj;
}

/// Re-evaluates the guidance field at every recorded (t, x). Throws
/// NodeSingularity if a stored sample lies below the node floor.
inline std::vector<double> momentum_along(const Trajectory& trajectory, Theory theory, InitialCondition ic,
                                          const DoubleSlitParams& params) {
    ic.theory = theory;
    const GuidanceField field(params, ic);
    std::vector<double> out;
    out.reserve(trajectory.samples.size());
    for (const auto& s : trajectory.samples) out.push_back(field.momentum(s.x, s.t));
    return out;
}

}  // namespace qtraj
