#pragma once

// Trajectory ensembles, time slices through them, and per-slice statistics
// against the analytic position and momentum densities.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "qtraj/dynamics.hpp"
#include "qtraj/format.hpp"
#include "qtraj/sampling.hpp"
#include "qtraj/stats.hpp"
#include "qtraj/wavefield.hpp"

namespace qtraj {

enum class Observable { position, momentum };

inline std::string_view to_string(Observable o) { return o == Observable::position ? "position" : "momentum"; }

class SliceOutOfRange : public std::out_of_range {
public:
    explicit SliceOutOfRange(double t)
        : std::out_of_range("slice time " + format_double(t) + " ps outside the integration window") {}
};

struct EnsembleConfig {
    std::size_t n_traj = 40000;
    Theory theory = Theory::revised;
    std::uint64_t master_seed = 1;
    IntegrationSchedule schedule;
    std::vector<double> slice_times{0.0, 3.5, 5.0};
    std::size_t n_bins = 200;
    double position_range = 0.0;  // histogram covers [-range, range], nm
    double momentum_range = 0.0;  // m_e nm / ps
    /// Keep stalled trajectories frozen at their last state in later slices.
    bool include_stalled = false;
    /// Worker threads; 0 picks the hardware concurrency.
    unsigned threads = 0;

    /// Schedule defaults for `params`, position range X + 5 sigma(t_final),
    /// momentum range 6 sigma_p.
    static EnsembleConfig defaults(const DoubleSlitParams& params) {
        EnsembleConfig c;
        c.schedule = IntegrationSchedule::defaults(params);
        c.derive_ranges(params);
        return c;
    }

    void derive_ranges(const DoubleSlitParams& params) {
        position_range = params.x_half + 5.0 * params.width(schedule.t_final);
        momentum_range = 6.0 * params.sigma_p();
    }

    HistogramSpec histogram_spec(Observable o) const {
        const double r = o == Observable::position ? position_range : momentum_range;
        return {n_bins, -r, r};
    }

    void validate() const {
        schedule.validate();
        if (n_traj < 1) throw std::invalid_argument("EnsembleConfig: n_traj must be >= 1");
        for (double t : slice_times)
            if (!(t >= schedule.t0 && t <= schedule.t_final))
                throw std::invalid_argument("EnsembleConfig: slice time " + format_double(t) +
                                            " outside [t0, t_final]");
        HistogramSpec{n_bins, -position_range, position_range}.validate();
        HistogramSpec{n_bins, -momentum_range, momentum_range}.validate();
    }
};

/// Canonical key=value text of every input that influences the trajectories
/// and statistics. Thread count is left out since it never changes results.
inline std::string canonical_text(const EnsembleConfig& c, const DoubleSlitParams& p) {
    std::string s;
    auto put = [&s](std::string_view k, const std::string& v) {
        s.append(k);
        s.push_back('=');
        s.append(v);
        s.push_back('\n');
    };
    put("x_half_nm", format_double(p.x_half));
    put("sigma_nm", format_double(p.sigma));
    put("mass_me", format_double(p.units.mass));
    put("hbar", format_double(p.units.hbar));
    put("n_traj", std::to_string(c.n_traj));
    put("theory", std::string(to_string(c.theory)));
    put("seed", std::to_string(c.master_seed));
    put("t0_ps", format_double(c.schedule.t0));
    put("t_final_ps", format_double(c.schedule.t_final));
    put("dt_ps", format_double(c.schedule.dt_base));
    put("record_stride", std::to_string(c.schedule.record_stride));
    put("dt_min_ps", format_double(c.schedule.dt_min));
    put("max_speed", format_double(c.schedule.max_speed));
    put("x_bound_nm", format_double(c.schedule.x_bound));
    std::string slices;
    for (std::size_t i = 0; i < c.slice_times.size(); ++i) {
        if (i) slices.push_back(',');
        slices += format_double(c.slice_times[i]);
    }
    put("slices_ps", slices);
    put("bins", std::to_string(c.n_bins));
    put("position_range_nm", format_double(c.position_range));
    put("momentum_range", format_double(c.momentum_range));
    put("include_stalled", c.include_stalled ? "true" : "false");
    return s;
}

struct StatusCounts {
    std::size_t completed = 0;
    std::size_t exited_domain = 0;
    std::size_t node_stalled = 0;
};

struct EnsembleResult {
    std::vector<Trajectory> trajectories;
    EnsembleConfig config;
    DoubleSlitParams params;
    std::string config_digest;

    std::uint64_t master_seed() const { return config.master_seed; }
    Theory theory() const { return config.theory; }

    StatusCounts counts() const {
        StatusCounts c;
        for (const auto& t : trajectories) {
            switch (t.status) {
                case TrajectoryStatus::completed: ++c.completed; break;
                case TrajectoryStatus::exited_domain: ++c.exited_domain; break;
                case TrajectoryStatus::node_stalled: ++c.node_stalled; break;
            }
        }
        return c;
    }

    /// FNV-1a over the config digest and every recorded sample, bit for bit.
    std::string digest() const {
        Fnv1a h;
        h.update(config_digest);
        for (const auto& tr : trajectories) {
            h.update(to_string(tr.status));
            for (const auto& s : tr.samples) {
                h.update(format_double(s.t));
                h.update(format_double(s.x));
                h.update(format_double(s.p));
            }
        }
        return h.hex();
    }
};

namespace detail {

// Runs body(i) for i in [0, n) on `threads` workers. Each index is handled
// exactly once and writes only its own slot, so results do not depend on the
// thread count or scheduling.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next.store(n);
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// Integrates config.n_traj trajectories; trajectory i draws its initial
/// condition from stream (master_seed, i). Slice times are always recorded.
inline EnsembleResult run_ensemble(const EnsembleConfig& config, const DoubleSlitParams& params) {
    params.validate();
    config.validate();
    EnsembleResult result;
    result.config = config;
    result.params = params;
    result.config_digest = digest_hex(canonical_text(config, params));

    IntegrationSchedule schedule = config.schedule;
    schedule.record_times.insert(schedule.record_times.end(), config.slice_times.begin(), config.slice_times.end());
    std::sort(schedule.record_times.begin(), schedule.record_times.end());

    const PositionSampler positions(params, schedule.t0);
    const MomentumSampler momenta(params);
    result.trajectories.resize(config.n_traj);
    detail::parallel_for(config.n_traj, config.threads, [&](std::size_t i) {
        const auto ic = make_initial_condition({config.master_seed, i}, positions, momenta, config.theory);
        result.trajectories[i] = integrate(ic, schedule, params);
    });
    return result;
}

struct SliceValues {
    std::vector<double> values;
    std::vector<std::size_t> trajectory_ids;
    std::size_t excluded = 0;
};

/// Positions or momenta of every trajectory at time t. Positions are linearly
/// interpolated between the bracketing samples (exact at recorded times);
/// momenta are the guidance field at the interpolated point. Trajectories that
/// ended before t are excluded, except stalled ones when include_stalled is
/// set, which stay frozen at their last state.
inline SliceValues slice_values(const EnsembleResult& result, double t, Observable observable,
                                std::optional<bool> include_stalled = std::nullopt) {
    const auto& sched = result.config.schedule;
    if (!(t >= sched.t0 && t <= sched.t_final)) throw SliceOutOfRange(t);
    const bool keep_stalled = include_stalled.value_or(result.config.include_stalled);

    SliceValues out;
    out.values.reserve(result.trajectories.size());
    for (std::size_t id = 0; id < result.trajectories.size(); ++id) {
        const auto& tr = result.trajectories[id];
        const auto& s = tr.samples;
        if (s.empty() || t < s.front().t) {
            ++out.excluded;
            continue;
        }
        std::optional<double> value;
        if (t > s.back().t) {
            if (!(keep_stalled && tr.status == TrajectoryStatus::node_stalled)) {
                ++out.excluded;
                continue;
            }
            if (observable == Observable::position)
                value = s.back().x;
            else
                value = GuidanceField(result.params, tr.ic).try_momentum(s.back().x, t);
        } else {
            auto hi = std::lower_bound(s.begin(), s.end(), t, [](const Sample& a, double v) { return a.t < v; });
            if (hi->t == t) {
                value = observable == Observable::position ? hi->x : hi->p;
            } else {
                const auto lo = hi - 1;
                const double w = (t - lo->t) / (hi->t - lo->t);
                const double x = lo->x + w * (hi->x - lo->x);
                if (observable == Observable::position)
                    value = x;
                else
                    value = GuidanceField(result.params, tr.ic).try_momentum(x, t);
            }
        }
        if (!value) {
            ++out.excluded;
            continue;
        }
        out.values.push_back(*value);
        out.trajectory_ids.push_back(id);
    }
    return out;
}

/// Histogram, oracle curve and test statistics for one slice.
struct SliceReport {
    double t = 0.0;
    Observable observable = Observable::position;
    Histogram histogram;
    std::vector<double> oracle;  // analytic density at bin centres
    KSResult ks;
    std::size_t contributing = 0;
    std::size_t excluded = 0;
    // Momentum slices only.
    std::optional<double> central_dip;
    std::optional<double> oracle_central_dip;
    std::optional<double> side_band_peak;
};

inline SliceReport analyse_slice(const EnsembleResult& result, double t, Observable observable, double alpha = 0.01,
                                 DipBands bands = {}) {
    const auto& params = result.params;
    const auto slice = slice_values(result, t, observable);
    SliceReport r;
    r.t = t;
    r.observable = observable;
    r.contributing = slice.values.size();
    r.excluded = slice.excluded;
    r.histogram = build_histogram(slice.values, result.config.histogram_spec(observable));
    r.oracle.resize(r.histogram.n_bins());
    if (observable == Observable::position) {
        const WaveSnapshot snap(params, t);
        for (std::size_t i = 0; i < r.oracle.size(); ++i) r.oracle[i] = snap.rho(r.histogram.centre(i));
        if (!slice.values.empty()) r.ks = ks_test(slice.values, position_cdf(params, t), alpha);
    } else {
        for (std::size_t i = 0; i < r.oracle.size(); ++i)
            r.oracle[i] = momentum_density(r.histogram.centre(i), params);
        if (!slice.values.empty()) r.ks = ks_test(slice.values, momentum_cdf(params), alpha);
        const double sp = params.sigma_p();
        r.central_dip = central_dip_metric(r.histogram, sp, bands);
        r.oracle_central_dip = density_dip_metric([&params](double p) { return momentum_density(p, params); }, sp, bands);
        r.side_band_peak = side_band_peak_density(r.histogram, sp, bands);
    }
    return r;
}

/// Count of trajectory pairs whose order in x changes between consecutive
/// common sample times (both trajectories alive at both times).
inline std::size_t count_crossings(const EnsembleResult& result, const std::vector<double>& times) {
    std::size_t crossings = 0;
    std::vector<std::pair<double, std::size_t>> prev;
    for (double t : times) {
        const auto s = slice_values(result, t, Observable::position, false);
        std::vector<std::pair<double, std::size_t>> cur;
        cur.reserve(s.values.size());
        for (std::size_t k = 0; k < s.values.size(); ++k) cur.emplace_back(s.values[k], s.trajectory_ids[k]);
        if (!prev.empty()) {
            // Rank trajectories alive at both times by their previous position and
            // count inversions of the current positions in that order.
            std::vector<double> prev_x(result.trajectories.size(), std::numeric_limits<double>::quiet_NaN());
            for (auto [x, id] : prev) prev_x[id] = x;
            std::vector<std::pair<double, double>> both;
            for (auto [x, id] : cur)
                if (!std::isnan(prev_x[id])) both.emplace_back(prev_x[id], x);
            std::sort(both.begin(), both.end());
            std::vector<double> seq;
            seq.reserve(both.size());
            for (auto& b : both) seq.push_back(b.second);
            // Merge-sort inversion count.
            std::vector<double> tmp(seq.size());
            auto count = [&](auto&& self, std::size_t lo, std::size_t hi) -> std::size_t {
                if (hi - lo < 2) return 0;
                const std::size_t mid = (lo + hi) / 2;
                std::size_t inv = self(self, lo, mid) + self(self, mid, hi);
                std::size_t i = lo, j = mid, k = lo;
                while (i < mid && j < hi) {
                    if (seq[j] < seq[i]) {
                        inv += mid - i;
                        tmp[k++] = seq[j++];
                    } else {
                        tmp[k++] = seq[i++];
                    }
                }
                while (i < mid) tmp[k++] = seq[i++];
                while (j < hi) tmp[k++] = seq[j++];
                std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo), tmp.begin() + static_cast<std::ptrdiff_t>(hi),
                          seq.begin() + static_cast<std::ptrdiff_t>(lo));
                return inv;
            };
            crossings += count(count, 0, seq.size());
        }
        prev = std::move(cur);
    }
    return crossings;
}

/// Every distinct recorded sample time of the ensemble, sorted.
inline std::vector<double> recorded_times(const EnsembleResult& result) {
    std::vector<double> times;
    for (const auto& tr : result.trajectories)
        for (const auto& s : tr.samples) times.push_back(s.t);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    return times;
}

}  // namespace qtraj
