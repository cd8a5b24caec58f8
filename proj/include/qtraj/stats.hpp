#pragma once

// Histograms, the one-sample Kolmogorov-Smirnov test, tabulated CDFs of the
// analytic densities, and the central-dip metric for momentum histograms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "qtraj/quadrature.hpp"
#include "qtraj/wavefield.hpp"

namespace qtraj {

struct HistogramSpec {
    std::size_t n_bins = 200;
    double lo = -1.0;
    double hi = 1.0;

    void validate() const {
        if (n_bins < 1) throw std::invalid_argument("HistogramSpec: n_bins must be >= 1");
        if (!(hi > lo)) throw std::invalid_argument("HistogramSpec: empty range");
    }
};

struct Histogram {
    std::vector<double> edges;           // n_bins + 1
    std::vector<std::uint64_t> counts;   // n_bins
    std::vector<double> density;         // counts / (in_range * width), all zero when in_range == 0
    std::size_t below = 0;
    std::size_t above = 0;
    std::size_t nonfinite = 0;

    std::size_t n_bins() const { return counts.size(); }
    double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
    double centre(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }

    std::size_t in_range() const {
        std::size_t n = 0;
        for (auto c : counts) n += c;
        return n;
    }
};

/// Values equal to the upper edge land in the last bin; everything outside
/// [lo, hi] is tallied in below/above, non-finite values in nonfinite.
inline Histogram build_histogram(std::span<const double> values, const HistogramSpec& spec) {
    spec.validate();
    Histogram h;
    const std::size_t n = spec.n_bins;
    h.edges.resize(n + 1);
    const double step = (spec.hi - spec.lo) / static_cast<double>(n);
    for (std::size_t i = 0; i <= n; ++i) h.edges[i] = i == n ? spec.hi : spec.lo + step * static_cast<double>(i);
    h.counts.assign(n, 0);
    for (double v : values) {
        if (!std::isfinite(v)) {
            ++h.nonfinite;
        } else if (v < spec.lo) {
            ++h.below;
        } else if (v > spec.hi) {
            ++h.above;
        } else {
            auto idx = static_cast<std::size_t>((v - spec.lo) / step);
            idx = std::min(idx, n - 1);
            // Guard against rounding at interior edges.
            while (idx > 0 && v < h.edges[idx]) --idx;
            while (idx + 1 < n && v >= h.edges[idx + 1]) ++idx;
            ++h.counts[idx];
        }
    }
    h.density.assign(n, 0.0);
    const auto total = static_cast<double>(h.in_range());
    if (total > 0)
        for (std::size_t i = 0; i < n; ++i) h.density[i] = static_cast<double>(h.counts[i]) / (total * h.width(i));
    return h;
}

// ---------------------------------------------------------------------------

struct KSResult {
    double statistic = 0.0;
    std::size_t n = 0;
    double alpha = 0.01;
    double critical_at_alpha = 0.0;
    bool passed = false;
};

/// Asymptotic Kolmogorov coefficient c(alpha) with critical value c / sqrt(n).
/// The conventional rounded values are used at alpha = 0.01 and 0.05.
inline double ks_coefficient(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("ks_coefficient: alpha must lie in (0, 1)");
    if (alpha == 0.01) return 1.63;
    if (alpha == 0.05) return 1.36;
    return std::sqrt(-0.5 * std::log(0.5 * alpha));
}

/// One-sample KS statistic sup |F_n - F| against a CDF callable.
template <class Cdf>
KSResult ks_test(std::span<const double> values, Cdf&& cdf, double alpha) {
    if (values.empty()) throw std::invalid_argument("ks_test: no values");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        const double upper = static_cast<double>(i + 1) / n - f;
        const double lower = f - static_cast<double>(i) / n;
        d = std::max({d, upper, lower});
    }
    KSResult r;
    r.statistic = d;
    r.n = sorted.size();
    r.alpha = alpha;
    r.critical_at_alpha = ks_coefficient(alpha) / std::sqrt(n);
    r.passed = d < r.critical_at_alpha;
    return r;
}

// ---------------------------------------------------------------------------

/// CDF of a smooth density, tabulated on a uniform grid by adaptive
/// quadrature per cell and interpolated with cubic Hermite polynomials that
/// use the density itself as the slope. Clamped to [0, 1]; zero below the
/// grid, and the accumulated mass above it.
class TabulatedCdf {
public:
    template <class Density>
    TabulatedCdf(Density&& density, double lo, double hi, std::size_t cells)
        : lo_(lo), hi_(hi), step_((hi - lo) / static_cast<double>(cells)) {
        if (!(hi > lo) || cells < 1) throw std::invalid_argument("TabulatedCdf: bad grid");
        values_.resize(cells + 1);
        slopes_.resize(cells + 1);
        double acc = 0.0;
        for (std::size_t i = 0; i <= cells; ++i) {
            const double x = node(i);
            if (i > 0) acc += integrate(density, node(i - 1), x, 1e-15);
            values_[i] = acc;
            slopes_[i] = density(x);
        }
    }

    double operator()(double x) const {
        if (!(x > lo_)) return 0.0;
        if (x >= hi_) return std::clamp(values_.back(), 0.0, 1.0);
        const auto i = std::min(static_cast<std::size_t>((x - lo_) / step_), values_.size() - 2);
        const double s = (x - node(i)) / step_;
        const double s2 = s * s;
        const double s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1;
        const double h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2;
        const double h11 = s3 - s2;
        const double v = h00 * values_[i] + h10 * step_ * slopes_[i] + h01 * values_[i + 1] +
                         h11 * step_ * slopes_[i + 1];
        return std::clamp(v, 0.0, 1.0);
    }

    /// Mass accumulated over the whole grid.
    double total() const { return values_.back(); }

private:
    double node(std::size_t i) const {
        return i + 1 == values_.size() ? hi_ : lo_ + step_ * static_cast<double>(i);
    }

    double lo_;
    double hi_;
    double step_;
    std::vector<double> values_;
    std::vector<double> slopes_;
};

/// Half-width of the interval that carries all but a negligible tail of rho(., t).
inline double position_support(const DoubleSlitParams& params, double t) {
    return params.x_half + 14.0 * params.width(t);
}

inline TabulatedCdf position_cdf(const DoubleSlitParams& params, double t) {
    const WaveSnapshot snap(params, t);
    const double reach = position_support(params, t);
    return TabulatedCdf([&snap](double x) { return snap.rho(x); }, -reach, reach, 8000);
}

inline TabulatedCdf momentum_cdf(const DoubleSlitParams& params) {
    const double reach = 14.0 * params.sigma_p();
    return TabulatedCdf([&params](double p) { return momentum_density(p, params); }, -reach, reach, 8000);
}

// ---------------------------------------------------------------------------

/// Band edges of the central-dip metric, in units of sigma_p: central band
/// |p| < central, side bands central < |p| < outer.
struct DipBands {
    double central = 0.5;
    double outer = 1.5;
};

namespace detail {
// Mean histogram density over [a, b], weighting bins by their overlap.
inline double band_mean(const Histogram& h, double a, double b) {
    double mass = 0.0;
    double length = 0.0;
    for (std::size_t i = 0; i < h.n_bins(); ++i) {
        const double overlap = std::min(b, h.edges[i + 1]) - std::max(a, h.edges[i]);
        if (overlap <= 0.0) continue;
        mass += h.density[i] * overlap;
        length += overlap;
    }
    return length > 0.0 ? mass / length : std::numeric_limits<double>::quiet_NaN();
}
}  // namespace detail

/// Mean density over the central band divided by the mean over both side
/// bands. Below 1 means the histogram dips at p = 0.
inline double central_dip_metric(const Histogram& h, double sigma_p, DipBands bands = {}) {
    const double a = bands.central * sigma_p;
    const double b = bands.outer * sigma_p;
    const double centre = detail::band_mean(h, -a, a);
    const double sides = 0.5 * (detail::band_mean(h, -b, -a) + detail::band_mean(h, a, b));
    return centre / sides;
}

/// The same ratio for a continuous density, by quadrature.
template <class Density>
double density_dip_metric(Density&& density, double sigma_p, DipBands bands = {}) {
    const double a = bands.central * sigma_p;
    const double b = bands.outer * sigma_p;
    const double centre = integrate(density, -a, a) / (2.0 * a);
    const double sides = (integrate(density, -b, -a) + integrate(density, a, b)) / (2.0 * (b - a));
    return centre / sides;
}

/// Largest bin density among bins whose centre lies in a side band.
inline double side_band_peak_density(const Histogram& h, double sigma_p, DipBands bands = {}) {
    const double a = bands.central * sigma_p;
    const double b = bands.outer * sigma_p;
    double peak = 0.0;
    for (std::size_t i = 0; i < h.n_bins(); ++i) {
        const double c = std::abs(h.centre(i));
        if (c > a && c < b) peak = std::max(peak, h.density[i]);
    }
    return peak;
}

}  // namespace qtraj
