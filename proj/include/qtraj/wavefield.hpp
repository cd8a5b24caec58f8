#pragma once

// Closed-form double-slit wave function: two freely spreading Gaussian packets
// centred at -X (left slit) and +X (right slit), their densities, and the two
// guidance momentum fields built on top of them.

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include "qtraj/initial_condition.hpp"
#include "qtraj/units.hpp"

namespace qtraj {

using ComplexAmplitude = std::complex<double>;

/// The left slit sits at x = -X, so its packet exponent reads (x + X)^2.
enum class Slit { left, right };

/// Raised when a guidance field is requested where the density is below the
/// node floor; the momentum field is undefined there.
class NodeSingularity : public std::domain_error {
public:
    NodeSingularity(double x, double t)
        : std::domain_error("guidance field undefined at node (x=" + std::to_string(x) +
                            " nm, t=" + std::to_string(t) + " ps)"),
          x_(x), t_(t) {}
    double x() const noexcept { return x_; }
    double t() const noexcept { return t_; }

private:
    double x_;
    double t_;
};

/// Guidance fields are undefined where rho < node_floor_fraction * max_x rho.
inline constexpr double node_floor_fraction = 1e-12;

struct DoubleSlitParams {
    double x_half = 50.0;  // nm, half the slit separation
    double sigma = 10.0;   // nm, slit width
    UnitSystem units{};

    void validate() const {
        units.validate();
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw std::invalid_argument("DoubleSlitParams: sigma must be positive and finite");
        if (!(x_half >= 0.0) || !std::isfinite(x_half))
            throw std::invalid_argument("DoubleSlitParams: x_half must be non-negative and finite");
    }

    /// Momentum width of a single slit packet, hbar / (2 sigma).
    double sigma_p() const { return units.hbar / (2.0 * sigma); }

    /// Dispersion length hbar t / (2 m sigma).
    double spread(double t) const { return units.hbar * t / (2.0 * units.mass * sigma); }

    /// Standard deviation of one packet's density at time t.
    double width(double t) const { return std::hypot(sigma, spread(t)); }

    /// 2 m sigma^2 / hbar: time over which a packet doubles its area.
    double characteristic_time() const { return 2.0 * units.mass * sigma * sigma / units.hbar; }

    /// hbar^2 / (2 m sigma^2).
    double characteristic_energy() const {
        return units.hbar * units.hbar / (2.0 * units.mass * sigma * sigma);
    }
};

/// Normalization of psi_l + psi_r: N = 2 + 2 exp(-X^2 / (2 sigma^2)).
inline double norm_constant(const DoubleSlitParams& params) {
    const double r = params.x_half / params.sigma;
    return 2.0 + 2.0 * std::exp(-0.5 * r * r);
}

/// psi and d psi / dx at one point.
struct WaveValue {
    ComplexAmplitude psi;
    ComplexAmplitude dpsi_dx;

    double rho() const { return std::norm(psi); }
};

/// The wave function frozen at one time. Hoists every t-dependent factor so
/// that each x evaluation costs two complex exponentials.
class WaveSnapshot {
public:
    WaveSnapshot(const DoubleSlitParams& params, double t) : params_(params), t_(t) {
        const double hbar_t_over_m = params.units.hbar * t / params.units.mass;
        const ComplexAmplitude a{4.0 * params.sigma * params.sigma, 2.0 * hbar_t_over_m};
        inv_a_ = 1.0 / a;
        const ComplexAmplitude root =
            std::sqrt(ComplexAmplitude{params.sigma, hbar_t_over_m / (2.0 * params.sigma)});
        packet_prefactor_ = 1.0 / (std::pow(2.0 * std::numbers::pi, 0.25) * root);
        psi_prefactor_ = packet_prefactor_ / std::sqrt(norm_constant(params));
        const double width = params.width(t);
        // |psi_l + psi_r|^2 <= 2 (|psi_l|^2 + |psi_r|^2) <= 4 * packet peak.
        rho_max_ = 4.0 / (std::sqrt(2.0 * std::numbers::pi) * width * norm_constant(params));
    }

    double time() const { return t_; }
    const DoubleSlitParams& params() const { return params_; }

    /// Single-slit packet, without the 1/sqrt(N) superposition normalization.
    ComplexAmplitude packet(Slit slit, double x) const {
        const double u = slit == Slit::left ? x + params_.x_half : x - params_.x_half;
        return packet_prefactor_ * std::exp(-u * u * inv_a_);
    }

    WaveValue evaluate(double x) const {
        const double ul = x + params_.x_half;
        const double ur = x - params_.x_half;
        const ComplexAmplitude el = std::exp(-ul * ul * inv_a_);
        const ComplexAmplitude er = std::exp(-ur * ur * inv_a_);
        return {psi_prefactor_ * (el + er), psi_prefactor_ * (-2.0 * inv_a_) * (ul * el + ur * er)};
    }

    ComplexAmplitude psi(double x) const { return evaluate(x).psi; }
    double rho(double x) const { return std::norm(psi(x)); }

    /// Analytic upper bound on max_x rho at this time.
    double rho_max_estimate() const { return rho_max_; }
    double node_floor() const { return node_floor_fraction * rho_max_; }
    bool below_node_floor(double rho) const { return !(rho >= node_floor()); }

    /// hbar Im[(d psi/dx) / psi], or nullopt below the node floor.
    std::optional<double> try_p_bb(double x) const { return try_p_bb(evaluate(x)); }

    std::optional<double> try_p_bb(const WaveValue& v) const {
        const double r = v.rho();
        if (below_node_floor(r)) return std::nullopt;
        const ComplexAmplitude num = v.dpsi_dx * std::conj(v.psi);
        // + 0.0 folds a signed zero from a real psi into +0.
        return params_.units.hbar * num.imag() / r + 0.0;
    }

    double p_bb(double x) const {
        if (auto p = try_p_bb(x)) return *p;
        throw NodeSingularity(x, t_);
    }

private:
    DoubleSlitParams params_;
    double t_;
    ComplexAmplitude inv_a_;
    ComplexAmplitude packet_prefactor_;
    ComplexAmplitude psi_prefactor_;
    double rho_max_;
};

inline ComplexAmplitude packet_amplitude(Slit slit, double x, double t, const DoubleSlitParams& params) {
    return WaveSnapshot(params, t).packet(slit, x);
}

inline ComplexAmplitude psi(double x, double t, const DoubleSlitParams& params) {
    return WaveSnapshot(params, t).psi(x);
}

inline double rho(double x, double t, const DoubleSlitParams& params) {
    return WaveSnapshot(params, t).rho(x);
}

/// De Broglie-Bohm momentum field. Throws NodeSingularity below the node floor.
inline double p_bb(double x, double t, const DoubleSlitParams& params) {
    return WaveSnapshot(params, t).p_bb(x);
}

/// Momentum field seen by one trajectory: dBB field for Theory::dbb, or the dBB
/// field plus the intrinsic term [p0 - p_bb(x0,t0)] rho(x0,t)/rho(x,t) for
/// Theory::revised. The intrinsic flux rho * term / m is uniform in x, so the
/// continuity equation is preserved for every fixed initial condition.
class GuidanceField {
public:
    GuidanceField(const DoubleSlitParams& params, const InitialCondition& ic)
        : params_(params), ic_(ic) {
        if (ic.theory == Theory::revised) {
            const WaveSnapshot s0(params, ic.t0);
            const auto v0 = s0.evaluate(ic.x0);
            const auto p0_bb = s0.try_p_bb(v0);
            if (!p0_bb) throw NodeSingularity(ic.x0, ic.t0);
            excess_ = ic.p0 - *p0_bb;
        }
    }

    static GuidanceField dbb(const DoubleSlitParams& params) {
        return GuidanceField(params, InitialCondition{});
    }

    Theory theory() const { return ic_.theory; }
    const InitialCondition& initial_condition() const { return ic_; }
    const DoubleSlitParams& params() const { return params_; }

    /// p0 - p_bb(x0, t0); zero for the dBB law.
    double excess_momentum() const { return excess_; }

    /// The field frozen at time t; evaluates rho(x0, t) once for all x.
    class AtTime {
    public:
        AtTime(const GuidanceField& field, double t) : field_(&field), snap_(field.params_, t) {
            if (field.ic_.theory == Theory::revised) anchor_ = snap_.rho(field.ic_.x0);
        }

        const WaveSnapshot& snapshot() const { return snap_; }

        std::optional<double> try_momentum(double x) const {
            const auto v = snap_.evaluate(x);
            const auto pbb = snap_.try_p_bb(v);
            if (!pbb || field_->ic_.theory == Theory::dbb) return pbb;
            return *pbb + field_->excess_ * anchor_ / v.rho();
        }

    private:
        const GuidanceField* field_;
        WaveSnapshot snap_;
        double anchor_ = 0.0;
    };

    AtTime at(double t) const { return AtTime(*this, t); }

    std::optional<double> try_momentum(double x, double t) const { return at(t).try_momentum(x); }

    double momentum(double x, double t) const {
        if (auto p = try_momentum(x, t)) return *p;
        throw NodeSingularity(x, t);
    }

    double operator()(double x, double t) const { return momentum(x, t); }

private:
    DoubleSlitParams params_;
    InitialCondition ic_;
    double excess_ = 0.0;
};

/// Revised momentum field for the trajectory started at `ic` (theory is taken
/// as revised regardless of ic.theory).
inline double p_revised(double x, double t, InitialCondition ic, const DoubleSlitParams& params) {
    ic.theory = Theory::revised;
    return GuidanceField(params, ic).momentum(x, t);
}

/// Momentum-space density |psi~(p)|^2 of the superposition: a Gaussian of width
/// sigma_p modulated by cos^2(X p / hbar). Independent of time for a free particle.
inline double momentum_density(double p, const DoubleSlitParams& params) {
    const double sp = params.sigma_p();
    const double hbar = params.units.hbar;
    const double overlap = std::exp(-2.0 * sp * sp * params.x_half * params.x_half / (hbar * hbar));
    const double prefactor = std::sqrt(2.0 / std::numbers::pi) / sp / (1.0 + overlap);
    const double c = std::cos(params.x_half * p / hbar);
    return prefactor * std::exp(-p * p / (2.0 * sp * sp)) * c * c;
}

// ---------------------------------------------------------------------------
// Finite-difference residuals. These are verification instruments; nothing in
// the production path differentiates numerically.

template <class F>
concept WaveFunction = requires(F f, double x, double t) {
    { f(x, t) } -> std::convertible_to<ComplexAmplitude>;
};

template <class F>
concept MomentumField = requires(F f, double x, double t) {
    { f(x, t) } -> std::convertible_to<double>;
};

/// i hbar psi_t + hbar^2/(2m) psi_xx by central differences, divided by
/// |psi| * hbar^2 / (2 m sigma^2).
template <WaveFunction Psi>
ComplexAmplitude schrodinger_residual(Psi&& wave, double x, double t, const DoubleSlitParams& params,
                                      double h_x, double h_t) {
    const double hbar = params.units.hbar;
    const double m = params.units.mass;
    const ComplexAmplitude centre = wave(x, t);
    const ComplexAmplitude d_t = (ComplexAmplitude(wave(x, t + h_t)) - ComplexAmplitude(wave(x, t - h_t))) / (2.0 * h_t);
    const ComplexAmplitude d_xx =
        (ComplexAmplitude(wave(x + h_x, t)) - 2.0 * centre + ComplexAmplitude(wave(x - h_x, t))) / (h_x * h_x);
    const ComplexAmplitude residual = ComplexAmplitude{0.0, hbar} * d_t + (hbar * hbar / (2.0 * m)) * d_xx;
    return residual / (std::abs(centre) * params.characteristic_energy());
}

inline ComplexAmplitude schrodinger_residual(double x, double t, const DoubleSlitParams& params, double h_x,
                                             double h_t) {
    return schrodinger_residual([&params](double xx, double tt) { return psi(xx, tt, params); }, x, t, params,
                                h_x, h_t);
}

/// d rho/dt + d(rho p / m)/dx by central differences, divided by rho / T where
/// T = 2 m sigma^2 / hbar.
template <MomentumField Field>
double continuity_residual(double x, double t, Field&& field, const DoubleSlitParams& params, double h_x,
                           double h_t) {
    const double m = params.units.mass;
    auto flux = [&](double xx) { return rho(xx, t, params) * static_cast<double>(field(xx, t)) / m; };
    const double d_t = (rho(x, t + h_t, params) - rho(x, t - h_t, params)) / (2.0 * h_t);
    const double d_x = (flux(x + h_x) - flux(x - h_x)) / (2.0 * h_x);
    return (d_t + d_x) * params.characteristic_time() / rho(x, t, params);
}

/// Leading-order truncation estimate for continuity_residual at the same steps:
/// T/rho * (h_t^2/6 |rho_ttt| + h_x^2/6 |j_xxx|), third derivatives taken from
/// wider five-point stencils (max over three neighbouring centres so a local
/// zero of the third derivative does not collapse the estimate), plus a
/// rounding term for the two difference quotients.
template <MomentumField Field>
double continuity_truncation_bound(double x, double t, Field&& field, const DoubleSlitParams& params, double h_x,
                                   double h_t) {
    const double m = params.units.mass;
    auto density_at = [&](double tt) { return rho(x, tt, params); };
    auto flux_at = [&](double xx) { return rho(xx, t, params) * static_cast<double>(field(xx, t)) / m; };
    auto third = [](auto&& f, double c, double h) {
        return (f(c + 2.0 * h) - 2.0 * f(c + h) + 2.0 * f(c - h) - f(c - 2.0 * h)) / (2.0 * h * h * h);
    };
    auto third_magnitude = [&](auto&& f, double c, double h, double big) {
        return std::max({std::abs(third(f, c, big)), std::abs(third(f, c + h, big)), std::abs(third(f, c - h, big))});
    };
    const double big_t = 4.0 * h_t;
    const double big_x = 4.0 * h_x;
    const double rho0 = rho(x, t, params);
    const double rho_ttt = third_magnitude(density_at, t, h_t, big_t);
    const double j_xxx = third_magnitude(flux_at, x, h_x, big_x);
    constexpr double eps = 64.0 * std::numeric_limits<double>::epsilon();
    const double rounding = eps * (rho0 / h_t + std::abs(flux_at(x)) / h_x + rho0 * params.sigma_p() / (m * h_x));
    return params.characteristic_time() / rho0 *
           (h_t * h_t / 6.0 * rho_ttt + h_x * h_x / 6.0 * j_xxx + rounding);
}

}  // namespace qtraj
