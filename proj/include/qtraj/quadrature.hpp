#pragma once

// Adaptive 7/15-point Gauss-Kronrod quadrature on finite intervals.

#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <utility>

namespace qtraj {

namespace detail {

inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double kronrod;
    double error;
};

template <class F>
Panel gauss_kronrod_15(F& f, double a, double b) {
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(centre);
    double k = fc * kronrod_weights[7];
    double g = fc * gauss_weights[3];
    for (std::size_t i = 0; i < 7; ++i) {
        const double dx = half * kronrod_nodes[i];
        const double sum = f(centre - dx) + f(centre + dx);
        k += kronrod_weights[i] * sum;
        if (i % 2 == 1) g += gauss_weights[i / 2] * sum;
    }
    return {k * half, std::abs((k - g) * half)};
}

template <class F>
double adaptive(F& f, double a, double b, Panel whole, double abs_tol, int depth) {
    if (whole.error <= abs_tol || depth == 0) return whole.kronrod;
    const double mid = 0.5 * (a + b);
    const Panel left = gauss_kronrod_15(f, a, mid);
    const Panel right = gauss_kronrod_15(f, mid, b);
    if (left.error + right.error <= abs_tol) return left.kronrod + right.kronrod;
    return adaptive(f, a, mid, left, 0.5 * abs_tol, depth - 1) +
           adaptive(f, mid, b, right, 0.5 * abs_tol, depth - 1);
}

}  // namespace detail

/// Integral of f over [a, b] to an absolute tolerance, by recursive bisection.
template <class F>
    requires std::regular_invocable<F&, double>
double integrate(F&& f, double a, double b, double abs_tol = 1e-13, int max_depth = 40) {
    if (a == b) return 0.0;
    if (b < a) return -integrate(std::forward<F>(f), b, a, abs_tol, max_depth);
    const auto whole = detail::gauss_kronrod_15(f, a, b);
    return detail::adaptive(f, a, b, whole, abs_tol, max_depth);
}

/// Composite form: splits [a, b] into `panels` equal pieces before adapting,
/// so narrow features on a wide interval are not missed by the first estimate.
template <class F>
    requires std::regular_invocable<F&, double>
double integrate_panels(F&& f, double a, double b, int panels, double abs_tol = 1e-13) {
    const double width = (b - a) / panels;
    double total = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double lo = a + width * i;
        const double hi = i + 1 == panels ? b : a + width * (i + 1);
        total += integrate(f, lo, hi, abs_tol / panels);
    }
    return total;
}

}  // namespace qtraj
