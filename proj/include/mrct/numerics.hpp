#pragma once

#include <algorithm>
#include <cmath>
#include <vector>
#include <cstdlib>
#include <functional>
#include <utility>

#include "mrct/errors.hpp"

namespace mrct {

// Standard normal distribution function, |error| < 1e-12 on finite inputs.
double std_normal_cdf(double x);

// Standard normal density.
double std_normal_pdf(double x);

// Inverse of std_normal_cdf on (0,1); rational initial guess refined by two
// Halley steps, |Phi(result) - p| < 1e-13. Throws domain_error outside (0,1).
double std_normal_quantile(double p);

struct QuadratureSettings {
    double abs_tolerance = 1e-9;
    double upper_truncation_sd = 10.0;  // integrate over [lower, lower + this]
};

namespace detail {

// 15-point Kronrod extension of 7-point Gauss on [-1,1].
inline constexpr double kronrod_nodes[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898,  0.0,                0.207784955007898,
     0.405845151377397,  0.586087235467691,  0.741531185599394,
     0.864864423359769,  0.949107912342759,  0.991455371120813};
inline constexpr double kronrod_weights[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
inline constexpr double gauss7_weights[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870};

template <typename F>
std::pair<double, double> gauss_kronrod(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double k = 0.0, g = 0.0;
    for (int i = 0; i < 15; ++i) {
        const double v = f(c + h * kronrod_nodes[i]);
        k += kronrod_weights[i] * v;
        if (i % 2 == 1) g += gauss7_weights[i / 2] * v;
    }
    return {k * h, std::abs((k - g) * h)};
}

struct Panel {
    double a, b, value, err;
    bool operator<(const Panel& other) const { return err < other.err; }
};

}  // namespace detail

// Globally adaptive Gauss-Kronrod integration of f over [a,b]: the panel with
// the largest error estimate is split until the summed error meets abs_tol.
// Robust to integrable endpoint singularities.
template <typename F>
double integrate_adaptive(const F& f, double a, double b, double abs_tol = 1e-10,
                          int max_panels = 4096) {
    if (!(b >= a)) throw domain_error("integrate_adaptive: b < a");
    if (a == b) return 0.0;

    std::vector<detail::Panel> heap;
    double total_err = 0.0, total_val = 0.0;
    auto push = [&](double lo, double hi) {
        auto [v, e] = detail::gauss_kronrod(f, lo, hi);
        // Panels at machine resolution cannot be improved further.
        if (hi - lo < 1e-13 * (std::abs(lo) + std::abs(hi) + 1.0)) e = 0.0;
        total_err += e;
        total_val += v;
        heap.push_back({lo, hi, v, e});
        std::push_heap(heap.begin(), heap.end());
    };
    push(a, b);
    while (static_cast<int>(heap.size()) < max_panels) {
        if (total_err <= abs_tol || total_err <= 1e-14 * std::abs(total_val)) break;
        std::pop_heap(heap.begin(), heap.end());
        const detail::Panel worst = heap.back();
        heap.pop_back();
        if (worst.err == 0.0) break;  // nothing left to refine
        total_err -= worst.err;
        total_val -= worst.value;
        const double m = 0.5 * (worst.a + worst.b);
        push(worst.a, m);
        push(m, worst.b);
    }
    if (total_err > std::max(1e3 * abs_tol, 1e-9 * std::abs(total_val)))
        throw numerical_error("adaptive quadrature: panel budget exhausted, residual error " +
                              std::to_string(total_err));
    double sum = 0.0;
    for (const auto& p : heap) sum += p.value;
    return sum;
}

// (1/(1-Phi(lower))) * int_{lower}^{U} f(u) dPhi(u), the normalized
// expectation of f under the standard normal truncated below at `lower`.
// U = max(lower + K, K) so a deeply negative lower limit still covers the
// body of the distribution; dropped tail mass is below ~1e-23 at K = 10.
template <typename F>
double truncated_normal_expectation(const F& f, double lower,
                                    const QuadratureSettings& settings = {}) {
    if (!(settings.abs_tolerance > 0.0))
        throw domain_error("truncated_normal_expectation: abs_tolerance must be > 0");
    if (!(settings.upper_truncation_sd >= 8.0))
        throw domain_error("truncated_normal_expectation: upper_truncation_sd must be >= 8");
    if (!std::isfinite(lower))
        throw domain_error("truncated_normal_expectation: lower must be finite");
    const double mass = std_normal_cdf(-lower);  // 1 - Phi(lower), computed stably
    if (mass <= 0.0)
        throw numerical_error("truncated_normal_expectation: no mass above lower limit");
    const double upper = std::max(lower + settings.upper_truncation_sd,
                                  settings.upper_truncation_sd);
    const double integral = integrate_adaptive(
        [&](double u) { return f(u) * std_normal_pdf(u); }, lower, upper,
        settings.abs_tolerance);
    return integral / mass;
}

// Brent root finder on [lo, hi]; requires a sign change. `tol` bounds the
// bracket width at convergence. Throws bracketing_error / numerical_error.
double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double tol = 1e-8, int max_iter = 200);

}  // namespace mrct
