#pragma once

#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "nonlocal/error.hpp"

namespace nonlocal::quad {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    int order() const noexcept { return static_cast<int>(nodes.size()); }
};

/// Nodes are roots of P_n found by Newton iteration from the Chebyshev-like guess.
inline GaussRule make_gauss_legendre(int n) {
    if (n < 1) {
        throw InvalidParameter("gauss_legendre: order must be >= 1");
    }
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (n == 1) {
                p0 = 1.0;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        // Recompute the derivative at the converged root for the weight.
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = pk;
        }
        if (n == 1) {
            p0 = 1.0;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) {
        rule.nodes[n / 2] = 0.0;
    }
    return rule;
}

/// Cached rule; the returned reference stays valid for the program lifetime.
inline const GaussRule& gauss_legendre(int n) {
    static std::mutex mutex;
    static std::map<int, const GaussRule*> index;
    static std::deque<GaussRule> storage;
    std::lock_guard<std::mutex> lock(mutex);
    if (auto it = index.find(n); it != index.end()) {
        return *it->second;
    }
    storage.push_back(make_gauss_legendre(n));
    index.emplace(n, &storage.back());
    return storage.back();
}

inline double max_abs(double v) noexcept { return std::abs(v); }

template <class Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
    return m.cwiseAbs().maxCoeff();
}

/// Result of an adaptive integration. `error` is the sum of local
/// coarse-vs-fine differences, which over-estimates the true error.
template <class T>
struct Estimate {
    T value;
    double error = 0.0;
    bool converged = true;
};

template <class F>
auto gauss(F&& f, double a, double b, const GaussRule& rule) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    using T = std::decay_t<decltype(f(mid))>;
    T sum = rule.weights[0] * f(mid + half * rule.nodes[0]);
    for (int i = 1; i < rule.order(); ++i) {
        sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    }
    return T(half * sum);
}

namespace detail {

template <class F, class T>
Estimate<T> adapt(F& f, double a, double b, const T& whole, const GaussRule& rule, double abs_tol,
                  double rel_tol, int depth, int max_depth) {
    const double mid = 0.5 * (a + b);
    T left = gauss(f, a, mid, rule);
    T right = gauss(f, mid, b, rule);
    T refined = left + right;
    T diff_v = whole - refined;
    const double diff = max_abs(diff_v);
    const double allowed = std::max(abs_tol, rel_tol * max_abs(refined));
    if (!std::isfinite(diff)) {
        return {refined, diff, false};
    }
    if (diff <= allowed) {
        return {refined, diff, true};
    }
    if (depth >= max_depth) {
        return {refined, diff, false};
    }
    auto l = adapt(f, a, mid, left, rule, 0.5 * abs_tol, rel_tol, depth + 1, max_depth);
    auto r = adapt(f, mid, b, right, rule, 0.5 * abs_tol, rel_tol, depth + 1, max_depth);
    return {T(l.value + r.value), l.error + r.error, l.converged && r.converged};
}

} // namespace detail

/// Globally adaptive bisection with Gauss-Legendre panels of the given order.
/// Accepts a panel when |G(panel) - G(left) - G(right)| <= max(abs_tol, rel_tol*|value|).
template <class F>
auto adaptive(F&& f, double a, double b, int order, double abs_tol, double rel_tol = 0.0,
              int max_depth = 40) {
    const GaussRule& rule = gauss_legendre(order);
    auto whole = gauss(f, a, b, rule);
    using T = std::decay_t<decltype(whole)>;
    return detail::adapt<std::remove_reference_t<F>, T>(f, a, b, whole, rule, abs_tol, rel_tol, 0,
                                                        max_depth);
}

/// Scalar integral over [from, +inf) of a positive function with power-law decay.
/// Integrates dyadic panels [r, 2r] up to `cap`, then extrapolates the remainder
/// with the exponent estimated from f(cap/2)/f(cap). A decay exponent <= 1 means
/// the integral diverges and +inf is returned.
template <class F>
Estimate<double> integrate_to_infinity(F&& f, double from, double cap, int order,
                                       double rel_tol) {
    if (!(from > 0.0)) {
        throw InvalidParameter("integrate_to_infinity: lower limit must be positive");
    }
    Estimate<double> total{0.0, 0.0, true};
    double r = from;
    while (r < cap) {
        const double next = std::min(2.0 * r, cap);
        auto piece = adaptive(f, r, next, order, 0.0, rel_tol);
        total.value += piece.value;
        total.error += piece.error;
        total.converged = total.converged && piece.converged;
        r = next;
    }
    const double f_end = f(r);
    const double f_half = f(0.5 * r);
    if (f_end == 0.0) {
        return total;
    }
    if (!(f_end > 0.0) || !(f_half > 0.0)) {
        total.converged = false;
        return total;
    }
    const double gamma = std::log2(f_half / f_end);
    if (gamma <= 1.0 + 1e-9) {
        total.value = std::numeric_limits<double>::infinity();
        return total;
    }
    total.value += f_end * r / (gamma - 1.0);
    return total;
}

/// Scalar integral over (0, upto] of a positive function with at worst a
/// power-law singularity at 0. Dyadic panels [r/2, r] down to upto*2^-levels,
/// remainder extrapolated from the local exponent. Exponent <= -1 diverges.
template <class F>
Estimate<double> integrate_from_zero(F&& f, double upto, int order, double rel_tol,
                                     int levels = 60) {
    if (!(upto > 0.0)) {
        throw InvalidParameter("integrate_from_zero: upper limit must be positive");
    }
    Estimate<double> total{0.0, 0.0, true};
    double r = upto;
    for (int level = 0; level < levels; ++level) {
        const double lo = 0.5 * r;
        auto piece = adaptive(f, lo, r, order, 0.0, rel_tol);
        total.value += piece.value;
        total.error += piece.error;
        total.converged = total.converged && piece.converged;
        r = lo;
    }
    const double f_end = f(r);
    const double f_half = f(0.5 * r);
    if (f_end == 0.0 && f_half == 0.0) {
        return total;
    }
    if (!(f_end > 0.0) || !(f_half > 0.0)) {
        total.converged = false;
        return total;
    }
    const double beta = std::log2(f_end / f_half);
    if (beta <= -1.0 + 1e-9) {
        total.value = std::numeric_limits<double>::infinity();
        return total;
    }
    total.value += f_end * r / (beta + 1.0);
    return total;
}

} // namespace nonlocal::quad
