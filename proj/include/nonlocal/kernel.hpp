#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "nonlocal/error.hpp"
#include "nonlocal/quadrature.hpp"

namespace nonlocal {

enum class KernelFamily { Fractional, Custom };

/// Interaction weight K on R^n \ {0}, evaluated on a (signed, for n = 1) offset.
///
/// Every kernel declares its fractional order s and the constant theta of the
/// lower bound K(z) >= theta |z|^{-(n+2s)}; these feed the Poincare floor and
/// the singular-part subtraction used during assembly. Fractional kernels are
/// exactly |z|^{-(n+2s)} and are even by construction. Custom kernels are
/// assumed even; their odd part is not stripped.
class Kernel {
public:
    static Kernel fractional(double s, int dim = 1) {
        check_order(s);
        check_dim(dim);
        return Kernel(KernelFamily::Fractional, s, 1.0, dim, {});
    }

    static Kernel custom(double s, double theta, int dim, std::function<double(double)> fn) {
        check_order(s);
        check_dim(dim);
        if (!(theta > 0.0)) {
            throw InvalidParameter("kernel: theta must be > 0");
        }
        if (!fn) {
            throw InvalidParameter("kernel: custom kernel needs an evaluation function");
        }
        return Kernel(KernelFamily::Custom, s, theta, dim, std::move(fn));
    }

    /// Same weight, different declared lower-bound constant. Used when a
    /// configuration declares theta < 1 for the fractional kernel.
    Kernel with_theta(double theta) const {
        if (!(theta > 0.0)) {
            throw InvalidParameter("kernel: theta must be > 0");
        }
        Kernel k = *this;
        k.theta_ = theta;
        return k;
    }

    KernelFamily family() const noexcept { return family_; }
    double s() const noexcept { return s_; }
    double theta() const noexcept { return theta_; }
    int dim() const noexcept { return dim_; }

    /// Singularity exponent n + 2s.
    double exponent() const noexcept { return dim_ + 2.0 * s_; }

    /// True when K is exactly |z|^{-(n+2s)}; enables closed forms.
    bool is_pure_power() const noexcept { return family_ == KernelFamily::Fractional; }

    double operator()(double z) const {
        if (family_ == KernelFamily::Fractional) {
            return std::pow(std::abs(z), -exponent());
        }
        return fn_(z);
    }

    double evaluate(double z) const { return (*this)(z); }

private:
    Kernel(KernelFamily family, double s, double theta, int dim, std::function<double(double)> fn)
        : family_(family), s_(s), theta_(theta), dim_(dim), fn_(std::move(fn)) {}

    static void check_order(double s) {
        if (!(s > 0.0 && s < 1.0)) {
            throw InvalidParameter("kernel: s must lie in (0,1), got " + std::to_string(s));
        }
    }

    static void check_dim(int dim) {
        if (dim < 1) {
            throw InvalidParameter("kernel: dimension must be >= 1");
        }
    }

    KernelFamily family_;
    double s_;
    double theta_;
    int dim_;
    std::function<double(double)> fn_;
};

inline Kernel make_fractional_kernel(double s, int n) { return Kernel::fractional(s, n); }

struct KernelAudit {
    double k1_integral = 0.0;  ///< integral of min{|x|^2,1} K(x) over R^n
    bool k1_holds = false;
    bool k2_holds = false;
    double k2_worst_ratio = 0.0;  ///< min over samples of K(x)|x|^{n+2s}/theta
    double k2_worst_radius = 0.0;
};

struct AuditOptions {
    double quad_tol = 1e-10;      ///< relative tolerance of each dyadic panel
    int sample_count = 256;       ///< log-spaced radii for the lower-bound check
    double radius_cap = 1e8;      ///< outer integral truncation before extrapolation
    double value_cap = 1e12;      ///< integrals above this count as infinite
    double ratio_tol = 1e-10;     ///< slack allowed on the lower-bound ratio
    int order = 16;
};

/// Surface measure of the unit sphere in R^n (2 for n = 1).
inline double unit_sphere_measure(int n) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/// Checks integrability of min{|x|^2,1} K (radial reduction, split at |x| = 1)
/// and samples the lower bound K(x) >= theta |x|^{-(n+2s)} on radii in [1e-6, 1e6].
inline KernelAudit audit_kernel(const Kernel& k, const AuditOptions& opts = {}) {
    if (!(opts.quad_tol > 0.0)) {
        throw InvalidParameter("audit_kernel: quad_tol must be > 0");
    }
    if (opts.sample_count < 16) {
        throw InvalidParameter("audit_kernel: sample_count must be >= 16");
    }
    const int n = k.dim();
    const double sphere = unit_sphere_measure(n);

    // For n = 1 both half-lines are integrated so that uneven custom kernels are
    // audited honestly; for n > 1 the kernel is treated as radial.
    auto radial_part = [&](double sign) {
        auto inner_f = [&](double r) { return r * r * std::pow(r, n - 1) * k(sign * r); };
        auto outer_f = [&](double r) { return std::pow(r, n - 1) * k(sign * r); };
        auto inner = quad::integrate_from_zero(inner_f, 1.0, opts.order, opts.quad_tol);
        auto outer = quad::integrate_to_infinity(outer_f, 1.0, opts.radius_cap, opts.order,
                                                 opts.quad_tol);
        if (!inner.converged || !outer.converged) {
            throw AuditInconclusive("audit_kernel: quadrature of min{|x|^2,1}K did not converge");
        }
        return inner.value + outer.value;
    };

    KernelAudit audit;
    if (n == 1) {
        audit.k1_integral = radial_part(1.0) + radial_part(-1.0);
    } else {
        audit.k1_integral = sphere * radial_part(1.0);
    }
    if (!std::isfinite(audit.k1_integral) || audit.k1_integral > opts.value_cap) {
        audit.k1_integral = std::numeric_limits<double>::infinity();
        audit.k1_holds = false;
    } else {
        audit.k1_holds = true;
    }

    audit.k2_worst_ratio = std::numeric_limits<double>::infinity();
    const double log_lo = std::log(1e-6);
    const double log_hi = std::log(1e6);
    for (int i = 0; i < opts.sample_count; ++i) {
        const double r = std::exp(log_lo + (log_hi - log_lo) * i / (opts.sample_count - 1));
        for (double sign : {1.0, -1.0}) {
            const double ratio = k(sign * r) * std::pow(r, k.exponent()) / k.theta();
            if (!(ratio >= audit.k2_worst_ratio)) {
                audit.k2_worst_ratio = ratio;
                audit.k2_worst_radius = sign * r;
            }
        }
    }
    audit.k2_holds = audit.k2_worst_ratio >= 1.0 - opts.ratio_tol;
    return audit;
}

} // namespace nonlocal
