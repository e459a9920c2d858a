#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "nonlocal/error.hpp"
#include "nonlocal/kernel.hpp"
#include "nonlocal/mesh.hpp"
#include "nonlocal/quadrature.hpp"

namespace nonlocal {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct AssemblyOptions {
    int quad_order = 8;
    double assembly_tol = 1e-8;
    /// Assemble even if the kernel audit fails.
    bool skip_audit = false;
    /// Truncation radius for tail integrals of custom kernels.
    double tail_cap = 1e8;
    int max_depth = 40;
};

/// Discrete forms on the interior hat basis:
///   stiffness[i][j] = a(phi_i, phi_j), the Z inner product,
///   mass[i][j]      = (phi_i, phi_j)_{L^2(Omega)},
///   tail[i]         = kappa(x_i), the exterior interaction weight at dof i.
class AssembledOperator {
public:
    AssembledOperator(Mesh mesh, Matrix stiffness, Matrix mass, Vector tail, int quad_order,
                      double assembly_tol, double max_error_estimate)
        : mesh_(std::move(mesh)), stiffness_(std::move(stiffness)), mass_(std::move(mass)),
          tail_(std::move(tail)), quad_order_(quad_order), assembly_tol_(assembly_tol),
          max_error_estimate_(max_error_estimate) {
        const auto m = static_cast<Eigen::Index>(mesh_.interior_count());
        if (stiffness_.rows() != m || stiffness_.cols() != m || mass_.rows() != m ||
            mass_.cols() != m) {
            throw InvalidParameter("assembled operator: matrix size does not match mesh");
        }
        if (tail_.size() == 0) {
            tail_ = Vector::Zero(m);
        }
    }

    /// Wraps user-provided matrices (tests, external assembly). The mesh only
    /// supplies geometry for quadrature of nonlinear terms.
    static AssembledOperator from_matrices(Mesh mesh, Matrix stiffness, Matrix mass,
                                           int quad_order = 8) {
        return AssembledOperator(std::move(mesh), std::move(stiffness), std::move(mass), Vector{},
                                 quad_order, 0.0, 0.0);
    }

    const Mesh& mesh() const noexcept { return mesh_; }
    const Matrix& stiffness() const noexcept { return stiffness_; }
    const Matrix& mass() const noexcept { return mass_; }
    const Vector& tail() const noexcept { return tail_; }
    int quad_order() const noexcept { return quad_order_; }
    double assembly_tol() const noexcept { return assembly_tol_; }
    double max_error_estimate() const noexcept { return max_error_estimate_; }
    Eigen::Index size() const noexcept { return stiffness_.rows(); }

private:
    Mesh mesh_;
    Matrix stiffness_;
    Matrix mass_;
    Vector tail_;
    int quad_order_;
    double assembly_tol_;
    double max_error_estimate_;
};

namespace detail {

/// Integral of K over [rho, inf) along direction `sign`; closed form for the
/// fractional kernel, dyadic quadrature plus power-law extrapolation otherwise.
inline double tail_integral(const Kernel& k, double rho, double sign, double cap) {
    if (k.is_pure_power()) {
        return std::pow(rho, -2.0 * k.s()) / (2.0 * k.s());
    }
    auto res = quad::integrate_to_infinity([&](double r) { return k(sign * r); }, rho, cap, 12,
                                           1e-12);
    if (!res.converged) {
        throw NumericError("tail integral of custom kernel did not converge");
    }
    return res.value;
}

/// Affine function c0 + cx * xi + cy * eta of the two local coordinates.
struct Affine {
    double c0 = 0.0;
    double cx = 0.0;
    double cy = 0.0;

    double operator()(double xi, double eta) const noexcept { return c0 + cx * xi + cy * eta; }
};

/// Coefficients of u(x) - u(y) for x in element l+d and y in element l,
/// merged over coinciding nodes. Offsets are relative to the left node of l.
struct PairLayout {
    int count = 0;
    std::array<int, 4> offset{};
    std::array<Affine, 4> coeff{};

    void add(int off, Affine c) {
        for (int i = 0; i < count; ++i) {
            if (offset[i] == off) {
                coeff[i].c0 += c.c0;
                coeff[i].cx += c.cx;
                coeff[i].cy += c.cy;
                return;
            }
        }
        offset[count] = off;
        coeff[count] = c;
        ++count;
    }
};

inline PairLayout pair_layout(int d) {
    PairLayout p;
    p.add(0, {-1.0, 0.0, 1.0});  // -(1 - eta)
    p.add(1, {0.0, 0.0, -1.0});  // -eta
    p.add(d, {1.0, -1.0, 0.0});  // 1 - xi
    p.add(d + 1, {0.0, 1.0, 0.0});  // xi
    return p;
}

using Local4 = Eigen::Matrix4d;

/// Q(w) = integral over {xi - eta = w} of c_s c_t, exact (integrand is quadratic in xi).
inline Local4 relative_weight(const PairLayout& p, double w) {
    const double lo = std::max(0.0, w);
    const double hi = std::min(1.0, 1.0 + w);
    Local4 q = Local4::Zero();
    const double len = hi - lo;
    if (len <= 0.0) {
        return q;
    }
    const double mid = 0.5 * (lo + hi);
    const double off = 0.5 * len / std::sqrt(3.0);
    for (double xi : {mid - off, mid + off}) {
        const double eta = xi - w;
        std::array<double, 4> c{};
        for (int s = 0; s < p.count; ++s) {
            c[s] = p.coeff[s](xi, eta);
        }
        for (int s = 0; s < p.count; ++s) {
            for (int t = 0; t < p.count; ++t) {
                q(s, t) += 0.5 * len * c[s] * c[t];
            }
        }
    }
    return q;
}

/// Grading exponent for an integrand behaving like rho^{1-2s} at 0:
/// rho = t^p makes the transformed integrand vanish linearly at t = 0.
inline double grading_exponent(double s) { return 2.0 / (2.0 - 2.0 * s); }

struct LocalResult {
    Local4 value = Local4::Zero();
    double error = 0.0;
    bool converged = true;
};

/// Integral over w in [w_sing, w_sing + dir] where K(h(d + w)) is singular at w_sing.
/// Subtracts c |z|^{-(1+2s)}, integrates it exactly against the cubic weight
/// (which vanishes to second order at the singular point), and integrates the
/// remainder with graded adaptive Gauss.
inline LocalResult singular_half(const Kernel& k, const PairLayout& p, double h, double w_sing,
                                 double dir, const AssemblyOptions& opts, double abs_tol) {
    const double s = k.s();
    const double expo = 1.0 + 2.0 * s;
    auto q_of_rho = [&](double rho) { return relative_weight(p, w_sing + dir * rho); };
    const Local4 a1 = q_of_rho(1.0);
    const Local4 a2 = q_of_rho(0.5) / 0.25;
    const Local4 q3 = 2.0 * (a1 - a2);
    const Local4 q2 = a1 - q3;
    const double coef = k.is_pure_power() ? 1.0 : k.theta();

    LocalResult res;
    res.value = coef * std::pow(h, -expo) * (q2 / (2.0 - 2.0 * s) + q3 / (3.0 - 2.0 * s));
    if (k.is_pure_power()) {
        return res;
    }
    const double pexp = grading_exponent(s);
    auto remainder = [&](double t) -> Local4 {
        const double rho = std::pow(t, pexp);
        const double jac = pexp * std::pow(t, pexp - 1.0);
        const double z = h * rho;
        const double r = k(dir * z) - coef * std::pow(z, -expo);
        return (r * jac) * q_of_rho(rho);
    };
    auto est = quad::adaptive(remainder, 0.0, 1.0, opts.quad_order, abs_tol, 0.0, opts.max_depth);
    res.value += est.value;
    res.error = est.error;
    res.converged = est.converged;
    return res;
}

/// Local matrix (before the h^2 factor) of the Omega x Omega form for element offset d >= 0.
inline LocalResult pair_integral(const Kernel& k, const PairLayout& p, int d, double h,
                                 const AssemblyOptions& opts, double abs_tol) {
    LocalResult out;
    auto regular = [&](double lo, double hi) {
        auto f = [&](double w) -> Local4 { return k(h * (d + w)) * relative_weight(p, w); };
        auto est = quad::adaptive(f, lo, hi, opts.quad_order, abs_tol, 0.0, opts.max_depth);
        out.value += est.value;
        out.error += est.error;
        out.converged = out.converged && est.converged;
    };
    auto singular = [&](double w_sing, double dir) {
        auto est = singular_half(k, p, h, w_sing, dir, opts, abs_tol);
        out.value += est.value;
        out.error += est.error;
        out.converged = out.converged && est.converged;
    };
    if (d == 0) {
        singular(0.0, -1.0);
        singular(0.0, 1.0);
    } else if (d == 1) {
        singular(-1.0, 1.0);
        regular(0.0, 1.0);
    } else {
        regular(-1.0, 0.0);
        regular(0.0, 1.0);
    }
    return out;
}

/// 2h * integral over the element of psi_a psi_b T(h (dist + zeta)) where zeta
/// runs from the boundary side; returns the 2x2 block in (near, far) hat order.
/// Singular when dist == 0.
inline std::pair<Eigen::Matrix2d, double> tail_block(const Kernel& k, double h, int dist,
                                                     double sign, const AssemblyOptions& opts,
                                                     double abs_tol) {
    // zeta = distance (in units of h) from the element edge closest to the boundary.
    // psi_near = 1 - zeta, psi_far = zeta.
    const double s = k.s();
    Eigen::Matrix2d block = Eigen::Matrix2d::Zero();
    double err = 0.0;
    if (dist == 0 && k.is_pure_power()) {
        // Only the far hat (the interior dof) pairs with itself; the near hat is the
        // boundary node and carries no dof. integral zeta^2 (h zeta)^{-2s}/(2s) dzeta.
        block(1, 1) = 2.0 * h * std::pow(h, -2.0 * s) / (2.0 * s) / (3.0 - 2.0 * s);
        return {block, 0.0};
    }
    auto integrand = [&](double zeta) -> Eigen::Matrix2d {
        const double t = tail_integral(k, h * (dist + zeta), sign, opts.tail_cap);
        Eigen::Vector2d psi(1.0 - zeta, zeta);
        if (dist == 0) {
            psi(0) = 0.0;  // boundary node, never a dof; its square is not integrable
        }
        return t * (psi * psi.transpose());
    };
    if (dist == 0) {
        const double pexp = grading_exponent(s);
        auto graded = [&](double t) -> Eigen::Matrix2d {
            const double zeta = std::pow(t, pexp);
            return (pexp * std::pow(t, pexp - 1.0)) * integrand(zeta);
        };
        auto est = quad::adaptive(graded, 0.0, 1.0, opts.quad_order, abs_tol, 0.0, opts.max_depth);
        if (!est.converged) {
            err = std::max(est.error, 2.0 * opts.assembly_tol);
        } else {
            err = est.error;
        }
        return {2.0 * h * est.value, 2.0 * h * err};
    }
    auto est = quad::adaptive(integrand, 0.0, 1.0, opts.quad_order, abs_tol, 0.0, opts.max_depth);
    err = est.converged ? est.error : std::max(est.error, 2.0 * opts.assembly_tol);
    return {2.0 * h * est.value, 2.0 * h * err};
}

} // namespace detail

/// kappa(x) = integral over the complement of Omega of K(x - y) dy.
inline double tail_weight(const Mesh& mesh, const Kernel& k, double x, double tail_cap = 1e8) {
    if (!(x > mesh.a() && x < mesh.b())) {
        throw SingularEvaluation("tail_weight: x must lie strictly inside (a, b)");
    }
    return detail::tail_integral(k, x - mesh.a(), 1.0, tail_cap) +
           detail::tail_integral(k, mesh.b() - x, -1.0, tail_cap);
}

/// Exact P1 mass matrix on the interior dofs.
inline Matrix assemble_mass(const Mesh& mesh) {
    const int m = mesh.interior_count();
    const double h = mesh.h();
    Matrix mass = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        mass(i, i) = 2.0 * h / 3.0;
        if (i + 1 < m) {
            mass(i, i + 1) = h / 6.0;
            mass(i + 1, i) = h / 6.0;
        }
    }
    return mass;
}

/// Assembles a(u, v) = int_Q (u(x)-u(y))(v(x)-v(y)) K(x-y) on the hat basis via
///   a = int_{Omega x Omega} (...) + 2 int_Omega u v kappa.
/// The uniform mesh makes every element pair with the same offset congruent, so
/// one local matrix per offset is computed and scattered.
inline AssembledOperator assemble(const Mesh& mesh, const Kernel& k, const AssemblyOptions& opts = {}) {
    if (opts.quad_order < 3) {
        throw InvalidParameter("assemble: quad_order must be >= 3");
    }
    if (!(opts.assembly_tol > 0.0)) {
        throw InvalidParameter("assemble: assembly_tol must be > 0");
    }
    if (k.dim() != 1) {
        throw InvalidParameter("assemble: only one-dimensional kernels can be discretized");
    }
    if (!opts.skip_audit) {
        const KernelAudit audit = audit_kernel(k);
        if (!audit.k1_holds) {
            throw HypothesisRefused("assemble: kernel fails integrability of min{|x|^2,1}K");
        }
        if (!audit.k2_holds) {
            throw HypothesisRefused("assemble: kernel fails the lower bound theta|x|^{-(n+2s)}");
        }
    }

    const int n_el = mesh.n_elements();
    const int m = mesh.interior_count();
    const double h = mesh.h();
    Matrix a = Matrix::Zero(m, m);
    Matrix err = Matrix::Zero(m, m);
    // Each entry receives contributions from at most ~4N pairs and 2 elements.
    const double local_tol = opts.assembly_tol / (16.0 * n_el * h * h);

    auto accumulate = [&](int node_i, int node_j, double value, double e) {
        int i = dof_of_node(mesh, node_i);
        int j = dof_of_node(mesh, node_j);
        if (i < 0 || j < 0) {
            return;
        }
        if (i > j) {
            std::swap(i, j);
        }
        a(i, j) += value;
        err(i, j) += e;
    };

    for (int d = 0; d < n_el; ++d) {
        const detail::PairLayout layout = detail::pair_layout(d);
        const detail::LocalResult local = detail::pair_integral(k, layout, d, h, opts, local_tol);
        const double factor = (d == 0 ? 1.0 : 2.0) * h * h;
        const double e_local = local.converged ? local.error : std::max(local.error, 2.0 * opts.assembly_tol / factor);
        for (int l = 0; l + d < n_el; ++l) {
            for (int s = 0; s < layout.count; ++s) {
                for (int t = s; t < layout.count; ++t) {
                    const double v = factor * local.value(s, t);
                    const double e = factor * e_local;
                    // Offsets are distinct after merging, so (s,t) and (t,s)
                    // address the two mirror slots of one node pair.
                    accumulate(l + layout.offset[s], l + layout.offset[t], v, e);
                }
            }
        }
    }

    // Exterior interaction: 2 int psi_a psi_b kappa over each element.
    const double tail_tol = opts.assembly_tol / 8.0;
    for (int e = 0; e < n_el; ++e) {
        // Left exterior: distance to a is h (e + xi); near hat = left node.
        auto [left, left_err] = detail::tail_block(k, h, e, 1.0, opts, tail_tol);
        // Right exterior: distance to b is h (N - 1 - e + zeta) with zeta = 1 - xi;
        // near hat = right node.
        auto [right, right_err] = detail::tail_block(k, h, n_el - 1 - e, -1.0, opts, tail_tol);
        const int nl = e;
        const int nr = e + 1;
        accumulate(nl, nl, left(0, 0) + right(1, 1), left_err + right_err);
        accumulate(nr, nr, left(1, 1) + right(0, 0), left_err + right_err);
        accumulate(nl, nr, left(0, 1) + right(1, 0), left_err + right_err);
    }

    Matrix full = a.triangularView<Eigen::Upper>();
    full.triangularView<Eigen::StrictlyLower>() = a.transpose().triangularView<Eigen::StrictlyLower>();
    Matrix full_err = err.triangularView<Eigen::Upper>();

    Eigen::Index wi = 0;
    Eigen::Index wj = 0;
    const double worst = full_err.maxCoeff(&wi, &wj);
    if (worst > opts.assembly_tol) {
        throw AssemblyAccuracyError(static_cast<std::size_t>(wi), static_cast<std::size_t>(wj),
                                    worst, opts.assembly_tol);
    }

    Vector tail(m);
    for (int i = 0; i < m; ++i) {
        tail(i) = tail_weight(mesh, k, mesh.dof_coordinate(i), opts.tail_cap);
    }
    return AssembledOperator(mesh, std::move(full), assemble_mass(mesh), std::move(tail),
                             opts.quad_order, opts.assembly_tol, worst);
}

inline void check_dimension(const AssembledOperator& op, const Vector& u, const char* who) {
    if (u.size() != op.size()) {
        throw InvalidParameter(std::string(who) + ": vector has size " + std::to_string(u.size()) +
                               ", expected " + std::to_string(op.size()));
    }
}

/// sqrt(u^T A u): the Z norm restricted to the discrete space.
inline double norm_Z(const AssembledOperator& op, const Vector& u) {
    check_dimension(op, u, "norm_Z");
    return std::sqrt(std::max(0.0, u.dot(op.stiffness() * u)));
}

inline double norm_L2(const AssembledOperator& op, const Vector& u) {
    check_dimension(op, u, "norm_L2");
    return std::sqrt(std::max(0.0, u.dot(op.mass() * u)));
}

/// sqrt(u^T M u + u^T A u).
inline double norm_X(const AssembledOperator& op, const Vector& u) {
    check_dimension(op, u, "norm_X");
    return std::sqrt(std::max(0.0, u.dot(op.mass() * u) + u.dot(op.stiffness() * u)));
}

} // namespace nonlocal
