#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nonlocal/discretization.hpp"
#include "nonlocal/error.hpp"

namespace nonlocal {

/// Relative gap below which consecutive eigenvalues are treated as one cluster.
inline constexpr double kClusterGap = 1e-8;

/// Ascending generalized eigenpairs of A e = lambda M e, L^2-normalized
/// (e^T M e = 1) and A-orthogonal. Indices in the public API are 1-based to
/// match lambda_1 <= lambda_2 <= ...
class Spectrum {
public:
    Spectrum(Vector all_values, Matrix vectors, Matrix mass, int count_requested)
        : all_values_(std::move(all_values)), vectors_(std::move(vectors)), mass_(std::move(mass)),
          count_(count_requested) {}

    int count() const noexcept { return count_; }
    int dimension() const noexcept { return static_cast<int>(all_values_.size()); }

    /// The requested leading eigenvalues.
    Vector eigenvalues() const { return all_values_.head(count_); }
    /// Columns are e_1..e_count.
    const Matrix& eigenvectors() const noexcept { return vectors_; }
    const Matrix& mass() const noexcept { return mass_; }

    double lambda(int j) const {
        check_index(j, dimension());
        return all_values_(j - 1);
    }

    Vector vector(int j) const {
        check_index(j, count_);
        return vectors_.col(j - 1);
    }

    /// True when lambda_k and lambda_{k+1} belong to the same numerical cluster.
    bool splits_cluster(int k) const {
        if (k < 1 || k >= dimension()) {
            return false;
        }
        const double lo = all_values_(k - 1);
        const double hi = all_values_(k);
        return (hi - lo) <= kClusterGap * std::abs(lo);
    }

private:
    static void check_index(int j, int limit) {
        if (j < 1 || j > limit) {
            throw InvalidParameter("spectrum: index " + std::to_string(j) + " outside 1.." +
                                   std::to_string(limit));
        }
    }

    Vector all_values_;
    Matrix vectors_;
    Matrix mass_;
    int count_;
};

namespace detail {

/// Canonical sign: M-weighted mean nonnegative; ties (mean numerically zero)
/// broken by making the first significant coefficient positive.
inline void fix_sign(Eigen::Ref<Vector> e, const Matrix& mass) {
    const Vector me = mass * e;
    const double mean = me.sum();
    const double scale = me.cwiseAbs().sum();
    double sign = 1.0;
    if (std::abs(mean) > 1e-9 * scale) {
        sign = mean < 0.0 ? -1.0 : 1.0;
    } else {
        const double cut = 1e-8 * e.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < e.size(); ++i) {
            if (std::abs(e(i)) > cut) {
                sign = e(i) < 0.0 ? -1.0 : 1.0;
                break;
            }
        }
    }
    e *= sign;
}

/// M-orthonormalizes columns [first, last] jointly (modified Gram-Schmidt).
inline void orthonormalize_cluster(Matrix& vecs, const Matrix& mass, Eigen::Index first,
                                   Eigen::Index last) {
    for (Eigen::Index j = first; j <= last; ++j) {
        for (Eigen::Index i = first; i < j; ++i) {
            const double proj = vecs.col(i).dot(mass * vecs.col(j));
            vecs.col(j) -= proj * vecs.col(i);
        }
        const double nrm = std::sqrt(vecs.col(j).dot(mass * vecs.col(j)));
        vecs.col(j) /= nrm;
    }
}

} // namespace detail

/// Generalized symmetric eigenproblem via Cholesky reduction M = L L^T and a
/// dense tridiagonal QR eigensolver on L^{-1} A L^{-T}.
inline Spectrum solve_eigenproblem(const Matrix& stiffness, const Matrix& mass, int count) {
    const Eigen::Index m = stiffness.rows();
    if (stiffness.cols() != m || mass.rows() != m || mass.cols() != m || m == 0) {
        throw InvalidParameter("solve_eigenproblem: A and M must be square and of equal size");
    }
    if (count < 1 || count > m) {
        throw InvalidParameter("solve_eigenproblem: count must lie in 1.." + std::to_string(m));
    }
    Eigen::LLT<Matrix> chol(mass);
    if (chol.info() != Eigen::Success) {
        throw AssemblyCorruption("solve_eigenproblem: mass matrix is not positive definite");
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(stiffness, mass,
                                                            Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success) {
        throw NumericError("solve_eigenproblem: symmetric QR iteration did not converge (m = " +
                           std::to_string(m) + ")");
    }
    Vector values = solver.eigenvalues();
    Matrix vecs = solver.eigenvectors();
    if (!(values(0) > 0.0)) {
        throw AssemblyCorruption("solve_eigenproblem: stiffness matrix is not positive definite "
                                 "(lambda_1 = " + std::to_string(values(0)) + ")");
    }
    // Eigen normalizes against M already; re-orthonormalize numerical clusters.
    Eigen::Index start = 0;
    for (Eigen::Index j = 1; j <= m; ++j) {
        const bool boundary =
            j == m || (values(j) - values(j - 1)) > kClusterGap * std::abs(values(j - 1));
        if (boundary) {
            if (j - 1 > start) {
                detail::orthonormalize_cluster(vecs, mass, start, j - 1);
            }
            start = j;
        }
    }
    for (Eigen::Index j = 0; j < m; ++j) {
        detail::fix_sign(vecs.col(j), mass);
    }
    return Spectrum(std::move(values), vecs.leftCols(count), mass, count);
}

inline Spectrum solve_eigenproblem(const AssembledOperator& op, int count) {
    return solve_eigenproblem(op.stiffness(), op.mass(), count);
}

inline Spectrum solve_eigenproblem(const AssembledOperator& op) {
    return solve_eigenproblem(op, static_cast<int>(op.size()));
}

/// u^T A u / u^T M u.
inline double rayleigh_quotient(const AssembledOperator& op, const Vector& u) {
    check_dimension(op, u, "rayleigh_quotient");
    const double den = u.dot(op.mass() * u);
    if (!(den > 0.0)) {
        throw InvalidParameter("rayleigh_quotient: u must be nonzero");
    }
    return u.dot(op.stiffness() * u) / den;
}

/// Selects H_k = span(e_1..e_k) or its Z-orthogonal complement P_{k+1}.
struct Part {
    enum class Kind { Head, Tail };
    Kind kind;
    int k;

    static Part head(int k) { return {Kind::Head, k}; }
    static Part tail(int k) { return {Kind::Tail, k}; }
};

inline Part Head(int k) { return Part::head(k); }
inline Part Tail(int k) { return Part::tail(k); }

/// Head(k): sum_{j<=k} (e_j^T M u) e_j. Tail(k): u - Head(k).
inline Vector project(const Spectrum& spectrum, const Vector& u, Part part) {
    const int k = part.k;
    if (u.size() != spectrum.dimension()) {
        throw InvalidParameter("project: vector size does not match spectrum");
    }
    if (k < 1 || k >= spectrum.dimension() || k > spectrum.count()) {
        throw InvalidParameter("project: k = " + std::to_string(k) + " out of range");
    }
    if (spectrum.splits_cluster(k)) {
        throw InvalidParameter("project: k = " + std::to_string(k) +
                               " splits a cluster of numerically repeated eigenvalues");
    }
    const auto head_vecs = spectrum.eigenvectors().leftCols(k);
    const Vector coeffs = head_vecs.transpose() * (spectrum.mass() * u);
    Vector head = head_vecs * coeffs;
    if (part.kind == Part::Kind::Head) {
        return head;
    }
    return u - head;
}

/// theta |B_R \ Omega| / (2R)^{1+2s} for Omega = (a, b) and B_R = (-R, R).
/// Every eigenvalue of a kernel with K >= theta|z|^{-(1+2s)} is at least this.
inline double poincare_lower_bound(double a, double b, double s, double theta, double radius) {
    if (!(a < b)) {
        throw InvalidParameter("poincare_lower_bound: require a < b");
    }
    if (!(s > 0.0 && s < 1.0) || !(theta > 0.0)) {
        throw InvalidParameter("poincare_lower_bound: require s in (0,1) and theta > 0");
    }
    if (radius < std::max(std::abs(a), std::abs(b))) {
        throw InvalidParameter("poincare_lower_bound: Omega is not contained in B_R");
    }
    const double outside = 2.0 * radius - (b - a);
    if (!(outside > 0.0)) {
        throw InvalidParameter("poincare_lower_bound: |B_R \\ Omega| must be positive");
    }
    return theta * outside / std::pow(2.0 * radius, 1.0 + 2.0 * s);
}

/// Fractional critical Sobolev exponent: 2n/(n-2s) if n > 2s, +inf otherwise.
inline double critical_exponent(int n, double s) {
    if (n < 1 || !(s > 0.0 && s < 1.0)) {
        throw InvalidParameter("critical_exponent: require n >= 1 and s in (0,1)");
    }
    if (n > 2.0 * s) {
        return 2.0 * n / (n - 2.0 * s);
    }
    return std::numeric_limits<double>::infinity();
}

} // namespace nonlocal
