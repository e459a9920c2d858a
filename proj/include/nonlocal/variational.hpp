#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nonlocal/discretization.hpp"
#include "nonlocal/error.hpp"
#include "nonlocal/mesh.hpp"
#include "nonlocal/nonlinearity.hpp"
#include "nonlocal/spectral.hpp"

namespace nonlocal {

namespace detail {

inline double nodal_value(const Vector& u, const Mesh& mesh, int node) {
    const int dof = dof_of_node(mesh, node);
    return dof < 0 ? 0.0 : u(dof);
}

/// Calls fn(q, u_h(q.x), dof_left, dof_right) at every Gauss point; dofs are -1 on the boundary.
template <class F>
void for_each_interpolant_point(const AssembledOperator& op, const Vector& u, F&& fn) {
    const Mesh& mesh = op.mesh();
    for_each_quadrature_point(mesh, op.quad_order(), [&](const QuadraturePoint& q) {
        const double ul = nodal_value(u, mesh, q.element);
        const double ur = nodal_value(u, mesh, q.element + 1);
        fn(q, ul * q.psi_left + ur * q.psi_right, dof_of_node(mesh, q.element),
           dof_of_node(mesh, q.element + 1));
    });
}

/// Mass matrix weighted by w(x, u_h(x)).
template <class W>
Matrix weighted_mass(const AssembledOperator& op, const Vector& u, W&& w) {
    Matrix out = Matrix::Zero(op.size(), op.size());
    for_each_interpolant_point(op, u, [&](const QuadraturePoint& q, double uh, int l, int r) {
        const double c = q.weight * w(q.x, uh);
        const int dofs[2] = {l, r};
        const double psi[2] = {q.psi_left, q.psi_right};
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                if (dofs[a] >= 0 && dofs[b] >= 0) {
                    out(dofs[a], dofs[b]) += c * psi[a] * psi[b];
                }
            }
        }
    });
    return out;
}

/// Smallest |U_ii| of a partial-pivot LU, relative to max |H_ij|.
inline double relative_min_pivot(const Eigen::PartialPivLU<Matrix>& lu, const Matrix& h) {
    const double scale = std::max(h.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    return lu.matrixLU().diagonal().cwiseAbs().minCoeff() / scale;
}

} // namespace detail

/// b(u)_i = int f(x, u_h(x)) phi_i(x) dx.
inline Vector load_vector(const AssembledOperator& op, const Nonlinearity& spec, const Vector& u) {
    check_dimension(op, u, "load_vector");
    Vector b = Vector::Zero(op.size());
    detail::for_each_interpolant_point(op, u, [&](const QuadraturePoint& q, double uh, int l, int r) {
        const double fv = q.weight * spec.f(q.x, uh);
        if (l >= 0) {
            b(l) += fv * q.psi_left;
        }
        if (r >= 0) {
            b(r) += fv * q.psi_right;
        }
    });
    return b;
}

/// int g phi_i for a profile g.
inline Vector profile_load(const AssembledOperator& op, const Profile& g) {
    return load_vector(op, Nonlinearity::affine(Profile::constant(0.0), g), Vector::Zero(op.size()));
}

/// D(u)_ij = int f_t(x, u_h) phi_i phi_j.
inline Matrix jacobian_mass(const AssembledOperator& op, const Nonlinearity& spec, const Vector& u) {
    check_dimension(op, u, "jacobian_mass");
    return detail::weighted_mass(op, u, [&](double x, double t) { return spec.dfdt(x, t); });
}

/// M_w with w = m(x).
inline Matrix profile_mass(const AssembledOperator& op, const Profile& m) {
    return detail::weighted_mass(op, Vector::Zero(op.size()), [&](double x, double) { return m(x); });
}

/// J(u) = 1/2 u^T A u - int F(x, u_h).
inline double eval_J(const AssembledOperator& op, const Nonlinearity& spec, const Vector& u) {
    check_dimension(op, u, "eval_J");
    double integral = 0.0;
    detail::for_each_interpolant_point(op, u, [&](const QuadraturePoint& q, double uh, int, int) {
        integral += q.weight * spec.F(q.x, uh);
    });
    return 0.5 * u.dot(op.stiffness() * u) - integral;
}

/// A u - b(u); zero exactly at discrete weak solutions.
inline Vector eval_gradient(const AssembledOperator& op, const Nonlinearity& spec, const Vector& u) {
    check_dimension(op, u, "eval_gradient");
    return op.stiffness() * u - load_vector(op, spec, u);
}

/// max_i |(A u - b(u))_i| / (1 + ||A u||_inf).
inline double residual_weakform(const AssembledOperator& op, const Nonlinearity& spec,
                                const Vector& u) {
    check_dimension(op, u, "residual_weakform");
    const Vector au = op.stiffness() * u;
    const Vector r = au - load_vector(op, spec, u);
    return r.cwiseAbs().maxCoeff() / (1.0 + au.cwiseAbs().maxCoeff());
}

// ---------------------------------------------------------------------------
// Linear nonresonant problems

struct LinearSolve {
    Vector solution;
    int gap_index = 0;      ///< k with lambda_k < m < lambda_{k+1}; 0 below lambda_1
    double min_pivot = 0.0; ///< smallest LU pivot relative to the matrix scale
};

inline constexpr double kPivotFloor = 1e-12;

namespace detail {

inline int locate_gap(const Vector& eigenvalues, double lo, double hi) {
    for (Eigen::Index j = 0; j < eigenvalues.size(); ++j) {
        const double lam = eigenvalues(j);
        if (lam >= lo - kGapMargin && lam <= hi + kGapMargin) {
            throw ResonanceError("linear_nonresonant_solve: coefficient range [" +
                                 std::to_string(lo) + ", " + std::to_string(hi) +
                                 "] touches λ_" + std::to_string(j + 1) + " = " +
                                 std::to_string(lam));
        }
    }
    int k = 0;
    while (k < eigenvalues.size() && eigenvalues(k) < lo) {
        ++k;
    }
    return k;
}

inline LinearSolve solve_certified(const Matrix& h, const Vector& rhs, int k) {
    Eigen::PartialPivLU<Matrix> lu(h);
    LinearSolve out;
    out.gap_index = k;
    out.min_pivot = relative_min_pivot(lu, h);
    if (!(out.min_pivot > kPivotFloor)) {
        throw InconsistencyError("linear_nonresonant_solve: nonresonant system is numerically "
                                 "singular (relative pivot " + std::to_string(out.min_pivot) + ")");
    }
    out.solution = lu.solve(rhs);
    return out;
}

} // namespace detail

/// Solves (A - m M) u = M g for constant m and a coefficient vector g.
inline LinearSolve linear_nonresonant_solve(const Matrix& stiffness, const Matrix& mass,
                                            const Vector& eigenvalues, double m, const Vector& g) {
    if (stiffness.rows() != g.size() || mass.rows() != g.size()) {
        throw InvalidParameter("linear_nonresonant_solve: size mismatch");
    }
    const int k = detail::locate_gap(eigenvalues, m, m);
    return detail::solve_certified(stiffness - m * mass, mass * g, k);
}

/// Solves (A - M_w) u = int g phi_i with M_w weighted by m(x).
/// The range of m is taken over mesh nodes and Gauss points.
inline LinearSolve linear_nonresonant_solve(const AssembledOperator& op, const Spectrum& spectrum,
                                            const Profile& m, const Profile& g) {
    if (spectrum.dimension() != op.size()) {
        throw InvalidParameter("linear_nonresonant_solve: spectrum does not match operator");
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double x : sample_points(op.mesh(), op.quad_order())) {
        lo = std::min(lo, m(x));
        hi = std::max(hi, m(x));
    }
    Vector all(spectrum.dimension());
    for (int j = 1; j <= spectrum.dimension(); ++j) {
        all(j - 1) = spectrum.lambda(j);
    }
    const int k = detail::locate_gap(all, lo, hi);
    return detail::solve_certified(op.stiffness() - profile_mass(op, m), profile_load(op, g), k);
}

// ---------------------------------------------------------------------------
// Newton solvers

struct SolveOptions {
    double tol = 1e-9;
    int max_iter = 200;
    int starts = 1;
    std::uint64_t seed = 42;
    std::optional<Vector> initial;  ///< default u0 = 0
};

enum class NewtonMode { Damped, Undamped, TrustRegion };

inline const char* to_string(NewtonMode m) {
    switch (m) {
    case NewtonMode::Damped:
        return "damped";
    case NewtonMode::Undamped:
        return "undamped";
    case NewtonMode::TrustRegion:
        return "trust_region";
    }
    return "unknown";
}

struct NewtonResult {
    Vector solution;
    int iterations = 0;
    bool converged = false;
    double residual_inf = 0.0;
    std::vector<double> trace;
};

struct UniquenessVerdict {
    enum class Kind { NotChecked, Unique, MultipleFound, Inconclusive };
    Kind kind = Kind::NotChecked;
    double max_distance = 0.0;          ///< max pairwise Z distance of converged starts
    std::vector<Vector> representatives; ///< one per distinct solution
    int starts = 0;
    int converged = 0;
    bool f2_passed = false;
    std::uint64_t seed = 0;

    std::string label() const {
        switch (kind) {
        case Kind::NotChecked:
            return "not_checked";
        case Kind::Unique:
            return "unique";
        case Kind::MultipleFound:
            return "multiple_found";
        case Kind::Inconclusive:
            return "inconclusive";
        }
        return "not_checked";
    }
};

struct GeometryProbe {
    int k = 0;
    std::uint64_t seed = 0;
    int samples = 0;
    std::vector<double> radii;
    /// Per radius T: max J/||u||^2 over sampled points of the H_k sphere ||u||_Z = T.
    std::vector<double> head_max_ratio_z;
    std::vector<double> head_max_ratio_l2;
    std::vector<double> head_max_j;
    /// Per radius T: min J/||u||^2 over sampled points of P_{k+1} with ||u||_Z in [T/10, T].
    std::vector<double> tail_min_ratio_z;
    std::vector<double> tail_min_ratio_l2;
    std::vector<double> tail_min_j;
    /// Smallest sampled J on P_{k+1} with ||u||_Z <= radii.front().
    double tail_floor = 0.0;
    /// head_max_j at the largest radius < every sampled J on P_{k+1}.
    bool separated = false;
};

struct SolveReport {
    Vector solution;
    CaseClassification classification;
    NewtonMode mode = NewtonMode::Damped;
    double j_value = 0.0;
    double residual_inf = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace;
    std::optional<GapCheck> f2;
    UniquenessVerdict uniqueness;
    std::optional<GeometryProbe> geometry;
    std::uint64_t seed = 42;
    double tol = 1e-9;
    int max_iter = 200;
};

namespace detail {

/// Newton step -H^{-1} r. For singular H: minimum-norm least-squares step when
/// `pseudo` is set, InconsistencyError when nonresonance was certified, nullopt otherwise.
inline std::optional<Vector> newton_step(const Matrix& h, const Vector& r, bool certified,
                                         bool pseudo) {
    Eigen::PartialPivLU<Matrix> lu(h);
    const double pivot = relative_min_pivot(lu, h);
    if (pivot > kPivotFloor) {
        return Vector(-lu.solve(r));
    }
    if (certified) {
        throw InconsistencyError("newton: Jacobian is singular although the slope gap was verified "
                                 "(relative pivot " + std::to_string(pivot) + ")");
    }
    if (!pseudo) {
        return std::nullopt;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
    const Vector& ev = eig.eigenvalues();
    const double cut = 1e-10 * ev.cwiseAbs().maxCoeff();
    const Matrix& q = eig.eigenvectors();
    Vector coeff = q.transpose() * r;
    for (Eigen::Index i = 0; i < coeff.size(); ++i) {
        coeff(i) = std::abs(ev(i)) > cut ? coeff(i) / ev(i) : 0.0;
    }
    return Vector(-(q * coeff));
}

inline NewtonResult newton(const AssembledOperator& op, const Nonlinearity& spec, Vector u,
                           const SolveOptions& opts, NewtonMode mode, bool certified) {
    NewtonResult out;
    const Matrix& a = op.stiffness();
    double radius = norm_Z(op, u) + 1.0;
    for (int it = 0;; ++it) {
        Vector r = eval_gradient(op, spec, u);
        const double res = residual_weakform(op, spec, u);
        out.trace.push_back(res);
        if (res <= opts.tol) {
            out.converged = true;
            out.iterations = it;
            break;
        }
        if (it >= opts.max_iter) {
            out.iterations = it;
            break;
        }
        const Matrix h = a - jacobian_mass(op, spec, u);

        if (mode == NewtonMode::Undamped) {
            u += *newton_step(h, r, certified, true);
            continue;
        }

        if (mode == NewtonMode::Damped) {
            Eigen::LLT<Matrix> chol(h);
            Vector p;
            if (chol.info() == Eigen::Success) {
                p = -chol.solve(r);
            }
            const double slope_newton = p.size() ? r.dot(p) : 0.0;
            if (!(p.size() && slope_newton < 0.0)) {
                // A is SPD, so -A^{-1} r is always a descent direction.
                p = -Eigen::LLT<Matrix>(a).solve(r);
            }
            const double slope = r.dot(p);
            const double j0 = eval_J(op, spec, u);
            const double noise = 1e-14 * (1.0 + std::abs(j0));
            double alpha = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < 60; ++ls) {
                const Vector trial = u + alpha * p;
                const double j1 = eval_J(op, spec, trial);
                if (j1 <= j0 + 1e-4 * alpha * slope + noise) {
                    u = trial;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) {
                out.iterations = it;
                break;
            }
            continue;
        }

        // Trust region on the Z-norm of the step, merit ||r||^2.
        auto step = newton_step(h, r, false, true);
        const double step_norm = norm_Z(op, *step);
        const double merit = r.squaredNorm();
        bool accepted = false;
        for (int tries = 0; tries < 60; ++tries) {
            const double tau = step_norm > radius ? radius / step_norm : 1.0;
            const Vector trial = u + tau * *step;
            const double merit_new = eval_gradient(op, spec, trial).squaredNorm();
            const double predicted = merit * (1.0 - (1.0 - tau) * (1.0 - tau));
            const double actual = merit - merit_new;
            if (actual > 1e-4 * predicted) {
                u = trial;
                if (actual > 0.75 * predicted && tau == 1.0) {
                    radius = std::max(radius, 2.0 * step_norm);
                } else if (actual < 0.25 * predicted) {
                    radius *= 0.5;
                }
                accepted = true;
                break;
            }
            radius = 0.5 * std::min(radius, step_norm);
        }
        if (!accepted) {
            out.iterations = it;
            break;
        }
    }
    out.residual_inf = out.trace.back();
    out.solution = std::move(u);
    return out;
}

/// Extra full Newton steps after convergence, kept while the residual keeps
/// shrinking. Distances between converged starts then reflect distinct
/// solutions rather than the stopping tolerance.
inline Vector polish(const AssembledOperator& op, const Nonlinearity& spec, Vector u,
                     int max_steps = 3) {
    double res = residual_weakform(op, spec, u);
    for (int i = 0; i < max_steps; ++i) {
        const Matrix h = op.stiffness() - jacobian_mass(op, spec, u);
        const auto step = newton_step(h, eval_gradient(op, spec, u), false, true);
        const Vector trial = u + *step;
        const double next = residual_weakform(op, spec, trial);
        if (!(next < res)) {
            break;
        }
        u = trial;
        res = next;
    }
    return u;
}

inline SolveReport finish(const AssembledOperator& op, const Nonlinearity& spec, NewtonResult res,
                          CaseClassification cls, NewtonMode mode, const SolveOptions& opts,
                          const char* who) {
    if (!res.converged) {
        throw NonConvergence(std::string(who) + ": no convergence after " +
                                 std::to_string(res.iterations) + " iterations (residual " +
                                 std::to_string(res.residual_inf) + ")",
                             std::move(res.trace));
    }
    SolveReport rep;
    rep.j_value = eval_J(op, spec, res.solution);
    rep.solution = std::move(res.solution);
    rep.classification = std::move(cls);
    rep.mode = mode;
    rep.residual_inf = res.residual_inf;
    rep.iterations = res.iterations;
    rep.converged = true;
    rep.trace = std::move(res.trace);
    rep.seed = opts.seed;
    rep.tol = opts.tol;
    rep.max_iter = opts.max_iter;
    return rep;
}

inline Vector initial_guess(const AssembledOperator& op, const SolveOptions& opts) {
    if (opts.initial) {
        check_dimension(op, *opts.initial, "solve");
        return *opts.initial;
    }
    return Vector::Zero(op.size());
}

} // namespace detail

/// Coercive case: minimizes J by damped Newton with Armijo backtracking (factor 1/2).
inline SolveReport solve_case_a(const AssembledOperator& op, const Nonlinearity& spec,
                                const SolveOptions& opts = {}) {
    auto res = detail::newton(op, spec, detail::initial_guess(op, opts), opts, NewtonMode::Damped,
                              false);
    return detail::finish(op, spec, std::move(res), CaseClassification::coercive(),
                          NewtonMode::Damped, opts, "solve_case_a");
}

/// Gap(k) case: Newton on J' = 0; undamped when the slope gap is verified,
/// trust-region damped otherwise. Refuses anything not classified as a gap.
inline SolveReport solve_case_b(const AssembledOperator& op, const Spectrum& spectrum,
                                const Nonlinearity& spec, const SolveOptions& opts = {}) {
    const auto xs = sample_points(op.mesh(), op.quad_order());
    const auto cls = classify(spec, spectrum, xs);
    if (cls.kind != CaseClassification::Kind::Gap) {
        throw HypothesisRefused("solve_case_b: problem classified " + cls.label() +
                                (cls.reason.empty() ? "" : " (" + cls.reason + ")"));
    }
    std::optional<GapCheck> f2;
    try {
        f2 = check_f2_gap(spec, spectrum, cls.k, xs);
    } catch (const Unauditable&) {
    }
    const bool certified = f2 && f2->passed;
    const NewtonMode mode = certified ? NewtonMode::Undamped : NewtonMode::TrustRegion;
    auto res = detail::newton(op, spec, detail::initial_guess(op, opts), opts, mode, certified);
    auto rep = detail::finish(op, spec, std::move(res), cls, mode, opts, "solve_case_b");
    rep.f2 = f2;
    return rep;
}

/// Classifies and dispatches; HypothesisRefused when unsupported.
inline SolveReport solve(const AssembledOperator& op, const Spectrum& spectrum,
                         const Nonlinearity& spec, const SolveOptions& opts = {}) {
    const auto cls = classify(spec, spectrum, sample_points(op.mesh(), op.quad_order()));
    switch (cls.kind) {
    case CaseClassification::Kind::Coercive:
        return solve_case_a(op, spec, opts);
    case CaseClassification::Kind::Gap:
        return solve_case_b(op, spectrum, spec, opts);
    case CaseClassification::Kind::Unsupported:
        break;
    }
    throw HypothesisRefused("solve: unsupported case (" + cls.reason + ")");
}

/// Random vector with coefficients U[-10, 10] along every available eigenvector.
inline Vector random_eigen_combination(const Spectrum& spectrum, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coeff(-10.0, 10.0);
    Vector c(spectrum.count());
    for (Eigen::Index j = 0; j < c.size(); ++j) {
        c(j) = coeff(rng);
    }
    return spectrum.eigenvectors() * c;
}

/// Multi-start Newton. Runs regardless of classification, so resonant problems
/// can be probed; singular Newton systems then take least-squares steps.
inline UniquenessVerdict uniqueness_probe(const AssembledOperator& op, const Spectrum& spectrum,
                                          const Nonlinearity& spec, int k, int n_starts,
                                          std::uint64_t seed = 42, SolveOptions opts = {}) {
    if (n_starts < 2) {
        throw InvalidParameter("uniqueness_probe: need at least 2 starts");
    }
    const auto xs = sample_points(op.mesh(), op.quad_order());
    UniquenessVerdict v;
    v.starts = n_starts;
    v.seed = seed;
    try {
        v.f2_passed = check_f2_gap(spec, spectrum, k, xs).passed;
    } catch (const Unauditable&) {
        v.f2_passed = false;
    }
    const NewtonMode mode = v.f2_passed ? NewtonMode::Undamped : NewtonMode::TrustRegion;

    std::mt19937_64 rng(seed);
    std::vector<Vector> starts;
    for (int i = 0; i < n_starts; ++i) {
        starts.push_back(random_eigen_combination(spectrum, rng));
    }
    std::vector<Vector> solutions;
    for (const auto& u0 : starts) {
        try {
            auto res = detail::newton(op, spec, u0, opts, mode, v.f2_passed);
            if (res.converged) {
                solutions.push_back(detail::polish(op, spec, std::move(res.solution)));
            }
        } catch (const Error&) {
        }
    }
    v.converged = static_cast<int>(solutions.size());
    for (std::size_t i = 0; i < solutions.size(); ++i) {
        bool known = false;
        for (const auto& rep : v.representatives) {
            if (norm_Z(op, solutions[i] - rep) <= 1e-8) {
                known = true;
                break;
            }
        }
        if (!known) {
            v.representatives.push_back(solutions[i]);
        }
        for (std::size_t j = 0; j < i; ++j) {
            v.max_distance = std::max(v.max_distance, norm_Z(op, solutions[i] - solutions[j]));
        }
    }
    if (v.representatives.size() > 1) {
        v.kind = UniquenessVerdict::Kind::MultipleFound;
    } else if (v.converged < n_starts) {
        v.kind = UniquenessVerdict::Kind::Inconclusive;
    } else {
        v.kind = UniquenessVerdict::Kind::Unique;
    }
    return v;
}

/// Samples J on the head space H_k (sphere ||u||_Z = T) and on P_{k+1}
/// (||u||_Z in [T/10, T]). k = 0 probes the whole space. Besides random
/// directions, the eigen-axes +-e_j of each subspace are always sampled.
inline GeometryProbe geometry_probe(const AssembledOperator& op, const Spectrum& spectrum,
                                    const Nonlinearity& spec, int k,
                                    std::vector<double> radii = {10.0, 100.0, 1000.0},
                                    int n_samples = 200, std::uint64_t seed = 42) {
    const int count = spectrum.count();
    if (k < 0 || k >= count) {
        throw InvalidParameter("geometry_probe: k must lie in 0.." + std::to_string(count - 1));
    }
    if (radii.empty() || !std::is_sorted(radii.begin(), radii.end()) || !(radii.front() > 0.0)) {
        throw InvalidParameter("geometry_probe: radii must be positive and ascending");
    }
    if (n_samples < 1) {
        throw InvalidParameter("geometry_probe: n_samples must be >= 1");
    }
    GeometryProbe out;
    out.k = k;
    out.seed = seed;
    out.samples = n_samples;
    out.radii = radii;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Matrix& vecs = spectrum.eigenvectors();

    auto directions = [&](int first, int last, bool decay) {
        std::vector<Vector> dirs;
        for (int j = first; j < last; ++j) {
            dirs.push_back(vecs.col(j));
            dirs.push_back(-vecs.col(j));
        }
        for (int i = 0; i < n_samples; ++i) {
            Vector c(last - first);
            for (int j = 0; j < c.size(); ++j) {
                // Decay keeps random tail samples dominated by the lowest modes.
                c(j) = normal(rng) / (decay ? 1.0 + j : 1.0);
            }
            dirs.push_back(vecs.middleCols(first, last - first) * c);
        }
        return dirs;
    };
    auto evaluate = [&](const Vector& u, double& ratio_z, double& ratio_l2) {
        const double j = eval_J(op, spec, u);
        ratio_z = j / u.dot(op.stiffness() * u);
        ratio_l2 = j / u.dot(op.mass() * u);
        return j;
    };

    double tail_all_min = std::numeric_limits<double>::infinity();
    for (double t : radii) {
        double hz = -std::numeric_limits<double>::infinity();
        double hl = hz;
        double hj = hz;
        if (k > 0) {
            for (Vector u : directions(0, k, false)) {
                u *= t / norm_Z(op, u);
                double rz = 0.0;
                double rl = 0.0;
                hj = std::max(hj, evaluate(u, rz, rl));
                hz = std::max(hz, rz);
                hl = std::max(hl, rl);
            }
        }
        out.head_max_ratio_z.push_back(hz);
        out.head_max_ratio_l2.push_back(hl);
        out.head_max_j.push_back(hj);

        double pz = std::numeric_limits<double>::infinity();
        double pl = pz;
        double pj = pz;
        for (Vector u : directions(k, count, true)) {
            const double norm = t / 10.0 + (t - t / 10.0) * unit(rng);
            u *= norm / norm_Z(op, u);
            double rz = 0.0;
            double rl = 0.0;
            pj = std::min(pj, evaluate(u, rz, rl));
            pz = std::min(pz, rz);
            pl = std::min(pl, rl);
        }
        out.tail_min_ratio_z.push_back(pz);
        out.tail_min_ratio_l2.push_back(pl);
        out.tail_min_j.push_back(pj);
        tail_all_min = std::min(tail_all_min, pj);
    }

    out.tail_floor = std::numeric_limits<double>::infinity();
    for (Vector u : directions(k, count, true)) {
        u *= radii.front() * unit(rng) / norm_Z(op, u);
        const double j = eval_J(op, spec, u);
        out.tail_floor = std::min(out.tail_floor, j);
    }
    tail_all_min = std::min(tail_all_min, out.tail_floor);
    out.separated = out.head_max_j.back() < tail_all_min;
    return out;
}

/// Number of negative eigenvalues of A - D(u).
inline int morse_index(const AssembledOperator& op, const Nonlinearity& spec, const Vector& u) {
    const Matrix h = op.stiffness() - jacobian_mass(op, spec, u);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
        throw NumericError("morse_index: eigensolver failed");
    }
    const Vector& ev = eig.eigenvalues();
    const double cut = 1e-12 * ev.cwiseAbs().maxCoeff();
    int neg = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < -cut) {
            ++neg;
        }
    }
    return neg;
}

} // namespace nonlocal
