#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nonlocal/error.hpp"
#include "nonlocal/mesh.hpp"
#include "nonlocal/quadrature.hpp"
#include "nonlocal/spectral.hpp"

namespace nonlocal {

/// A function of x on Omega: constant, polynomial, piecewise-linear samples, or arbitrary.
class Profile {
public:
    enum class Type { Constant, Polynomial, Nodal, Function };

    Profile() : Profile(constant(0.0)) {}

    static Profile constant(double v) {
        Profile p(Type::Constant);
        p.coeffs_ = {v};
        return p;
    }

    /// c0 + c1 x + c2 x^2 + ...
    static Profile polynomial(std::vector<double> coeffs) {
        if (coeffs.empty()) {
            throw InvalidParameter("profile: polynomial needs at least one coefficient");
        }
        Profile p(Type::Polynomial);
        p.coeffs_ = std::move(coeffs);
        return p;
    }

    /// Values at equally spaced points of [a, b], linearly interpolated.
    static Profile nodal(double a, double b, std::vector<double> values) {
        if (values.size() < 2 || !(a < b)) {
            throw InvalidParameter("profile: nodal samples need >= 2 values on a < b");
        }
        Profile p(Type::Nodal);
        p.coeffs_ = std::move(values);
        p.a_ = a;
        p.b_ = b;
        return p;
    }

    static Profile function(std::function<double(double)> fn) {
        Profile p(Type::Function);
        p.fn_ = std::move(fn);
        return p;
    }

    Type type() const noexcept { return type_; }
    bool is_constant() const noexcept { return type_ == Type::Constant; }
    const std::vector<double>& coefficients() const noexcept { return coeffs_; }
    double nodal_a() const noexcept { return a_; }
    double nodal_b() const noexcept { return b_; }

    double operator()(double x) const {
        switch (type_) {
        case Type::Constant:
            return coeffs_[0];
        case Type::Polynomial: {
            double v = 0.0;
            for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
                v = v * x + *it;
            }
            return v;
        }
        case Type::Nodal: {
            const auto n = static_cast<double>(coeffs_.size() - 1);
            const double pos = std::clamp((x - a_) / (b_ - a_), 0.0, 1.0) * n;
            const auto i = std::min(static_cast<std::size_t>(pos), coeffs_.size() - 2);
            const double frac = pos - static_cast<double>(i);
            return coeffs_[i] * (1.0 - frac) + coeffs_[i + 1] * frac;
        }
        case Type::Function:
            return fn_(x);
        }
        return 0.0;
    }

private:
    explicit Profile(Type t) : type_(t) {}

    Type type_;
    std::vector<double> coeffs_;
    double a_ = 0.0;
    double b_ = 1.0;
    std::function<double(double)> fn_;
};

enum class NonlinearityFamily { Affine, Saturating, BoundedPerturbation, Custom };

inline const char* to_string(NonlinearityFamily f) {
    switch (f) {
    case NonlinearityFamily::Affine:
        return "affine";
    case NonlinearityFamily::Saturating:
        return "saturating";
    case NonlinearityFamily::BoundedPerturbation:
        return "bounded_perturbation";
    case NonlinearityFamily::Custom:
        return "custom";
    }
    return "unknown";
}

/// Growth data |f(x,t)| <= a(x) + b|t|.
struct Growth {
    Profile a;
    double b = 0.0;
};

/// Pieces a user supplies for a custom right-hand side.
struct CustomNonlinearity {
    std::function<double(double, double)> f;
    /// Optional; central differences of f are used otherwise.
    std::function<double(double, double)> dfdt;
    /// Optional closed-form primitive; adaptive quadrature otherwise.
    std::function<double(double, double)> primitive;
    Growth growth;
    Profile alpha_lower;
    Profile alpha_upper;
    /// Declared bounds on difference quotients (f(x,s)-f(x,t))/(s-t).
    std::optional<std::pair<double, double>> slope_range;
};

/// Right-hand side f(x, t) of the Dirichlet problem.
///
/// Built-in families, with m(x) the asymptotic slope and g(x) the source:
///   affine:               f = m t + g
///   saturating:           f = m t + delta atan(t) + g
///   bounded_perturbation: f = m t + c sin(t) + g
class Nonlinearity {
public:
    static Nonlinearity affine(Profile m, Profile g) {
        return Nonlinearity(NonlinearityFamily::Affine, std::move(m), 0.0, std::move(g));
    }

    static Nonlinearity saturating(Profile m, double delta, Profile g) {
        return Nonlinearity(NonlinearityFamily::Saturating, std::move(m), delta, std::move(g));
    }

    static Nonlinearity bounded_perturbation(Profile m, double c, Profile g) {
        return Nonlinearity(NonlinearityFamily::BoundedPerturbation, std::move(m), c, std::move(g));
    }

    static Nonlinearity custom(CustomNonlinearity parts) {
        if (!parts.f) {
            throw InvalidParameter("nonlinearity: custom family needs f");
        }
        Nonlinearity n(NonlinearityFamily::Custom, Profile::constant(0.0), 0.0,
                       Profile::constant(0.0));
        n.custom_ = std::move(parts);
        n.growth_ = n.custom_->growth;
        return n;
    }

    NonlinearityFamily family() const noexcept { return family_; }
    const Profile& slope() const noexcept { return m_; }
    const Profile& source() const noexcept { return g_; }
    /// delta for saturating, c for bounded perturbation.
    double amplitude() const noexcept { return amp_; }

    /// Overrides the default growth data.
    Nonlinearity with_growth(Growth growth) const {
        Nonlinearity n = *this;
        n.growth_ = std::move(growth);
        return n;
    }

    double f(double x, double t) const {
        switch (family_) {
        case NonlinearityFamily::Affine:
            return m_(x) * t + g_(x);
        case NonlinearityFamily::Saturating:
            return m_(x) * t + amp_ * std::atan(t) + g_(x);
        case NonlinearityFamily::BoundedPerturbation:
            return m_(x) * t + amp_ * std::sin(t) + g_(x);
        case NonlinearityFamily::Custom:
            return custom_->f(x, t);
        }
        return 0.0;
    }

    double dfdt(double x, double t) const {
        switch (family_) {
        case NonlinearityFamily::Affine:
            return m_(x);
        case NonlinearityFamily::Saturating:
            return m_(x) + amp_ / (1.0 + t * t);
        case NonlinearityFamily::BoundedPerturbation:
            return m_(x) + amp_ * std::cos(t);
        case NonlinearityFamily::Custom:
            if (custom_->dfdt) {
                return custom_->dfdt(x, t);
            }
            {
                const double step = 1e-6 * std::max(1.0, std::abs(t));
                return (custom_->f(x, t + step) - custom_->f(x, t - step)) / (2.0 * step);
            }
        }
        return 0.0;
    }

    /// F(x,t) = int_0^t f(x,tau) dtau.
    double F(double x, double t) const {
        switch (family_) {
        case NonlinearityFamily::Affine:
            return 0.5 * m_(x) * t * t + g_(x) * t;
        case NonlinearityFamily::Saturating:
            return 0.5 * m_(x) * t * t + amp_ * (t * std::atan(t) - 0.5 * std::log1p(t * t)) +
                   g_(x) * t;
        case NonlinearityFamily::BoundedPerturbation:
            return 0.5 * m_(x) * t * t + amp_ * (1.0 - std::cos(t)) + g_(x) * t;
        case NonlinearityFamily::Custom:
            break;
        }
        if (custom_->primitive) {
            return custom_->primitive(x, t);
        }
        if (t == 0.0) {
            return 0.0;
        }
        auto est = quad::adaptive([&](double tau) { return custom_->f(x, tau); }, 0.0, t, 10, 1e-13,
                                  1e-12, 30);
        if (!est.converged) {
            throw NumericError("nonlinearity: quadrature of the custom primitive did not converge");
        }
        return est.value;
    }

    double alpha_lower(double x) const {
        return family_ == NonlinearityFamily::Custom ? custom_->alpha_lower(x) : m_(x);
    }

    double alpha_upper(double x) const {
        return family_ == NonlinearityFamily::Custom ? custom_->alpha_upper(x) : m_(x);
    }

    /// Growth data: declared, or derived for the built-ins with b = sup|m| over `xs`.
    Growth growth(const std::vector<double>& xs) const {
        if (growth_) {
            return *growth_;
        }
        double b = 0.0;
        for (double x : xs) {
            b = std::max(b, std::abs(m_(x)));
        }
        const double bounded = family_ == NonlinearityFamily::Saturating
                                   ? std::abs(amp_) * std::numbers::pi / 2.0
                                   : (family_ == NonlinearityFamily::BoundedPerturbation
                                          ? std::abs(amp_)
                                          : 0.0);
        Profile g = g_;
        return {Profile::function([g, bounded](double x) { return std::abs(g(x)) + bounded; }), b};
    }

    /// Range containing every difference quotient in t, over the sample points `xs`.
    /// Affine ranges are widened by `affine_eps` so the strict gap test is meaningful.
    std::optional<std::pair<double, double>> slope_range(const std::vector<double>& xs,
                                                         double affine_eps = 1e-9) const {
        if (family_ == NonlinearityFamily::Custom) {
            return custom_->slope_range;
        }
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (double x : xs) {
            lo = std::min(lo, m_(x));
            hi = std::max(hi, m_(x));
        }
        switch (family_) {
        case NonlinearityFamily::Affine:
            return std::pair{lo - affine_eps, hi + affine_eps};
        case NonlinearityFamily::Saturating:
            return std::pair{lo + std::min(0.0, amp_), hi + std::max(0.0, amp_)};
        case NonlinearityFamily::BoundedPerturbation:
            return std::pair{lo - std::abs(amp_), hi + std::abs(amp_)};
        default:
            break;
        }
        return std::nullopt;
    }

private:
    Nonlinearity(NonlinearityFamily family, Profile m, double amp, Profile g)
        : family_(family), m_(std::move(m)), amp_(amp), g_(std::move(g)) {}

    NonlinearityFamily family_;
    Profile m_;
    double amp_ = 0.0;
    Profile g_;
    std::optional<Growth> growth_;
    std::optional<CustomNonlinearity> custom_;
};

/// Points where a.e.-in-x hypotheses are checked: mesh nodes and Gauss points.
inline std::vector<double> sample_points(const Mesh& mesh, int order) {
    std::vector<double> xs(mesh.nodes().begin(), mesh.nodes().end());
    for_each_quadrature_point(mesh, order, [&](const QuadraturePoint& q) { xs.push_back(q.x); });
    std::sort(xs.begin(), xs.end());
    return xs;
}

struct GrowthGrid {
    std::vector<double> xs;
    double t_max = 1e6;
    int t_count = 201;
};

struct GrowthAudit {
    bool passed = false;
    double worst_slack = 0.0;
    double worst_x = 0.0;
    double worst_t = 0.0;
};

/// Worst slack of a(x) + b|t| - |f(x,t)| over xs x {linear and log-spaced t in [-T, T]}.
inline GrowthAudit audit_growth(const Nonlinearity& spec, const GrowthGrid& grid) {
    if (grid.xs.empty() || grid.t_max < 1e4 || grid.t_count < 3) {
        throw InvalidParameter("audit_growth: need x samples, t_max >= 1e4 and t_count >= 3");
    }
    const Growth growth = spec.growth(grid.xs);
    std::vector<double> ts;
    for (int i = 0; i < grid.t_count; ++i) {
        ts.push_back(-grid.t_max + 2.0 * grid.t_max * i / (grid.t_count - 1));
    }
    const double log_lo = std::log(1e-3);
    const double log_hi = std::log(grid.t_max);
    for (int i = 0; i < grid.t_count; ++i) {
        const double t = std::exp(log_lo + (log_hi - log_lo) * i / (grid.t_count - 1));
        ts.push_back(t);
        ts.push_back(-t);
    }
    GrowthAudit audit;
    audit.worst_slack = std::numeric_limits<double>::infinity();
    for (double x : grid.xs) {
        const double ax = growth.a(x);
        for (double t : ts) {
            const double slack = ax + growth.b * std::abs(t) - std::abs(spec.f(x, t));
            if (slack < audit.worst_slack) {
                audit.worst_slack = slack;
                audit.worst_x = x;
                audit.worst_t = t;
            }
        }
    }
    // Slack is measured against values up to b*t_max; allow roundoff at that scale.
    const double scale = 1.0 + growth.b * grid.t_max;
    audit.passed = audit.worst_slack >= -1e-9 * scale;
    return audit;
}

/// Largest deviation between declared asymptotic slopes and f(x,t)/t at |t| = t_probe.
inline double slope_declaration_deviation(const Nonlinearity& spec, const std::vector<double>& xs,
                                          double t_probe = 1e6) {
    double worst = 0.0;
    for (double x : xs) {
        for (double t : {t_probe, -t_probe}) {
            const double q = spec.f(x, t) / t;
            worst = std::max(worst, std::max(spec.alpha_lower(x) - q, q - spec.alpha_upper(x)));
        }
    }
    return worst;
}

/// Strict margin used for every eigenvalue comparison.
inline constexpr double kGapMargin = 1e-9;

struct CaseClassification {
    enum class Kind { Coercive, Gap, Unsupported };
    Kind kind = Kind::Unsupported;
    int k = 0;  ///< gap index for Gap(k)
    std::string reason;
    double alpha_inf = 0.0;
    double alpha_sup = 0.0;

    static CaseClassification coercive() { return {Kind::Coercive, 0, {}}; }
    static CaseClassification gap(int k) { return {Kind::Gap, k, {}}; }
    static CaseClassification unsupported(std::string why) {
        return {Kind::Unsupported, 0, std::move(why)};
    }

    std::string label() const {
        switch (kind) {
        case Kind::Coercive:
            return "coercive";
        case Kind::Gap:
            return "gap";
        case Kind::Unsupported:
            return "unsupported";
        }
        return "unsupported";
    }
};

/// Coercive when sup alpha_upper < lambda_1; Gap(k) when
/// lambda_k < inf alpha_lower <= sup alpha_upper < lambda_{k+1}; both strict by kGapMargin.
inline CaseClassification classify(const std::vector<double>& eigenvalues, double alpha_inf,
                                   double alpha_sup) {
    CaseClassification out;
    const int count = static_cast<int>(eigenvalues.size());
    auto lam = [&](int j) { return eigenvalues[static_cast<std::size_t>(j - 1)]; };
    if (count == 0) {
        out = CaseClassification::unsupported("no eigenvalues computed");
    } else if (alpha_sup < lam(1) - kGapMargin) {
        out = CaseClassification::coercive();
    } else {
        out = CaseClassification::unsupported("");
        for (int k = 1; k < count; ++k) {
            if (lam(k) + kGapMargin < alpha_inf && alpha_sup < lam(k + 1) - kGapMargin) {
                out = CaseClassification::gap(k);
                break;
            }
        }
        if (out.kind == CaseClassification::Kind::Unsupported) {
            for (int j = 1; j <= count; ++j) {
                if (lam(j) >= alpha_inf - kGapMargin && lam(j) <= alpha_sup + kGapMargin) {
                    out.reason = "straddles λ_" + std::to_string(j);
                    break;
                }
            }
            if (out.reason.empty()) {
                out.reason = "asymptotic slopes exceed the computed range (λ_" +
                             std::to_string(count) + ")";
            }
        }
    }
    out.alpha_inf = alpha_inf;
    out.alpha_sup = alpha_sup;
    return out;
}

inline CaseClassification classify(const Nonlinearity& spec, const Spectrum& spectrum,
                                   const std::vector<double>& xs) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double x : xs) {
        lo = std::min(lo, spec.alpha_lower(x));
        hi = std::max(hi, spec.alpha_upper(x));
    }
    const Vector ev = spectrum.eigenvalues();
    return classify(std::vector<double>(ev.data(), ev.data() + ev.size()), lo, hi);
}

struct GapCheck {
    bool passed = false;
    int k = 0;
    double slope_lo = 0.0;
    double slope_hi = 0.0;
    double lambda_k = 0.0;
    double lambda_k1 = 0.0;
};

/// Passes iff the slope range lies in (lambda_k + margin, lambda_{k+1} - margin).
inline GapCheck check_f2_gap(std::pair<double, double> slopes, double lambda_k, double lambda_k1,
                             int k) {
    GapCheck out;
    out.k = k;
    out.slope_lo = slopes.first;
    out.slope_hi = slopes.second;
    out.lambda_k = lambda_k;
    out.lambda_k1 = lambda_k1;
    out.passed = slopes.first > lambda_k + kGapMargin && slopes.second < lambda_k1 - kGapMargin;
    return out;
}

inline GapCheck check_f2_gap(const Nonlinearity& spec, const Spectrum& spectrum, int k,
                             const std::vector<double>& xs) {
    const auto slopes = spec.slope_range(xs);
    if (!slopes) {
        throw Unauditable("check_f2_gap: custom nonlinearity declares no slope range");
    }
    if (k < 1 || k + 1 > spectrum.dimension()) {
        throw InvalidParameter("check_f2_gap: k out of range");
    }
    return check_f2_gap(*slopes, spectrum.lambda(k), spectrum.lambda(k + 1), k);
}

} // namespace nonlocal
