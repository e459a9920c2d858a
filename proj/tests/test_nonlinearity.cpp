#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "nonlocal/nonlinearity.hpp"

using namespace nonlocal;

namespace {

std::vector<Nonlinearity> builtins() {
    return {
        Nonlinearity::affine(Profile::constant(1.5), Profile::constant(0.3)),
        Nonlinearity::affine(Profile::polynomial({1.0, 0.5, -0.25}), Profile::nodal(-1.0, 1.0, {0.0, 2.0, -1.0})),
        Nonlinearity::saturating(Profile::constant(4.0), 1.0, Profile::constant(1.0)),
        Nonlinearity::saturating(Profile::constant(0.0), -2.0, Profile::polynomial({0.0, 1.0})),
        Nonlinearity::bounded_perturbation(Profile::constant(4.0), 3.0, Profile::constant(-1.0)),
    };
}

std::vector<double> grid_x() {
    std::vector<double> xs;
    for (int i = 0; i <= 20; ++i) {
        xs.push_back(-1.0 + 0.1 * i);
    }
    return xs;
}

} // namespace

TEST(Profile, Kinds) {
    EXPECT_EQ(Profile::constant(2.5)(0.3), 2.5);
    const Profile p = Profile::polynomial({1.0, -2.0, 3.0});
    EXPECT_DOUBLE_EQ(p(2.0), 1.0 - 4.0 + 12.0);
    const Profile n = Profile::nodal(0.0, 2.0, {0.0, 4.0, 2.0});
    EXPECT_DOUBLE_EQ(n(0.0), 0.0);
    EXPECT_DOUBLE_EQ(n(0.5), 2.0);
    EXPECT_DOUBLE_EQ(n(1.5), 3.0);
    EXPECT_DOUBLE_EQ(n(2.0), 2.0);
    EXPECT_DOUBLE_EQ(Profile::function([](double x) { return x * x; })(3.0), 9.0);
    EXPECT_THROW(Profile::polynomial({}), InvalidParameter);
    EXPECT_THROW(Profile::nodal(0.0, 1.0, {1.0}), InvalidParameter);
}

TEST(Primitive, ClosedForms) {
    const auto affine = Nonlinearity::affine(Profile::constant(1.0), Profile::constant(0.0));
    EXPECT_DOUBLE_EQ(affine.F(0.2, 2.0), 2.0);
    const auto source = Nonlinearity::affine(Profile::constant(0.0), Profile::constant(1.7));
    EXPECT_DOUBLE_EQ(source.F(0.0, 3.0), 1.7 * 3.0);
    const auto sat = Nonlinearity::saturating(Profile::constant(0.0), 1.0, Profile::constant(0.0));
    EXPECT_NEAR(sat.F(0.0, 1.0), std::numbers::pi / 4.0 - std::log(2.0) / 2.0, 1e-15);
    EXPECT_NEAR(sat.F(0.0, 1.0), 0.438825, 1e-6);
}

TEST(Primitive, MatchesIndependentQuadrature) {
    boost::math::quadrature::tanh_sinh<double> ts;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ux(-1.0, 1.0);
    std::uniform_real_distribution<double> ut(-20.0, 20.0);
    for (const auto& spec : builtins()) {
        for (int i = 0; i < 20; ++i) {
            const double x = ux(rng);
            const double t = ut(rng);
            const double ref = ts.integrate([&](double tau) { return spec.f(x, tau); }, std::min(0.0, t),
                                            std::max(0.0, t)) * (t < 0.0 ? -1.0 : 1.0);
            EXPECT_NEAR(spec.F(x, t), ref, 1e-10 * (1.0 + std::abs(ref)));
        }
    }
}

TEST(Primitive, CustomUsesAdaptiveQuadrature) {
    CustomNonlinearity parts;
    parts.f = [](double, double t) { return 4.0 * t + std::atan(t) + 1.0; };
    const auto custom = Nonlinearity::custom(parts);
    const auto sat = Nonlinearity::saturating(Profile::constant(4.0), 1.0, Profile::constant(1.0));
    for (double t : {-7.0, -0.3, 0.0, 0.4, 12.0}) {
        EXPECT_NEAR(custom.F(0.0, t), sat.F(0.0, t), 1e-10 * (1.0 + std::abs(sat.F(0.0, t))));
        EXPECT_NEAR(custom.dfdt(0.0, t), sat.dfdt(0.0, t), 1e-6);
    }
}

TEST(Primitive, VanishesAtZeroAndDifferentiatesToF) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> ux(-1.0, 1.0);
    std::uniform_real_distribution<double> ut(-50.0, 50.0);
    for (const auto& spec : builtins()) {
        for (int i = 0; i < 200; ++i) {
            const double x = ux(rng);
            EXPECT_EQ(spec.F(x, 0.0), 0.0);
            const double t = ut(rng);
            const double eps = 1e-5 * std::max(1.0, std::abs(t));
            const double fd = (spec.F(x, t + eps) - spec.F(x, t - eps)) / (2.0 * eps);
            const double fv = spec.f(x, t);
            EXPECT_NEAR(fd, fv, 1e-6 * std::max(1.0, std::abs(fv)));
            const double dd = (spec.f(x, t + eps) - spec.f(x, t - eps)) / (2.0 * eps);
            EXPECT_NEAR(spec.dfdt(x, t), dd, 1e-6 * std::max(1.0, std::abs(dd)));
        }
    }
}

TEST(Primitive, BoundedByGrowthData) {
    const auto xs = grid_x();
    for (const auto& spec : builtins()) {
        const Growth g = spec.growth(xs);
        for (double x : xs) {
            for (int i = -200; i <= 200; ++i) {
                const double t = 0.37 * i * std::abs(i);
                EXPECT_LE(std::abs(spec.F(x, t)), g.a(x) * std::abs(t) + 0.5 * g.b * t * t + 1e-9 * (1.0 + t * t));
            }
        }
    }
}

TEST(GrowthAudit, AffineEqualityCase) {
    const auto spec = Nonlinearity::affine(Profile::constant(2.0), Profile::constant(1.0))
                          .with_growth({Profile::constant(1.0), 2.0});
    GrowthGrid grid;
    grid.xs = grid_x();
    const auto audit = audit_growth(spec, grid);
    EXPECT_TRUE(audit.passed);
    EXPECT_EQ(audit.worst_slack, 0.0);
}

TEST(GrowthAudit, SaturatingWithBoundedPart) {
    const auto spec = Nonlinearity::saturating(Profile::constant(2.0), 1.0, Profile::constant(0.0))
                          .with_growth({Profile::constant(1.0 + std::numbers::pi / 2.0), 2.0});
    GrowthGrid grid;
    grid.xs = grid_x();
    EXPECT_TRUE(audit_growth(spec, grid).passed);
}

TEST(GrowthAudit, SuperlinearFails) {
    CustomNonlinearity parts;
    parts.f = [](double, double t) { return t * t; };
    parts.growth = {Profile::constant(1.0), 1.0};
    const auto spec = Nonlinearity::custom(parts);
    EXPECT_LT(1.0 + 3.0 - std::abs(spec.f(0.0, 3.0)), 0.0);
    GrowthGrid grid;
    grid.xs = grid_x();
    const auto audit = audit_growth(spec, grid);
    EXPECT_FALSE(audit.passed);
    EXPECT_LT(audit.worst_slack, 0.0);
}

TEST(GrowthAudit, DefaultDataPassesForBuiltins) {
    GrowthGrid grid;
    grid.xs = grid_x();
    for (const auto& spec : builtins()) {
        EXPECT_TRUE(audit_growth(spec, grid).passed) << to_string(spec.family());
    }
}

TEST(GrowthAudit, RequiresLargeRange) {
    GrowthGrid grid;
    grid.xs = grid_x();
    grid.t_max = 100.0;
    EXPECT_THROW(audit_growth(builtins().front(), grid), InvalidParameter);
    grid = {};
    EXPECT_THROW(audit_growth(builtins().front(), grid), InvalidParameter);
}

TEST(AsymptoticSlopes, DeclaredValuesMatchSampledQuotients) {
    for (const auto& spec : builtins()) {
        EXPECT_LE(slope_declaration_deviation(spec, grid_x()), 1e-3) << to_string(spec.family());
    }
    CustomNonlinearity wrong;
    wrong.f = [](double, double t) { return 3.0 * t; };
    wrong.alpha_lower = Profile::constant(1.0);
    wrong.alpha_upper = Profile::constant(2.0);
    EXPECT_NEAR(slope_declaration_deviation(Nonlinearity::custom(wrong), grid_x()), 1.0, 1e-9);
}

TEST(Classify, SpecExamples) {
    const std::vector<double> lam{1.0, 3.0, 7.0, 12.0};
    EXPECT_EQ(classify(lam, 0.5, 0.5).kind, CaseClassification::Kind::Coercive);
    const auto gap = classify(lam, 4.0, 5.0);
    EXPECT_EQ(gap.kind, CaseClassification::Kind::Gap);
    EXPECT_EQ(gap.k, 2);
    const auto bad = classify(lam, 2.5, 3.5);
    EXPECT_EQ(bad.kind, CaseClassification::Kind::Unsupported);
    EXPECT_EQ(bad.reason, "straddles λ_2");
    const auto above = classify(lam, 13.0, 14.0);
    EXPECT_EQ(above.kind, CaseClassification::Kind::Unsupported);
    EXPECT_NE(above.reason.find("exceed"), std::string::npos);
}

TEST(Classify, StrictMargins) {
    const std::vector<double> lam{1.0, 3.0, 7.0};
    EXPECT_EQ(classify(lam, 1.0 - 1e-10, 1.0 - 1e-10).kind, CaseClassification::Kind::Unsupported);
    EXPECT_EQ(classify(lam, 1.0 - 1e-8, 1.0 - 1e-8).kind, CaseClassification::Kind::Coercive);
    EXPECT_EQ(classify(lam, 3.0 + 1e-10, 4.0).kind, CaseClassification::Kind::Unsupported);
    EXPECT_EQ(classify(lam, 3.0 + 1e-8, 7.0 - 1e-8).kind, CaseClassification::Kind::Gap);
    EXPECT_EQ(classify(lam, 3.0, 3.0).reason, "straddles λ_2");
}

TEST(Classify, RandomIntervalsRespectTheGapInvariant) {
    const std::vector<double> lam{1.0, 3.0, 7.0, 12.0, 20.0};
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.0, 22.0);
    for (int i = 0; i < 2000; ++i) {
        double lo = u(rng);
        double hi = u(rng);
        if (lo > hi) {
            std::swap(lo, hi);
        }
        const auto c = classify(lam, lo, hi);
        if (c.kind == CaseClassification::Kind::Coercive) {
            EXPECT_LT(hi, lam[0] - kGapMargin);
        } else if (c.kind == CaseClassification::Kind::Gap) {
            EXPECT_GT(lo, lam[static_cast<std::size_t>(c.k - 1)] + kGapMargin);
            EXPECT_LT(hi, lam[static_cast<std::size_t>(c.k)] - kGapMargin);
        } else {
            EXPECT_FALSE(c.reason.empty());
        }
    }
}

TEST(SlopeGap, SpecExamples) {
    EXPECT_TRUE(check_f2_gap({4.0, 5.0}, 3.0, 7.0, 2).passed);
    const auto bp = Nonlinearity::bounded_perturbation(Profile::constant(4.0), 4.0, Profile::constant(0.0));
    const auto range = *bp.slope_range(grid_x());
    EXPECT_DOUBLE_EQ(range.first, 0.0);
    EXPECT_DOUBLE_EQ(range.second, 8.0);
    EXPECT_FALSE(check_f2_gap(range, 3.0, 7.0, 2).passed);
    const auto sat = Nonlinearity::saturating(Profile::constant(4.0), 1.0, Profile::constant(1.0));
    const auto sr = *sat.slope_range(grid_x());
    EXPECT_DOUBLE_EQ(sr.first, 4.0);
    EXPECT_DOUBLE_EQ(sr.second, 5.0);
    const auto resonant = Nonlinearity::affine(Profile::constant(3.0), Profile::constant(0.0));
    EXPECT_FALSE(check_f2_gap(*resonant.slope_range(grid_x()), 3.0, 7.0, 2).passed);
}

TEST(SlopeGap, DeclaredRangeBoundsDifferenceQuotients) {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> ut(-30.0, 30.0);
    const auto xs = grid_x();
    for (const auto& spec : builtins()) {
        const auto r = *spec.slope_range(xs, 0.0);
        for (double x : xs) {
            for (int i = 0; i < 100; ++i) {
                const double s = ut(rng);
                const double t = ut(rng);
                if (std::abs(s - t) < 1e-6) {
                    continue;
                }
                const double q = (spec.f(x, s) - spec.f(x, t)) / (s - t);
                EXPECT_GE(q, r.first - 1e-9);
                EXPECT_LE(q, r.second + 1e-9);
            }
        }
    }
}

TEST(SlopeGap, CustomWithoutDeclarationIsUnauditable) {
    CustomNonlinearity parts;
    parts.f = [](double, double t) { return 4.0 * t; };
    EXPECT_FALSE(Nonlinearity::custom(parts).slope_range(grid_x()).has_value());
}
