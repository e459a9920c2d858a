#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "nonlocal/discretization.hpp"
#include "nonlocal/spectral.hpp"
#include "oracles.hpp"

using namespace nonlocal;

namespace {

AssembledOperator fractional_op(double s, int n) {
    return assemble(Mesh(-1.0, 1.0, n), Kernel::fractional(s));
}

} // namespace

TEST(Eigenproblem, OneByOne) {
    Matrix a(1, 1);
    a << 2.0;
    Matrix m = Matrix::Identity(1, 1);
    const Spectrum sp = solve_eigenproblem(a, m, 1);
    EXPECT_DOUBLE_EQ(sp.lambda(1), 2.0);
    EXPECT_DOUBLE_EQ(sp.vector(1)(0), 1.0);
}

TEST(Eigenproblem, DiagonalPencil) {
    Matrix a = Vector((Vector(2) << 2.0, 6.0).finished()).asDiagonal();
    const Spectrum sp = solve_eigenproblem(a, Matrix::Identity(2, 2), 2);
    EXPECT_DOUBLE_EQ(sp.lambda(1), 2.0);
    EXPECT_DOUBLE_EQ(sp.lambda(2), 6.0);
    EXPECT_NEAR((sp.vector(1) - Vector::Unit(2, 0)).norm(), 0.0, 1e-15);
    EXPECT_NEAR((sp.vector(2) - Vector::Unit(2, 1)).norm(), 0.0, 1e-15);
}

TEST(Eigenproblem, ValidatesInput) {
    Matrix a = Matrix::Identity(3, 3);
    EXPECT_THROW(solve_eigenproblem(a, Matrix::Identity(2, 2), 1), InvalidParameter);
    EXPECT_THROW(solve_eigenproblem(a, Matrix::Identity(3, 3), 0), InvalidParameter);
    EXPECT_THROW(solve_eigenproblem(a, Matrix::Identity(3, 3), 4), InvalidParameter);
    Matrix bad_mass = Matrix::Identity(3, 3);
    bad_mass(1, 1) = -1.0;
    EXPECT_THROW(solve_eigenproblem(a, bad_mass, 1), AssemblyCorruption);
    Matrix indefinite = Matrix::Identity(3, 3);
    indefinite(0, 0) = -1.0;
    EXPECT_THROW(solve_eigenproblem(indefinite, Matrix::Identity(3, 3), 1), AssemblyCorruption);
}

TEST(Eigenproblem, AgreesWithJacobiOracle) {
    for (double s : {0.25, 0.5, 0.75}) {
        const auto op = fractional_op(s, 40);
        const Spectrum sp = solve_eigenproblem(op);
        const auto ref = oracle::generalized_eigenvalues(op.stiffness(), op.mass());
        for (int j = 1; j <= sp.dimension(); ++j) {
            EXPECT_NEAR(sp.lambda(j), ref[static_cast<std::size_t>(j - 1)], 1e-9 * sp.lambda(j))
                << "s = " << s << ", j = " << j;
        }
    }
}

TEST(Eigenproblem, OrthonormalityAndSignConvention) {
    const auto op = fractional_op(0.5, 64);
    const Spectrum sp = solve_eigenproblem(op);
    const Matrix& e = sp.eigenvectors();
    const Matrix gram_m = e.transpose() * op.mass() * e;
    const Matrix gram_a = e.transpose() * op.stiffness() * e;
    const auto m = sp.dimension();
    EXPECT_LT((gram_m - Matrix::Identity(m, m)).cwiseAbs().maxCoeff(), 1e-10);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            const double expect = i == j ? sp.lambda(j + 1) : 0.0;
            EXPECT_NEAR(gram_a(i, j), expect, 1e-8 * sp.lambda(j + 1));
        }
    }
    EXPECT_GT(sp.lambda(1), 0.0);
    EXPECT_GT((sp.lambda(2) - sp.lambda(1)) / sp.lambda(1), 1e-8);
    const Vector e1 = sp.vector(1);
    EXPECT_GT(e1.minCoeff(), 0.0);
    for (int j = 1; j <= m; ++j) {
        const Vector ej = sp.vector(j);
        const double mean = (op.mass() * ej).sum();
        if (std::abs(mean) > 1e-9 * (op.mass() * ej).cwiseAbs().sum()) {
            EXPECT_GT(mean, 0.0) << j;
        } else {
            Eigen::Index first = 0;
            while (std::abs(ej(first)) <= 1e-8 * ej.cwiseAbs().maxCoeff()) {
                ++first;
            }
            EXPECT_GT(ej(first), 0.0) << j;
        }
    }
    for (int j = 2; j <= m; ++j) {
        EXPECT_LE(sp.lambda(j - 1), sp.lambda(j));
    }
}

TEST(Eigenproblem, RepeatedEigenvaluesFormAnOrthonormalCluster) {
    Matrix a = Vector((Vector(4) << 1.0, 3.0, 3.0, 5.0).finished()).asDiagonal();
    Matrix q = Eigen::HouseholderQR<Matrix>(Matrix::Random(4, 4)).householderQ();
    const Matrix rotated = q * a * q.transpose();
    const Spectrum sp = solve_eigenproblem(rotated, Matrix::Identity(4, 4), 4);
    EXPECT_NEAR(sp.lambda(2), 3.0, 1e-12);
    EXPECT_NEAR(sp.lambda(3), 3.0, 1e-12);
    EXPECT_NEAR(sp.vector(2).dot(sp.vector(3)), 0.0, 1e-12);
    EXPECT_TRUE(sp.splits_cluster(2));
    EXPECT_FALSE(sp.splits_cluster(1));
    EXPECT_THROW(project(sp, Vector::Ones(4), Head(2)), InvalidParameter);
    EXPECT_NO_THROW(project(sp, Vector::Ones(4), Head(3)));
}

TEST(Rayleigh, EigenvectorsAndSubspaceBounds) {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> normal;
    for (double s : {0.25, 0.5, 0.75}) {
        const auto op = fractional_op(s, 48);
        const Spectrum sp = solve_eigenproblem(op);
        const int m = sp.dimension();
        for (int j = 1; j <= m; j += 7) {
            EXPECT_NEAR(rayleigh_quotient(op, sp.vector(j)), sp.lambda(j), 1e-10 * sp.lambda(j));
        }
        for (int k = 1; k < m; ++k) {
            for (int trial = 0; trial < 100; ++trial) {
                Vector c(m);
                for (int j = 0; j < m; ++j) {
                    c(j) = normal(rng);
                }
                const Vector head = sp.eigenvectors().leftCols(k) * c.head(k);
                const Vector tail = sp.eigenvectors().rightCols(m - k) * c.tail(m - k);
                EXPECT_LE(head.dot(op.stiffness() * head), sp.lambda(k) * head.dot(op.mass() * head) + 1e-9);
                EXPECT_GE(tail.dot(op.stiffness() * tail), sp.lambda(k + 1) * tail.dot(op.mass() * tail) - 1e-9);
            }
        }
    }
    const auto op = fractional_op(0.5, 8);
    EXPECT_THROW(rayleigh_quotient(op, Vector::Zero(op.size())), InvalidParameter);
}

TEST(Projection, HeadAndTail) {
    const auto op = fractional_op(0.5, 32);
    const Spectrum sp = solve_eigenproblem(op);
    const Vector e1 = sp.vector(1);
    EXPECT_LT((project(sp, e1, Head(1)) - e1).norm(), 1e-12);
    EXPECT_LT(project(sp, e1, Tail(1)).norm(), 1e-12);
    const int k = 4;
    const Vector u = e1 + sp.vector(k + 1);
    EXPECT_LT((project(sp, u, Head(k)) - e1).norm(), 1e-12);

    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const Vector v = oracle::random_vector(op.size(), rng);
        for (int kk : {1, 3, 10}) {
            const Vector h = project(sp, v, Head(kk));
            const Vector t = project(sp, v, Tail(kk));
            EXPECT_LT((h + t - v).cwiseAbs().maxCoeff(), 1e-14 * (1.0 + v.cwiseAbs().maxCoeff()));
            const double zz = norm_Z(op, v);
            EXPECT_NEAR(zz * zz, std::pow(norm_Z(op, h), 2) + std::pow(norm_Z(op, t), 2), 1e-8 * zz * zz);
            EXPECT_NEAR(h.dot(op.stiffness() * t), 0.0, 1e-9 * zz * zz);
            EXPECT_NEAR(h.dot(op.mass() * t), 0.0, 1e-9 * v.dot(op.mass() * v));
        }
    }
    EXPECT_THROW(project(sp, e1, Head(0)), InvalidParameter);
    EXPECT_THROW(project(sp, e1, Head(sp.dimension())), InvalidParameter);
    EXPECT_THROW(project(sp, Vector::Zero(3), Head(1)), InvalidParameter);
}

TEST(Poincare, FloorForUnitInterval) {
    EXPECT_DOUBLE_EQ(poincare_lower_bound(-1.0, 1.0, 0.5, 1.0, 2.0), 0.125);
    EXPECT_THROW(poincare_lower_bound(-1.0, 1.0, 0.5, 1.0, 1.0), InvalidParameter);
    EXPECT_THROW(poincare_lower_bound(-1.0, 1.0, 0.5, 1.0, 0.5), InvalidParameter);
    EXPECT_THROW(poincare_lower_bound(1.0, -1.0, 0.5, 1.0, 2.0), InvalidParameter);
    EXPECT_THROW(poincare_lower_bound(-1.0, 1.0, 1.5, 1.0, 2.0), InvalidParameter);
}

TEST(Poincare, ComputedFirstEigenvalueRespectsFloor) {
    for (double s : {0.25, 0.5, 0.75}) {
        for (int n : {64, 128}) {
            const double lambda1 = solve_eigenproblem(fractional_op(s, n), 1).lambda(1);
            for (double r : {1.5, 2.0, 5.0}) {
                EXPECT_GE(lambda1, poincare_lower_bound(-1.0, 1.0, s, 1.0, r));
            }
        }
    }
}

TEST(CriticalExponent, PiecewiseValue) {
    EXPECT_DOUBLE_EQ(critical_exponent(1, 0.25), 4.0);
    EXPECT_TRUE(std::isinf(critical_exponent(1, 0.5)));
    EXPECT_TRUE(std::isinf(critical_exponent(1, 0.75)));
    EXPECT_DOUBLE_EQ(critical_exponent(3, 0.5), 3.0);
    EXPECT_THROW(critical_exponent(0, 0.5), InvalidParameter);
    EXPECT_THROW(critical_exponent(1, 1.0), InvalidParameter);
}

TEST(Refinement, EigenvaluesNonIncreasingUnderNestedMeshes) {
    for (double s : {0.25, 0.5, 0.75}) {
        std::vector<Vector> levels;
        for (int n : {32, 64, 128}) {
            levels.push_back(solve_eigenproblem(fractional_op(s, n), 6).eigenvalues());
        }
        for (std::size_t l = 1; l < levels.size(); ++l) {
            for (int j = 0; j < 6; ++j) {
                EXPECT_LE(levels[l](j), levels[l - 1](j) + 1e-10) << "s = " << s << " j = " << j + 1;
            }
        }
    }
}

TEST(Refinement, SpectrumSpreadsAtFixedMesh) {
    for (int n : {64, 128}) {
        const Spectrum sp = solve_eigenproblem(fractional_op(0.25, n));
        EXPECT_GT(sp.lambda(sp.dimension()) / sp.lambda(1), 10.0);
    }
}

TEST(Refinement, CoarseEigenvaluesWithinOnePercentOfFineOracle) {
    const double s = 0.5;
    const auto coarse = solve_eigenproblem(fractional_op(s, 128), 3);
    const auto fine = oracle::generalized_eigenvalues(oracle::closed_form_stiffness(256, 2.0, s),
                                                      oracle::exact_mass(256, 2.0));
    for (int j = 1; j <= 3; ++j) {
        const double ref = fine[static_cast<std::size_t>(j - 1)];
        EXPECT_LT(std::abs(coarse.lambda(j) - ref), 0.01 * ref);
    }
}

TEST(GagliardoComparison, KernelAboveFractionalGivesLargerForm) {
    std::mt19937_64 rng(31);
    for (double s : {0.3, 0.6}) {
        const Mesh mesh(-1.0, 1.0, 24);
        const double p = 1.0 + 2.0 * s;
        const Kernel k = Kernel::custom(s, 1.0, 1, [p](double z) {
            return std::pow(std::abs(z), -p) * (1.0 + std::exp(-std::abs(z)));
        });
        const auto ak = assemble(mesh, k);
        const auto af = assemble(mesh, Kernel::fractional(s));
        for (double theta : {1.0, 0.7}) {
            for (int i = 0; i < 100; ++i) {
                const Vector u = oracle::random_vector(ak.size(), rng);
                EXPECT_GE(u.dot(ak.stiffness() * u), theta * u.dot(af.stiffness() * u) - 1e-9);
            }
        }
    }
}
