#include <cmath>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "absspec/errors.hpp"
#include "absspec/exterior.hpp"
#include "generators.hpp"

using namespace absspec;

namespace {

std::vector<cd> eigs(const ComplexMatrix& A) {
    Eigen::ComplexEigenSolver<ComplexMatrix> es(A, false);
    return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

// Minor of `F` on rows `rows`, via Eigen's LU (independent of wedge_coordinates).
cd minor(const ComplexMatrix& F, const std::vector<int>& rows) {
    ComplexMatrix M(static_cast<Eigen::Index>(rows.size()), F.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) M.row(static_cast<Eigen::Index>(r)) = F.row(rows[r]);
    return M.determinant();
}

// Compare in the affine chart of a's largest coordinate; the chordal
// distance itself bottoms out near sqrt(eps).
bool projectively_equal(const ComplexVector& a, const ComplexVector& b, double tol) {
    Eigen::Index j = 0;
    a.cwiseAbs().maxCoeff(&j);
    if (std::abs(b(j)) == 0.0) return false;
    return (a / a(j) - b / b(j)).norm() <= tol * (a / a(j)).norm();
}

} // namespace

TEST(IndexBasis, LexicographicOrder) {
    const IndexBasis b(4, 2);
    ASSERT_EQ(b.size(), 6u);
    const std::vector<std::vector<int>> expect{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    EXPECT_EQ(b.subsets(), expect);
    EXPECT_EQ(b.index_of({1, 3}), 4u);
    EXPECT_THROW(b.index_of({0, 1, 2}), ShapeError);
    EXPECT_EQ(binomial(6, 3), 20u);
}

TEST(CompoundMatrix, TopPowerIsTrace) {
    gen::Gen g(201);
    const ComplexMatrix A = g.matrix(2, 2);
    const ComplexMatrix C = compound_matrix(A, 2);
    ASSERT_EQ(C.rows(), 1);
    EXPECT_NEAR(std::abs(C(0, 0) - A.trace()), 0.0, 1e-14);
}

TEST(CompoundMatrix, DiagonalGivesPairSums) {
    ComplexMatrix A = ComplexMatrix::Zero(3, 3);
    A.diagonal() << 1.0, cd(2, 1), -4.0;
    const ComplexMatrix C = compound_matrix(A, 2);
    ComplexMatrix expect = ComplexMatrix::Zero(3, 3);
    expect.diagonal() << cd(3, 1), -3.0, cd(-2, 1);
    EXPECT_LE((C - expect).norm(), 1e-14);
}

TEST(CompoundMatrix, ShapeChecks) {
    EXPECT_THROW(compound_matrix(ComplexMatrix::Zero(2, 3), 1), ShapeError);
    EXPECT_THROW(compound_matrix(ComplexMatrix::Zero(3, 3), 4), ShapeError);
    EXPECT_THROW(compound_matrix(ComplexMatrix::Zero(3, 3), 0), ShapeError);
}

TEST(CompoundMatrixProperty, EigenvaluesAreKSums) {
    gen::for_all(100, 202, [](gen::Gen& g, int) {
        const int N = g.integer(2, 6);
        const int k = g.integer(1, std::min(3, N));
        const ComplexMatrix A = g.matrix(N, N);
        const std::vector<cd> ev = eigs(A);
        std::vector<cd> sums;
        const IndexBasis basis(N, k);
        for (const auto& s : basis.subsets()) {
            cd acc = 0.0;
            for (int j : s) acc += ev[static_cast<std::size_t>(j)];
            sums.push_back(acc);
        }
        EXPECT_LE(gen::multiset_distance(eigs(compound_matrix(A, k)), sums), 1e-8 * (1.0 + A.norm()));
    });
}

TEST(CompoundMatrixProperty, AgreesWithTensorConstruction) {
    gen::for_all(30, 203, [](gen::Gen& g, int) {
        const int N = g.integer(1, 4);
        const int k = g.integer(1, N);
        const ComplexMatrix A = g.matrix(N, N);
        EXPECT_LE((compound_matrix(A, k) - compound_matrix_tensor(A, k)).norm(), 1e-12 * (1.0 + A.norm()));
    });
}

TEST(CompoundMatrixProperty, DerivationOfWedgeProduct) {
    // d/dt wedge(exp(tA) F) at t = 0 equals A^(k) wedge(F)
    gen::for_all(20, 204, [](gen::Gen& g, int) {
        const int N = g.integer(2, 5);
        const int k = g.integer(1, N - 1);
        const ComplexMatrix A = g.matrix(N, N), F = g.matrix(N, k);
        const double h = 1e-5;
        const ComplexVector fd = (wedge_coordinates(F + h * A * F) - wedge_coordinates(F - h * A * F)) / (2.0 * h);
        const ComplexVector exact = compound_matrix(A, k) * wedge_coordinates(F);
        EXPECT_LE((fd - exact).norm(), 1e-7 * (1.0 + exact.norm()));
    });
}

TEST(Pluecker, CoordinatePlane) {
    ComplexMatrix F = ComplexMatrix::Zero(4, 2);
    F(0, 0) = F(1, 1) = 1.0;
    const PlueckerPoint p = pluecker(Subspace::span(F));
    ComplexVector expect = ComplexVector::Zero(6);
    expect(0) = 1.0;
    EXPECT_LE((p.coords - expect).norm(), 1e-14);
}

TEST(Pluecker, TwoPlaneExample) {
    ComplexMatrix F(4, 2);
    F << 1, 0, 0, 1, 1, 0, 0, 1;
    const PlueckerPoint p = pluecker(Subspace::span(F));
    ComplexVector expect(6);
    expect << 1, 0, 1, -1, 0, 1;
    EXPECT_TRUE(projectively_equal(p.coords, expect, 1e-14));
    EXPECT_NEAR(std::abs(p.coords(0) * p.coords(5) - p.coords(1) * p.coords(4) + p.coords(2) * p.coords(3)), 0.0,
                1e-14);
}

TEST(PlueckerProperty, MinorsAndBasisInvariance) {
    gen::for_all(50, 205, [](gen::Gen& g, int) {
        const int N = g.integer(2, 6);
        const int k = g.integer(1, N - 1);
        const ComplexMatrix F = g.matrix(N, k);
        const PlueckerPoint p = pluecker(Subspace::span(F));
        const IndexBasis basis(N, k);
        ComplexVector raw(static_cast<Eigen::Index>(basis.size()));
        for (std::size_t j = 0; j < basis.size(); ++j) raw(static_cast<Eigen::Index>(j)) = minor(F, basis.subset(j));
        EXPECT_TRUE(projectively_equal(p.coords, raw, 1e-12));
        const ComplexMatrix G = F * g.matrix(k, k);
        EXPECT_LE((pluecker(Subspace::span(G)).coords - p.coords).norm(), 1e-9);
        // normalization: largest-modulus coordinate equals 1
        EXPECT_NEAR(p.coords.cwiseAbs().maxCoeff(), 1.0, 1e-14);
    });
}

TEST(PlueckerProperty, QuadraticRelationsHold) {
    gen::for_all(50, 206, [](gen::Gen& g, int) {
        const int N = g.integer(3, 6);
        const int k = g.integer(2, N - 1);
        const PlueckerPoint p = pluecker(g.subspace(N, k));
        EXPECT_LE(p.relation_residual(), 1e-8);
        if (N == 4 && k == 2) {
            const ComplexVector& c = p.coords;
            EXPECT_NEAR(std::abs(c(0) * c(5) - c(1) * c(4) + c(2) * c(3)), 0.0, 1e-12);
        }
    });
}

TEST(Pluecker, NonDecomposableDetected) {
    ComplexVector v(6);
    v << 1, 0, 0, 0, 0, 1;   // e1^e2 + e3^e4
    EXPECT_GT(PlueckerPoint::from_coordinates(v, 4, 2).relation_residual(), 0.5);
}

TEST(ProjectionFrame, AdvectionDiffusionAtOne) {
    ComplexMatrix A(2, 2);
    A << 0, 1, 1, 0;
    const ProjectionFrame f = projection_frame(A, 1);
    ComplexVector pn(2), ps(2);
    pn << 1, 1;
    ps << 1, -1;
    EXPECT_TRUE(projectively_equal(f.w1, pn, 1e-12));
    EXPECT_TRUE(projectively_equal(f.w2, ps, 1e-12));
    EXPECT_NEAR(std::abs(f.nu1 - 1.0), 0.0, 1e-12);
    EXPECT_NEAR(f.distance_to_pn(pn), 0.0, 1e-12);
    EXPECT_NEAR(f.distance_to_ps(ps), 0.0, 1e-12);
}

TEST(ProjectionFrame, OnLocusStillDefined) {
    ComplexMatrix A(2, 2);
    A << 0, 1, -1, 0;   // lambda = -1, eigenvalues +-i
    const ProjectionFrame f = projection_frame(A, 1);
    EXPECT_NEAR(std::abs(f.nu1 - cd(0, 1)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(f.nu2 - cd(0, -1)), 0.0, 1e-12);
}

TEST(ProjectionFrame, TripleClusterRejected) {
    ComplexMatrix A = ComplexMatrix::Identity(3, 3);
    EXPECT_THROW(projection_frame(A, 1), OrderingError);
}

TEST(ProjectionFrameProperty, IdentityOnInvariantPlane) {
    gen::for_all(30, 207, [](gen::Gen& g, int) {
        const int N = g.integer(3, 5);
        const int k = g.integer(1, N - 1);
        ComplexVector d(N);
        for (int j = 0; j < N; ++j) d(j) = cd(3.0 - 1.7 * j + g.uniform(-0.2, 0.2), g.uniform(-1, 1));
        const ComplexMatrix V = g.matrix(N, N);
        const ComplexMatrix A = V * d.asDiagonal() * V.inverse();
        ProjectionFrame f;
        try {
            f = projection_frame(A, k);
        } catch (const OrderingError&) {
            return;
        }
        const cd a = g.complex_normal(), b = g.complex_normal();
        const Eigen::Vector2cd Z = f.project(ComplexVector(a * f.w1 + b * f.w2));
        EXPECT_NEAR(std::abs(Z(0) - a), 0.0, 1e-9 * (1.0 + std::abs(a)));
        EXPECT_NEAR(std::abs(Z(1) - b), 0.0, 1e-9 * (1.0 + std::abs(b)));
        // W_s is annihilated
        const ComplexMatrix C = compound_matrix(A, k);
        const ComplexVector z = g.vector(static_cast<int>(C.rows()));
        const ComplexVector ws = z - f.projector * z;
        EXPECT_LE(f.project(ws).norm(), 1e-9 * (1.0 + z.norm()));
        EXPECT_LE((C * f.w1 - f.nu1 * f.w1).norm(), 1e-8 * C.norm() * f.w1.norm());
    });
}

TEST(ChordalDistance, BasicValues) {
    ComplexVector a(2), b(2);
    a << 1, 0;
    b << 0, 1;
    EXPECT_NEAR(chordal_distance(a, b), 1.0, 1e-15);
    EXPECT_NEAR(chordal_distance(a, cd(0, 3) * a), 0.0, 1e-15);
}
