#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "absspec/errors.hpp"
#include "absspec/flow.hpp"
#include "absspec/problems.hpp"
#include "generators.hpp"

using namespace absspec;

namespace {

ComplexMatrix diag(std::initializer_list<cd> d) {
    ComplexVector v(static_cast<Eigen::Index>(d.size()));
    Eigen::Index j = 0;
    for (cd z : d) v(j++) = z;
    return v.asDiagonal();
}

double subspace_gap(const Subspace& a, const Subspace& b) { return (a.projector() - b.projector()).norm(); }

Subspace coordinate_span(int N, std::initializer_list<int> idx) {
    ComplexMatrix F = ComplexMatrix::Zero(N, static_cast<Eigen::Index>(idx.size()));
    Eigen::Index c = 0;
    for (int j : idx) F(j, c++) = 1.0;
    return Subspace::span(F);
}

} // namespace

TEST(Propagate, DiagonalDecayingDirection) {
    const auto prof = constant_profile(diag({1.0, -1.0}));
    const Propagator prop(*prof, 0.0);
    const SubspaceResult r = propagate_subspace(prop, 0.0, 1.0, coordinate_span(2, {1}));
    EXPECT_NEAR(r.logScale, -1.0, 1e-12);
    EXPECT_LE(subspace_gap(r.subspace, coordinate_span(2, {1})), 1e-12);
}

TEST(Propagate, DiagonalMixedDirection) {
    const auto prof = constant_profile(diag({1.0, -1.0}));
    const Propagator prop(*prof, 0.0);
    ComplexVector u(2);
    u << 1.0, 1.0;
    const SubspaceResult r = propagate_subspace(prop, 0.0, 1.0, Subspace::span(u / std::sqrt(2.0)));
    ComplexVector expect(2);
    expect << 1.0, std::exp(-2.0);
    EXPECT_LE(subspace_gap(r.subspace, Subspace::span(expect)), 1e-12);
    const double e = std::exp(1.0);
    EXPECT_NEAR(r.logScale, std::log(std::sqrt((e * e + 1.0 / (e * e)) / 2.0)), 1e-12);
}

TEST(Propagate, DiagonalLogScaleIsTraceOnInvariantSubspace) {
    gen::for_all(40, 401, [](gen::Gen& g, int) {
        const int N = g.integer(2, 6);
        const int k = g.integer(1, N - 1);
        ComplexVector d(N);
        for (int j = 0; j < N; ++j) d(j) = g.complex_in(-3, 3, -3, 3);
        const auto prof = constant_profile(d.asDiagonal());
        const Propagator prop(*prof, 0.0);
        ComplexMatrix F = ComplexMatrix::Zero(N, k);
        double tr = 0.0;
        for (int j = 0; j < k; ++j) {
            F(j, j) = 1.0;
            tr += d(j).real();
        }
        const double t = g.uniform(0.1, 5.0);
        const SubspaceResult r = propagate_subspace(prop, 0.0, t, Subspace::span(F));
        EXPECT_NEAR(r.logScale, t * tr, 1e-10 * (1.0 + std::abs(t * tr)));
        EXPECT_LE(subspace_gap(r.subspace, Subspace::span(F)), 1e-10);
    });
}

TEST(Propagate, CompoundDiagonalStaysFixed) {
    const cd a(0.7, 0.3), b(-1.2, 2.0), c(0.1, -1.0);
    const auto prof = constant_profile(diag({a, b, c}));
    const Propagator prop(*prof, 0.0);
    ComplexVector p0 = ComplexVector::Zero(3);
    p0(0) = 1.0;
    const double t = 2.5;
    const PlueckerResult r = propagate_pluecker(prop, 0.0, t, PlueckerPoint::from_coordinates(p0, 3, 2));
    EXPECT_LE((r.point.coords - p0).norm(), 1e-12);
    EXPECT_NEAR(r.logScale, t * (a + b).real(), 1e-12);
}

TEST(Propagate, FrontSelfConvergence) {
    const Problem p = builtin("adv-diff-front");
    FlowSettings loose, tight;
    tight.relTol = 1e-13;
    tight.absTol = 1e-15;
    gen::for_all(10, 402, [&](gen::Gen& g, int) {
        const cd lam = g.complex_in(-3, 1, -1, 1);
        const Subspace U = g.subspace(2, 1);
        const double ell = p.profile->ell0() + 3.0;
        const auto a = propagate_subspace(Propagator(*p.profile, lam, loose), -ell, ell, U);
        const auto b = propagate_subspace(Propagator(*p.profile, lam, tight), -ell, ell, U);
        EXPECT_LE(subspace_gap(a.subspace, b.subspace), 1e-8);
        EXPECT_NEAR(a.logScale, b.logScale, 1e-8 * (1.0 + std::abs(b.logScale)));
    });
}

TEST(PropagateProperty, RepresentationsCommute) {
    const Problem front = builtin("adv-diff-front");
    const Problem two = builtin("two-component");
    gen::for_all(50, 403, [&](gen::Gen& g, int i) {
        const Problem& p = (i % 2 == 0) ? front : two;
        const int N = p.profile->dimension();
        const Subspace U = g.subspace(N, N / 2);
        const cd lam = g.complex_in(-2.5, 0.5, -1, 1);
        const Propagator prop(*p.profile, lam);
        const double from = g.uniform(-4, 0), to = from + g.uniform(0.5, 6);
        const SubspaceResult s = propagate_subspace(prop, from, to, U);
        const PlueckerResult q = propagate_pluecker(prop, from, to, pluecker(U));
        EXPECT_LE(chordal_distance(pluecker(s.subspace).coords, q.point.coords), 1e-6);
    });
}

TEST(PropagateProperty, SemigroupInTails) {
    const Problem p = builtin("adv-diff-front,c_minus=1.5,c_plus=-0.5");
    gen::for_all(20, 404, [&](gen::Gen& g, int) {
        const Propagator prop(*p.profile, g.complex_in(-2, 1, -1, 1));
        const double l0 = p.profile->ell0();
        const double x0 = l0 + g.uniform(0, 2), x1 = x0 + g.uniform(0, 2), x2 = x1 + g.uniform(0, 2);
        const ComplexMatrix whole = prop.fundamental_matrix(x0, x2);
        const ComplexMatrix split = prop.fundamental_matrix(x1, x2) * prop.fundamental_matrix(x0, x1);
        EXPECT_LE((whole - split).norm(), 1e-12 * whole.norm());
        // across the middle the RK error dominates
        const double y0 = -l0 - 1.0, y1 = g.uniform(-l0, l0), y2 = l0 + 1.0;
        const ComplexMatrix w2 = prop.fundamental_matrix(y0, y2);
        const ComplexMatrix s2 = prop.fundamental_matrix(y1, y2) * prop.fundamental_matrix(y0, y1);
        EXPECT_LE((w2 - s2).norm(), 1e-8 * w2.norm());
    });
}

TEST(Propagate, MatchesMatrixExponentialForConstantProfile) {
    gen::for_all(20, 405, [](gen::Gen& g, int) {
        const int N = g.integer(2, 4);
        const ComplexMatrix A = g.matrix(N, N);
        const auto prof = constant_profile(A);
        const Propagator prop(*prof, 0.0);
        const double t = g.uniform(-2, 2);
        // independent reference: eigendecomposition
        Eigen::ComplexEigenSolver<ComplexMatrix> es(A);
        const ComplexVector ex = (t * es.eigenvalues().array()).exp().matrix();
        const ComplexMatrix ref = es.eigenvectors() * ex.asDiagonal() * es.eigenvectors().inverse();
        EXPECT_LE((prop.fundamental_matrix(0.0, t) - ref).norm(), 1e-9 * ref.norm());
    });
}

TEST(Evans, VanishesAtFirstDirichletEigenvalue) {
    const Problem p = builtin("adv-diff,c=0");
    const double ell = M_PI / 2.0;
    const double lam1 = -std::pow(M_PI / (2.0 * ell), 2.0);
    const EvansValue at = boundary_determinant(Propagator(*p.profile, lam1), ell, p.separated_boundary());
    EXPECT_LE(at.normalized_magnitude(), 1e-8);
    const EvansValue off = boundary_determinant(Propagator(*p.profile, 1.0), ell, p.separated_boundary());
    const double s = std::sinh(M_PI), c = std::cosh(M_PI);
    EXPECT_NEAR(off.normalized_magnitude(), s / std::sqrt(s * s + c * c), 1e-10);
}

TEST(EvansProperty, ValueMatchesClosedForm) {
    // For u'' = lambda u with u(-ell) = u(ell) = 0 the determinant reduces to
    // sinh(2 ell mu) / mu with mu^2 = lambda.
    const Problem p = builtin("adv-diff,c=0");
    gen::for_all(30, 406, [&](gen::Gen& g, int) {
        const cd lam = g.complex_in(-4, 2, -2, 2);
        const double ell = g.uniform(1.2, 4.0);
        const cd mu = std::sqrt(lam);
        const cd expect = std::sinh(2.0 * ell * mu) / mu;
        const cd got = boundary_determinant(Propagator(*p.profile, lam), ell, p.separated_boundary()).value();
        EXPECT_LE(std::abs(got - expect), 1e-9 * std::abs(expect));
    });
}

TEST(Evans, ForcedIntersectionGivesZero) {
    const auto prof = constant_profile(diag({1.0, -1.0}));
    const BoundaryData bd(coordinate_span(2, {0}), coordinate_span(2, {0}));
    EXPECT_LE(boundary_determinant(Propagator(*prof, 0.0), 3.0, bd).normalized_magnitude(), 1e-14);
}

TEST(Trajectory, RepresentationsAgreeAndCsvShape) {
    const Problem p = builtin("adv-diff-front");
    const Propagator prop(*p.profile, cd(-0.5, 0.4));
    std::vector<double> xs;
    for (int j = 0; j <= 20; ++j) xs.push_back(-5.0 + 0.5 * j);
    const TrajectoryRecord rec = record_trajectory(prop, -5.0, xs, p.separated_boundary().left());
    ASSERT_EQ(rec.samples.size(), xs.size());
    EXPECT_LE(rec.max_inconsistency(), 1e-6);
    for (std::size_t j = 0; j < xs.size(); ++j) EXPECT_EQ(rec.samples[j].x, xs[j]);
    std::ostringstream os;
    rec.write_csv(os);
    std::size_t lines = 0;
    for (char ch : os.str()) lines += ch == '\n';
    EXPECT_GE(lines, xs.size());
}

TEST(Containment, VacuousWhenLeadingSpaceIsEverything) {
    const Problem p = builtin("adv-diff,c=0");
    const ContainmentReport r = containment_margin(Propagator(*p.profile, 1.0), 5.0, p.separated_boundary());
    EXPECT_FALSE(r.warn);
    EXPECT_EQ(r.plusMargin, std::numeric_limits<double>::infinity());
}
