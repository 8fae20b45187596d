#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "absspec/errors.hpp"
#include "absspec/periodic.hpp"
#include "absspec/problems.hpp"
#include "generators.hpp"

using namespace absspec;

namespace {

// gamma-twisted eigenvalues of u'' + c u' = lambda u on [-ell, ell]:
// u = e^{ikx} with e^{2ik ell} = gamma, lambda = -k^2 + i c k.
int twisted_oracle(double c, double ell, cd gamma, cd center, double radius) {
    const double theta = std::arg(gamma);
    int count = 0;
    for (int n = -20000; n <= 20000; ++n) {
        const double k = (theta + 2.0 * M_PI * n) / (2.0 * ell);
        const cd lam(-k * k, c * k);
        if (std::abs(lam - center) < radius) ++count;
    }
    return count;
}

ComplexMatrix expm_eig(const ComplexMatrix& A) {
    Eigen::ComplexEigenSolver<ComplexMatrix> es(A);
    const ComplexVector ex = es.eigenvalues().array().exp().matrix();
    return es.eigenvectors() * ex.asDiagonal() * es.eigenvectors().inverse();
}

cd value_of(const DeterminantSample& s) { return std::exp(s.logMagnitude) * s.phase; }

double signed_mismatch(cd a, cd b) { return std::min(std::abs(a - b), std::abs(a + b)) / std::abs(b); }

} // namespace

TEST(Doubled, Construction) {
    const Problem p = builtin("periodic-adv-diff,c=1");
    const DoubledProblem d = double_system(p.profile, 1.0);
    EXPECT_EQ(d.dimension(), 4);
    gen::for_all(10, 701, [&](gen::Gen& g, int) {
        const ComplexMatrix A = d.evaluate(g.uniform(-5, 5), g.complex_in(-2, 2, -2, 2));
        EXPECT_TRUE(A.bottomRightCorner(2, 2).isZero(0.0));
        EXPECT_TRUE(A.bottomLeftCorner(2, 2).isZero(0.0));
        EXPECT_TRUE(A.topRightCorner(2, 2).isZero(0.0));
    });
    // gamma = 1: U_+ is the diagonal {(Y, Y)}, the same as U_-
    EXPECT_LE((d.boundary().left().projector() - d.boundary().right().projector()).norm(), 1e-14);
    EXPECT_THROW(double_system(p.profile, 1.1), InputError);
}

TEST(Doubled, FundamentalMatrixIsDirectSum) {
    const Problem p = builtin("periodic-adv-diff,c=1");
    const DoubledProblem d = double_system(p.profile, cd(0, 1));
    const ComplexMatrix F = d.fundamental_matrix(-3.0, 2.0, cd(-0.5, 0.3));
    EXPECT_TRUE(F.bottomRightCorner(2, 2).isIdentity(0.0));
    EXPECT_TRUE(F.topRightCorner(2, 2).isZero(0.0));
    const ComplexMatrix A = p.profile->evaluate(0.0, cd(-0.5, 0.3));
    EXPECT_LE((F.topLeftCorner(2, 2) - expm_eig(5.0 * A)).norm(), 1e-9 * F.norm());
}

TEST(Doubled, DiagonalMonodromyExample) {
    // Phi(ell, -ell) = diag(2, 1/2)
    const double ell = 1.5;
    ComplexMatrix A = ComplexMatrix::Zero(2, 2);
    A(0, 0) = std::log(2.0) / (2.0 * ell);
    A(1, 1) = -std::log(2.0) / (2.0 * ell);
    const DoubledProblem d = double_system(constant_profile(A), 1.0);
    const cd doubled = value_of(doubled_determinant(d, ell)(0.0)) * 4.0;
    EXPECT_LE(signed_mismatch(doubled, -0.5), 1e-12);
    EXPECT_LE(std::abs(value_of(monodromy_determinant(d, ell)(0.0)) - (-0.5)), 1e-12);
}

TEST(DoubledProperty, DeterminantIdentity) {
    gen::for_all(100, 702, [](gen::Gen& g, int) {
        const int N = g.integer(1, 5);
        const ComplexMatrix A = 0.5 * g.matrix(N, N);
        const double ell = g.uniform(0.3, 1.5);
        const cd gamma = std::polar(1.0, g.uniform(0, 2 * M_PI));
        const DoubledProblem d = double_system(constant_profile(A, 0.1), gamma);
        const ComplexMatrix Phi = expm_eig(2.0 * ell * A);
        const cd ref = (Phi - gamma * ComplexMatrix::Identity(N, N)).determinant();
        const cd lam = 0.0;
        const cd doubled = value_of(doubled_determinant(d, ell)(lam)) * std::pow(2.0, N);
        EXPECT_LE(signed_mismatch(doubled, ref), 1e-8);
        EXPECT_LE(std::abs(value_of(monodromy_determinant(d, ell)(lam)) - ref), 1e-8 * std::abs(ref));
    });
}

TEST(PeriodicCount, PeriodicC0) {
    const Problem p = builtin("periodic-adv-diff,c=0");
    const DoubledProblem d = double_system(p.profile, 1.0);
    const PeriodicCount pc = periodic_count(d, 10 * M_PI, -1.0, 0.45);
    EXPECT_EQ(pc.count, twisted_oracle(0.0, 10 * M_PI, 1.0, -1.0, 0.45));
    EXPECT_EQ(pc.count, 10);   // n = 8..12, each with +-k
    EXPECT_TRUE(pc.agree);
    EXPECT_EQ(pc.doubled.winding, pc.monodromy.winding);
}

TEST(PeriodicCount, Antiperiodic) {
    const Problem p = builtin("periodic-adv-diff,c=0");
    const DoubledProblem d = double_system(p.profile, -1.0);
    const PeriodicCount pc = periodic_count(d, 10 * M_PI, -1.0, 0.45);
    EXPECT_EQ(pc.count, twisted_oracle(0.0, 10 * M_PI, -1.0, -1.0, 0.45));
    EXPECT_TRUE(pc.agree);
}

TEST(PeriodicCount, AdvectionParabola) {
    const Problem p = builtin("periodic-adv-diff,c=1");
    const DoubledProblem d = double_system(p.profile, 1.0);
    const cd center(-1.0, 1.0);
    int prev = -1;
    for (double ell : {10.0, 20.0, 40.0}) {
        const PeriodicCount pc = periodic_count(d, ell, center, 0.3);
        EXPECT_EQ(pc.count, twisted_oracle(1.0, ell, 1.0, center, 0.3)) << ell;
        EXPECT_TRUE(pc.agree);
        EXPECT_GT(pc.count, prev);
        prev = pc.count;
        ASSERT_TRUE(pc.certification.has_value());
        EXPECT_TRUE(pc.certification->nondegenerate);
    }
}

TEST(PeriodicCountProperty, GammaSweepContinuity) {
    const Problem p = builtin("periodic-adv-diff,c=1");
    const cd center(-1.0, 1.0);
    const double ell = 20.0;
    std::vector<int> counts;
    for (int j = 0; j < 8; ++j) {
        const cd gamma = std::polar(1.0, 2.0 * M_PI * j / 8.0);
        const PeriodicCount pc = periodic_count(double_system(p.profile, gamma), ell, center, 0.3);
        EXPECT_EQ(pc.count, twisted_oracle(1.0, ell, gamma, center, 0.3)) << j;
        counts.push_back(pc.count);
    }
    for (int j = 0; j < 8; ++j) EXPECT_LE(std::abs(counts[j] - counts[(j + 1) % 8]), 1);
}

TEST(Probe, Classification) {
    const Problem p = builtin("periodic-adv-diff,c=1");
    const DoubledProblem d = double_system(p.profile, 1.0);
    const auto res = extrapolated_set_probe(d, {cd(-1, 1), cd(1, 1)}, 0.3, {10, 20, 40, 80}, 2);
    ASSERT_EQ(res.size(), 2u);
    EXPECT_EQ(res[0].classification, ExtrapolatedClass::In);
    for (std::size_t j = 0; j < res[0].ells.size(); ++j)
        EXPECT_EQ(res[0].counts[j], twisted_oracle(1.0, res[0].ells[j], 1.0, cd(-1, 1), 0.3));
    EXPECT_EQ(res[1].classification, ExtrapolatedClass::Out);
    for (int c : res[1].counts) EXPECT_EQ(c, 0);
    std::ostringstream os;
    write_probe_csv(os, res);
    EXPECT_NE(os.str().find("OUT"), std::string::npos);
}

TEST(Probe, DegenerateVertexUndecided) {
    const Problem p = builtin("periodic-adv-diff,c=0");
    const DoubledProblem d = double_system(p.profile, 1.0);
    const auto res = extrapolated_set_probe(d, {cd(0.0, 0.0)}, 0.1, {5, 10, 15, 20}, 2);
    ASSERT_EQ(res.size(), 1u);
    EXPECT_EQ(res[0].classification, ExtrapolatedClass::Undecided);
    EXPECT_TRUE(res[0].degenerate);
}

TEST(Probe, Preconditions) {
    const Problem p = builtin("periodic-adv-diff,c=1");
    const DoubledProblem d = double_system(p.profile, 1.0);
    EXPECT_THROW(extrapolated_set_probe(d, {cd(1, 1)}, 0.3, {10, 20, 40}, 2), Error);
    EXPECT_THROW(extrapolated_set_probe(d, {cd(1, 1)}, 0.3, {10, 40, 20, 80}, 2), Error);
}

TEST(CenterTrack, ScalarOdeInTail) {
    // B1 side of the parabola at k = 1, offset along the normal (1 + 2i)/sqrt 5
    const Problem p = builtin("periodic-adv-diff,c=1");
    const cd lam = cd(-1, 1) + 0.5 * cd(1, 2) / std::sqrt(5.0);
    const double ell = 20.0;
    std::vector<double> xs;
    for (double x = -ell; x <= ell + 1e-12; x += 1.0) xs.push_back(x);
    const CenterTrack t = track_essential_center(*p.profile, lam, ell, xs);
    ASSERT_EQ(t.samples.size(), xs.size());
    // mu_0^k is the root of mu^2 + mu - lambda continuing i from lambda = -1 + i
    const cd mu = (-1.0 + std::sqrt(1.0 + 4.0 * lam)) / 2.0;
    EXPECT_NEAR(std::abs(t.mu - mu), 0.0, 1e-10);
    EXPECT_LE(t.max_scalar_ode_residual(p.profile->ell0()), 1e-6);
    // the projective coordinate contracts towards P_n along the tail
    for (std::size_t j = 1; j < t.samples.size(); ++j)
        if (t.samples[j - 1].x >= p.profile->ell0())
            EXPECT_NEAR(t.samples[j].logNorm - t.samples[j - 1].logNorm, -mu.real() * 1.0, 1e-6);
}

TEST(CenterTrack, AttractorOverLengths) {
    const Problem p = builtin("periodic-adv-diff,c=1");
    const cd lam = cd(-1, 1) + 0.8 * cd(1, 2) / std::sqrt(5.0);
    double prev = 1.0;
    for (double ell : {10.0, 20.0, 30.0}) {
        const CenterTrack t = track_essential_center(*p.profile, lam, ell, {ell});
        EXPECT_LT(t.samples.back().distanceToPn, prev);
        prev = t.samples.back().distanceToPn;
    }
    EXPECT_LE(prev, 1e-6);
}

TEST(CenterTrack, Preconditions) {
    const Problem p = builtin("periodic-adv-diff,c=1");
    EXPECT_THROW(track_essential_center(*p.profile, cd(0, 1), 10.0, {11.0}), PreconditionError);
}

TEST(Monodromy, StableForStrongDichotomy) {
    // at 1 + i the growth rate is about 0.67, so Phi(ell, -ell) spans e^107 at ell = 80
    const Problem p = builtin("periodic-adv-diff,c=1");
    const DoubledProblem d = double_system(p.profile, 1.0);
    const DeterminantSample s = monodromy_determinant(d, 80.0)(cd(1.0, 1.0));
    EXPECT_GT(s.normalized, 1e-6);
    const PeriodicCount pc = periodic_count(d, 80.0, cd(1.0, 1.0), 0.3);
    EXPECT_EQ(pc.count, 0);
    EXPECT_TRUE(pc.agree);
}
