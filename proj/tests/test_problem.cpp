#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include "absspec/errors.hpp"
#include "absspec/expression.hpp"
#include "absspec/problem.hpp"
#include "absspec/problems.hpp"
#include "generators.hpp"

using namespace absspec;

namespace {

cd eval(const std::string& src, cd lambda = 0.0, double x = 0.0, const ConstantMap* constants = nullptr) {
    Expression::Context ctx;
    ctx.lambda = lambda;
    ctx.x = x;
    ctx.constants = constants;
    return Expression::parse(src).evaluate(ctx);
}

const char* kDiagonalFile = R"({
  "name": "diagonal",
  "N": 4,
  "ell0": 1,
  "A_minus": [["lambda+3", 0, 0, 0], [0, "lambda+2", 0, 0], [0, 0, "lambda+1", 0], [0, 0, 0, "lambda-5"]],
  "A_plus":  [["lambda+3", 0, 0, 0], [0, "lambda+2", 0, 0], [0, 0, "lambda+1", 0], [0, 0, 0, "lambda-5"]],
  "U_minus": [[0, 0, 1, 0], [0, 0, 0, 1]],
  "U_plus":  [[1, 0, 0, 0], [0, 1, 0, 0]],
  "domain": {"rectangle": [-1, 1, -1, 1], "resolution": 16}
})";

} // namespace

TEST(Expression, Arithmetic) {
    EXPECT_NEAR(std::abs(eval("1 + 2*3 - 4/2") - 5.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(eval("-2^2") - (-4.0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(eval("(1+i)^2") - cd(0, 2)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(eval("lambda^3 - lambda", cd(0, 1)) - cd(0, -2)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(eval("exp(i*pi)") - (-1.0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(eval("tanh(x)", 0.0, 0.5) - std::tanh(0.5)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(eval("cosh(x)^2 - sinh(x)^2", 0.0, 1.3) - 1.0), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(eval("2e-3 * 1.5E2") - 0.3), 0.0, 1e-15);
}

TEST(Expression, ConstantsAndUnknowns) {
    const ConstantMap c{{"c", 2.0}, {"d1", cd(0.5, 1.0)}};
    EXPECT_NEAR(std::abs(eval("lambda - c*d1", 1.0, 0.0, &c) - cd(0.0, -2.0)), 0.0, 1e-15);
    EXPECT_THROW(eval("lambda - q", 1.0, 0.0, &c), Error);
    EXPECT_THROW(Expression::parse("1 +"), SchemaError);
    EXPECT_THROW(Expression::parse("sqrt(lambda)"), SchemaError);
    EXPECT_THROW(eval("lambda^0.5", 2.0), SchemaError);
}

TEST(Expression, Dependencies) {
    EXPECT_TRUE(Expression::parse("x*lambda").depends_on_x());
    EXPECT_TRUE(Expression::parse("x*lambda").depends_on_lambda());
    EXPECT_FALSE(Expression::parse("3 + lambda").depends_on_x());
    EXPECT_FALSE(Expression::parse("tanh(x)").depends_on_lambda());
}

TEST(Evaluate, AdvectionDiffusionFarField) {
    const Problem p = builtin("adv-diff,c=0");
    ComplexMatrix expect(2, 2);
    expect << 0, 1, 1, 0;
    EXPECT_LE((p.profile->evaluate(5.0, 1.0) - expect).norm(), 0.0);
}

TEST(Evaluate, FrontSeamsAndMidpoint) {
    const Problem p = builtin("adv-diff-front,c_minus=1.5,c_plus=-0.5");
    const auto& prof = *p.profile;
    const double l0 = prof.ell0();
    gen::for_all(20, 301, [&](gen::Gen& g, int) {
        const cd lam = g.complex_in(-3, 1, -1, 1);
        const ComplexMatrix Am = prof.tail(TailSide::Minus, lam), Ap = prof.tail(TailSide::Plus, lam);
        EXPECT_LE((prof.evaluate(-l0, lam) - Am).norm(), 1e-12);
        EXPECT_LE((prof.evaluate(l0, lam) - Ap).norm(), 1e-12);
        EXPECT_LE((prof.evaluate(0.0, lam) - 0.5 * (Am + Ap)).norm(), 1e-12);
        // bit-identical in the tails
        const double x = l0 + g.uniform(0.0, 50.0);
        EXPECT_TRUE(prof.evaluate(x, lam) == Ap);
        EXPECT_TRUE(prof.evaluate(-x, lam) == Am);
    });
}

TEST(Evaluate, RegionEnforced) {
    std::string text = kDiagonalFile;
    text.insert(text.find("\"ell0\""), "\"region\": [-1, 1, -1, 1],\n  ");
    const Problem p = parse_problem(text);
    EXPECT_NO_THROW(p.profile->evaluate(0.0, cd(0.5, 0.5)));
    EXPECT_THROW(p.profile->evaluate(0.0, cd(3.0, 0.0)), DomainError);
}

TEST(Boundary, DimensionRules) {
    const Subspace a = Subspace::span(ComplexVector::Unit(3, 0));
    ComplexMatrix two(3, 2);
    two << ComplexVector::Unit(3, 1), ComplexVector::Unit(3, 2);
    const Subspace b = Subspace::span(two);
    EXPECT_NO_THROW(BoundaryData(a, b));
    EXPECT_THROW(BoundaryData(b, a), HypothesisError);   // i_- > i_+
    EXPECT_THROW(BoundaryData(a, a), HypothesisError);   // i_- + i_+ != N
    EXPECT_THROW(BoundaryData(a, Subspace::span(ComplexVector::Unit(2, 0))), ShapeError);
}

TEST(Domain, ConstructionAndSamples) {
    EXPECT_THROW(ParameterDomain::rectangle(1, 0, 0, 1, 16), ConfigError);
    EXPECT_THROW(ParameterDomain::rectangle(0, 1, 0, 1, 4), ConfigError);
    EXPECT_THROW(ParameterDomain::disk(0.0, -1.0, 16), ConfigError);
    const ParameterDomain d = ParameterDomain::disk(cd(-1, 0), 0.5, 16);
    const auto s10 = d.samples(10), s20 = d.samples(20);
    for (std::size_t j = 0; j < s10.size(); ++j) EXPECT_EQ(s10[j], s20[j]);
    for (const cd& z : s20) EXPECT_TRUE(d.contains(z));
}

TEST(Hypotheses, AdvectionDiffusionPasses) {
    const Problem p = builtin("adv-diff,c=0");
    const HypothesisReport r =
        validate_hypotheses(*p.profile, p.separated_boundary(), ParameterDomain::disk(1.0, 0.1, 8), 4);
    EXPECT_TRUE(r.pass);
    for (const auto& s : r.samples) {
        EXPECT_EQ(s.plus.sumRank, 2);
        EXPECT_EQ(s.plus.intersectionDim, 1);
    }
}

TEST(Hypotheses, EngineeredTransversalityFailure) {
    // U_+ lies inside the leading 3-dimensional eigenspace for every lambda.
    const Problem p = parse_problem(kDiagonalFile);
    const HypothesisReport r = validate_hypotheses(*p.profile, p.separated_boundary(), p.domain, 8);
    EXPECT_FALSE(r.pass);
    EXPECT_EQ(r.failures(), r.samples.size());
    EXPECT_LT(r.samples.front().plus.sumRank, 4);
}

TEST(Hypotheses, MonotoneInSampleCount) {
    const Problem p = parse_problem(kDiagonalFile);
    const auto a = validate_hypotheses(*p.profile, p.separated_boundary(), p.domain, 5);
    const auto b = validate_hypotheses(*p.profile, p.separated_boundary(), p.domain, 12);
    for (std::size_t j = 0; j < a.samples.size(); ++j) {
        EXPECT_EQ(a.samples[j].lambda, b.samples[j].lambda);
        if (!a.samples[j].pass) EXPECT_FALSE(b.samples[j].pass);
    }
}

TEST(Hypotheses, BuiltinsPassOnDocumentedDomains) {
    for (const char* spec : {"adv-diff,c=2", "adv-diff-front", "two-component"}) {
        SCOPED_TRACE(spec);
        const Problem p = builtin(spec);
        const HypothesisReport r = validate_hypotheses(*p.profile, p.separated_boundary(), p.domain, 24);
        EXPECT_TRUE(r.pass) << r.failures() << " failures";
    }
}

TEST(Hypotheses, PeriodicDoubledOffSpectrumPasses) {
    const Problem p = builtin("periodic-adv-diff,c=1");
    const HypothesisReport r = validate_hypotheses(*p.profile, doubled_boundary(2, 1.0),
                                                   ParameterDomain::disk(cd(1.0, 1.0), 0.2, 8), 6);
    EXPECT_TRUE(r.pass);
}

TEST(Builtins, CatalogAndErrors) {
    EXPECT_EQ(builtin_catalog().size(), 4u);
    EXPECT_THROW(builtin("nope"), ConfigError);
    EXPECT_THROW(builtin("adv-diff,q=1"), ConfigError);
    const Problem tc = builtin("builtin:two-component");
    EXPECT_EQ(tc.separated_boundary().i_minus(), 2);
    EXPECT_EQ(tc.separated_boundary().i_plus(), 2);
    EXPECT_EQ(tc.profile->dimension(), 4);
    EXPECT_THROW(builtin("periodic-adv-diff").separated_boundary(), PreconditionError);
}

TEST(Builtins, SerializeRoundTrip) {
    for (const char* spec : {"adv-diff,c=2", "adv-diff-front,c_minus=2,c_plus=0.5", "two-component,b=0.3",
                             "periodic-adv-diff,c=1"}) {
        SCOPED_TRACE(spec);
        const Problem p = builtin(spec);
        const Problem q = parse_problem(serialize(p).dump(2));
        gen::for_all(100, 302, [&](gen::Gen& g, int) {
            const cd lam = g.complex_in(-4, 1, -2, 2);
            const double x = g.uniform(-5, 5);
            EXPECT_LE((p.profile->evaluate(x, lam) - q.profile->evaluate(x, lam)).norm(), 1e-14);
        });
        EXPECT_EQ(serialize(p).dump(), serialize(q).dump());
    }
}

TEST(ProblemFile, LoadFromDisk) {
    const std::string path = ::testing::TempDir() + "absspec_diag.json";
    {
        std::ofstream os(path);
        os << kDiagonalFile;
    }
    const Problem p = load_problem(path);
    EXPECT_EQ(p.name, "diagonal");
    EXPECT_EQ(resolve_problem(path).name, "diagonal");
    EXPECT_THROW(load_problem(path + ".missing"), ConfigError);
}

TEST(ProblemFile, SeamMismatchIsContinuityError) {
    const std::string text = R"({
  "N": 2,
  "ell0": 1,
  "A_minus": [[0, 1], ["lambda", 0]],
  "A_plus": [[0, 1], ["lambda", 0]],
  "middle": [[0, 1], ["lambda + 1", 0]],
  "U_minus": [[0, 1]],
  "U_plus": [[0, 1]]
})";
    try {
        parse_problem(text);
        FAIL() << "expected ContinuityError";
    } catch (const ContinuityError& e) {
        EXPECT_NE(std::string(e.what()).find("line 6"), std::string::npos) << e.what();
    }
}

TEST(ProblemFile, HypothesisTwoViolation) {
    const std::string text = R"({
  "N": 3,
  "A_minus": [[1, 0, 0], [0, 2, 0], [0, 0, 3]],
  "A_plus": [[1, 0, 0], [0, 2, 0], [0, 0, 3]],
  "U_minus": [[1, 0, 0], [0, 1, 0]],
  "U_plus": [[0, 0, 1]]
})";
    EXPECT_THROW(parse_problem(text), HypothesisError);
}

TEST(ProblemFile, SchemaErrorsCarryPosition) {
    try {
        parse_problem("{\n  \"N\": 2,\n  \"A_minus\": [[0, 1], [\"lambda\", 0]],\n  \"bogus\": 1\n}");
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.line(), 4u);
        EXPECT_EQ(e.column(), 3u);
    }
    try {
        parse_problem("{\n  \"N\": 2,\n  \"A_minus\": [[0, 1], [\"lambda\", 0]]\n  \"A_plus\": 1\n}");
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.line(), 4u);
    }
    try {
        parse_problem(R"({"N": 2, "A_minus": [[0, 1]], "A_plus": [[0, 1], [1, 0]], "U_minus": [[0, 1]], "U_plus": [[0, 1]]})");
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("A_minus"), std::string::npos);
    }
}

TEST(ProblemFile, ComplexScalarsAndConstants) {
    const std::string text = R"({
  "N": 2,
  "constants": {"c": [0.5, 0.25]},
  "A_minus": [[0, 1], ["lambda", "-c"]],
  "A_plus": [[0, 1], ["lambda", "-c"]],
  "U_minus": [[0, [1, 0]]],
  "U_plus": [[0, 1]]
})";
    const Problem p = parse_problem(text);
    EXPECT_NEAR(std::abs(p.profile->evaluate(0.0, 2.0)(1, 1) - cd(-0.5, -0.25)), 0.0, 1e-15);
}

TEST(ConstantProfile, WrapsMatrix) {
    gen::Gen g(303);
    const ComplexMatrix A = g.matrix(3, 3);
    const auto prof = constant_profile(A);
    EXPECT_LE((prof->evaluate(-7.0, cd(1, 2)) - A).norm(), 0.0);
    EXPECT_LE((prof->evaluate(0.2, cd(-3, 0)) - A).norm(), 0.0);
}
