#include "absspec/problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "absspec/errors.hpp"
#include "absspec/integrator.hpp"

namespace absspec {

std::string to_string(ProfileKind kind) {
    switch (kind) {
    case ProfileKind::SeparatedAsymptotic: return "separated-asymptotic";
    case ProfileKind::PeriodicAsymptotic: return "periodic-asymptotic";
    case ProfileKind::PeriodicTail: return "periodic-tail";
    }
    return "separated-asymptotic";
}

ProfileKind parse_profile_kind(const std::string& text) {
    if (text == "separated-asymptotic") return ProfileKind::SeparatedAsymptotic;
    if (text == "periodic-asymptotic") return ProfileKind::PeriodicAsymptotic;
    if (text == "periodic-tail") return ProfileKind::PeriodicTail;
    throw SchemaError("unknown profile kind '" + text + "'");
}

MatrixExpression::MatrixExpression(int rows, int cols, std::vector<Expression> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (rows < 1 || cols < 1 || entries_.size() != static_cast<std::size_t>(rows * cols)) {
        throw SchemaError("matrix expression: entry count does not match the shape");
    }
}

MatrixExpression MatrixExpression::parse(const std::vector<std::vector<std::string>>& rows) {
    if (rows.empty()) throw SchemaError("matrix expression: no rows");
    const std::size_t cols = rows.front().size();
    std::vector<Expression> entries;
    for (const auto& r : rows) {
        if (r.size() != cols) throw SchemaError("matrix expression: ragged rows");
        for (const auto& s : r) entries.push_back(Expression::parse(s));
    }
    return MatrixExpression(static_cast<int>(rows.size()), static_cast<int>(cols), std::move(entries));
}

ComplexMatrix MatrixExpression::evaluate(cd lambda, double x, const ConstantMap& constants) const {
    Expression::Context ctx{lambda, x, &constants};
    ComplexMatrix m(rows_, cols_);
    for (int r = 0; r < rows_; ++r)
        for (int c = 0; c < cols_; ++c) m(r, c) = at(r, c).evaluate(ctx);
    return m;
}

bool MatrixExpression::depends_on_x() const {
    return std::any_of(entries_.begin(), entries_.end(), [](const Expression& e) { return e.depends_on_x(); });
}

namespace {

void require_shape(const MatrixExpression& m, int N, const char* what) {
    if (m.rows() != N || m.cols() != N) {
        throw SchemaError(std::string(what) + " must be " + std::to_string(N) + "x" + std::to_string(N) + ", got " +
                          std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

// Probe points for structural checks, kept inside the declared region.
std::vector<cd> probe_lambdas(const std::optional<LambdaRegion>& region) {
    if (!region) return {cd(0.0, 0.0), cd(1.0, 0.0), cd(0.0, 1.0), cd(-1.0, 0.5), cd(0.3, -0.7)};
    const double a = region->re0, b = region->re1, c = region->im0, d = region->im1;
    const double fr[] = {0.5, 0.25, 0.75, 0.1, 0.9};
    const double fi[] = {0.5, 0.75, 0.25, 0.6, 0.3};
    std::vector<cd> out;
    for (int j = 0; j < 5; ++j) out.emplace_back(a + fr[j] * (b - a), c + fi[j] * (d - c));
    return out;
}

double rel_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    return (a - b).cwiseAbs().maxCoeff() / (1.0 + b.cwiseAbs().maxCoeff());
}

} // namespace

CoefficientProfile::CoefficientProfile(ProfileDefinition def, const Tolerances& tol) : def_(std::move(def)) {
    const int N = def_.N;
    if (N < 1) throw SchemaError("profile dimension N must be positive");
    if (!(def_.ell0 > 0.0) || !std::isfinite(def_.ell0)) throw SchemaError("ell0 must be a positive number");
    require_shape(def_.aMinus, N, "A_minus");
    require_shape(def_.aPlus, N, "A_plus");
    if (!def_.middle.empty()) require_shape(def_.middle, N, "middle");
    if (def_.region && !(def_.region->re0 < def_.region->re1 && def_.region->im0 < def_.region->im1)) {
        throw SchemaError("lambda_region must have a nonempty interior");
    }

    if (def_.kind == ProfileKind::PeriodicTail) {
        if (!(def_.period > 0.0)) throw SchemaError("periodic-tail profiles need a positive period");
    } else if (def_.aMinus.depends_on_x() || def_.aPlus.depends_on_x()) {
        throw SchemaError("tail matrices of " + to_string(def_.kind) + " profiles must not depend on x");
    }
    if (def_.kind == ProfileKind::PeriodicAsymptotic && def_.crossingIndex > N) {
        throw SchemaError("crossing_index exceeds N");
    }
    middleConstant_ = def_.middle.empty() ? !def_.aPlus.depends_on_x() : !def_.middle.depends_on_x();

    const double ell0 = def_.ell0;
    for (const cd& lam : probe_lambdas(def_.region)) {
        const ComplexMatrix left = def_.aMinus.evaluate(lam, -ell0, def_.constants);
        const ComplexMatrix right = def_.aPlus.evaluate(lam, ell0, def_.constants);
        if (!left.allFinite() || !right.allFinite()) continue;
        if (def_.kind == ProfileKind::PeriodicAsymptotic && rel_diff(left, right) > tol.seam) {
            throw SchemaError("periodic-asymptotic profiles require A_minus = A_plus");
        }
        const ComplexMatrix midL = middle(-ell0, lam);
        const ComplexMatrix midR = middle(ell0, lam);
        const double dl = rel_diff(midL, left), dr = rel_diff(midR, right);
        if (dl > tol.seam || dr > tol.seam) {
            std::ostringstream os;
            os << "middle family does not meet the tail at the " << (dl > tol.seam ? "left" : "right")
               << " seam (relative mismatch " << std::max(dl, dr) << " at lambda = " << lam << ")";
            throw ContinuityError(os.str());
        }
    }
}

void CoefficientProfile::check_lambda(cd lambda) const {
    if (def_.region && !def_.region->contains(lambda)) {
        std::ostringstream os;
        os << "lambda = " << lambda << " lies outside the declared region of " << def_.name;
        throw DomainError(os.str());
    }
}

ComplexMatrix CoefficientProfile::middle(double x, cd lambda) const {
    check_lambda(lambda);
    const MatrixExpression& m = def_.middle.empty() ? def_.aPlus : def_.middle;
    return m.evaluate(lambda, x, def_.constants);
}

ComplexMatrix CoefficientProfile::tail(TailSide side, cd lambda, double x) const {
    check_lambda(lambda);
    const MatrixExpression& m = side == TailSide::Minus ? def_.aMinus : def_.aPlus;
    return m.evaluate(lambda, x, def_.constants);
}

ComplexMatrix CoefficientProfile::evaluate(double x, cd lambda) const {
    if (x <= -def_.ell0) return tail(TailSide::Minus, lambda, x);
    if (x >= def_.ell0) return tail(TailSide::Plus, lambda, x);
    return middle(x, lambda);
}

ExponentMap TailOperator::exponent_map() const {
    const double p = period;
    return [p](cd rho) { return std::log(rho) / p; };
}

SortedSpectrum TailOperator::spectrum(const Tolerances& tol) const {
    return is_monodromy() ? eig_sorted(matrix, exponent_map(), tol) : eig_sorted(matrix, tol);
}

std::vector<cd> TailOperator::raw_eigenvalues() const {
    const SchurForm f = schur(matrix);
    std::vector<cd> v(static_cast<std::size_t>(f.T.rows()));
    for (Eigen::Index j = 0; j < f.T.rows(); ++j) v[static_cast<std::size_t>(j)] = f.T(j, j);
    return v;
}

std::vector<cd> TailOperator::to_exponents(const std::vector<cd>& raw) const {
    if (!is_monodromy()) return raw;
    std::vector<cd> out;
    out.reserve(raw.size());
    const ExponentMap map = exponent_map();
    for (const cd& r : raw) out.push_back(map(r));
    return out;
}

Subspace TailOperator::leading_subspace(std::size_t count, const Tolerances& tol) const {
    return is_monodromy() ? ordered_invariant_subspace(matrix, count, exponent_map(), tol)
                          : ordered_invariant_subspace(matrix, count, tol);
}

TailOperator tail_operator(const CoefficientProfile& profile, TailSide side, cd lambda, const FlowSettings& flow) {
    const double ell0 = profile.ell0();
    if (profile.tails_constant()) {
        TailOperator op{profile.tail(side, lambda, side == TailSide::Plus ? ell0 : -ell0), 0.0};
        require_finite(op.matrix, "tail matrix");
        return op;
    }
    const double p = profile.period();
    const double from = side == TailSide::Plus ? ell0 : -ell0 - p;
    Generator gen = [&](double x) { return profile.tail(side, lambda, x); };
    ComplexMatrix M = ComplexMatrix::Identity(profile.dimension(), profile.dimension());
    integrate_linear(gen, from, from + p, M, flow, p / 16.0);
    require_finite(M, "monodromy");
    return {M, p};
}

BoundaryData::BoundaryData(Subspace left, Subspace right) : left_(std::move(left)), right_(std::move(right)) {
    if (left_.ambient_dim() != right_.ambient_dim()) {
        throw ShapeError("boundary subspaces live in different ambient dimensions");
    }
    if (left_.dim() + right_.dim() != left_.ambient_dim()) {
        throw HypothesisError("boundary dimensions must satisfy i_- + i_+ = N (got " + std::to_string(left_.dim()) +
                              " + " + std::to_string(right_.dim()) + " with N = " +
                              std::to_string(left_.ambient_dim()) + ")");
    }
    if (left_.dim() > right_.dim()) {
        throw HypothesisError("boundary dimensions must satisfy i_- <= i_+ (got i_- = " +
                              std::to_string(left_.dim()) + ", i_+ = " + std::to_string(right_.dim()) + ")");
    }
}

BoundaryData doubled_boundary(int N, cd gamma) {
    if (std::abs(std::abs(gamma) - 1.0) > 1e-12) throw InputError("gamma must have unit modulus");
    const double s = 1.0 / std::sqrt(2.0);
    ComplexMatrix left(2 * N, N), right(2 * N, N);
    left << ComplexMatrix::Identity(N, N) * s, ComplexMatrix::Identity(N, N) * s;
    right << ComplexMatrix::Identity(N, N) * (gamma * s), ComplexMatrix::Identity(N, N) * s;
    return BoundaryData(Subspace::from_orthonormal(left), Subspace::from_orthonormal(right));
}

ParameterDomain ParameterDomain::rectangle(double re0, double re1, double im0, double im1, int resolution) {
    if (!(re0 < re1) || !(im0 < im1)) throw ConfigError("domain rectangle has an empty interior");
    if (resolution < 8) throw ConfigError("domain resolution must be at least 8 points per axis");
    ParameterDomain d;
    d.shape = Shape::Rectangle;
    d.re0 = re0;
    d.re1 = re1;
    d.im0 = im0;
    d.im1 = im1;
    d.resolution = resolution;
    return d;
}

ParameterDomain ParameterDomain::disk(cd center, double radius, int resolution) {
    if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("domain disk needs a positive radius");
    if (resolution < 8) throw ConfigError("domain resolution must be at least 8 points per axis");
    ParameterDomain d;
    d.shape = Shape::Disk;
    d.center = center;
    d.radius = radius;
    d.re0 = center.real() - radius;
    d.re1 = center.real() + radius;
    d.im0 = center.imag() - radius;
    d.im1 = center.imag() + radius;
    d.resolution = resolution;
    return d;
}

bool ParameterDomain::contains(cd lambda) const {
    if (shape == Shape::Disk) return std::abs(lambda - center) <= radius;
    return lambda.real() >= re0 && lambda.real() <= re1 && lambda.imag() >= im0 && lambda.imag() <= im1;
}

std::array<double, 4> ParameterDomain::bounds() const { return {re0, re1, im0, im1}; }

namespace {

double radical_inverse(std::size_t n, std::size_t base) {
    double inv = 1.0 / static_cast<double>(base), f = inv, r = 0.0;
    while (n > 0) {
        r += f * static_cast<double>(n % base);
        n /= base;
        f *= inv;
    }
    return r;
}

} // namespace

std::vector<cd> ParameterDomain::samples(std::size_t count) const {
    std::vector<cd> out;
    out.reserve(count);
    // Rejection from the bounding box keeps the sequence prefix-stable.
    for (std::size_t n = 1; out.size() < count; ++n) {
        const cd z(re0 + radical_inverse(n, 2) * (re1 - re0), im0 + radical_inverse(n, 3) * (im1 - im0));
        if (contains(z)) out.push_back(z);
    }
    return out;
}

std::size_t HypothesisReport::failures() const {
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [](const HypothesisSample& s) { return !s.pass; }));
}

namespace {

SideCheck check_side(const Subspace& E, const Subspace& U, const Tolerances& tol) {
    SideCheck c;
    c.applicable = true;
    const Eigen::Index N = E.ambient_dim();
    ComplexMatrix joined(N, E.dim() + U.dim());
    joined << E.frame(), U.frame();
    Eigen::JacobiSVD<ComplexMatrix> svd(joined);
    const Eigen::VectorXd s = svd.singularValues();
    const double smax = s(0);
    for (Eigen::Index j = 0; j < s.size(); ++j)
        if (s(j) > tol.rankRel * std::max(1.0, smax)) ++c.sumRank;
    c.sumMargin = s.size() >= N ? s(N - 1) : 0.0;
    c.intersectionDim = intersection_dimension(E, U, tol.intersection);
    c.pass = c.sumRank == N && c.intersectionDim == 1;
    return c;
}

// Sorted positions (0-based pairs j, j+1) that must not coincide.
bool any_coincident(const SortedSpectrum& s, std::initializer_list<int> positions) {
    for (int j : positions)
        if (j >= 0 && static_cast<std::size_t>(j + 1) < s.size() && s.coincident(static_cast<std::size_t>(j)))
            return true;
    return false;
}

} // namespace

Subspace essential_center_space(const CoefficientProfile& profile, cd lambda, const Config& cfg) {
    const int N = profile.dimension();
    const int k = profile.crossing_index();
    const TailOperator op = tail_operator(profile, TailSide::Plus, lambda, cfg.flow);
    SchurForm form = schur(op.matrix);
    const SortedSpectrum spec = op.spectrum(cfg.tol);
    if (any_coincident(spec, {k - 2, k - 1})) {
        throw ClusterSplitError("essential crossing eigenvalue is not simple");
    }
    reorder_schur(form, {spec.schurIndex[static_cast<std::size_t>(k - 1)]});
    ComplexMatrix frame = ComplexMatrix::Zero(2 * N, N + 1);
    frame.block(0, 0, N, 1) = form.Q.col(0);
    frame.block(N, 1, N, N) = ComplexMatrix::Identity(N, N);
    return Subspace::from_orthonormal(frame, 1e-9);
}

HypothesisReport validate_hypotheses(const CoefficientProfile& profile, const BoundaryData& boundary,
                                     const ParameterDomain& domain, std::size_t sampleCount, const Config& cfg) {
    HypothesisReport report;
    const int N = profile.dimension();
    const bool periodic = profile.kind() == ProfileKind::PeriodicAsymptotic;
    if (boundary.ambient_dim() != (periodic ? 2 * N : N)) {
        throw ShapeError("boundary ambient dimension does not match the profile" +
                         std::string(periodic ? " (periodic kinds use the doubled boundary)" : ""));
    }
    const int iMinus = boundary.i_minus(), iPlus = boundary.i_plus();

    for (const cd& lam : domain.samples(sampleCount)) {
        HypothesisSample s;
        s.lambda = lam;
        try {
            if (periodic) {
                const int k = profile.crossing_index();
                const SortedSpectrum spec = tail_operator(profile, TailSide::Plus, lam, cfg.flow).spectrum(cfg.tol);
                s.clusterFlag = any_coincident(spec, {k - 2, k - 1});
                const Subspace E0 = essential_center_space(profile, lam, cfg);
                s.plus = check_side(E0, boundary.right(), cfg.tol);
                s.minus = check_side(E0, boundary.left(), cfg.tol);
            } else {
                const TailOperator plus = tail_operator(profile, TailSide::Plus, lam, cfg.flow);
                const TailOperator minus = tail_operator(profile, TailSide::Minus, lam, cfg.flow);
                const SortedSpectrum sp = plus.spectrum(cfg.tol), sm = minus.spectrum(cfg.tol);
                s.clusterFlag = any_coincident(sp, {iMinus - 2, iMinus - 1}) ||
                                any_coincident(sm, {iPlus - 2, iPlus - 1});
                const Subspace Ep = plus.leading_subspace(static_cast<std::size_t>(iMinus + 1), cfg.tol);
                const Subspace Em = minus.leading_subspace(static_cast<std::size_t>(iPlus + 1), cfg.tol);
                s.plus = check_side(Ep, boundary.right(), cfg.tol);
                s.minus = check_side(Em, boundary.left(), cfg.tol);
            }
            s.pass = s.plus.pass && s.minus.pass;
            if (!s.plus.pass) s.note += "plus-side transversality fails; ";
            if (!s.minus.pass) s.note += "minus-side transversality fails; ";
            if (s.clusterFlag) s.note += "coincident eigenvalues block the half-disk split; ";
        } catch (const ClusterSplitError& e) {
            s.pass = false;
            s.clusterFlag = true;
            s.note = e.what();
        }
        report.pass = report.pass && s.pass;
        report.samples.push_back(std::move(s));
    }
    if (!periodic && iMinus + 1 < N) {
        report.warnings.push_back("containment of the propagated U_- in E_+ is checked per run by the flow module");
    }
    return report;
}

} // namespace absspec
