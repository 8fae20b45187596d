#include "absspec/flow.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

#include "absspec/errors.hpp"

namespace absspec {

Propagator::Propagator(const CoefficientProfile& profile, cd lambda, const FlowSettings& settings)
    : profile_(&profile), lambda_(lambda), settings_(settings) {}

double Propagator::max_step() const {
    double h = settings_.maxStep > 0.0 ? settings_.maxStep : profile_->ell0() / 16.0;
    if (!profile_->tails_constant()) h = std::min(h, profile_->period() / 16.0);
    return h;
}

ComplexMatrix Propagator::generator(double x, int compoundOrder) const {
    ComplexMatrix A = profile_->evaluate(x, lambda_);
    return compoundOrder > 0 ? compound_matrix(A, compoundOrder) : A;
}

std::vector<Propagator::Piece> Propagator::pieces(double from, double to) const {
    const double ell0 = profile_->ell0();
    std::vector<double> cuts{from};
    const double lo = std::min(from, to), hi = std::max(from, to);
    std::vector<double> seams;
    if (lo < -ell0 && -ell0 < hi) seams.push_back(-ell0);
    if (lo < ell0 && ell0 < hi) seams.push_back(ell0);
    if (to < from) std::reverse(seams.begin(), seams.end());
    for (double s : seams) cuts.push_back(s);
    cuts.push_back(to);

    std::vector<Piece> out;
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
        const double a = cuts[j], b = cuts[j + 1];
        if (a == b) continue;
        const double mid = 0.5 * (a + b);
        const bool inTail = mid <= -ell0 || mid >= ell0;
        const bool constant = inTail ? profile_->tails_constant() : profile_->middle_constant();
        out.push_back({a, b, constant});
    }
    return out;
}

double Propagator::transport(double from, double to, ComplexMatrix& Y, const Renormalizer& renormalize,
                             int compoundOrder) const {
    double logScale = 0.0;
    for (const Piece& p : pieces(from, to)) {
        if (p.constant) {
            const ComplexMatrix A = generator(0.5 * (p.a + p.b), compoundOrder);
            require_finite(A, "coefficient matrix");
            const double length = p.b - p.a;
            const double reach = A.norm() * std::abs(length);
            const auto chunks = static_cast<long>(std::max(1.0, std::ceil(reach / settings_.tailChunkNorm)));
            const ComplexMatrix E = expm(A * (length / static_cast<double>(chunks)));
            for (long c = 0; c < chunks; ++c) {
                Y = E * Y;
                if (renormalize) logScale += renormalize(Y);
            }
            if (!Y.allFinite()) throw IntegrationError("matrix exponential propagation overflowed", p.b);
        } else {
            Generator gen = [&](double x) { return generator(x, compoundOrder); };
            std::function<void(ComplexMatrix&)> after;
            if (renormalize) after = [&](ComplexMatrix& M) { logScale += renormalize(M); };
            integrate_linear(gen, p.a, p.b, Y, settings_, max_step(), after, &stats_);
        }
    }
    return logScale;
}

ComplexMatrix Propagator::fundamental_matrix(double from, double to) const {
    const int N = profile_->dimension();
    ComplexMatrix Y = ComplexMatrix::Identity(N, N);
    transport(from, to, Y, {});
    return Y;
}

namespace {

double qr_renormalize(ComplexMatrix& Y) {
    double ls = 0.0;
    Y = positive_qr(Y, ls);
    return ls;
}

double max_renormalize(ComplexMatrix& v) {
    Eigen::Index pick = 0;
    double best = 0.0;
    for (Eigen::Index j = 0; j < v.rows(); ++j) {
        const double a = std::abs(v(j, 0));
        if (a > best) {
            best = a;
            pick = j;
        }
    }
    if (!(best > 0.0) || !std::isfinite(best)) throw NumericalError("Pluecker propagation degenerated");
    v /= v(pick, 0);
    return std::log(best);
}

} // namespace

SubspaceResult propagate_subspace(const Propagator& prop, double from, double to, const Subspace& U) {
    if (U.ambient_dim() != prop.profile().dimension()) throw ShapeError("propagate_subspace: dimension mismatch");
    ComplexMatrix Y = U.frame();
    double ls = prop.transport(from, to, Y, qr_renormalize);
    if (from == to) ls = qr_renormalize(Y);
    return {Subspace::from_orthonormal(Y, 1e-9), ls};
}

PlueckerResult propagate_pluecker(const Propagator& prop, double from, double to, const PlueckerPoint& P) {
    if (P.N != prop.profile().dimension()) throw ShapeError("propagate_pluecker: dimension mismatch");
    ComplexMatrix v = P.coords;
    const double ls = prop.transport(from, to, v, max_renormalize, P.k);
    return {PlueckerPoint::from_coordinates(v.col(0), P.N, P.k), ls};
}

EvansValue boundary_determinant(const Propagator& prop, double ell, const BoundaryData& boundary) {
    if (!(ell > prop.profile().ell0())) throw PreconditionError("boundary_determinant requires ell > ell0");
    if (boundary.ambient_dim() != prop.profile().dimension()) {
        throw ShapeError("boundary_determinant: boundary dimension mismatch");
    }
    SubspaceResult r = propagate_subspace(prop, -ell, ell, boundary.left());
    const int N = boundary.ambient_dim();
    ComplexMatrix M(N, N);
    M << r.subspace.frame(), boundary.right().frame();
    const LogDet d = det_logscaled(M);
    return {d.logMagnitude, d.phase, r.logScale, std::move(r.subspace)};
}

double TrajectoryRecord::max_inconsistency() const {
    double worst = 0.0;
    for (const auto& s : samples)
        worst = std::max(worst, chordal_distance(wedge_coordinates(s.subspace.frame()), s.point.coords));
    return worst;
}

void TrajectoryRecord::write_csv(std::ostream& os) const {
    os << "# absspec trajectory v1\n";
    if (samples.empty()) {
        os << "x,log_scale_subspace,log_scale_pluecker\n";
        return;
    }
    const auto& first = samples.front();
    os << "x";
    for (Eigen::Index c = 0; c < first.subspace.dim(); ++c)
        for (Eigen::Index r = 0; r < first.subspace.ambient_dim(); ++r)
            os << ",frame_" << r << "_" << c << "_re,frame_" << r << "_" << c << "_im";
    for (Eigen::Index j = 0; j < first.point.coords.size(); ++j) os << ",p" << j << "_re,p" << j << "_im";
    os << ",log_scale_subspace,log_scale_pluecker\n";
    os << std::setprecision(17);
    for (const auto& s : samples) {
        os << s.x;
        for (Eigen::Index c = 0; c < s.subspace.dim(); ++c)
            for (Eigen::Index r = 0; r < s.subspace.ambient_dim(); ++r)
                os << ',' << s.subspace.frame()(r, c).real() << ',' << s.subspace.frame()(r, c).imag();
        for (Eigen::Index j = 0; j < s.point.coords.size(); ++j)
            os << ',' << s.point.coords(j).real() << ',' << s.point.coords(j).imag();
        os << ',' << s.subspaceLogScale << ',' << s.plueckerLogScale << '\n';
    }
}

TrajectoryRecord record_trajectory(const Propagator& prop, double from, const std::vector<double>& xs,
                                   const Subspace& U) {
    TrajectoryRecord rec;
    Subspace G = U;
    PlueckerPoint P = pluecker(U);
    double x = from, lsG = 0.0, lsP = 0.0;
    for (double next : xs) {
        SubspaceResult g = propagate_subspace(prop, x, next, G);
        PlueckerResult p = propagate_pluecker(prop, x, next, P);
        lsG += g.logScale;
        lsP += p.logScale;
        G = g.subspace;
        P = p.point;
        x = next;
        rec.samples.push_back({x, G, lsG, P, lsP});
    }
    return rec;
}

namespace {

double containment_distance(const Subspace& G, const Subspace& E) {
    const Eigen::VectorXd cosines = principal_cosines(G, E);
    const double c = std::min(1.0, cosines(cosines.size() - 1));
    return std::sqrt(std::max(0.0, 1.0 - c * c));
}

} // namespace

ContainmentReport containment_margin(const Propagator& prop, double ell, const BoundaryData& boundary,
                                     const Config& cfg) {
    const CoefficientProfile& profile = prop.profile();
    const double ell0 = profile.ell0();
    const int N = profile.dimension();
    ContainmentReport rep;
    rep.plusMargin = rep.minusMargin = std::numeric_limits<double>::infinity();
    if (boundary.i_minus() + 1 < N) {
        const Subspace G = propagate_subspace(prop, -ell, ell0, boundary.left()).subspace;
        const Subspace E = tail_operator(profile, TailSide::Plus, prop.lambda(), cfg.flow)
                               .leading_subspace(static_cast<std::size_t>(boundary.i_minus() + 1), cfg.tol);
        rep.plusMargin = containment_distance(G, E);
    }
    if (boundary.i_plus() + 1 < N) {
        const Subspace G = propagate_subspace(prop, ell, -ell0, boundary.right()).subspace;
        const Subspace E = tail_operator(profile, TailSide::Minus, prop.lambda(), cfg.flow)
                               .leading_subspace(static_cast<std::size_t>(boundary.i_plus() + 1), cfg.tol);
        rep.minusMargin = containment_distance(G, E);
    }
    rep.warn = rep.plusMargin < cfg.tol.containmentMargin || rep.minusMargin < cfg.tol.containmentMargin;
    return rep;
}

} // namespace absspec
