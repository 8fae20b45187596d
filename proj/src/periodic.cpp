#include "absspec/periodic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "absspec/errors.hpp"

namespace absspec {

DoubledProblem::DoubledProblem(std::shared_ptr<const CoefficientProfile> base, cd gamma)
    : base_(std::move(base)), gamma_(gamma), boundary_(doubled_boundary(base_->dimension(), gamma)) {}

DoubledProblem double_system(std::shared_ptr<const CoefficientProfile> profile, cd gamma) {
    if (!profile) throw InputError("double_system: no profile");
    return DoubledProblem(std::move(profile), gamma);
}

ComplexMatrix DoubledProblem::evaluate(double x, cd lambda) const {
    const int N = base_->dimension();
    ComplexMatrix A = ComplexMatrix::Zero(2 * N, 2 * N);
    A.topLeftCorner(N, N) = base_->evaluate(x, lambda);
    return A;
}

ComplexMatrix DoubledProblem::fundamental_matrix(double from, double to, cd lambda, const FlowSettings& flow) const {
    const int N = base_->dimension();
    ComplexMatrix F = ComplexMatrix::Identity(2 * N, 2 * N);
    F.topLeftCorner(N, N) = Propagator(*base_, lambda, flow).fundamental_matrix(from, to);
    return F;
}

DeterminantFn doubled_determinant(const DoubledProblem& d, double ell, const FlowSettings& flow) {
    auto base = d.base_ptr();
    const ComplexMatrix Ugamma = d.boundary().right().frame();
    return [base, Ugamma, ell, flow](cd lambda) {
        const int N = base->dimension();
        const Propagator prop(*base, lambda, flow);
        const double s = 1.0 / std::sqrt(2.0);
        ComplexMatrix Y = ComplexMatrix::Identity(N, N) * s;
        ComplexMatrix B = ComplexMatrix::Identity(N, N) * s;
        // Only the upper block moves (W' = 0); renormalize the stacked frame.
        auto renorm = [&B, N](ComplexMatrix& top) {
            ComplexMatrix M(2 * N, N);
            M << top, B;
            double ls = 0.0;
            M = positive_qr(M, ls);
            top = M.topRows(N);
            B = M.bottomRows(N);
            return ls;
        };
        const double logScale = prop.transport(-ell, ell, Y, renorm);
        ComplexMatrix M(2 * N, 2 * N);
        M << Y, Ugamma.topRows(N), B, Ugamma.bottomRows(N);
        const LogDet det = det_logscaled(M);
        return DeterminantSample{det.logMagnitude + logScale, det.phase, std::exp(det.logMagnitude)};
    };
}

namespace {

// Short-interval propagators covering [-ell, ell], each of norm at most e^6.
void shooting_pieces(const Propagator& prop, double a, double b, std::vector<ComplexMatrix>& out, int depth = 0) {
    ComplexMatrix Phi = prop.fundamental_matrix(a, b);
    if (depth < 40 && b - a > 1e-6 && Phi.norm() > std::exp(6.0)) {
        const double m = 0.5 * (a + b);
        shooting_pieces(prop, a, m, out, depth + 1);
        shooting_pieces(prop, m, b, out, depth + 1);
        return;
    }
    out.push_back(std::move(Phi));
}

} // namespace

DeterminantFn monodromy_determinant(const DoubledProblem& d, double ell, const FlowSettings& flow) {
    auto base = d.base_ptr();
    const cd gamma = d.gamma();
    return [base, gamma, ell, flow](cd lambda) {
        const int N = base->dimension();
        const Propagator prop(*base, lambda, flow);
        // initial chunking from the coefficient size at a few positions
        double anorm = 0.0;
        for (double x : {-ell, -base->ell0(), 0.0, base->ell0(), ell}) anorm = std::max(anorm, base->evaluate(x, lambda).norm());
        const int chunks = std::max(1, static_cast<int>(std::ceil(2.0 * ell * anorm / 4.0)));
        std::vector<ComplexMatrix> phis;
        for (int j = 0; j < chunks; ++j)
            shooting_pieces(prop, -ell + 2.0 * ell * j / chunks, -ell + 2.0 * ell * (j + 1) / chunks, phis);

        // Block-cyclic multiple-shooting matrix: gamma I in the corner block,
        // -Phi_j below the diagonal, -Phi_m in the top right. Its determinant
        // is det(gamma I - Phi_m ... Phi_1) without forming the product.
        const int m = static_cast<int>(phis.size());
        const Eigen::Index n = static_cast<Eigen::Index>(m) * N;
        ComplexMatrix C = ComplexMatrix::Identity(n, n);
        if (m == 1) {
            C = gamma * ComplexMatrix::Identity(N, N) - phis[0];
        } else {
            C.topLeftCorner(N, N) *= gamma;
            C.block(0, n - N, N, N) = -phis[static_cast<std::size_t>(m - 1)];
            for (int j = 0; j + 1 < m; ++j) C.block((j + 1) * N, j * N, N, N) = -phis[static_cast<std::size_t>(j)];
        }
        const Eigen::PartialPivLU<ComplexMatrix> lu(C);
        const ComplexMatrix& LU = lu.matrixLU();
        double logMag = 0.0;
        cd phase = double(lu.permutationP().determinant());
        if (N % 2 == 1) phase = -phase;   // det(Phi - gamma I) = (-1)^N det(gamma I - Phi)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double a = std::abs(LU(j, j));
            if (a == 0.0) return DeterminantSample{-std::numeric_limits<double>::infinity(), cd(1.0), 0.0};
            logMag += std::log(a);
            phase *= LU(j, j) / a;
        }
        // Reciprocal condition estimate as the scale-free size: O(1) away
        // from gamma-eigenvalues, proportional to the distance near one.
        return DeterminantSample{logMag, phase / std::abs(phase), lu.rcond()};
    };
}

PeriodicCount periodic_count(const DoubledProblem& d, double ell, cd center, double delta, const Config& cfg) {
    PeriodicCount out;
    out.ell = ell;
    out.ellBar = ell - d.base().ell0();
    try {
        const GapFunction g(d.base(), Side::Zero, d.base().crossing_index(), cfg);
        out.certification = certify_nondegenerate(g, center);
    } catch (const Error& e) {
        out.certificationNote = e.what();
    }
    out.doubled = winding_on_circle(doubled_determinant(d, ell, cfg.flow), center, delta, cfg.contour, cfg.jobs);
    out.monodromy = winding_on_circle(monodromy_determinant(d, ell, cfg.flow), center, delta, cfg.contour, cfg.jobs);
    out.count = out.doubled.winding;
    out.agree = out.doubled.winding == out.monodromy.winding;
    return out;
}

void write_periodic_csv(std::ostream& os, const DoubledProblem& d, cd center, double delta,
                        const std::vector<PeriodicCount>& rows) {
    os << std::setprecision(17);
    os << "# absspec periodic-count v1 gamma_turns=" << std::arg(d.gamma()) / (2.0 * M_PI) << " center="
       << center.real() << (center.imag() < 0 ? "" : "+") << center.imag() << "i delta=" << delta << '\n';
    os << "ell,ell_bar,count,count_monodromy,agree\n";
    for (const auto& r : rows)
        os << r.ell << ',' << r.ellBar << ',' << r.count << ',' << r.monodromy.winding << ',' << (r.agree ? 1 : 0)
           << '\n';
}

std::string to_string(ExtrapolatedClass c) {
    switch (c) {
    case ExtrapolatedClass::In: return "IN";
    case ExtrapolatedClass::Out: return "OUT";
    case ExtrapolatedClass::Undecided: return "UNDECIDED";
    }
    return "UNDECIDED";
}

std::vector<ProbeResult> extrapolated_set_probe(const DoubledProblem& d, const std::vector<cd>& candidates,
                                                double delta, const std::vector<double>& ells, int nCap,
                                                const Config& cfg) {
    if (ells.size() < 4) throw PreconditionError("extrapolated_set_probe needs at least 4 interval lengths");
    for (std::size_t j = 1; j < ells.size(); ++j)
        if (!(ells[j] > ells[j - 1])) throw PreconditionError("extrapolated_set_probe: ell list must increase");

    const GapFunction g(d.base(), Side::Zero, d.base().crossing_index(), cfg);
    std::vector<ProbeResult> out;
    for (const cd& lam : candidates) {
        ProbeResult r;
        r.lambda = lam;
        r.ells = ells;
        try {
            const NondegeneracyReport rep = certify_nondegenerate(g, lam);
            if (!rep.nondegenerate) {
                r.degenerate = true;
                r.note = "on the essential locus but degenerate";
            }
        } catch (const PreconditionError&) {
            // Off the locus: nothing to certify.
        } catch (const Error& e) {
            r.degenerate = true;
            r.note = e.what();
        }
        bool failed = false;
        for (double ell : ells) {
            try {
                r.counts.push_back(
                    winding_on_circle(doubled_determinant(d, ell, cfg.flow), lam, delta, cfg.contour, cfg.jobs)
                        .winding);
            } catch (const ContourError& e) {
                r.counts.push_back(-1);
                failed = true;
                r.note += std::string(r.note.empty() ? "" : "; ") + e.what();
            }
        }
        if (!failed && !r.degenerate) {
            bool nondecreasing = true;
            for (std::size_t j = 1; j < r.counts.size(); ++j)
                if (r.counts[j] < r.counts[j - 1]) nondecreasing = false;
            const std::size_t half = r.counts.size() / 2;
            bool stable = true;
            for (std::size_t j = half; j < r.counts.size(); ++j)
                if (r.counts[j] != r.counts[half]) stable = false;
            if (r.counts.back() > nCap && nondecreasing && r.counts.back() > r.counts.front()) {
                r.classification = ExtrapolatedClass::In;
            } else if (stable && r.counts[half] <= nCap) {
                r.classification = ExtrapolatedClass::Out;
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_probe_csv(std::ostream& os, const std::vector<ProbeResult>& results) {
    os << std::setprecision(17);
    os << "# absspec probe v1\n";
    os << "re_lambda,im_lambda,ell,count,class,degenerate\n";
    for (const auto& r : results)
        for (std::size_t j = 0; j < r.ells.size(); ++j)
            os << r.lambda.real() << ',' << r.lambda.imag() << ',' << r.ells[j] << ',' << r.counts[j] << ','
               << to_string(r.classification) << ',' << (r.degenerate ? 1 : 0) << '\n';
}

double CenterTrack::max_scalar_ode_residual(double ell0) const {
    double worst = 0.0;
    for (std::size_t j = 1; j < samples.size(); ++j) {
        const auto& a = samples[j - 1];
        const auto& b = samples[j];
        if (a.x < ell0 || b.x < ell0) continue;
        const double dx = b.x - a.x;
        const cd factor = std::exp(cd(a.logNorm - mu.real() * dx - b.logNorm, -mu.imag() * dx));
        worst = std::max(worst, (b.direction - factor * a.direction).norm());
    }
    return worst;
}

namespace {

// 1 / sqrt(1 + exp(2 t)) without overflow.
double inv_hyp(double t) { return t > 0.0 ? std::exp(-t) / std::sqrt(1.0 + std::exp(-2.0 * t)) : 1.0 / std::sqrt(1.0 + std::exp(2.0 * t)); }

} // namespace

namespace {

struct BackPiece {
    double a, b;            // a < b, traversed from b down to a
    bool constant;
    ComplexMatrix matrix;   // set when constant
};

// Phi(-ell, x) v. Constant stretches are handled in eigen-coordinates and
// components at roundoff level are dropped; otherwise an exact eigenvector
// would pick up a spurious growing mode over a long backward stretch.
ComplexVector pull_back(const CoefficientProfile& profile, const Propagator& prop, cd lambda, double ell, double x,
                        ComplexVector y) {
    const double l0 = profile.ell0();
    std::vector<BackPiece> pieces;
    auto add = [&](double a, double b, bool constant, const ComplexMatrix& m) {
        if (!(b > a)) return;
        if (!pieces.empty() && constant && pieces.back().constant &&
            (pieces.back().matrix - m).norm() <= 1e-14 * (1.0 + m.norm())) {
            pieces.back().a = a;
            return;
        }
        pieces.push_back({a, b, constant, m});
    };
    if (x > l0) add(l0, x, true, profile.tail(TailSide::Plus, lambda));
    if (x > -l0) {
        const double b = std::min(x, l0);
        if (profile.middle_constant())
            add(-l0, b, true, profile.evaluate(0.5 * (b - l0), lambda));
        else
            add(-l0, b, false, ComplexMatrix());
    }
    add(-ell, std::min(x, -l0), true, profile.tail(TailSide::Minus, lambda));

    for (const auto& pc : pieces) {
        const double len = pc.b - pc.a;
        if (!pc.constant) {
            y = prop.fundamental_matrix(pc.b, pc.a) * y;
            continue;
        }
        Eigen::ComplexEigenSolver<ComplexMatrix> es(pc.matrix);
        const ComplexMatrix& V = es.eigenvectors();
        ComplexVector a = V.partialPivLu().solve(y);
        const double amax = a.cwiseAbs().maxCoeff();
        for (Eigen::Index j = 0; j < a.size(); ++j) {
            if (std::abs(a(j)) <= 1e-12 * amax)
                a(j) = 0.0;
            else
                a(j) *= std::exp(-es.eigenvalues()(j) * len);
        }
        y = V * a;
    }
    return y;
}

} // namespace

CenterTrack track_essential_center(const CoefficientProfile& profile, cd lambda, double ell,
                                   const std::vector<double>& xs, const Config& cfg) {
    const int k = profile.crossing_index();
    const TailOperator op = tail_operator(profile, TailSide::Plus, lambda, cfg.flow);
    if (op.is_monodromy()) throw PreconditionError("track_essential_center needs a constant tail");
    const SortedSpectrum spec = op.spectrum(cfg.tol);
    SchurForm form = schur(op.matrix);
    reorder_schur(form, {spec.schurIndex[static_cast<std::size_t>(k - 1)]});
    const ComplexVector v = form.Q.col(0);

    CenterTrack track;
    track.lambda = lambda;
    track.mu = spec[static_cast<std::size_t>(k - 1)];

    const Propagator prop(profile, lambda, cfg.flow);
    const double l0 = profile.ell0();
    double prevX = 0.0;
    ComplexVector z2;   // z2 / z1 with z1 = 1 at the previous sample
    double logScale = 0.0;
    bool inTail = false;
    for (double x : xs) {
        if (x < -ell || x > ell) throw PreconditionError("track_essential_center: position outside [-ell, ell]");
        if (inTail && x >= prevX) {
            // Inside the plus tail: move the point (v, z2) of E0 forward with
            // the propagator and read off its coordinates again.
            const ComplexVector top = prop.fundamental_matrix(prevX, x) * v;
            const cd z1 = v.dot(top);
            z2 /= z1;
            const double n = z2.norm();
            logScale += std::log(n);
            z2 /= n;
        } else {
            z2 = pull_back(profile, prop, lambda, ell, x, v);
            const double n = z2.norm();
            logScale = std::log(n);
            z2 /= n;
            inTail = x >= l0;
        }
        prevX = x;
        CenterTrackSample smp;
        smp.x = x;
        smp.logNorm = logScale;
        smp.direction = z2;
        smp.distanceToPn = inv_hyp(-logScale);
        smp.distanceToPs = inv_hyp(logScale);
        track.samples.push_back(std::move(smp));
    }
    return track;
}

} // namespace absspec
