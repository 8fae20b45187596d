#include "absspec/counting.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "absspec/errors.hpp"
#include "absspec/parallel.hpp"

namespace absspec {

namespace {

// Raised for a zero on the contour so that callers can perturb and retry.
class ZeroOnContour : public ContourError {
public:
    ZeroOnContour(const std::string& what, cd where) : ContourError(what), where_(where) {}
    cd where() const { return where_; }

private:
    cd where_;
};

std::string fmt(cd z) {
    std::ostringstream os;
    os << std::setprecision(10) << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
    return os.str();
}

double phase_step(cd from, cd to) { return std::arg(to * std::conj(from)); }

} // namespace

DeterminantFn evans_function(const CoefficientProfile& profile, const BoundaryData& boundary, double ell,
                             const FlowSettings& flow) {
    const CoefficientProfile* p = &profile;
    return [p, boundary, ell, flow](cd lambda) {
        const Propagator prop(*p, lambda, flow);
        const EvansValue e = boundary_determinant(prop, ell, boundary);
        return DeterminantSample{e.log_magnitude(), e.phase, e.normalized_magnitude()};
    };
}

ContourPath circle_path(cd center, double radius) {
    return [center, radius](double t) { return center + std::polar(radius, 2.0 * M_PI * t); };
}

ContourPath rectangle_path(double re0, double re1, double im0, double im1) {
    return [=](double t) {
        const double w = re1 - re0, h = im1 - im0, per = 2.0 * (w + h);
        double s = t * per;
        if (s < w) return cd(re0 + s, im0);
        s -= w;
        if (s < h) return cd(re1, im0 + s);
        s -= h;
        if (s < w) return cd(re1 - s, im1);
        s -= w;
        return cd(re0, im1 - s);
    };
}

WindingReport winding_on_path(const DeterminantFn& f, const ContourPath& path, const ContourSettings& settings,
                              int jobs) {
    const std::size_t n0 = std::max<std::size_t>(settings.initialSamples, 4);
    WindingReport rep;
    auto evaluate = [&](const std::vector<double>& ts) {
        std::vector<ContourSample> out(ts.size());
        parallel_for(ts.size(), jobs, [&](std::size_t j) {
            out[j].t = ts[j];
            out[j].lambda = path(ts[j]);
            out[j].value = f(out[j].lambda);
        });
        for (const auto& s : out) {
            if (!(s.value.normalized > settings.zeroTol) || !std::isfinite(s.value.logMagnitude)) {
                throw ZeroOnContour("determinant vanishes on the contour near " + fmt(s.lambda), s.lambda);
            }
        }
        return out;
    };

    std::vector<double> ts(n0);
    for (std::size_t j = 0; j < n0; ++j) ts[j] = static_cast<double>(j) / static_cast<double>(n0);
    std::vector<ContourSample> samples = evaluate(ts);

    // Splits the listed intervals at their midpoints; returns the midpoints.
    auto split = [&](const std::vector<std::size_t>& which) {
        if (samples.size() + which.size() > settings.maxSamples) {
            throw ContourError("contour sampling cap of " + std::to_string(settings.maxSamples) +
                               " points reached without resolving the phase");
        }
        std::vector<double> mids;
        for (std::size_t j : which) {
            const double a = samples[j].t;
            const double b = j + 1 < samples.size() ? samples[j + 1].t : 1.0;
            mids.push_back(0.5 * (a + b));
        }
        std::vector<ContourSample> fresh = evaluate(mids);
        std::vector<ContourSample> merged;
        merged.reserve(samples.size() + fresh.size());
        std::size_t q = 0;
        for (std::size_t j = 0; j < samples.size(); ++j) {
            merged.push_back(samples[j]);
            if (q < which.size() && which[q] == j) merged.push_back(fresh[q++]);
        }
        samples = std::move(merged);
        ++rep.refinementDepth;
    };

    for (;;) {
        std::vector<std::size_t> bad;
        for (std::size_t j = 0; j < samples.size(); ++j) {
            const auto& a = samples[j];
            const auto& b = samples[(j + 1) % samples.size()];
            if (std::abs(phase_step(a.value.phase, b.value.phase)) >= settings.maxPhaseStep ||
                std::abs(b.value.logMagnitude - a.value.logMagnitude) >= settings.maxLogMagStep) {
                bad.push_back(j);
            }
        }
        if (!bad.empty()) {
            split(bad);
            continue;
        }
        // Verification pass: halve every interval and look for steps whose
        // halves do not add up, i.e. a full turn hidden between two samples.
        std::vector<std::size_t> all(samples.size());
        for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
        std::vector<double> before;
        for (std::size_t j = 0; j < samples.size(); ++j)
            before.push_back(phase_step(samples[j].value.phase, samples[(j + 1) % samples.size()].value.phase));
        split(all);
        bool aliased = false;
        for (std::size_t j = 0; j < before.size(); ++j) {
            const auto& a = samples[2 * j];
            const auto& m = samples[2 * j + 1];
            const auto& b = samples[(2 * j + 2) % samples.size()];
            const double halves = phase_step(a.value.phase, m.value.phase) + phase_step(m.value.phase, b.value.phase);
            if (std::abs(halves - before[j]) > 1e-6) aliased = true;
        }
        if (!aliased) break;
    }

    double total = 0.0;
    for (std::size_t j = 0; j < samples.size(); ++j)
        total += phase_step(samples[j].value.phase, samples[(j + 1) % samples.size()].value.phase);
    rep.rawWinding = total / (2.0 * M_PI);
    rep.winding = static_cast<int>(std::lround(rep.rawWinding));
    if (std::abs(rep.rawWinding - rep.winding) > 1e-6) {
        throw NumericalError("winding number is not an integer: " + std::to_string(rep.rawWinding));
    }
    rep.samples = std::move(samples);
    return rep;
}

WindingReport winding_on_circle(const DeterminantFn& f, cd center, double radius, const ContourSettings& settings,
                                int jobs) {
    std::vector<std::string> log;
    double r = radius;
    for (int attempt = 0;; ++attempt) {
        try {
            WindingReport rep = winding_on_path(f, circle_path(center, r), settings, jobs);
            rep.center = center;
            rep.radius = r;
            rep.requestedRadius = radius;
            rep.perturbationLog = log;
            return rep;
        } catch (const ZeroOnContour& e) {
            std::ostringstream os;
            os << "radius " << std::setprecision(10) << r << ": " << e.what();
            log.push_back(os.str());
            if (attempt >= settings.maxPerturbations) break;
            // +1%, -1%, +2%, -2%, ...
            const int m = attempt / 2 + 1;
            r = radius * (1.0 + (attempt % 2 == 0 ? 1.0 : -1.0) * settings.perturbation * m);
        }
    }
    std::string msg = "determinant vanishes on every perturbed contour around " + fmt(center);
    for (const auto& l : log) msg += "\n  " + l;
    throw ContourError(msg);
}

WindingReport winding_count(const CoefficientProfile& profile, const BoundaryData& boundary, double ell,
                            cd center, double delta, const Config& cfg) {
    return winding_on_circle(evans_function(profile, boundary, ell, cfg.flow), center, delta, cfg.contour, cfg.jobs);
}

void AccumulationTable::write_csv(std::ostream& os) const {
    os << "# absspec count v1 center=" << std::setprecision(17) << center.real() << (center.imag() < 0 ? "" : "+")
       << center.imag() << "i delta=" << delta << " slope=" << slope << '\n';
    os << "ell,ell_bar,count\n";
    for (const auto& r : rows) os << r.ell << ',' << r.ellBar << ',' << r.count << '\n';
}

AccumulationTable accumulation_experiment(const CoefficientProfile& profile, const BoundaryData& boundary,
                                          cd center, double delta, const std::vector<double>& ells,
                                          const Config& cfg) {
    AccumulationTable t;
    t.center = center;
    t.delta = delta;
    try {
        const GapFunction g = GapFunction::for_problem(profile, boundary, Side::Plus, cfg);
        t.certification = certify_nondegenerate(g, center);
    } catch (const Error& e) {
        t.certificationNote = e.what();
    }
    for (double ell : ells) {
        AccumulationRow row;
        row.ell = ell;
        row.ellBar = ell - profile.ell0();
        row.report = winding_count(profile, boundary, ell, center, delta, cfg);
        row.count = row.report.winding;
        t.rows.push_back(std::move(row));
    }
    for (std::size_t j = 1; j < t.rows.size(); ++j)
        if (t.rows[j].count < t.rows[j - 1].count - 1) t.monotone = false;
    if (t.rows.size() == 1) {
        t.slope = t.rows[0].count / t.rows[0].ell;
    } else if (t.rows.size() > 1) {
        double ml = 0.0, mc = 0.0;
        for (const auto& r : t.rows) {
            ml += r.ell;
            mc += r.count;
        }
        ml /= static_cast<double>(t.rows.size());
        mc /= static_cast<double>(t.rows.size());
        double sxy = 0.0, sxx = 0.0;
        for (const auto& r : t.rows) {
            sxy += (r.ell - ml) * (r.count - mc);
            sxx += (r.ell - ml) * (r.ell - ml);
        }
        t.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    }
    return t;
}

namespace {

struct LabelState {
    std::vector<cd> raw;
    std::vector<int> lead;   // positions of the k leading eigenvalues
    int next = -1;           // position of the (k+1)-th
};

LabelState initial_labels(const GapFunction& g, cd lambda) {
    LabelState s;
    s.raw = g.raw(lambda);
    const SortedSpectrum sorted = g.sort(s.raw);
    const int k = g.index();
    for (int j = 0; j < k; ++j) s.lead.push_back(sorted.schurIndex[static_cast<std::size_t>(j)]);
    s.next = sorted.schurIndex[static_cast<std::size_t>(k)];
    return s;
}

std::array<cd, 2> labels_of(const GapFunction& g, const LabelState& s) {
    cd nu1 = 0.0;
    for (int p : s.lead) nu1 += g.exponent(s.raw[static_cast<std::size_t>(p)]);
    const cd nu2 = nu1 - g.exponent(s.raw[static_cast<std::size_t>(s.lead.back())]) +
                   g.exponent(s.raw[static_cast<std::size_t>(s.next)]);
    return {nu1, nu2};
}

void require_constant_plus_tail(const CoefficientProfile& profile) {
    if (!profile.tails_constant()) {
        throw PreconditionError("projected coordinates need a constant plus tail");
    }
}

// Coefficients c_I with det[V | U_+] = sum_I c_I p_I(V).
ComplexVector boundary_functional(const Subspace& Uplus, int k) {
    const int N = static_cast<int>(Uplus.ambient_dim());
    const IndexBasis basis(N, k);
    ComplexVector c(static_cast<Eigen::Index>(basis.size()));
    ComplexMatrix M = ComplexMatrix::Zero(N, N);
    M.rightCols(N - k) = Uplus.frame();
    for (std::size_t j = 0; j < basis.size(); ++j) {
        M.leftCols(k).setZero();
        const auto& I = basis.subset(j);
        for (int q = 0; q < k; ++q) M(I[static_cast<std::size_t>(q)], q) = 1.0;
        c(static_cast<Eigen::Index>(j)) = M.determinant();
    }
    return c;
}

} // namespace

std::array<cd, 2> continued_labels(const GapFunction& g, cd from, cd lambda) {
    LabelState s = initial_labels(g, from);
    s.raw = g.continue_raw(from, lambda, s.raw);
    return labels_of(g, s);
}

ProjectedPoint projected_endpoint(const CoefficientProfile& profile, const BoundaryData& boundary, double ell,
                                  cd lambda, const std::array<cd, 2>& labels, const Config& cfg) {
    require_constant_plus_tail(profile);
    const ProjectionFrame pf = projection_frame(profile.tail(TailSide::Plus, lambda), boundary.i_minus(), cfg.tol, labels);
    const Propagator prop(profile, lambda, cfg.flow);
    const Subspace G = propagate_subspace(prop, -ell, ell, boundary.left()).subspace;
    const PlueckerPoint P = pluecker(G);
    ProjectedPoint out;
    out.lambda = lambda;
    out.Z = pf.project(P);
    out.distanceToPn = pf.distance_to_pn(P.coords);
    out.distanceToPs = pf.distance_to_ps(P.coords);
    return out;
}

void CoveringTrace::write_csv(std::ostream& os) const {
    os << "# absspec covering v1 ell=" << std::setprecision(17) << ell << " ell_bar=" << ellBar << " turns=" << turns
       << '\n';
    os << "s,re_lambda,im_lambda,re_zeta,im_zeta,cumulative_turns\n";
    for (const auto& s : samples) {
        os << s.s << ',' << s.lambda.real() << ',' << s.lambda.imag() << ',' << s.zeta.real() << ','
           << s.zeta.imag() << ',' << s.cumulativeTurns << '\n';
    }
}

CoveringTrace covering_trace(const CoefficientProfile& profile, const BoundaryData& boundary, double ell, cd a,
                             cd b, const Config& cfg) {
    require_constant_plus_tail(profile);
    const double eps = cfg.exclusionRadius;
    if (!(eps > 0.0) || !(eps < 0.5)) {
        throw ConfigError("exclusion radius must lie in (0, 1/2) so that the neighbourhoods of P_n and P_s are disjoint");
    }
    const int k = boundary.i_minus();
    const GapFunction g(profile, Side::Plus, k, cfg);
    const ComplexVector cU = boundary_functional(boundary.right(), k);

    CoveringTrace trace;
    trace.ell = ell;
    trace.ellBar = ell - profile.ell0();
    trace.boundaryPointMargin = std::numeric_limits<double>::infinity();

    struct Step {
        CoveringSample sample;
        LabelState labels;
        ComplexVector w1, w2;
    };
    auto evaluate = [&](double s, const Step* prev) {
        Step st;
        const cd lambda = a + s * (b - a);
        if (prev) {
            st.labels = prev->labels;
            st.labels.raw = g.continue_raw(prev->sample.lambda, lambda, prev->labels.raw);
        } else {
            st.labels = initial_labels(g, lambda);
        }
        const ProjectionFrame unit =
            projection_frame(profile.tail(TailSide::Plus, lambda), k, cfg.tol, labels_of(g, st.labels));
        ProjectionFrame pf = unit;
        if (prev) pf.normalize_against(prev->w1, prev->w2);
        st.w1 = pf.w1;
        st.w2 = pf.w2;

        // Point of the invariant sphere meeting U_+, in unit coordinates.
        const cd l1 = cU.cwiseProduct(unit.w1).sum(), l2 = cU.cwiseProduct(unit.w2).sum();
        const double nrm = std::hypot(std::abs(l1), std::abs(l2));
        if (nrm > 0.0) {
            trace.boundaryPointMargin =
                std::min({trace.boundaryPointMargin, std::abs(l1) / nrm, std::abs(l2) / nrm});
        }

        const Propagator prop(profile, lambda, cfg.flow);
        const PlueckerPoint P = pluecker(propagate_subspace(prop, -ell, ell, boundary.left()).subspace);
        st.sample.s = s;
        st.sample.lambda = lambda;
        st.sample.zeta = pf.zeta(P.coords);
        st.sample.distanceToPn = unit.distance_to_pn(P.coords);
        st.sample.distanceToPs = unit.distance_to_ps(P.coords);
        st.sample.excluded = st.sample.distanceToPn < eps || st.sample.distanceToPs < eps;
        return st;
    };

    const double hMax = 1.0 / static_cast<double>(std::max<std::size_t>(cfg.contour.initialSamples, 4));
    Step cur = evaluate(0.0, nullptr);
    trace.samples.push_back(cur.sample);
    double s = 0.0, h = hMax, turns = 0.0;
    while (s < 1.0) {
        const double sn = std::min(1.0, s + h);
        Step nxt = evaluate(sn, &cur);
        const double d = phase_step(cur.sample.zeta, nxt.sample.zeta);
        bool reject = std::abs(d) >= cfg.contour.maxPhaseStep;
        if (!reject) {
            // A whole turn can hide between two samples; the midpoint exposes it.
            const Step mid = evaluate(0.5 * (s + sn), &cur);
            const double halves =
                phase_step(cur.sample.zeta, mid.sample.zeta) + phase_step(mid.sample.zeta, nxt.sample.zeta);
            reject = std::abs(halves - d) > 1e-6;
        }
        if (reject) {
            h *= 0.5;
            if (h < 1e-9) throw NumericalError("covering_trace: projected coordinate jumps along the segment");
            continue;
        }
        if (!cur.sample.excluded && !nxt.sample.excluded) turns += d / (2.0 * M_PI);
        nxt.sample.cumulativeTurns = turns;
        trace.samples.push_back(nxt.sample);
        if (trace.samples.size() > cfg.contour.maxSamples) {
            throw ContourError("covering_trace: sample cap reached");
        }
        cur = std::move(nxt);
        s = sn;
        if (std::abs(d) < 0.125 * cfg.contour.maxPhaseStep) h = std::min(hMax, 2.0 * h);
    }
    trace.turns = turns;
    if (trace.boundaryPointMargin < eps) {
        throw ConfigError("the invariant sphere meets U_+ inside an exclusion neighbourhood (margin " +
                          std::to_string(trace.boundaryPointMargin) + ")");
    }
    return trace;
}

RefinedEigenvalue refine_eigenvalue(const DeterminantFn& f, cd seed, double radius, const ContourSettings& settings) {
    const WindingReport w = winding_on_circle(f, seed, radius, settings);
    if (w.winding != 1) {
        throw PreconditionError("refine_eigenvalue: winding " + std::to_string(w.winding) + " around " + fmt(seed) +
                                " (expected 1)");
    }
    cd x0 = seed, x1 = seed + 0.1 * radius;
    DeterminantSample f0 = f(x0), f1 = f(x1);
    RefinedEigenvalue out;
    for (int it = 1; it <= 100; ++it) {
        out.iterations = it;
        if (f1.normalized <= 1e-10 || !std::isfinite(f1.logMagnitude)) break;
        // r = F(x1) / F(x0) in log-polar form; secant step x1 - (x1 - x0) r / (r - 1).
        const cd r = std::exp(f1.logMagnitude - f0.logMagnitude) * f1.phase / f0.phase;
        if (!std::isfinite(std::abs(r)) || r == cd(1.0, 0.0)) {
            throw NumericalError("refine_eigenvalue: secant step undefined");
        }
        const cd x2 = x1 - (x1 - x0) * r / (r - 1.0);
        if (std::abs(x2 - seed) > radius) throw NumericalError("refine_eigenvalue: iterate left the seed disk");
        const bool tiny = std::abs(x2 - x1) <= 1e-15 * (1.0 + std::abs(x1));
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f(x1);
        if (tiny) break;
    }
    out.lambda = x1;
    out.normalized = std::isfinite(f1.logMagnitude) ? f1.normalized : 0.0;
    if (out.normalized > 1e-10) {
        throw NumericalError("refine_eigenvalue: no convergence near " + fmt(seed) + " (|E| = " +
                             std::to_string(out.normalized) + ")");
    }
    try {
        out.multiplicity = winding_on_circle(f, out.lambda, 1e-4, settings).winding;
    } catch (const ContourError&) {
        out.multiplicity = -1;
    }
    return out;
}

namespace {

struct Square {
    double re0, re1, im0, im1;
};

void quadrisect(const DeterminantFn& f, const Square& sq, int winding, int depth, const ContourSettings& settings,
                int jobs, std::vector<RefinedEigenvalue>& out) {
    if (winding == 0) return;
    const cd mid(0.5 * (sq.re0 + sq.re1), 0.5 * (sq.im0 + sq.im1));
    const double half = 0.5 * (sq.re1 - sq.re0);
    // A single zero whose circumscribed disk holds nothing else can be refined.
    if (winding == 1) {
        try {
            out.push_back(refine_eigenvalue(f, mid, half * std::sqrt(2.0), settings));
            return;
        } catch (const PreconditionError&) {
        } catch (const NumericalError&) {
        }
    }
    if (depth >= 24 || half * std::sqrt(2.0) < 1e-4) {
        // Cluster below the multiplicity-disk scale: one point carrying the whole winding.
        out.push_back({mid, f(mid).normalized, 0, winding});
        return;
    }
    // Split point nudged off any zero lying on the cut lines.
    for (int attempt = 0; attempt < 4; ++attempt) {
        const double shift = attempt == 0 ? 0.0 : 0.01 * attempt * half;
        const double cr = mid.real() + shift, ci = mid.imag() + 0.7 * shift;
        const Square parts[4] = {{sq.re0, cr, sq.im0, ci}, {cr, sq.re1, sq.im0, ci},
                                 {cr, sq.re1, ci, sq.im1}, {sq.re0, cr, ci, sq.im1}};
        int w[4];
        try {
            for (int q = 0; q < 4; ++q)
                w[q] = winding_on_path(f, rectangle_path(parts[q].re0, parts[q].re1, parts[q].im0, parts[q].im1),
                                       settings, jobs)
                           .winding;
        } catch (const ContourError&) {
            continue;
        }
        for (int q = 0; q < 4; ++q) quadrisect(f, parts[q], w[q], depth + 1, settings, jobs, out);
        return;
    }
    throw ContourError("locate_zeros: every split of a square meets a zero");
}

} // namespace

std::vector<RefinedEigenvalue> locate_zeros(const DeterminantFn& f, cd center, double radius,
                                            const ContourSettings& settings, int jobs) {
    const Square sq{center.real() - radius, center.real() + radius, center.imag() - radius, center.imag() + radius};
    const int w = winding_on_path(f, rectangle_path(sq.re0, sq.re1, sq.im0, sq.im1), settings, jobs).winding;
    std::vector<RefinedEigenvalue> all;
    quadrisect(f, sq, w, 0, settings, jobs, all);
    std::vector<RefinedEigenvalue> inside;
    for (auto& z : all)
        if (std::abs(z.lambda - center) < radius) inside.push_back(z);
    std::sort(inside.begin(), inside.end(), [](const RefinedEigenvalue& x, const RefinedEigenvalue& y) {
        return x.lambda.real() != y.lambda.real() ? x.lambda.real() < y.lambda.real() : x.lambda.imag() < y.lambda.imag();
    });
    return inside;
}

} // namespace absspec
