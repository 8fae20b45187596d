#include "absspec/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <random>

#include <Eigen/Eigenvalues>

#include "absspec/counting.hpp"
#include "absspec/errors.hpp"
#include "absspec/exterior.hpp"
#include "absspec/flow.hpp"
#include "absspec/linalg.hpp"
#include "absspec/periodic.hpp"
#include "absspec/problems.hpp"
#include "absspec/spectra.hpp"

namespace absspec {

double SelftestCheck::margin() const {
    if (measured <= 0.0) return std::numeric_limits<double>::infinity();
    return std::log10(tolerance / measured);
}

namespace {

using Rng = std::mt19937_64;

ComplexMatrix random_matrix(Rng& rng, int rows, int cols) {
    std::normal_distribution<double> n(0.0, 1.0);
    ComplexMatrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = cd(n(rng), n(rng));
    return m;
}

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Largest distance in a greedy nearest-neighbour pairing of two multisets.
double multiset_distance(std::vector<cd> a, std::vector<cd> b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (const cd& x : a) {
        auto it = std::min_element(b.begin(), b.end(),
                                   [&x](const cd& p, const cd& q) { return std::abs(p - x) < std::abs(q - x); });
        worst = std::max(worst, std::abs(*it - x));
        b.erase(it);
    }
    return worst;
}

std::vector<cd> eigenvalues(const ComplexMatrix& A) {
    Eigen::ComplexEigenSolver<ComplexMatrix> es(A, false);
    return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

struct Suite {
    const SelftestOptions& opt;
    Rng rng;
    std::vector<SelftestCheck> out;

    bool injected(const std::string& name) const { return opt.inject == name || opt.inject == "all"; }

    // `body` returns the measured value; it may fill `detail`.
    void run(const std::string& name, double tolerance, const std::function<double(bool, std::string&)>& body) {
        SelftestCheck c;
        c.name = name;
        c.tolerance = tolerance;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.measured = body(injected(name), c.detail);
            c.pass = std::isfinite(c.measured) && c.measured <= tolerance;
        } catch (const std::exception& e) {
            c.measured = std::numeric_limits<double>::infinity();
            c.pass = false;
            c.detail = e.what();
        }
        c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(std::move(c));
    }
};

void linalg_exterior(Suite& s) {
    s.run("compound-eigen-sums", 1e-8, [&](bool bump, std::string& detail) {
        double worst = 0.0;
        for (int t = 0; t < 40; ++t) {
            const int N = uniform_int(s.rng, 2, 6);
            const int k = uniform_int(s.rng, 1, std::min(3, N - 1));
            const ComplexMatrix A = random_matrix(s.rng, N, N);
            ComplexMatrix C = compound_matrix(A, k);
            if (bump) C(0, 0) += 1e-3;
            const std::vector<cd> ev = eigenvalues(A);
            std::vector<cd> sums;
            const IndexBasis basis(N, k);
            for (const auto& sub : basis.subsets()) {
                cd acc = 0.0;
                for (int j : sub) acc += ev[static_cast<std::size_t>(j)];
                sums.push_back(acc);
            }
            worst = std::max(worst, multiset_distance(eigenvalues(C), sums) / (1.0 + A.norm()));
        }
        detail = "40 matrices, N <= 6, k <= 3";
        return worst;
    });

    s.run("compound-vs-tensor", 1e-12, [&](bool bump, std::string& detail) {
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            const int N = uniform_int(s.rng, 2, 4);
            const int k = uniform_int(s.rng, 1, N - 1);
            const ComplexMatrix A = random_matrix(s.rng, N, N);
            ComplexMatrix C = compound_matrix(A, k);
            if (bump) C(0, 0) += 1e-3;
            worst = std::max(worst, (C - compound_matrix_tensor(A, k)).norm() / (1.0 + A.norm()));
        }
        detail = "entrywise construction against the tensor-sum oracle";
        return worst;
    });

    s.run("pluecker-relations", 1e-12, [&](bool bump, std::string& detail) {
        double worst = 0.0;
        for (int t = 0; t < 40; ++t) {
            const int N = uniform_int(s.rng, 3, 6);
            const int k = uniform_int(s.rng, 2, std::min(3, N - 1));
            PlueckerPoint p = pluecker(Subspace::span(random_matrix(s.rng, N, k)));
            if (bump) {
                p.coords(static_cast<Eigen::Index>(p.coords.size()) - 1) += 1e-3;
                p = PlueckerPoint::from_coordinates(p.coords, N, k);
            }
            worst = std::max(worst, p.relation_residual());
        }
        detail = "quadratic relations on random k-planes";
        return worst;
    });

    s.run("eig-vs-companion", 1e-8, [&](bool bump, std::string& detail) {
        double worst = 0.0;
        std::uniform_real_distribution<double> u(-1.5, 1.5);
        for (int t = 0; t < 30; ++t) {
            const int N = uniform_int(s.rng, 2, 6);
            std::vector<cd> roots;
            for (int j = 0; j < N; ++j) roots.emplace_back(u(s.rng), u(s.rng));
            // monic coefficients of prod (z - r_j), highest degree first
            std::vector<cd> coef{1.0};
            for (const cd& r : roots) {
                std::vector<cd> next(coef.size() + 1, 0.0);
                for (std::size_t j = 0; j < coef.size(); ++j) {
                    next[j] += coef[j];
                    next[j + 1] -= r * coef[j];
                }
                coef = next;
            }
            ComplexMatrix Cmp = ComplexMatrix::Zero(N, N);
            for (int j = 0; j < N; ++j) Cmp(0, j) = -coef[static_cast<std::size_t>(j + 1)];
            for (int j = 1; j < N; ++j) Cmp(j, j - 1) = 1.0;
            if (bump) Cmp(0, N - 1) += 1e-3;
            const SortedSpectrum sp = eig_sorted(Cmp);
            worst = std::max(worst, multiset_distance(sp.values, roots));
            for (std::size_t j = 1; j < sp.size(); ++j)
                if (sp[j].real() > sp[j - 1].real() + 1e-12) worst = std::max(worst, 1.0);
        }
        detail = "roots of random monic polynomials, ordering checked";
        return worst;
    });

    s.run("invariant-subspace-residual", 1e-10, [&](bool bump, std::string& detail) {
        double worst = 0.0;
        for (int t = 0; t < 40; ++t) {
            const int N = uniform_int(s.rng, 2, 6);
            const int count = uniform_int(s.rng, 1, N - 1);
            const ComplexMatrix A = random_matrix(s.rng, N, N);
            ComplexMatrix F = ordered_invariant_subspace(A, static_cast<std::size_t>(count)).frame();
            if (bump) F(0, 0) += 1e-3;
            const ComplexMatrix H = F.adjoint() * A * F;
            worst = std::max(worst, (A * F - F * H).norm() / A.norm());
            const SortedSpectrum sp = eig_sorted(A);
            const std::vector<cd> lead(sp.values.begin(), sp.values.begin() + count);
            worst = std::max(worst, multiset_distance(eigenvalues(H), lead) / (1.0 + A.norm()));
        }
        detail = "|A F - F (F^H A F)| / |A| and spectrum of the restriction";
        return worst;
    });

    s.run("det-logscaled", 1e-11, [&](bool bump, std::string& detail) {
        double worst = 0.0;
        for (int t = 0; t < 30; ++t) {
            const int N = uniform_int(s.rng, 1, 8);
            ComplexMatrix M = random_matrix(s.rng, N, N);
            const cd ref = M.determinant();
            if (bump) M(0, 0) += 1e-3;
            const LogDet d = det_logscaled(M);
            worst = std::max(worst, std::abs(d.value() - ref) / std::abs(ref));
            // Far beyond double range: only the log form survives.
            const double scale = 1e150;
            const LogDet big = det_logscaled(M * scale);
            const double expect = d.logMagnitude + N * std::log(scale);
            worst = std::max(worst, std::abs(big.logMagnitude - expect) / (1.0 + std::abs(expect)));
            worst = std::max(worst, std::abs(big.phase - d.phase));
        }
        detail = "against Eigen's LU determinant and a 1e150 rescaling";
        return worst;
    });
}

void full_suite(Suite& s) {
    Config cfg;
    cfg.jobs = s.opt.jobs;

    s.run("flow-vs-expm", 1e-9, [&](bool bump, std::string& detail) {
        double worst = 0.0;
        for (int t = 0; t < 10; ++t) {
            const int N = uniform_int(s.rng, 2, 5);
            ComplexMatrix A = random_matrix(s.rng, N, N);
            const auto prof = constant_profile(A);
            const ComplexMatrix F = Propagator(*prof, 0.0).fundamental_matrix(-1.5, 1.5);
            if (bump) A(0, 0) += 1e-3;
            const ComplexMatrix E = expm(3.0 * A);
            worst = std::max(worst, (F - E).norm() / E.norm());
        }
        detail = "fundamental matrix over length 3";
        return worst;
    });

    s.run("commuting-square", 1e-6, [&](bool bump, std::string& detail) {
        double worst = 0.0;
        for (int t = 0; t < 50; ++t) {
            const int N = uniform_int(s.rng, 3, 5);
            const int k = uniform_int(s.rng, 1, N - 1);
            ComplexMatrix A = random_matrix(s.rng, N, N);
            const auto prof = constant_profile(A);
            const Propagator prop(*prof, 0.0);
            const Subspace U = Subspace::span(random_matrix(s.rng, N, k));
            const PlueckerPoint viaFrame = pluecker(propagate_subspace(prop, 0.0, 1.0, U).subspace);
            PlueckerPoint start = pluecker(U);
            if (bump) start = PlueckerPoint::from_coordinates(start.coords.array() + 1e-3, N, k);
            const PlueckerPoint viaCompound = propagate_pluecker(prop, 0.0, 1.0, start).point;
            worst = std::max(worst, chordal_distance(viaFrame.coords, viaCompound.coords));
        }
        detail = "50 constant systems, unit length";
        return worst;
    });

    s.run("doubled-determinant-identity", 1e-8, [&](bool bump, std::string& detail) {
        double worst = 0.0;
        std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
        for (int t = 0; t < 100; ++t) {
            const int N = uniform_int(s.rng, 1, 5);
            ComplexMatrix Phi = random_matrix(s.rng, N, N);
            const cd gamma = std::polar(1.0, angle(s.rng));
            const cd ref = (Phi - gamma * ComplexMatrix::Identity(N, N)).determinant();
            if (bump) Phi(0, 0) += 1e-3;
            ComplexMatrix M(2 * N, N);
            M << Phi / std::sqrt(2.0), ComplexMatrix::Identity(N, N) / std::sqrt(2.0);
            double logScale = 0.0;
            const ComplexMatrix Q = positive_qr(M, logScale);
            ComplexMatrix D(2 * N, 2 * N);
            D << Q, doubled_boundary(N, gamma).right().frame();
            const cd val = det_logscaled(D).value() * std::exp(logScale) * std::pow(2.0, N);
            worst = std::max(worst, std::abs(val - ref) / std::abs(ref));
        }
        detail = "det[frame{(Phi Y, Y)} | frame{(gamma Y, Y)}] 2^N e^scale = det(Phi - gamma I)";
        return worst;
    });

    const Problem ad2 = builtin("adv-diff,c=2");
    const GapFunction gPlus = GapFunction::for_problem(*ad2.profile, ad2.separated_boundary(), Side::Plus, cfg);

    s.run("gap-oracle", 1e-10, [&](bool bump, std::string& detail) {
        double worst = 0.0;
        std::uniform_real_distribution<double> re(-4.0, 1.0), im(-1.0, 1.0);
        for (int t = 0; t < 40; ++t) {
            const cd lam(re(s.rng), im(s.rng));
            double ref = std::abs(oracle::adv_diff_gap(2.0, lam));
            if (bump) ref += 1e-3;
            worst = std::max(worst, std::abs(gPlus(lam) - ref) / (1.0 + ref));
        }
        detail = "|Re sqrt(c^2 + 4 lambda)|, c = 2";
        return worst;
    });

    s.run("locus-adv-diff-c2", 1e-6, [&](bool bump, std::string& detail) {
        const SpectrumLocus loc = trace_locus(gPlus, ParameterDomain::rectangle(-4, 1, -1, 1, 64), s.opt.jobs);
        double worst = 0.0;
        for (const auto& pl : loc.polylines)
            for (const auto& v : pl.vertices) {
                const double imShift = bump ? 1e-3 : 0.0;
                worst = std::max({worst, std::abs(v.lambda.imag() + imShift), v.lambda.real() + 1.0});
            }
        detail = std::to_string(loc.vertex_count()) + " vertices";
        if (loc.vertex_count() < 30) worst = std::numeric_limits<double>::infinity();
        return worst;
    });

    s.run("gap-derivative", 1e-6, [&](bool bump, std::string& detail) {
        double worst = 0.0;
        for (double re : {-1.3, -1.7, -2.2, -2.9, -3.6}) {
            const NondegeneracyReport rep = certify_nondegenerate(gPlus, cd(re, 0.0));
            cd ref = oracle::adv_diff_gap_derivative(2.0, cd(re, 0.0));
            if (bump) ref *= 1.001;
            const double err = std::min(std::abs(rep.derivative - ref), std::abs(rep.derivative + ref));
            worst = std::max(worst, err / std::abs(ref));
            if (!rep.nondegenerate) worst = std::numeric_limits<double>::infinity();
        }
        detail = "2 / sqrt(c^2 + 4 lambda) at five locus points";
        return worst;
    });

    s.run("count-dirichlet", 0.5, [&](bool bump, std::string& detail) {
        const Problem ad0 = builtin("adv-diff,c=0");
        const double ell = 10.0 * M_PI;
        const WindingReport w = winding_count(*ad0.profile, ad0.separated_boundary(), ell, -1.0, 0.5, cfg);
        const int ref = oracle::adv_diff_dirichlet_count(0.0, ell, -1.0, 0.5) + (bump ? 1 : 0);
        detail = "winding " + std::to_string(w.winding) + ", oracle " + std::to_string(ref);
        return std::abs(w.winding - ref);
    });

    s.run("count-periodic", 0.5, [&](bool bump, std::string& detail) {
        const Problem pp = builtin("periodic-adv-diff,c=0");
        const double ell = 10.0 * M_PI;
        const PeriodicCount pc = periodic_count(double_system(pp.profile, 1.0), ell, -1.0, 0.45, cfg);
        const int ref = oracle::periodic_count(0.0, ell, 1.0, -1.0, 0.45) + (bump ? 1 : 0);
        detail = "doubled " + std::to_string(pc.count) + ", monodromy " + std::to_string(pc.monodromy.winding) +
                 ", oracle " + std::to_string(ref);
        return std::max(std::abs(pc.count - ref), std::abs(pc.monodromy.winding - ref));
    });
}

} // namespace

std::vector<SelftestCheck> run_selftest(const SelftestOptions& options) {
    Suite s{options, Rng(options.seed), {}};
    linalg_exterior(s);
    if (!options.quick) full_suite(s);
    return s.out;
}

void print_selftest_table(std::ostream& os, const std::vector<SelftestCheck>& checks) {
    std::size_t width = 10;
    for (const auto& c : checks) width = std::max(width, c.name.size());
    os << std::left << std::setw(static_cast<int>(width)) << "invariant" << "  status  " << std::setw(12)
       << "measured" << std::setw(12) << "tolerance" << std::setw(9) << "margin" << std::setw(9) << "seconds"
       << "detail\n";
    for (const auto& c : checks) {
        os << std::left << std::setw(static_cast<int>(width)) << c.name << "  " << (c.pass ? "PASS  " : "FAIL  ")
           << "  " << std::setw(12) << std::setprecision(3) << std::scientific << c.measured << std::setw(12)
           << c.tolerance << std::fixed << std::setprecision(2) << std::setw(9) << c.margin() << std::setw(9)
           << c.seconds << c.detail << '\n';
    }
    os << std::defaultfloat;
}

} // namespace absspec
