#include "absspec/exterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "absspec/errors.hpp"

namespace absspec {

std::size_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::size_t r = 1;
    for (int j = 1; j <= k; ++j) r = r * static_cast<std::size_t>(n - k + j) / static_cast<std::size_t>(j);
    return r;
}

IndexBasis::IndexBasis(int N, int k) : N_(N), k_(k) {
    if (N < 1 || k < 1 || k > N) throw ShapeError("IndexBasis: need 1 <= k <= N");
    std::vector<int> s(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) s[static_cast<std::size_t>(j)] = j;
    for (;;) {
        subsets_.push_back(s);
        int p = k - 1;
        while (p >= 0 && s[static_cast<std::size_t>(p)] == N - k + p) --p;
        if (p < 0) break;
        ++s[static_cast<std::size_t>(p)];
        for (int q = p + 1; q < k; ++q) s[static_cast<std::size_t>(q)] = s[static_cast<std::size_t>(q - 1)] + 1;
    }
}

std::size_t IndexBasis::index_of(const std::vector<int>& subset) const {
    auto it = std::lower_bound(subsets_.begin(), subsets_.end(), subset);
    if (it == subsets_.end() || *it != subset) throw ShapeError("IndexBasis: not a sorted k-subset");
    return static_cast<std::size_t>(it - subsets_.begin());
}

ComplexMatrix compound_matrix(const ComplexMatrix& A, int k) {
    require_square(A, "compound_matrix");
    const int N = static_cast<int>(A.rows());
    const IndexBasis basis(N, k);
    const auto m = static_cast<Eigen::Index>(basis.size());
    ComplexMatrix C = ComplexMatrix::Zero(m, m);
    std::vector<int> I;
    for (Eigen::Index col = 0; col < m; ++col) {
        const std::vector<int>& J = basis.subset(static_cast<std::size_t>(col));
        cd diag = 0.0;
        for (int j : J) diag += A(j, j);
        C(col, col) = diag;
        // Replace J[p] by an index i outside J; the new subset sorts i into
        // position q, giving the sign (-1)^(p+q).
        for (int p = 0; p < k; ++p) {
            const int j = J[static_cast<std::size_t>(p)];
            for (int i = 0; i < N; ++i) {
                if (std::binary_search(J.begin(), J.end(), i)) continue;
                I = J;
                I.erase(I.begin() + p);
                auto pos = std::lower_bound(I.begin(), I.end(), i);
                const int q = static_cast<int>(pos - I.begin());
                I.insert(pos, i);
                const double sign = ((p + q) % 2 == 0) ? 1.0 : -1.0;
                C(static_cast<Eigen::Index>(basis.index_of(I)), col) += sign * A(i, j);
            }
        }
    }
    return C;
}

ComplexMatrix compound_matrix_tensor(const ComplexMatrix& A, int k) {
    require_square(A, "compound_matrix_tensor");
    const int N = static_cast<int>(A.rows());
    const IndexBasis basis(N, k);
    Eigen::Index dim = 1;
    for (int j = 0; j < k; ++j) dim *= N;
    if (dim > 4096) throw ShapeError("compound_matrix_tensor: tensor space too large for the oracle");

    // Sum of A acting on each tensor factor.
    ComplexMatrix big = ComplexMatrix::Zero(dim, dim);
    for (int f = 0; f < k; ++f) {
        ComplexMatrix term = ComplexMatrix::Identity(1, 1);
        for (int g = 0; g < k; ++g) {
            const ComplexMatrix factor = g == f ? A : ComplexMatrix::Identity(N, N);
            ComplexMatrix next(term.rows() * N, term.cols() * N);
            for (Eigen::Index r = 0; r < term.rows(); ++r)
                for (Eigen::Index c = 0; c < term.cols(); ++c)
                    next.block(r * N, c * N, N, N) = term(r, c) * factor;
            term = next;
        }
        big += term;
    }

    // Antisymmetrized basis vectors e_{i1} ^ ... ^ e_{ik}.
    const auto m = static_cast<Eigen::Index>(basis.size());
    ComplexMatrix W = ComplexMatrix::Zero(dim, m);
    for (Eigen::Index c = 0; c < m; ++c) {
        std::vector<int> perm(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j) perm[static_cast<std::size_t>(j)] = j;
        do {
            int inversions = 0;
            for (int a = 0; a < k; ++a)
                for (int b = a + 1; b < k; ++b)
                    if (perm[static_cast<std::size_t>(a)] > perm[static_cast<std::size_t>(b)]) ++inversions;
            Eigen::Index flat = 0;
            for (int j = 0; j < k; ++j)
                flat = flat * N + basis.subset(static_cast<std::size_t>(c))[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
            W(flat, c) += inversions % 2 == 0 ? 1.0 : -1.0;
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    const ComplexMatrix gram = W.adjoint() * W;
    return gram.inverse() * (W.adjoint() * big * W);
}

ComplexVector wedge_coordinates(const ComplexMatrix& frame) {
    const int N = static_cast<int>(frame.rows()), k = static_cast<int>(frame.cols());
    const IndexBasis basis(N, k);
    ComplexVector out(static_cast<Eigen::Index>(basis.size()));
    ComplexMatrix sub(k, k);
    for (std::size_t s = 0; s < basis.size(); ++s) {
        const auto& rows = basis.subset(s);
        for (int r = 0; r < k; ++r) sub.row(r) = frame.row(rows[static_cast<std::size_t>(r)]);
        out(static_cast<Eigen::Index>(s)) = k == 1 ? sub(0, 0) : sub.partialPivLu().determinant();
    }
    return out;
}

ComplexVector normalize_projective(const ComplexVector& v) {
    if (!v.allFinite()) throw InputError("projective point has non-finite coordinates");
    double best = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j) best = std::max(best, std::abs(v(j)));
    if (best == 0.0) throw InputError("projective point has all coordinates zero");
    Eigen::Index pick = 0;
    for (Eigen::Index j = 0; j < v.size(); ++j)
        if (std::abs(v(j)) >= (1.0 - 1e-10) * best) {
            pick = j;
            break;
        }
    return v / v(pick);
}

PlueckerPoint PlueckerPoint::from_coordinates(const ComplexVector& raw, int N, int k) {
    if (static_cast<std::size_t>(raw.size()) != binomial(N, k)) {
        throw ShapeError("Pluecker coordinates: expected C(N, k) entries");
    }
    return {N, k, normalize_projective(raw)};
}

double PlueckerPoint::relation_residual() const {
    const IndexBasis basis(N, k);
    if (k == 1 || k == N) return 0.0;
    auto coord = [&](std::vector<int> s) -> cd {
        // Signed coordinate of an unsorted index list; zero on repeats.
        int sign = 1;
        for (std::size_t a = 0; a < s.size(); ++a)
            for (std::size_t b = a + 1; b < s.size(); ++b) {
                if (s[a] == s[b]) return 0.0;
                if (s[a] > s[b]) sign = -sign;
            }
        std::sort(s.begin(), s.end());
        return static_cast<double>(sign) * coords(static_cast<Eigen::Index>(basis.index_of(s)));
    };
    const IndexBasis lower(N, k - 1), upper(N, k + 1);
    double worst = 0.0;
    for (const auto& S : lower.subsets())
        for (const auto& T : upper.subsets()) {
            cd sum = 0.0;
            for (std::size_t l = 0; l < T.size(); ++l) {
                std::vector<int> a = S;
                a.push_back(T[l]);
                std::vector<int> b = T;
                b.erase(b.begin() + static_cast<long>(l));
                sum += (l % 2 == 0 ? 1.0 : -1.0) * coord(a) * coord(b);
            }
            worst = std::max(worst, std::abs(sum));
        }
    const double scale = coords.cwiseAbs().maxCoeff();
    return worst / (scale * scale);
}

PlueckerPoint pluecker(const Subspace& U) {
    const int N = static_cast<int>(U.ambient_dim()), k = static_cast<int>(U.dim());
    return PlueckerPoint::from_coordinates(wedge_coordinates(U.frame()), N, k);
}

double chordal_distance(const ComplexVector& a, const ComplexVector& b) {
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw InputError("chordal_distance: zero vector");
    const double c = std::min(1.0, std::abs(a.dot(b)) / (na * nb));
    return std::sqrt(std::max(0.0, 1.0 - c * c));
}

cd ProjectionFrame::zeta(const ComplexVector& z) const {
    const Eigen::Vector2cd p = project(z);
    return p(0) / p(1);
}

double ProjectionFrame::distance_to_pn(const ComplexVector& z) const {
    const Eigen::Vector2cd p = project(z);
    return std::abs(p(1)) / p.norm();
}

double ProjectionFrame::distance_to_ps(const ComplexVector& z) const {
    const Eigen::Vector2cd p = project(z);
    return std::abs(p(0)) / p.norm();
}

void ProjectionFrame::normalize_against(const ComplexVector& f1, const ComplexVector& f2) {
    const cd s1 = f1.dot(w1), s2 = f2.dot(w2);
    if (std::abs(s1) == 0.0 || std::abs(s2) == 0.0) {
        throw NumericalError("ProjectionFrame: reference vector orthogonal to the eigenvector");
    }
    w1 /= s1;
    w2 /= s2;
    functionals.row(0) *= s1;
    functionals.row(1) *= s2;
}

ProjectionFrame projection_frame(const ComplexMatrix& A, int k, const Tolerances& tol,
                                 const std::optional<std::array<cd, 2>>& labels) {
    require_square(A, "projection_frame");
    const int N = static_cast<int>(A.rows());
    const ComplexMatrix C = compound_matrix(A, k);
    const Eigen::Index m = C.rows();
    if (m < 2) throw OrderingError("projection_frame: compound dimension below 2");
    const double scale = 1.0 + C.norm();

    OrderedSchur os = [&] {
        try {
            return ordered_schur(C, 2, tol);
        } catch (const ClusterSplitError&) {
            throw OrderingError("projection_frame: second and third compound eigenvalues coincide");
        }
    }();
    const ComplexMatrix& T = os.form.T;
    const ComplexMatrix& Q = os.form.Q;
    const cd a = T(0, 0), b = T(1, 1);
    if (std::abs(a - b) <= tol.clusterRel * scale) {
        throw OrderingError("projection_frame: leading compound eigenvalues coincide");
    }
    double restMax = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 2; j < m; ++j) restMax = std::max(restMax, T(j, j).real());
    const double separation = m > 2 ? std::min(a.real(), b.real()) - restMax : std::numeric_limits<double>::infinity();
    if (!(separation > tol.orderingMargin * scale)) {
        throw OrderingError("projection_frame: leading compound pair does not separate from the rest (margin " +
                            std::to_string(separation) + ")");
    }

    // Block-diagonalize: T11 X - X T22 = -T12 by forward substitution over
    // the columns of the upper triangular T22.
    const Eigen::Index r = m - 2;
    ComplexMatrix X = ComplexMatrix::Zero(2, r);
    const Eigen::Matrix2cd T11 = T.topLeftCorner(2, 2);
    for (Eigen::Index j = 0; j < r; ++j) {
        Eigen::Vector2cd rhs = -T.block(0, 2 + j, 2, 1);
        for (Eigen::Index i = 0; i < j; ++i) rhs += X.col(i) * T(2 + i, 2 + j);
        Eigen::Matrix2cd M = T11 - T(2 + j, 2 + j) * Eigen::Matrix2cd::Identity();
        X.col(j) = M.triangularView<Eigen::Upper>().solve(rhs);
    }
    // Coordinates in the Q1 basis of the leading block: y = [I, -X] Q^H z.
    ComplexMatrix left(2, m);
    left << Eigen::Matrix2cd::Identity(), -X;
    const ComplexMatrix Y = left * Q.adjoint();
    // Eigenvectors of T11: e1 for a, (beta, 1) for b.
    const cd beta = T(0, 1) / (b - a);
    ComplexVector va = Q.col(0);
    ComplexVector vb = Q.col(0) * beta + Q.col(1);
    ComplexMatrix fa(1, m), fb(1, m);
    fa = Y.row(0) - beta * Y.row(1);
    fb = Y.row(1);

    // Default labels: nu1 = mu^1 + .. + mu^k, nu2 = mu^1 + .. + mu^(k-1) + mu^(k+1).
    std::array<cd, 2> want;
    if (labels) {
        want = *labels;
    } else {
        const SortedSpectrum mu = eig_sorted(A, tol);
        cd base = 0.0;
        for (int j = 0; j < k - 1; ++j) base += mu[static_cast<std::size_t>(j)];
        want[0] = base + mu[static_cast<std::size_t>(k - 1)];
        want[1] = k < N ? base + mu[static_cast<std::size_t>(k)] : want[0];
    }
    const bool swap = std::abs(a - want[0]) + std::abs(b - want[1]) > std::abs(a - want[1]) + std::abs(b - want[0]);

    ProjectionFrame pf;
    pf.N = N;
    pf.k = k;
    pf.separation = separation;
    pf.nu1 = swap ? b : a;
    pf.nu2 = swap ? a : b;
    const double na = va.norm(), nb = vb.norm();
    va /= na;
    vb /= nb;
    fa *= na;
    fb *= nb;
    pf.w1 = swap ? vb : va;
    pf.w2 = swap ? va : vb;
    pf.functionals.resize(2, m);
    pf.functionals.row(0) = swap ? fb : fa;
    pf.functionals.row(1) = swap ? fa : fb;
    pf.projector = pf.w1 * pf.functionals.row(0) + pf.w2 * pf.functionals.row(1);
    return pf;
}

} // namespace absspec
