#include "absspec/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "absspec/errors.hpp"

namespace absspec {

void require_finite(const ComplexMatrix& m, const char* what) {
    if (!m.allFinite()) {
        throw InputError(std::string(what) + ": matrix has non-finite entries");
    }
}

void require_square(const ComplexMatrix& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw ShapeError(std::string(what) + ": expected a non-empty square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

SortedSpectrum sort_spectrum(const std::vector<cd>& raw, double scale, const Tolerances& tol) {
    const std::size_t n = raw.size();
    const double clusterTol = tol.clusterRel * (1.0 + scale);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return raw[a].real() > raw[b].real(); });

    // Real parts within the cluster tolerance count as tied; ties go to
    // descending imaginary part, then to Schur order.
    std::size_t groupStart = 0;
    for (std::size_t j = 1; j <= n; ++j) {
        const bool split = j == n || raw[order[j - 1]].real() - raw[order[j]].real() > clusterTol;
        if (!split) continue;
        std::stable_sort(order.begin() + groupStart, order.begin() + j, [&](int a, int b) {
            if (raw[a].imag() != raw[b].imag()) return raw[a].imag() > raw[b].imag();
            return a < b;
        });
        groupStart = j;
    }

    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            if (std::abs(raw[a] - raw[b]) <= clusterTol) parent[find(int(a))] = find(int(b));

    SortedSpectrum out;
    out.scale = scale;
    out.values.reserve(n);
    out.clusterIds.assign(n, -1);
    out.schurIndex = order;
    std::vector<int> relabel(n, -1);
    int next = 0;
    for (std::size_t j = 0; j < n; ++j) {
        out.values.push_back(raw[order[j]]);
        const int root = find(order[j]);
        if (relabel[root] < 0) relabel[root] = next++;
        out.clusterIds[j] = relabel[root];
    }
    return out;
}

Subspace Subspace::from_orthonormal(ComplexMatrix frame, double tol) {
    if (frame.cols() < 1 || frame.cols() > frame.rows()) {
        throw ShapeError("Subspace: frame must be N x k with 1 <= k <= N");
    }
    require_finite(frame, "Subspace");
    const ComplexMatrix gram = frame.adjoint() * frame;
    const double err = (gram - ComplexMatrix::Identity(frame.cols(), frame.cols())).cwiseAbs().maxCoeff();
    if (err > tol) {
        throw InputError("Subspace: frame columns are not orthonormal (error " + std::to_string(err) + ")");
    }
    return Subspace(std::move(frame));
}

Subspace Subspace::span(const ComplexMatrix& columns, double rankRel) {
    if (columns.cols() < 1 || columns.cols() > columns.rows()) {
        throw ShapeError("Subspace::span: need 1 <= k <= N columns");
    }
    require_finite(columns, "Subspace::span");
    Eigen::ColPivHouseholderQR<ComplexMatrix> qr(columns);
    qr.setThreshold(rankRel);
    if (qr.rank() < columns.cols()) {
        throw InputError("Subspace::span: columns are rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                         std::to_string(columns.cols()) + ")");
    }
    ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(columns.rows(), columns.cols());
    return Subspace(std::move(q));
}

SchurForm schur(const ComplexMatrix& A) {
    require_square(A, "schur");
    require_finite(A, "schur");
    Eigen::ComplexSchur<ComplexMatrix> cs(A, true);
    if (cs.info() != Eigen::Success) {
        throw NumericalError("schur: QR iteration failed to converge");
    }
    return {cs.matrixU(), cs.matrixT()};
}

void swap_schur_diagonal(SchurForm& form, Eigen::Index k) {
    ComplexMatrix& T = form.T;
    const cd t11 = T(k, k), t12 = T(k, k + 1), t22 = T(k + 1, k + 1);
    Eigen::Vector2cd v(t12, t22 - t11);
    const double nv = v.norm();
    if (nv == 0.0) return;  // identical diagonal entries, nothing to exchange
    v /= nv;
    Eigen::Matrix2cd G;
    G << v(0), -std::conj(v(1)), v(1), std::conj(v(0));
    T.middleRows(k, 2) = G.adjoint() * T.middleRows(k, 2);
    T.middleCols(k, 2) = T.middleCols(k, 2) * G;
    form.Q.middleCols(k, 2) = form.Q.middleCols(k, 2) * G;
    T(k + 1, k) = 0.0;
    T(k, k) = t22;
    T(k + 1, k + 1) = t11;
}

void reorder_schur(SchurForm& form, const std::vector<int>& lead) {
    const auto n = form.T.rows();
    std::vector<int> label(n);
    std::iota(label.begin(), label.end(), 0);
    for (std::size_t p = 0; p < lead.size(); ++p) {
        auto it = std::find(label.begin(), label.end(), lead[p]);
        if (it == label.end()) throw ShapeError("reorder_schur: invalid diagonal index");
        for (auto q = std::distance(label.begin(), it); q > static_cast<Eigen::Index>(p); --q) {
            swap_schur_diagonal(form, q - 1);
            std::swap(label[q - 1], label[q]);
        }
    }
}

static SortedSpectrum spectrum_of(const SchurForm& form, double scale, const ExponentMap* map,
                                  const Tolerances& tol) {
    std::vector<cd> raw(form.T.rows());
    for (Eigen::Index j = 0; j < form.T.rows(); ++j) raw[j] = map ? (*map)(form.T(j, j)) : form.T(j, j);
    if (map) {
        scale = 0.0;
        for (const cd& v : raw) scale = std::max(scale, std::abs(v));
    }
    return sort_spectrum(raw, scale, tol);
}

SortedSpectrum eig_sorted(const ComplexMatrix& A, const Tolerances& tol) {
    const SchurForm form = schur(A);
    return spectrum_of(form, A.norm(), nullptr, tol);
}

SortedSpectrum eig_sorted(const ComplexMatrix& A, const ExponentMap& map, const Tolerances& tol) {
    const SchurForm form = schur(A);
    return spectrum_of(form, A.norm(), &map, tol);
}

static OrderedSchur ordered_schur_impl(const ComplexMatrix& A, std::size_t count, const ExponentMap* map,
                                       const Tolerances& tol) {
    SchurForm form = schur(A);
    SortedSpectrum spec = spectrum_of(form, A.norm(), map, tol);
    if (count < 1 || count > spec.size()) {
        throw ShapeError("ordered_schur: count must lie in [1, dim]");
    }
    if (count < spec.size() && spec.coincident(count - 1)) {
        throw ClusterSplitError("ordered_invariant_subspace: eigenvalues " + std::to_string(count) + " and " +
                                std::to_string(count + 1) + " coincide; refusing to split the cluster");
    }
    std::vector<int> lead(spec.schurIndex.begin(), spec.schurIndex.begin() + static_cast<long>(count));
    reorder_schur(form, lead);
    return {std::move(form), std::move(spec)};
}

OrderedSchur ordered_schur(const ComplexMatrix& A, std::size_t count, const Tolerances& tol) {
    return ordered_schur_impl(A, count, nullptr, tol);
}

OrderedSchur ordered_schur(const ComplexMatrix& A, std::size_t count, const ExponentMap& map,
                           const Tolerances& tol) {
    return ordered_schur_impl(A, count, &map, tol);
}

Subspace ordered_invariant_subspace(const ComplexMatrix& A, std::size_t count, const Tolerances& tol) {
    OrderedSchur os = ordered_schur(A, count, tol);
    return Subspace::from_orthonormal(os.form.Q.leftCols(static_cast<Eigen::Index>(count)), 1e-9);
}

Subspace ordered_invariant_subspace(const ComplexMatrix& A, std::size_t count, const ExponentMap& map,
                                    const Tolerances& tol) {
    OrderedSchur os = ordered_schur(A, count, map, tol);
    return Subspace::from_orthonormal(os.form.Q.leftCols(static_cast<Eigen::Index>(count)), 1e-9);
}

LogDet det_logscaled(const ComplexMatrix& M) {
    require_square(M, "det_logscaled");
    Eigen::FullPivLU<ComplexMatrix> lu(M);
    LogDet out;
    const ComplexMatrix& LU = lu.matrixLU();
    cd phase = double(lu.permutationP().determinant() * lu.permutationQ().determinant());
    double logMag = 0.0;
    for (Eigen::Index j = 0; j < LU.rows(); ++j) {
        const cd d = LU(j, j);
        const double a = std::abs(d);
        if (a == 0.0) {
            return {-std::numeric_limits<double>::infinity(), cd(1.0, 0.0)};
        }
        logMag += std::log(a);
        phase *= d / a;
    }
    out.logMagnitude = logMag;
    out.phase = phase / std::abs(phase);
    return out;
}

Eigen::VectorXd principal_cosines(const Subspace& U, const Subspace& V) {
    if (U.ambient_dim() != V.ambient_dim()) {
        throw ShapeError("principal angles: ambient dimensions differ");
    }
    const ComplexMatrix C = U.frame().adjoint() * V.frame();
    Eigen::JacobiSVD<ComplexMatrix> svd(C);
    return svd.singularValues();
}

int intersection_dimension(const Subspace& U, const Subspace& V, double tol) {
    const Eigen::VectorXd s = principal_cosines(U, V);
    int count = 0;
    for (Eigen::Index j = 0; j < s.size(); ++j)
        if (s(j) >= 1.0 - tol) ++count;
    return count;
}

double subspace_distance(const Subspace& U, const Subspace& V) {
    if (U.ambient_dim() != V.ambient_dim() || U.dim() != V.dim()) {
        throw ShapeError("subspace_distance: subspaces must have equal dimensions");
    }
    const ComplexMatrix residual = V.frame() - U.frame() * (U.frame().adjoint() * V.frame());
    Eigen::JacobiSVD<ComplexMatrix> svd(residual);
    return svd.singularValues()(0);
}

ComplexMatrix positive_qr(const ComplexMatrix& M, double& logScale) {
    Eigen::HouseholderQR<ComplexMatrix> qr(M);
    ComplexMatrix Q = qr.householderQ() * ComplexMatrix::Identity(M.rows(), M.cols());
    const ComplexMatrix& R = qr.matrixQR();
    logScale = 0.0;
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
        const cd d = R(j, j);
        const double a = std::abs(d);
        if (!(a > 0.0) || !std::isfinite(a)) {
            throw NumericalError("positive_qr: frame lost rank");
        }
        Q.col(j) *= d / a;
        logScale += std::log(a);
    }
    return Q;
}

ComplexMatrix expm(const ComplexMatrix& A) {
    require_square(A, "expm");
    return A.exp();
}

namespace {

struct MatchOutcome {
    std::vector<cd> values;
    bool ok = true;
};

// Nearest-neighbour assignment; `ok` is false when the assignment is not
// clearly separated from the alternatives.
MatchOutcome match_spectra(const std::vector<cd>& from, const std::vector<cd>& to) {
    const std::size_t n = from.size();
    MatchOutcome out;
    out.values.resize(n);
    double magnitude = 0.0;
    for (const cd& v : from) magnitude = std::max(magnitude, std::abs(v));
    for (const cd& v : to) magnitude = std::max(magnitude, std::abs(v));
    const double same = 1e-9 * (1.0 + magnitude);

    struct Pair {
        double d;
        std::size_t i, j;
    };
    std::vector<Pair> pairs;
    pairs.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) pairs.push_back({std::abs(from[i] - to[j]), i, j});
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.d != b.d) return a.d < b.d;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    std::vector<int> assigned(n, -1);
    std::vector<char> taken(n, 0);
    std::vector<double> dist(n, 0.0);
    for (const Pair& p : pairs) {
        if (assigned[p.i] >= 0 || taken[p.j]) continue;
        assigned[p.i] = static_cast<int>(p.j);
        taken[p.j] = 1;
        dist[p.i] = p.d;
    }
    auto separation = [&](const std::vector<cd>& set, const cd& v) {
        double s = std::numeric_limits<double>::infinity();
        for (const cd& w : set) {
            const double d = std::abs(w - v);
            if (d > same) s = std::min(s, d);
        }
        return s;
    };
    for (std::size_t i = 0; i < n; ++i) {
        const cd target = to[static_cast<std::size_t>(assigned[i])];
        out.values[i] = target;
        const double sep = std::min(separation(from, from[i]), separation(to, target));
        if (dist[i] > same && !(dist[i] < 0.3 * sep)) out.ok = false;
    }
    return out;
}

TrackResult track_recursive(const SpectrumFamily& family, cd a, cd b, const std::vector<cd>& start,
                            int depth) {
    const std::vector<cd> atB = family(b);
    if (atB.size() != start.size()) throw ShapeError("track_eigenvalues: spectrum size changed along path");
    MatchOutcome m = match_spectra(start, atB);
    if (m.ok) return {std::move(m.values), false};
    if (depth <= 0) return {std::move(m.values), true};
    const cd mid = 0.5 * (a + b);
    TrackResult first = track_recursive(family, a, mid, start, depth - 1);
    TrackResult second = track_recursive(family, mid, b, first.values, depth - 1);
    second.ambiguous = second.ambiguous || first.ambiguous;
    return second;
}

} // namespace

TrackResult track_values(const SpectrumFamily& family, cd from, cd to, const std::vector<cd>& start, int maxDepth) {
    if (from == to) return {start, false};
    return track_recursive(family, from, to, start, maxDepth);
}

TrackResult track_eigenvalues(const MatrixFamily& family, cd from, cd to, const std::vector<cd>& start,
                              int maxDepth) {
    SpectrumFamily values = [&](cd lambda) {
        const SchurForm f = schur(family(lambda));
        std::vector<cd> v(f.T.rows());
        for (Eigen::Index j = 0; j < f.T.rows(); ++j) v[j] = f.T(j, j);
        return v;
    };
    return track_values(values, from, to, start, maxDepth);
}

} // namespace absspec
