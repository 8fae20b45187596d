#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "absspec/config.hpp"

namespace absspec {

using cd = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Throws InputError if any entry is NaN or infinite.
void require_finite(const ComplexMatrix& m, const char* what);
void require_square(const ComplexMatrix& m, const char* what);

/// Eigenvalues ordered by descending real part. Real-part ties (within the
/// cluster tolerance) are broken by descending imaginary part, then by the
/// position on the Schur diagonal.
struct SortedSpectrum {
    std::vector<cd> values;
    std::vector<int> clusterIds;  // equal ids mark numerically coincident values
    std::vector<int> schurIndex;  // diagonal position in the unordered Schur form
    double scale = 0.0;           // Frobenius norm of the source matrix

    std::size_t size() const { return values.size(); }
    const cd& operator[](std::size_t j) const { return values[j]; }
    /// True when sorted entries j and j + 1 belong to one cluster.
    bool coincident(std::size_t j) const { return clusterIds[j] == clusterIds[j + 1]; }
};

/// Orders raw eigenvalues with the SortedSpectrum key. `scale` sets the
/// cluster tolerance clusterRel * (1 + scale).
SortedSpectrum sort_spectrum(const std::vector<cd>& raw, double scale, const Tolerances& tol = {});

/// A k-dimensional subspace of C^N held as an orthonormal N x k frame.
class Subspace {
public:
    /// Adopts `frame` as is; throws InputError unless F^H F = I within tolerance.
    static Subspace from_orthonormal(ComplexMatrix frame, double tol = 1e-10);
    /// Orthonormal basis of the column span (pivoted Householder QR). Throws
    /// InputError if the columns are numerically rank deficient.
    static Subspace span(const ComplexMatrix& columns, double rankRel = 1e-10);

    Eigen::Index ambient_dim() const { return frame_.rows(); }
    Eigen::Index dim() const { return frame_.cols(); }
    const ComplexMatrix& frame() const { return frame_; }
    /// Orthogonal projector F F^H.
    ComplexMatrix projector() const { return frame_ * frame_.adjoint(); }

private:
    explicit Subspace(ComplexMatrix frame) : frame_(std::move(frame)) {}
    ComplexMatrix frame_;
};

/// Unitary triangularization A = Q T Q^H.
struct SchurForm {
    ComplexMatrix Q;
    ComplexMatrix T;
};

SchurForm schur(const ComplexMatrix& A);

/// Swap diagonal entries (k, k) and (k + 1, k + 1) of the triangular factor
/// by a unitary rotation, keeping A = Q T Q^H.
void swap_schur_diagonal(SchurForm& form, Eigen::Index k);

/// Reorders the Schur form so that the diagonal positions listed in `lead`
/// (indices into the current diagonal) occupy the first lead.size()
/// positions, in the given order.
void reorder_schur(SchurForm& form, const std::vector<int>& lead);

SortedSpectrum eig_sorted(const ComplexMatrix& A, const Tolerances& tol = {});

/// Maps a raw matrix eigenvalue to the exponent used for ordering, e.g.
/// rho -> log(rho) / period for Floquet multipliers of a monodromy matrix.
using ExponentMap = std::function<cd(cd)>;

/// eig_sorted on mapped eigenvalues; `values` holds the mapped exponents.
SortedSpectrum eig_sorted(const ComplexMatrix& A, const ExponentMap& map, const Tolerances& tol = {});

/// Schur form reordered so the diagonal follows the sorted spectrum for the
/// first `count` positions. Also returns the spectrum used.
struct OrderedSchur {
    SchurForm form;
    SortedSpectrum spectrum;
};
OrderedSchur ordered_schur(const ComplexMatrix& A, std::size_t count, const Tolerances& tol = {});
OrderedSchur ordered_schur(const ComplexMatrix& A, std::size_t count, const ExponentMap& map,
                           const Tolerances& tol = {});

/// Invariant subspace of the `count` leading eigenvalues. Throws
/// ClusterSplitError when eigenvalues count and count + 1 coincide.
Subspace ordered_invariant_subspace(const ComplexMatrix& A, std::size_t count, const Tolerances& tol = {});
Subspace ordered_invariant_subspace(const ComplexMatrix& A, std::size_t count, const ExponentMap& map,
                                    const Tolerances& tol = {});

/// det M = exp(logMagnitude) * phase. Exactly singular input yields
/// logMagnitude = -inf and phase = 1.
struct LogDet {
    double logMagnitude = 0.0;
    cd phase{1.0, 0.0};

    cd value() const { return std::exp(logMagnitude) * phase; }
};
LogDet det_logscaled(const ComplexMatrix& M);

/// Number of principal angles between U and V that vanish within `tol`
/// (singular values of U^H V at least 1 - tol).
int intersection_dimension(const Subspace& U, const Subspace& V, double tol = 1e-8);

/// Cosines of the principal angles, descending.
Eigen::VectorXd principal_cosines(const Subspace& U, const Subspace& V);

/// sin of the largest principal angle between equal-dimension subspaces.
double subspace_distance(const Subspace& U, const Subspace& V);

/// Householder QR with the R diagonal made real and positive: M = Q R.
/// Returns Q (thin) and writes log(prod R_jj) to `logScale`.
ComplexMatrix positive_qr(const ComplexMatrix& M, double& logScale);

/// Matrix exponential by Pade scaling and squaring.
ComplexMatrix expm(const ComplexMatrix& A);

/// Follow each eigenvalue of a lambda-dependent matrix family along the
/// straight path from `from` to `to`, starting from `start` (the spectrum at
/// `from`). Entry j of the result continues start[j]. Subdivides the path
/// until the nearest-neighbour matching is unambiguous.
struct TrackResult {
    std::vector<cd> values;
    bool ambiguous = false;  // matching was forced at the finest subdivision
};
using MatrixFamily = std::function<ComplexMatrix(cd)>;
TrackResult track_eigenvalues(const MatrixFamily& family, cd from, cd to, const std::vector<cd>& start,
                              int maxDepth = 24);

/// Same, with the eigenvalue solver supplied directly (used for spectra that
/// are not plain matrix eigenvalues, e.g. Floquet exponents).
using SpectrumFamily = std::function<std::vector<cd>(cd)>;
TrackResult track_values(const SpectrumFamily& family, cd from, cd to, const std::vector<cd>& start,
                         int maxDepth = 24);

} // namespace absspec
