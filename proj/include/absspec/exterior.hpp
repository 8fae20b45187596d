#pragma once

#include <array>
#include <optional>
#include <vector>

#include "absspec/config.hpp"
#include "absspec/linalg.hpp"

namespace absspec {

std::size_t binomial(int n, int k);

/// The k-subsets of {0, ..., N-1} in lexicographic order: the coordinate
/// order of the k-th exterior power of C^N.
class IndexBasis {
public:
    IndexBasis(int N, int k);

    int N() const { return N_; }
    int k() const { return k_; }
    std::size_t size() const { return subsets_.size(); }
    const std::vector<int>& subset(std::size_t j) const { return subsets_[j]; }
    const std::vector<std::vector<int>>& subsets() const { return subsets_; }
    /// Position of a sorted subset; throws ShapeError if it is not a k-subset.
    std::size_t index_of(const std::vector<int>& subset) const;

private:
    int N_;
    int k_;
    std::vector<std::vector<int>> subsets_;
};

/// Additive compound A^(k), built entry by entry.
ComplexMatrix compound_matrix(const ComplexMatrix& A, int k);

/// Brute-force sum_j I x .. x A (position j) x .. x I restricted to the
/// antisymmetric subspace. Only for small N (test oracle).
ComplexMatrix compound_matrix_tensor(const ComplexMatrix& A, int k);

/// All k x k minors of an N x k frame, lexicographic row subsets.
ComplexVector wedge_coordinates(const ComplexMatrix& frame);

/// Scale so the largest-modulus entry is 1 (first index wins near-ties).
/// Throws InputError on a zero vector.
ComplexVector normalize_projective(const ComplexVector& v);

/// A point of CP^(m-1) in the image of the Pluecker embedding.
struct PlueckerPoint {
    int N = 0;
    int k = 0;
    ComplexVector coords;  // normalized representative

    /// Normalizes `raw`; no decomposability check.
    static PlueckerPoint from_coordinates(const ComplexVector& raw, int N, int k);
    /// Largest quadratic Pluecker relation residual relative to max |p|^2.
    double relation_residual() const;
};

PlueckerPoint pluecker(const Subspace& U);

/// sin of the Fubini-Study angle between the lines spanned by a and b.
double chordal_distance(const ComplexVector& a, const ComplexVector& b);

/// Spectral data of the leading two eigenvalues of A^(k): eigenvectors
/// w1, w2 (for nu1, nu2), the spectral projector onto span{w1, w2} along the
/// complementary invariant subspace, and the coordinate functionals giving
/// Pr(P) = (Z1 : Z2).
class ProjectionFrame {
public:
    int N = 0;
    int k = 0;
    cd nu1, nu2;
    ComplexVector w1, w2;
    ComplexMatrix projector;        // m x m, range span{w1, w2}
    ComplexMatrix functionals;      // 2 x m, rows give Z1 and Z2
    double separation = 0.0;        // min Re(nu1, nu2) - max_{j >= 3} Re nu_j

    /// (Z1, Z2) with z = Z1 w1 + Z2 w2 + (component in W_s).
    Eigen::Vector2cd project(const ComplexVector& z) const { return functionals * z; }
    Eigen::Vector2cd project(const PlueckerPoint& p) const { return project(p.coords); }
    /// Z1 / Z2.
    cd zeta(const ComplexVector& z) const;
    /// Chordal distance of Pr(z) to P_n = [1:0] and P_s = [0:1] on CP^1.
    double distance_to_pn(const ComplexVector& z) const;
    double distance_to_ps(const ComplexVector& z) const;
    /// Rescale w1, w2 so that f1^H w1 = f2^H w2 = 1 (and the functionals
    /// inversely); makes the eigenvector choice analytic in lambda.
    void normalize_against(const ComplexVector& f1, const ComplexVector& f2);
};

/// `labels` (expected nu1, nu2) fixes which of the two leading compound
/// eigenvalues is called nu1. Without it nu1 is the sum of the k leading
/// eigenvalues of A and nu2 swaps the k-th for the (k+1)-th. Throws
/// OrderingError unless both lead the rest of the compound spectrum by more
/// than the ordering margin and nu1 != nu2.
ProjectionFrame projection_frame(const ComplexMatrix& A, int k, const Tolerances& tol = {},
                                 const std::optional<std::array<cd, 2>>& labels = std::nullopt);

} // namespace absspec
