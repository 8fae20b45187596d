#pragma once

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "absspec/counting.hpp"

namespace absspec {

/// The base system together with 2N trivial equations W' = 0, so that the
/// twisted condition Y(ell) = gamma Y(-ell) becomes a pair of boundary
/// subspaces U_- = {(Y, Y)} and U_gamma = {(gamma Y, Y)} in C^{2N}.
class DoubledProblem {
public:
    /// Throws InputError unless |gamma| = 1.
    DoubledProblem(std::shared_ptr<const CoefficientProfile> base, cd gamma);

    const CoefficientProfile& base() const { return *base_; }
    std::shared_ptr<const CoefficientProfile> base_ptr() const { return base_; }
    cd gamma() const { return gamma_; }
    int dimension() const { return 2 * base_->dimension(); }
    const BoundaryData& boundary() const { return boundary_; }

    /// A(x; lambda) (+) 0.
    ComplexMatrix evaluate(double x, cd lambda) const;
    /// Phi(to, from; lambda) (+) I, assembled from the N-dimensional flow.
    ComplexMatrix fundamental_matrix(double from, double to, cd lambda, const FlowSettings& flow = {}) const;

private:
    std::shared_ptr<const CoefficientProfile> base_;
    cd gamma_;
    BoundaryData boundary_;
};

DoubledProblem double_system(std::shared_ptr<const CoefficientProfile> profile, cd gamma);

/// det[frame(Phi_hat U_-) | frame(U_gamma)] with the propagation log scale,
/// computed by carrying the N x N upper block with joint QR renormalization
/// of the 2N x N frame.
DeterminantFn doubled_determinant(const DoubledProblem& d, double ell, const FlowSettings& flow = {});
/// det(Phi(ell, -ell; lambda) - gamma I) through the block-cyclic multiple-shooting
/// matrix of short-interval propagators, so Phi itself is never formed.
DeterminantFn monodromy_determinant(const DoubledProblem& d, double ell, const FlowSettings& flow = {});

struct PeriodicCount {
    double ell = 0.0;
    double ellBar = 0.0;
    WindingReport doubled;
    WindingReport monodromy;
    bool agree = false;
    int count = 0;
    std::optional<NondegeneracyReport> certification;   // zero-side certification of the center
    std::string certificationNote;
};

/// gamma-eigenvalue count in B(center, delta) from the doubled determinant,
/// cross-checked against the monodromy criterion.
PeriodicCount periodic_count(const DoubledProblem& d, double ell, cd center, double delta, const Config& cfg = {});

void write_periodic_csv(std::ostream& os, const DoubledProblem& d, cd center, double delta,
                        const std::vector<PeriodicCount>& rows);

enum class ExtrapolatedClass { In, Out, Undecided };
std::string to_string(ExtrapolatedClass c);

struct ProbeResult {
    cd lambda;
    std::vector<double> ells;
    std::vector<int> counts;
    ExtrapolatedClass classification = ExtrapolatedClass::Undecided;
    bool degenerate = false;   // on the essential locus but not certified nondegenerate
    std::string note;
};

/// Classifies each candidate: IN when the counts exceed nCap and grow, OUT
/// when the top half of the ell list shows one stable count not above nCap,
/// UNDECIDED otherwise (and always for degenerate locus points).
/// Requires an increasing ell list with at least 4 entries.
std::vector<ProbeResult> extrapolated_set_probe(const DoubledProblem& d, const std::vector<cd>& candidates,
                                                double delta, const std::vector<double>& ells, int nCap,
                                                const Config& cfg = {});

void write_probe_csv(std::ostream& os, const std::vector<ProbeResult>& results);

/// Projective coordinate of V(x) = Phi_hat(x, -ell) U_- cap E0(lambda) in
/// P(E0): z1 along (v_k, 0) fixed to 1, z2 = Phi(-ell, x) v_k in {0} x C^N.
struct CenterTrackSample {
    double x = 0.0;
    double logNorm = 0.0;        // log |z2|
    ComplexVector direction;     // z2 / |z2|
    double distanceToPn = 0.0;   // chordal distance of [1 : z2] to [1 : 0]
    double distanceToPs = 0.0;   // chordal distance of [1 : z2] to [0 : *]
};

struct CenterTrack {
    cd lambda;
    cd mu;                       // mu_0^k(lambda)
    std::vector<CenterTrackSample> samples;
    /// Largest deviation of z2(x + dx) from exp(-mu dx) z2(x) between
    /// consecutive samples in the tail, relative to |z2(x + dx)|.
    double max_scalar_ode_residual(double ell0) const;
};

CenterTrack track_essential_center(const CoefficientProfile& profile, cd lambda, double ell,
                                   const std::vector<double>& xs, const Config& cfg = {});

} // namespace absspec
