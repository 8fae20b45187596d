#pragma once

#include <ostream>
#include <vector>

#include "absspec/config.hpp"
#include "absspec/exterior.hpp"
#include "absspec/integrator.hpp"
#include "absspec/problem.hpp"

namespace absspec {

/// Solves Y' = A(x; lambda) Y for one fixed lambda. Pieces of [from, to]
/// where A does not depend on x use chunked matrix exponentials; the rest
/// uses the embedded Runge-Kutta integrator.
class Propagator {
public:
    Propagator(const CoefficientProfile& profile, cd lambda, const FlowSettings& settings = {});

    const CoefficientProfile& profile() const { return *profile_; }
    cd lambda() const { return lambda_; }
    const FlowSettings& settings() const { return settings_; }
    double max_step() const;

    /// Carries the frame Y from `from` to `to`. After every step (chunk or
    /// accepted RK step) `renormalize` rescales Y and returns the log of the
    /// removed factor, which is accumulated into the return value.
    using Renormalizer = std::function<double(ComplexMatrix&)>;
    double transport(double from, double to, ComplexMatrix& Y, const Renormalizer& renormalize,
                     int compoundOrder = 0) const;

    /// Same as transport with Y = I and no renormalization: Phi(to, from).
    ComplexMatrix fundamental_matrix(double from, double to) const;

    RkStats stats() const { return stats_; }

private:
    struct Piece {
        double a, b;
        bool constant;
    };
    std::vector<Piece> pieces(double from, double to) const;
    ComplexMatrix generator(double x, int compoundOrder) const;

    const CoefficientProfile* profile_;
    cd lambda_;
    FlowSettings settings_;
    mutable RkStats stats_;
};

struct SubspaceResult {
    Subspace subspace;
    double logScale = 0.0;
};

struct PlueckerResult {
    PlueckerPoint point;
    double logScale = 0.0;
};

/// Frame propagation with QR renormalization (positive R diagonal).
/// logScale is the sum of log R_jj over all renormalizations.
SubspaceResult propagate_subspace(const Propagator& prop, double from, double to, const Subspace& U);

/// Compound-system propagation of a Pluecker point with largest-modulus
/// renormalization.
PlueckerResult propagate_pluecker(const Propagator& prop, double from, double to, const PlueckerPoint& P);

/// det[frame(Phi(ell, -ell) U_-) | frame(U_+)].
struct EvansValue {
    double detLogMagnitude = 0.0;   // log |det[Q | U_+]|, at most 0
    cd phase{1.0, 0.0};
    double propagationLogScale = 0.0;
    Subspace propagated;            // Phi(ell, -ell) U_- as an orthonormal frame

    /// log |E| including the propagation scale.
    double log_magnitude() const { return detLogMagnitude + propagationLogScale; }
    /// |det[Q | U_+]|, the scale-free magnitude in [0, 1].
    double normalized_magnitude() const { return std::exp(detLogMagnitude); }
    /// E(lambda) = exp(propagationLogScale) det[Q | U_+]; analytic in lambda.
    cd value() const { return std::exp(log_magnitude()) * phase; }
};

EvansValue boundary_determinant(const Propagator& prop, double ell, const BoundaryData& boundary);

/// Snapshot of both flow representations at one position.
struct TrajectorySample {
    double x = 0.0;
    Subspace subspace;
    double subspaceLogScale = 0.0;
    PlueckerPoint point;
    double plueckerLogScale = 0.0;
};

struct TrajectoryRecord {
    std::vector<TrajectorySample> samples;
    /// Largest chordal distance between pluecker(subspace) and point.
    double max_inconsistency() const;
    /// CSV rows: x, frame entries (re, im), Pluecker coordinates (re, im),
    /// both log scales.
    void write_csv(std::ostream& os) const;
};

/// Propagates U from `from` through the sorted positions `xs` with both
/// representations and records each position.
TrajectoryRecord record_trajectory(const Propagator& prop, double from, const std::vector<double>& xs,
                                   const Subspace& U);

/// Principal-angle distance of Phi(ell0, -ell) U_- from E_+ (and of
/// Phi(-ell0, ell) U_+ from E_-). Tail invariance of E_+- makes the value at
/// the seam decide containment for every x beyond it. Returns +inf when the
/// clause is vacuous (dim E = N).
struct ContainmentReport {
    double plusMargin = 0.0;
    double minusMargin = 0.0;
    bool warn = false;
};
ContainmentReport containment_margin(const Propagator& prop, double ell, const BoundaryData& boundary,
                                     const Config& cfg = {});

} // namespace absspec
