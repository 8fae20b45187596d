#pragma once

#include <array>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "absspec/config.hpp"
#include "absspec/exterior.hpp"
#include "absspec/flow.hpp"
#include "absspec/problem.hpp"
#include "absspec/spectra.hpp"

namespace absspec {

/// One evaluation of an analytic function in log-polar form:
/// F = exp(logMagnitude) * phase. `normalized` is the scale-free magnitude
/// used to detect zeros on a contour.
struct DeterminantSample {
    double logMagnitude = 0.0;
    cd phase{1.0, 0.0};
    double normalized = 1.0;
};
using DeterminantFn = std::function<DeterminantSample(cd)>;

/// Evans-type determinant of the separated problem on [-ell, ell].
DeterminantFn evans_function(const CoefficientProfile& profile, const BoundaryData& boundary, double ell,
                             const FlowSettings& flow = {});

struct ContourSample {
    double t = 0.0;   // position on the closed contour, [0, 1)
    cd lambda;
    DeterminantSample value;
};

struct WindingReport {
    cd center;
    double radius = 0.0;            // radius actually used (after perturbations)
    double requestedRadius = 0.0;
    std::vector<ContourSample> samples;
    double rawWinding = 0.0;        // total phase change / 2 pi before rounding
    int winding = 0;
    int refinementDepth = 0;
    std::vector<std::string> perturbationLog;
};

/// Closed contour parameterized over [0, 1).
using ContourPath = std::function<cd(double)>;
ContourPath circle_path(cd center, double radius);
/// Counter-clockwise boundary of [re0, re1] x [im0, im1].
ContourPath rectangle_path(double re0, double re1, double im0, double im1);

/// Argument-principle winding number of f along `path`, with adaptive
/// bisection until every adjacent pair differs by less than maxPhaseStep in
/// phase and maxLogMagStep in log magnitude. Throws ContourError if f
/// vanishes on the path or the sample cap is reached.
WindingReport winding_on_path(const DeterminantFn& f, const ContourPath& path, const ContourSettings& settings = {},
                              int jobs = 1);

/// Winding on the circle |lambda - center| = radius; a zero on the circle
/// triggers up to maxPerturbations radius changes of perturbation * radius
/// (+1%, -1%, +2%, ...), logged in the report. ContourError after that.
WindingReport winding_on_circle(const DeterminantFn& f, cd center, double radius,
                                const ContourSettings& settings = {}, int jobs = 1);

/// Number of eigenvalues of the truncated separated problem in B(center, delta).
WindingReport winding_count(const CoefficientProfile& profile, const BoundaryData& boundary, double ell,
                            cd center, double delta, const Config& cfg = {});

struct AccumulationRow {
    double ell = 0.0;
    double ellBar = 0.0;   // ell - ell0
    int count = 0;
    WindingReport report;
};

struct AccumulationTable {
    cd center;
    double delta = 0.0;
    std::vector<AccumulationRow> rows;
    double slope = 0.0;              // least-squares slope of count against ell
    bool monotone = true;            // nondecreasing up to one unit of jitter
    std::optional<NondegeneracyReport> certification;
    std::string certificationNote;   // set when certification could not run
    void write_csv(std::ostream& os) const;
};

/// Winding count for every ell in `ells`. The center is certified against the
/// plus-side gap and the result is recorded, not enforced.
AccumulationTable accumulation_experiment(const CoefficientProfile& profile, const BoundaryData& boundary,
                                          cd center, double delta, const std::vector<double>& ells,
                                          const Config& cfg = {});

/// Labels (nu1, nu2) of the plus-tail compound eigenvalues at `lambda`,
/// continued from `from`: nu1 sums the k leading eigenvalues at `from`, nu2
/// swaps the k-th for the (k+1)-th.
std::array<cd, 2> continued_labels(const GapFunction& g, cd from, cd lambda);

struct ProjectedPoint {
    cd lambda;
    Eigen::Vector2cd Z;     // (Z1, Z2)
    double distanceToPn = 0.0;
    double distanceToPs = 0.0;
};

/// Pr(iota(Phi(ell, -ell) U_-)) in the plus-tail frame at lambda with the
/// given labels.
ProjectedPoint projected_endpoint(const CoefficientProfile& profile, const BoundaryData& boundary, double ell,
                                  cd lambda, const std::array<cd, 2>& labels, const Config& cfg = {});

struct CoveringSample {
    double s = 0.0;
    cd lambda;
    cd zeta;
    double cumulativeTurns = 0.0;
    double distanceToPn = 0.0;
    double distanceToPs = 0.0;
    bool excluded = false;   // inside an exclusion neighbourhood
};

struct CoveringTrace {
    double ell = 0.0;
    double ellBar = 0.0;
    std::vector<CoveringSample> samples;
    double turns = 0.0;
    /// Smallest chordal distance from the point of the invariant sphere that
    /// meets U_+ to P_n and P_s over the samples.
    double boundaryPointMargin = 0.0;
    void write_csv(std::ostream& os) const;
};

/// zeta = Z1 / Z2 along the straight segment from `a` to `b` (which should
/// lie on the nondegenerate locus), with eigenvectors continued analytically.
/// Throws ConfigError if the exclusion radius is not below 1/2 or the point
/// of the invariant sphere meeting U_+ lies inside an exclusion neighbourhood.
CoveringTrace covering_trace(const CoefficientProfile& profile, const BoundaryData& boundary, double ell, cd a,
                             cd b, const Config& cfg = {});

struct RefinedEigenvalue {
    cd lambda;
    double normalized = 0.0;
    int iterations = 0;
    int multiplicity = 0;   // winding of the 1e-4 disk around lambda
};

/// Complex secant iteration on f. Requires winding 1 on B(seed, radius)
/// (PreconditionError otherwise); NumericalError after 100 iterations or when
/// the iterate leaves the disk.
RefinedEigenvalue refine_eigenvalue(const DeterminantFn& f, cd seed, double radius,
                                    const ContourSettings& settings = {});

/// Zeros of f in B(center, radius) by recursive quadrisection of the
/// bounding square followed by refinement; multiplicities from sub-windings.
std::vector<RefinedEigenvalue> locate_zeros(const DeterminantFn& f, cd center, double radius,
                                            const ContourSettings& settings = {}, int jobs = 1);

} // namespace absspec
