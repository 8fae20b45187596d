#pragma once

#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "absspec/config.hpp"
#include "absspec/problem.hpp"

namespace absspec {

/// plus / minus: absolute spectrum of A_+ / A_-; zero: essential spectrum of A_0.
enum class Side { Plus, Minus, Zero };

std::string to_string(Side side);
Side parse_side(const std::string& text);

struct GapValue {
    double gap = std::numeric_limits<double>::quiet_NaN();
    bool flagged = false;  // cluster ambiguity at the split; gap is NaN
    cd muI;                // mu^i (zero side: mu^k)
    cd muIp1;              // mu^(i+1) (zero side: mu^(k+1) if present)
};

/// Pointwise gap of the tail spectrum plus the label-continuation utilities
/// used for tracing. Indices are 1-based as in i_-, i_+, k.
class GapFunction {
public:
    GapFunction(const CoefficientProfile& profile, Side side, int index, const Config& cfg = {});
    /// index = i_- for plus, i_+ for minus, the profile's crossing index for zero.
    static GapFunction for_problem(const CoefficientProfile& profile, const BoundaryData& boundary, Side side,
                                   const Config& cfg = {});

    const CoefficientProfile& profile() const { return *profile_; }
    Side side() const { return side_; }
    int index() const { return index_; }
    const Config& config() const { return cfg_; }

    /// Eigenvalues of the tail operator in Schur order (Floquet multipliers
    /// for periodic tails).
    std::vector<cd> raw(cd lambda) const;
    /// Exponent of a raw eigenvalue: identity, or log(rho) / period.
    cd exponent(cd raw) const;
    double real_exponent(cd raw) const;
    SortedSpectrum spectrum(cd lambda) const;
    SortedSpectrum sort(const std::vector<cd>& raw) const;

    GapValue value(cd lambda) const;
    /// Gap, or NaN when flagged.
    double operator()(cd lambda) const { return value(lambda).gap; }

    /// Raw eigenvalues at `to`, entry j continuing startRaw[j] from `from`.
    std::vector<cd> continue_raw(cd from, cd to, const std::vector<cd>& startRaw) const;
    /// Membership mask of the "upper" group at a point: the i leading
    /// eigenvalues (plus, minus) or those with positive real part (zero).
    std::vector<char> upper_group(const std::vector<cd>& raw) const;
    /// Signed separation of a labelled group: positive while the group is
    /// still the upper one, negative once a member has crossed.
    double separation(const std::vector<cd>& raw, const std::vector<char>& upper) const;

    /// Positions in `raw` of mu^i and mu^(i+1) (zero side: mu^k and -1).
    std::pair<int, int> pair_positions(const std::vector<cd>& raw) const;
    /// d(mu^i - mu^(i+1))/dlambda (zero side: d mu^k/dlambda) with labels
    /// fixed at lambda, by a 4-point complex central difference.
    cd derivative(cd lambda) const;

private:
    /// Change of the labelled difference between `lambda` and `at`.
    cd label_increment(cd lambda, const std::vector<cd>& raw, std::pair<int, int> labels, cd at) const;
    const CoefficientProfile* profile_;
    Side side_;
    int index_;
    Config cfg_;
};

struct LocusVertex {
    cd lambda;
    double gap = 0.0;
    cd muI, muIp1;
    cd derivative;          // d(mu^i - mu^(i+1))/dlambda, or d mu^k/dlambda on the zero side
    bool nondegenerate = false;
};

struct Polyline {
    std::vector<LocusVertex> vertices;
    bool closed = false;
};

struct SpectrumLocus {
    Side side = Side::Plus;
    int index = 1;
    std::vector<Polyline> polylines;
    int resolution = 0;

    std::size_t vertex_count() const;
    /// Versioned CSV, one row per vertex, polylines separated by their order.
    void write_csv(std::ostream& os) const;
};

/// Marching squares on the domain grid with label-continued edge tests and
/// bisection of every crossing to |g| <= locusGap. Disk domains are traced on
/// their bounding square and clipped.
SpectrumLocus trace_locus(const GapFunction& g, const ParameterDomain& domain, int jobs = 1);

struct NondegeneracyReport {
    cd lambda;
    Side side = Side::Plus;
    int index = 1;
    double gap = 0.0;
    cd muI, muIp1;
    double marginAbove = std::numeric_limits<double>::infinity();  // Re mu^(i-1) - Re mu^i
    double marginBelow = std::numeric_limits<double>::infinity();  // Re mu^(i+1) - Re mu^(i+2)
    double distinctness = 0.0;                                     // |mu^i - mu^(i+1)|
    cd derivative;
    double imaginaryMargin = 0.0;  // min |Re derivative| at nearby off-locus samples
    bool orderingOk = false;
    bool distinct = false;
    bool derivativeNonzero = false;
    bool notImaginary = false;
    bool nondegenerate = false;
};

/// Requires |g(lambda*)| <= certifyGap (PreconditionError otherwise).
NondegeneracyReport certify_nondegenerate(const GapFunction& g, cd lambdaStar);

enum class DiskRegion { B1, B2, OnLocus };
std::string to_string(DiskRegion r);

/// Half-disk classifier around a certified locus point.
class DiskPartition {
public:
    DiskPartition(const GapFunction& g, cd center, double radius, std::vector<cd> centerRaw,
                  std::pair<int, int> labels, SpectrumLocus arc);

    cd center() const { return center_; }
    double radius() const { return radius_; }
    /// Sign of the continued separation: B1 keeps the order fixed at the
    /// center, B2 has it exchanged.
    DiskRegion classify(cd lambda) const;
    /// Continued separation (positive in B1).
    double signed_gap(cd lambda) const;
    /// The locus arc inside the disk.
    const SpectrumLocus& arc() const { return arc_; }

private:
    GapFunction g_;
    cd center_;
    double radius_;
    std::vector<cd> centerRaw_;
    std::pair<int, int> labels_;
    SpectrumLocus arc_;
};

/// Throws PreconditionError unless the center is certified, DiskTooLarge if
/// the locus meets the disk in more than one arc or ends inside it.
DiskPartition partition_disk(const GapFunction& g, cd center, double radius, int resolution = 32);

} // namespace absspec
