#pragma once

#include <string>

#include <json.hpp>

namespace absspec {

/// Numerical thresholds shared across modules. Every field can be overridden
/// from a tolerance file (see Config::apply_overrides).
struct Tolerances {
    double clusterRel = 1e-9;       // |mu_i - mu_j| <= clusterRel * (1 + |A|) means coincident
    double rankRel = 1e-10;         // relative rank threshold for pivoted QR
    double orthonormality = 1e-10;  // |F^H F - I| bound for Subspace frames
    double intersection = 1e-8;     // singular value within this of 1 counts as shared direction
    double locusGap = 1e-8;         // |g| bound for refined locus vertices
    double certifyGap = 1e-6;       // |g| bound accepted by certify_nondegenerate
    double fdStepRel = 1e-6;        // complex finite-difference step, scaled by (1 + |lambda|)
    double distinctRel = 1e-6;      // |mu_i - mu_{i+1}| must exceed distinctRel * (1 + |A|)
    double derivativeMin = 1e-8;    // |d(mu_i - mu_{i+1})/dlambda| must exceed this
    double orderingMargin = 1e-8;   // strict ordering margins of neighbouring real parts
    double seam = 1e-8;             // seam continuity of middle vs tail families
    double containmentMargin = 1e-6;// principal-angle margin for the "not contained" clause
    double onLocus = 1e-10;         // |g| below which a point is classified on the locus
};

struct FlowSettings {
    double relTol = 1e-10;
    double absTol = 1e-12;
    double maxStep = 0.0;           // 0 selects ell0 / 16
    double tailChunkNorm = 4.0;     // |A| * h bound for one matrix-exponential chunk
    std::size_t maxSteps = 2000000;
};

struct ContourSettings {
    std::size_t initialSamples = 64;
    std::size_t maxSamples = 1u << 16;
    double maxPhaseStep = 1.5707963267948966;  // pi / 2
    double maxLogMagStep = 1.5;
    double zeroTol = 1e-10;         // normalized |det| below this counts as a hit
    double perturbation = 0.01;     // relative radius perturbation on hits
    int maxPerturbations = 3;
};

struct Config {
    Tolerances tol;
    FlowSettings flow;
    ContourSettings contour;
    double exclusionRadius = 0.05;  // chordal radius around P_n and P_s
    int jobs = 1;

    /// Overwrite fields present in `overrides` (same layout as to_json()).
    void apply_overrides(const nlohmann::json& overrides);
    void load_overrides_file(const std::string& path);
    nlohmann::json to_json() const;
};

} // namespace absspec
