#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "absspec/problem.hpp"

namespace absspec {

/// A fully specified problem: the coefficient family, separated boundary
/// subspaces (absent for the periodic kind, whose boundary depends on gamma)
/// and the documented parameter domain.
struct Problem {
    std::string name;
    std::string description;
    std::shared_ptr<const CoefficientProfile> profile;
    std::optional<BoundaryData> boundary;
    ParameterDomain domain;

    const CoefficientProfile& coefficients() const { return *profile; }
    /// Throws PreconditionError for the periodic kind.
    const BoundaryData& separated_boundary() const;
    bool periodic() const { return profile->kind() == ProfileKind::PeriodicAsymptotic; }
};

struct BuiltinInfo {
    std::string family;
    std::string parameters;  // "key=default" list
    std::string summary;
};

/// The built-in catalog in a fixed order.
const std::vector<BuiltinInfo>& builtin_catalog();

/// `spec` is "family" or "family,key=value,...", optionally prefixed with
/// "builtin:". Throws ConfigError on unknown families or keys.
Problem builtin(const std::string& spec);

/// Lambda-independent constant system A on the whole line (no middle), for
/// propagation checks.
std::shared_ptr<const CoefficientProfile> constant_profile(const ComplexMatrix& A, double ell0 = 1.0);

/// Problem file in JSON. Errors carry line and column.
Problem load_problem(const std::string& path);
Problem parse_problem(const std::string& text);
/// Inverse of parse_problem up to formatting.
nlohmann::json serialize(const Problem& p);

/// "builtin:..." specs go to builtin(), anything else is a file path.
Problem resolve_problem(const std::string& spec);

/// Closed-form spectra of the built-ins, used by tests and the selftest.
namespace oracle {

/// Dirichlet eigenvalues of u'' + c u' = lambda u on [-ell, ell]:
/// -c^2/4 - (n pi / (2 ell))^2, n >= 1.
double adv_diff_dirichlet(double c, double ell, int n);
/// Number of those eigenvalues strictly inside B(center, radius).
int adv_diff_dirichlet_count(double c, double ell, cd center, double radius);
/// Re sqrt(c^2 + 4 lambda), the plus-side gap.
double adv_diff_gap(double c, cd lambda);
/// d(mu^1 - mu^2)/dlambda = 2 / sqrt(c^2 + 4 lambda) (principal branch).
cd adv_diff_gap_derivative(double c, cd lambda);
/// gamma-eigenvalues of the periodic problem on [-ell, ell]:
/// lambda = -k^2 + i c k with exp(2 i k ell) = gamma, multiplicity included.
int periodic_count(double c, double ell, cd gamma, cd center, double radius);
/// Dirichlet eigenvalues of the two-component system: union of
/// a1 - d1 (n pi / 2 ell)^2 and a2 - d2 (n pi / 2 ell)^2.
int two_component_count(double d1, double d2, double a1, double a2, double ell, cd center, double radius);

} // namespace oracle

} // namespace absspec
