#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "absspec/config.hpp"
#include "absspec/expression.hpp"
#include "absspec/linalg.hpp"

namespace absspec {

using ConstantMap = std::map<std::string, cd>;

enum class ProfileKind { SeparatedAsymptotic, PeriodicAsymptotic, PeriodicTail };
enum class TailSide { Minus, Plus };

std::string to_string(ProfileKind kind);
ProfileKind parse_profile_kind(const std::string& text);

/// Rectangular matrix of scalar expressions, row-major.
class MatrixExpression {
public:
    MatrixExpression() = default;
    MatrixExpression(int rows, int cols, std::vector<Expression> entries);
    /// From source strings, one inner vector per row.
    static MatrixExpression parse(const std::vector<std::vector<std::string>>& rows);

    ComplexMatrix evaluate(cd lambda, double x, const ConstantMap& constants) const;
    bool depends_on_x() const;
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return entries_.empty(); }
    const Expression& at(int r, int c) const { return entries_[static_cast<std::size_t>(r * cols_ + c)]; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<Expression> entries_;
};

/// Axis-aligned region of the lambda plane where the families are declared
/// analytic; evaluation outside it is rejected.
struct LambdaRegion {
    double re0, re1, im0, im1;
    bool contains(cd lambda) const {
        return lambda.real() >= re0 && lambda.real() <= re1 && lambda.imag() >= im0 && lambda.imag() <= im1;
    }
};

struct ProfileDefinition {
    std::string name = "unnamed";
    int N = 0;
    double ell0 = 1.0;
    ProfileKind kind = ProfileKind::SeparatedAsymptotic;
    double period = 0.0;         // tail period, PeriodicTail only
    ConstantMap constants;
    MatrixExpression aMinus;     // A_-(lambda) (or A_-(x; lambda) for periodic tails)
    MatrixExpression aPlus;      // A_+(lambda); equals A_0 for periodic-asymptotic
    MatrixExpression middle;     // A(x; lambda) on [-ell0, ell0]; empty means "same as A_+"
    int crossingIndex = 0;       // k of the essential crossing; 0 selects 1
    std::optional<LambdaRegion> region;
};

/// The coefficient family A(x; lambda): constant (or periodic) tails outside
/// [-ell0, ell0] and an x-dependent middle. Immutable after construction.
class CoefficientProfile {
public:
    /// Validates shapes, kind-specific structure and seam continuity; throws
    /// SchemaError or ContinuityError.
    explicit CoefficientProfile(ProfileDefinition def, const Tolerances& tol = {});

    int dimension() const { return def_.N; }
    double ell0() const { return def_.ell0; }
    ProfileKind kind() const { return def_.kind; }
    double period() const { return def_.period; }
    int crossing_index() const { return def_.crossingIndex > 0 ? def_.crossingIndex : 1; }
    const ProfileDefinition& definition() const { return def_; }
    const std::string& name() const { return def_.name; }

    /// A(x; lambda): A_- for x <= -ell0, A_+ for x >= ell0, middle otherwise.
    ComplexMatrix evaluate(double x, cd lambda) const;
    ComplexMatrix tail(TailSide side, cd lambda, double x = 0.0) const;
    ComplexMatrix middle(double x, cd lambda) const;

    bool tails_constant() const { return def_.kind != ProfileKind::PeriodicTail; }
    bool middle_constant() const { return middleConstant_; }
    bool middle_equals_plus() const { return def_.middle.empty(); }

private:
    void check_lambda(cd lambda) const;
    ProfileDefinition def_;
    bool middleConstant_ = false;
};

/// The asymptotic operator of one tail: the constant matrix A_+-(lambda), or
/// the one-period monodromy of a periodic tail with its exponents
/// log(rho) / period used for ordering.
struct TailOperator {
    ComplexMatrix matrix;
    double period = 0.0;

    bool is_monodromy() const { return period > 0.0; }
    ExponentMap exponent_map() const;
    SortedSpectrum spectrum(const Tolerances& tol = {}) const;
    /// Raw eigenvalues of `matrix` (multipliers for a monodromy).
    std::vector<cd> raw_eigenvalues() const;
    /// Generalized eigenspace of the `count` leading exponents.
    Subspace leading_subspace(std::size_t count, const Tolerances& tol = {}) const;
    /// Maps raw eigenvalues to exponents.
    std::vector<cd> to_exponents(const std::vector<cd>& raw) const;
};

TailOperator tail_operator(const CoefficientProfile& profile, TailSide side, cd lambda,
                           const FlowSettings& flow = {});

/// Boundary subspaces U_- (dimension i_-) and U_+ (dimension i_+).
class BoundaryData {
public:
    /// Throws ShapeError on ambient mismatch, HypothesisError unless
    /// i_- + i_+ = N and i_- <= i_+.
    BoundaryData(Subspace left, Subspace right);

    const Subspace& left() const { return left_; }
    const Subspace& right() const { return right_; }
    int i_minus() const { return static_cast<int>(left_.dim()); }
    int i_plus() const { return static_cast<int>(right_.dim()); }
    int ambient_dim() const { return static_cast<int>(left_.ambient_dim()); }

private:
    Subspace left_;
    Subspace right_;
};

/// U_- = {(Y, Y)} and U_gamma = {(gamma Y, Y)} in C^{2N}.
BoundaryData doubled_boundary(int N, cd gamma);

/// Rectangle or disk in the lambda plane with a grid resolution.
struct ParameterDomain {
    enum class Shape { Rectangle, Disk };
    Shape shape = Shape::Rectangle;
    double re0 = 0, re1 = 0, im0 = 0, im1 = 0;
    cd center{0.0, 0.0};
    double radius = 0.0;
    int resolution = 8;

    /// Throw ConfigError on empty interior or resolution < 8.
    static ParameterDomain rectangle(double re0, double re1, double im0, double im1, int resolution);
    static ParameterDomain disk(cd center, double radius, int resolution);

    bool contains(cd lambda) const;
    /// Bounding box as {re0, re1, im0, im1}.
    std::array<double, 4> bounds() const;
    /// Deterministic low-discrepancy samples; sample(n) is a prefix of sample(n + 1).
    std::vector<cd> samples(std::size_t count) const;
};

struct SideCheck {
    bool applicable = false;
    int sumRank = 0;             // rank of [E | U]
    double sumMargin = 0.0;      // smallest singular value of the orthonormal [E | U]
    int intersectionDim = 0;     // dim(E cap U)
    bool pass = false;
};

struct HypothesisSample {
    cd lambda;
    SideCheck plus;
    SideCheck minus;
    bool clusterFlag = false;    // a Property 1/2 split is blocked by coincident eigenvalues
    std::string note;
    bool pass = false;
};

struct HypothesisReport {
    std::vector<HypothesisSample> samples;
    std::vector<std::string> warnings;
    bool pass = true;
    std::size_t failures() const;
};

/// Transversality of the leading tail eigenspaces with the boundary
/// subspaces at `sampleCount` deterministic lambda samples. For periodic
/// kinds `boundary` must be the doubled boundary (dimension 2N) and the
/// check uses E_0(lambda) of A_0 + 0.
HypothesisReport validate_hypotheses(const CoefficientProfile& profile, const BoundaryData& boundary,
                                     const ParameterDomain& domain, std::size_t sampleCount,
                                     const Config& cfg = {});

/// E_0(lambda) in C^{2N}: the eigendirection of mu_0^k padded with zeros,
/// plus the zero block {0} x C^N.
Subspace essential_center_space(const CoefficientProfile& profile, cd lambda, const Config& cfg = {});

} // namespace absspec
