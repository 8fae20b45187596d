#include "absspec/problems.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "absspec/errors.hpp"

namespace absspec {

using nlohmann::json;

const BoundaryData& Problem::separated_boundary() const {
    if (!boundary) throw PreconditionError("problem '" + name + "' has no separated boundary conditions");
    return *boundary;
}

namespace {

using Params = std::map<std::string, double>;

Params parse_params(const std::string& spec, std::string& family, const Params& defaults) {
    std::string body = spec.rfind("builtin:", 0) == 0 ? spec.substr(8) : spec;
    std::stringstream ss(body);
    std::string tok;
    std::getline(ss, family, ',');
    Params p = defaults;
    while (std::getline(ss, tok, ',')) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw ConfigError("builtin parameter '" + tok + "' is not key=value");
        const std::string key = tok.substr(0, eq);
        if (!p.count(key)) throw ConfigError("builtin '" + family + "' has no parameter '" + key + "'");
        try {
            std::size_t used = 0;
            p[key] = std::stod(tok.substr(eq + 1), &used);
            if (used != tok.size() - eq - 1) throw std::invalid_argument(tok);
        } catch (const std::logic_error&) {
            throw ConfigError("builtin parameter '" + key + "' is not a number");
        }
    }
    return p;
}

std::string spec_name(const std::string& family, const Params& p) {
    std::ostringstream os;
    os << family;
    for (const auto& [k, v] : p) os << ',' << k << '=' << v;
    return os.str();
}

ConstantMap to_constants(const Params& p) {
    ConstantMap m;
    for (const auto& [k, v] : p) m[k] = cd(v, 0.0);
    return m;
}

Subspace coordinate_span(int N, std::vector<int> axes) {
    ComplexMatrix F = ComplexMatrix::Zero(N, static_cast<Eigen::Index>(axes.size()));
    for (std::size_t j = 0; j < axes.size(); ++j) F(axes[j], static_cast<Eigen::Index>(j)) = 1.0;
    return Subspace::from_orthonormal(F);
}

const Params kAdvDiff{{"c", 0.0}};
const Params kFront{{"c_minus", 1.0}, {"c_plus", 0.0}};
const Params kTwo{{"d1", 1.0}, {"d2", 0.5}, {"a1", 0.0}, {"a2", -3.0}, {"b", 1.0}, {"c", 0.0}};
const Params kPeriodic{{"c", 0.0}};

Problem make(std::string name, std::string description, ProfileDefinition def, std::optional<BoundaryData> b,
             ParameterDomain domain) {
    Problem p;
    p.name = std::move(name);
    p.description = std::move(description);
    p.profile = std::make_shared<const CoefficientProfile>(std::move(def));
    p.boundary = std::move(b);
    p.domain = domain;
    return p;
}

} // namespace

const std::vector<BuiltinInfo>& builtin_catalog() {
    static const std::vector<BuiltinInfo> cat{
        {"adv-diff", "c=0", "u'' + c u' = lambda u, Dirichlet ends; constant A = [[0,1],[lambda,-c]]"},
        {"adv-diff-front", "c_minus=1,c_plus=0",
         "advection speed switching from c_minus to c_plus by tanh over [-2, 2], Dirichlet ends"},
        {"two-component", "d1=1,d2=0.5,a1=0,a2=-3,b=1,c=0",
         "d1 u'' + a1 u + b v = lambda u, d2 v'' + c u + a2 v = lambda v; N = 4, i_- = 2"},
        {"periodic-adv-diff", "c=0", "u'' + c u' = lambda u on a periodic (gamma-twisted) interval"},
    };
    return cat;
}

std::shared_ptr<const CoefficientProfile> constant_profile(const ComplexMatrix& A, double ell0) {
    require_square(A, "constant_profile");
    const int N = static_cast<int>(A.rows());
    std::vector<Expression> entries;
    for (int r = 0; r < N; ++r)
        for (int c = 0; c < N; ++c) entries.push_back(Expression::constant(A(r, c)));
    ProfileDefinition def;
    def.name = "constant";
    def.N = N;
    def.ell0 = ell0;
    def.aMinus = def.aPlus = MatrixExpression(N, N, entries);
    return std::make_shared<const CoefficientProfile>(std::move(def));
}

Problem builtin(const std::string& spec) {
    std::string family;
    std::string body = spec.rfind("builtin:", 0) == 0 ? spec.substr(8) : spec;
    family = body.substr(0, body.find(','));

    ProfileDefinition def;
    if (family == "adv-diff") {
        const Params p = parse_params(spec, family, kAdvDiff);
        def.name = spec_name(family, p);
        def.N = 2;
        def.ell0 = 1.0;
        def.constants = to_constants(p);
        def.aMinus = def.aPlus = MatrixExpression::parse({{"0", "1"}, {"lambda", "-c"}});
        return make(def.name, "advection-diffusion with Dirichlet conditions", std::move(def),
                    BoundaryData(coordinate_span(2, {1}), coordinate_span(2, {1})),
                    ParameterDomain::rectangle(-4, 1, -1, 1, 64));
    }
    if (family == "adv-diff-front") {
        const Params p = parse_params(spec, family, kFront);
        def.name = spec_name(family, p);
        def.N = 2;
        def.ell0 = 2.0;
        def.constants = to_constants(p);
        def.constants["L"] = cd(def.ell0, 0.0);
        def.aMinus = MatrixExpression::parse({{"0", "1"}, {"lambda", "-c_minus"}});
        def.aPlus = MatrixExpression::parse({{"0", "1"}, {"lambda", "-c_plus"}});
        def.middle = MatrixExpression::parse(
            {{"0", "1"}, {"lambda", "-(c_minus + c_plus)/2 - (c_plus - c_minus)/2*tanh(x)/tanh(L)"}});
        return make(def.name, "advection-diffusion across a tanh front", std::move(def),
                    BoundaryData(coordinate_span(2, {1}), coordinate_span(2, {1})),
                    ParameterDomain::rectangle(-4, 1, -1, 1, 64));
    }
    if (family == "two-component") {
        const Params p = parse_params(spec, family, kTwo);
        if (p.at("d1") <= 0.0 || p.at("d2") <= 0.0) throw ConfigError("two-component diffusivities must be positive");
        def.name = spec_name(family, p);
        def.N = 4;
        def.ell0 = 1.0;
        def.constants = to_constants(p);
        def.aMinus = def.aPlus = MatrixExpression::parse({{"0", "0", "1", "0"},
                                                          {"0", "0", "0", "1"},
                                                          {"(lambda - a1)/d1", "-b/d1", "0", "0"},
                                                          {"-c/d2", "(lambda - a2)/d2", "0", "0"}});
        return make(def.name, "two diffusing species with Dirichlet conditions", std::move(def),
                    BoundaryData(coordinate_span(4, {2, 3}), coordinate_span(4, {2, 3})),
                    ParameterDomain::rectangle(-2.5, -0.5, -1, 1, 64));
    }
    if (family == "periodic-adv-diff") {
        const Params p = parse_params(spec, family, kPeriodic);
        def.name = spec_name(family, p);
        def.N = 2;
        def.ell0 = 1.0;
        def.kind = ProfileKind::PeriodicAsymptotic;
        def.crossingIndex = 1;
        def.constants = to_constants(p);
        def.aMinus = def.aPlus = MatrixExpression::parse({{"0", "1"}, {"lambda", "-c"}});
        return make(def.name, "advection-diffusion with periodic conditions", std::move(def), std::nullopt,
                    ParameterDomain::rectangle(-4, 1, -2, 2, 64));
    }
    throw ConfigError("unknown builtin problem '" + family + "'");
}

// ---------------------------------------------------------------- files

namespace {

struct Locator {
    const std::string& text;

    std::pair<std::size_t, std::size_t> at_offset(std::size_t off) const {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < off && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        return {line, col};
    }
    // Position of the first occurrence of a key; (0, 0) when absent.
    std::pair<std::size_t, std::size_t> key(const std::string& k) const {
        const auto pos = text.find('"' + k + '"');
        return pos == std::string::npos ? std::pair<std::size_t, std::size_t>{0, 0} : at_offset(pos);
    }
    [[noreturn]] void fail(const std::string& k, const std::string& msg) const {
        const auto [l, c] = key(k);
        throw SchemaError(msg, l, c);
    }
};

cd parse_scalar(const json& v, const Locator& loc, const std::string& key) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    loc.fail(key, "'" + key + "': expected a number or [re, im]");
}

MatrixExpression parse_matrix(const json& v, const Locator& loc, const std::string& key, int N) {
    if (!v.is_array() || v.size() != static_cast<std::size_t>(N))
        loc.fail(key, "'" + key + "': expected " + std::to_string(N) + " rows");
    std::vector<Expression> entries;
    for (const auto& row : v) {
        if (!row.is_array() || row.size() != static_cast<std::size_t>(N))
            loc.fail(key, "'" + key + "': every row needs " + std::to_string(N) + " entries");
        for (const auto& e : row) {
            if (e.is_string()) {
                try {
                    entries.push_back(Expression::parse(e.get<std::string>()));
                } catch (const SchemaError& err) {
                    loc.fail(key, "'" + key + "': " + err.what());
                }
            } else {
                entries.push_back(Expression::constant(parse_scalar(e, loc, key)));
            }
        }
    }
    return MatrixExpression(N, N, std::move(entries));
}

Subspace parse_subspace(const json& v, const Locator& loc, const std::string& key, int N) {
    if (!v.is_array() || v.empty()) loc.fail(key, "'" + key + "': expected a list of basis vectors");
    ComplexMatrix F(N, static_cast<Eigen::Index>(v.size()));
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (!v[j].is_array() || v[j].size() != static_cast<std::size_t>(N))
            loc.fail(key, "'" + key + "': basis vectors need " + std::to_string(N) + " entries");
        for (int r = 0; r < N; ++r) F(r, static_cast<Eigen::Index>(j)) = parse_scalar(v[j][r], loc, key);
    }
    try {
        return Subspace::span(F);
    } catch (const InputError&) {
        loc.fail(key, "'" + key + "': basis vectors are linearly dependent");
    }
}

ParameterDomain parse_domain(const json& v, const Locator& loc) {
    if (!v.is_object()) loc.fail("domain", "'domain': expected an object");
    const int res = v.value("resolution", 64);
    try {
        if (v.contains("rectangle")) {
            const auto& r = v["rectangle"];
            if (!r.is_array() || r.size() != 4) loc.fail("rectangle", "'rectangle': expected [re0, re1, im0, im1]");
            return ParameterDomain::rectangle(r[0].get<double>(), r[1].get<double>(), r[2].get<double>(),
                                              r[3].get<double>(), res);
        }
        if (v.contains("disk")) {
            const auto& d = v["disk"];
            if (!d.is_object() || !d.contains("center") || !d.contains("radius"))
                loc.fail("disk", "'disk': expected {\"center\": [re, im], \"radius\": r}");
            return ParameterDomain::disk(parse_scalar(d["center"], loc, "center"), d["radius"].get<double>(), res);
        }
    } catch (const ConfigError& e) {
        loc.fail("domain", std::string("'domain': ") + e.what());
    } catch (const json::exception& e) {
        loc.fail("domain", std::string("'domain': ") + e.what());
    }
    loc.fail("domain", "'domain': needs 'rectangle' or 'disk'");
}

json scalar_json(cd z) {
    if (z.imag() == 0.0) return z.real();
    return json::array({z.real(), z.imag()});
}

json matrix_json(const MatrixExpression& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m.at(r, c).source());
        rows.push_back(row);
    }
    return rows;
}

json subspace_json(const Subspace& U) {
    json cols = json::array();
    for (Eigen::Index c = 0; c < U.dim(); ++c) {
        // fix the phase so that re-reading and re-writing is idempotent
        ComplexVector col = U.frame().col(c);
        Eigen::Index big = 0;
        col.cwiseAbs().maxCoeff(&big);
        col *= std::abs(col(big)) / col(big);
        json v = json::array();
        for (Eigen::Index r = 0; r < U.ambient_dim(); ++r) v.push_back(scalar_json(col(r)));
        cols.push_back(v);
    }
    return cols;
}

} // namespace

Problem parse_problem(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const Locator loc{text};
        const auto [l, c] = loc.at_offset(e.byte > 0 ? e.byte - 1 : 0);
        throw SchemaError(std::string("malformed JSON: ") + e.what(), l, c);
    }
    const Locator loc{text};
    if (!doc.is_object()) throw SchemaError("problem file must be a JSON object", 1, 1);
    static const std::vector<std::string> known{"name",    "N",       "ell0",    "kind",   "period",
                                                "A_minus", "A_plus",  "middle",  "U_minus", "U_plus",
                                                "domain",  "constants", "crossing_index", "region", "description"};
    for (const auto& [k, v] : doc.items()) {
        if (std::find(known.begin(), known.end(), k) == known.end()) loc.fail(k, "unknown field '" + k + "'");
    }
    for (const char* req : {"N", "A_minus", "A_plus"})
        if (!doc.contains(req)) throw SchemaError(std::string("missing required field '") + req + "'", 1, 1);

    ProfileDefinition def;
    if (!doc["N"].is_number_integer() || doc["N"].get<int>() < 1) loc.fail("N", "'N' must be a positive integer");
    def.N = doc["N"].get<int>();
    def.name = doc.value("name", std::string("unnamed"));
    if (doc.contains("ell0")) {
        if (!doc["ell0"].is_number() || !(doc["ell0"].get<double>() > 0.0)) loc.fail("ell0", "'ell0' must be positive");
        def.ell0 = doc["ell0"].get<double>();
    }
    if (doc.contains("kind")) {
        if (!doc["kind"].is_string()) loc.fail("kind", "'kind' must be a string");
        try {
            def.kind = parse_profile_kind(doc["kind"].get<std::string>());
        } catch (const SchemaError& e) {
            loc.fail("kind", e.what());
        }
    }
    if (doc.contains("period")) {
        if (!doc["period"].is_number()) loc.fail("period", "'period' must be a number");
        def.period = doc["period"].get<double>();
    }
    if (doc.contains("constants")) {
        if (!doc["constants"].is_object()) loc.fail("constants", "'constants' must be an object");
        for (const auto& [k, v] : doc["constants"].items()) def.constants[k] = parse_scalar(v, loc, k);
    }
    if (doc.contains("crossing_index")) {
        if (!doc["crossing_index"].is_number_integer()) loc.fail("crossing_index", "'crossing_index' must be an integer");
        def.crossingIndex = doc["crossing_index"].get<int>();
        if (def.crossingIndex < 1 || def.crossingIndex > def.N)
            loc.fail("crossing_index", "'crossing_index' must lie in [1, N]");
    }
    if (doc.contains("region")) {
        const auto& r = doc["region"];
        if (!r.is_array() || r.size() != 4) loc.fail("region", "'region': expected [re0, re1, im0, im1]");
        def.region = LambdaRegion{r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>()};
    }
    def.aMinus = parse_matrix(doc["A_minus"], loc, "A_minus", def.N);
    def.aPlus = parse_matrix(doc["A_plus"], loc, "A_plus", def.N);
    if (doc.contains("middle")) def.middle = parse_matrix(doc["middle"], loc, "middle", def.N);

    Problem p;
    p.name = def.name;
    p.description = doc.value("description", std::string());
    try {
        p.profile = std::make_shared<const CoefficientProfile>(def);
    } catch (const ContinuityError& e) {
        const auto [l, c] = loc.key(doc.contains("middle") ? "middle" : "A_plus");
        throw ContinuityError(std::string(e.what()) + " (line " + std::to_string(l) + ", column " +
                              std::to_string(c) + ")");
    } catch (const SchemaError& e) {
        if (e.line() > 0) throw;
        loc.fail("kind", e.what());
    }

    const bool periodic = def.kind == ProfileKind::PeriodicAsymptotic;
    if (doc.contains("U_minus") || doc.contains("U_plus")) {
        if (periodic) loc.fail("U_minus", "periodic problems take gamma instead of U_minus / U_plus");
        if (!doc.contains("U_minus") || !doc.contains("U_plus"))
            throw SchemaError("U_minus and U_plus must be given together", 1, 1);
        Subspace um = parse_subspace(doc["U_minus"], loc, "U_minus", def.N);
        Subspace up = parse_subspace(doc["U_plus"], loc, "U_plus", def.N);
        try {
            p.boundary.emplace(std::move(um), std::move(up));
        } catch (const HypothesisError& e) {
            const auto [l, c] = loc.key("U_minus");
            throw HypothesisError(std::string(e.what()) + " (line " + std::to_string(l) + ", column " +
                                  std::to_string(c) + ")");
        }
    } else if (!periodic) {
        throw SchemaError("separated problems need U_minus and U_plus", 1, 1);
    }
    p.domain = doc.contains("domain") ? parse_domain(doc["domain"], loc) : ParameterDomain::rectangle(-4, 1, -1, 1, 64);
    return p;
}

Problem load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open problem file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_problem(ss.str());
}

Problem resolve_problem(const std::string& spec) {
    if (spec.rfind("builtin:", 0) == 0) return builtin(spec);
    return load_problem(spec);
}

json serialize(const Problem& p) {
    const ProfileDefinition& d = p.profile->definition();
    json j;
    j["name"] = d.name;
    if (!p.description.empty()) j["description"] = p.description;
    j["N"] = d.N;
    j["ell0"] = d.ell0;
    j["kind"] = to_string(d.kind);
    if (d.kind == ProfileKind::PeriodicTail) j["period"] = d.period;
    if (d.crossingIndex > 0) j["crossing_index"] = d.crossingIndex;
    json consts = json::object();
    for (const auto& [k, v] : d.constants) consts[k] = scalar_json(v);
    j["constants"] = consts;
    j["A_minus"] = matrix_json(d.aMinus);
    j["A_plus"] = matrix_json(d.aPlus);
    if (!d.middle.empty()) j["middle"] = matrix_json(d.middle);
    if (d.region) j["region"] = {d.region->re0, d.region->re1, d.region->im0, d.region->im1};
    if (p.boundary) {
        j["U_minus"] = subspace_json(p.boundary->left());
        j["U_plus"] = subspace_json(p.boundary->right());
    }
    json dom;
    dom["resolution"] = p.domain.resolution;
    if (p.domain.shape == ParameterDomain::Shape::Disk) {
        dom["disk"] = {{"center", json::array({p.domain.center.real(), p.domain.center.imag()})},
                       {"radius", p.domain.radius}};
    } else {
        dom["rectangle"] = {p.domain.re0, p.domain.re1, p.domain.im0, p.domain.im1};
    }
    j["domain"] = dom;
    return j;
}

// ---------------------------------------------------------------- oracles

namespace oracle {

double adv_diff_dirichlet(double c, double ell, int n) {
    const double k = n * M_PI / (2.0 * ell);
    return -0.25 * c * c - k * k;
}

int adv_diff_dirichlet_count(double c, double ell, cd center, double radius) {
    int count = 0;
    for (int n = 1;; ++n) {
        const double lam = adv_diff_dirichlet(c, ell, n);
        if (lam < center.real() - radius) break;
        if (std::abs(cd(lam, 0.0) - center) < radius) ++count;
    }
    return count;
}

double adv_diff_gap(double c, cd lambda) { return std::sqrt(cd(c * c, 0.0) + 4.0 * lambda).real(); }

cd adv_diff_gap_derivative(double c, cd lambda) { return 2.0 / std::sqrt(cd(c * c, 0.0) + 4.0 * lambda); }

int periodic_count(double c, double ell, cd gamma, cd center, double radius) {
    // exp(2 i k ell) = gamma  =>  k = (arg gamma + 2 pi n) / (2 ell).
    const double theta = std::arg(gamma);
    const double kmax = std::sqrt(std::abs(center) + radius) + std::abs(c) + 1.0;
    const int nmax = static_cast<int>(std::ceil(kmax * ell / M_PI)) + 2;
    int count = 0;
    for (int n = -nmax; n <= nmax; ++n) {
        const double k = (theta + 2.0 * M_PI * n) / (2.0 * ell);
        if (std::abs(cd(-k * k, c * k) - center) < radius) ++count;
    }
    return count;
}

int two_component_count(double d1, double d2, double a1, double a2, double ell, cd center, double radius) {
    int count = 0;
    for (const auto& [d, a] : {std::pair{d1, a1}, std::pair{d2, a2}}) {
        for (int n = 1;; ++n) {
            const double k = n * M_PI / (2.0 * ell);
            const double lam = a - d * k * k;
            if (lam < center.real() - radius) break;
            if (std::abs(cd(lam, 0.0) - center) < radius) ++count;
        }
    }
    return count;
}

} // namespace oracle

} // namespace absspec
