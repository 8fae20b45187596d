#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "absspec/counting.hpp"
#include "absspec/errors.hpp"
#include "absspec/flow.hpp"
#include "absspec/io.hpp"
#include "absspec/periodic.hpp"
#include "absspec/problems.hpp"
#include "absspec/selftest.hpp"
#include "absspec/spectra.hpp"

using namespace absspec;

namespace {

constexpr int kOk = 0;
constexpr int kSelftestFailed = 1;
constexpr int kInvalid = 2;
constexpr int kNumerical = 3;

struct Common {
    std::string out;
    bool gnuplot = false;
    int jobs = 1;
    std::uint64_t seed = 1;
    std::string tolFile;
};

void add_common(CLI::App* app, Common& c, const std::string& defaultOut) {
    c.out = defaultOut;
    app->add_option("--out", c.out, "output CSV path")->capture_default_str();
    app->add_flag("--gnuplot", c.gnuplot, "also write a gnuplot script next to the CSV");
    app->add_option("--jobs", c.jobs, "worker threads (1 = bit-reproducible)")->check(CLI::PositiveNumber);
    app->add_option("--seed", c.seed, "seed for stochastic inputs");
    app->add_option("--tol", c.tolFile, "tolerance override file (JSON)");
}

Config make_config(const Common& c) {
    Config cfg;
    if (const char* env = std::getenv("ABSSPEC_TOL_FILE"); env && *env) cfg.load_overrides_file(env);
    if (!c.tolFile.empty()) cfg.load_overrides_file(c.tolFile);
    cfg.jobs = c.jobs;
    return cfg;
}

std::vector<double> parse_list(const std::string& text, std::size_t expected, const std::string& flag) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(item, &used);
        } catch (const std::exception&) {
            throw ConfigError(flag + ": cannot parse '" + item + "'");
        }
        if (used != item.size() || !std::isfinite(x)) throw ConfigError(flag + ": cannot parse '" + item + "'");
        v.push_back(x);
    }
    if (v.size() != expected)
        throw ConfigError(flag + " expects " + std::to_string(expected) + " comma separated numbers, got '" + text +
                          "'");
    return v;
}

// "31.4", "10pi", "2.5*pi"
double parse_length(const std::string& text) {
    std::string t = text;
    double factor = 1.0;
    if (t.size() >= 2 && t.compare(t.size() - 2, 2, "pi") == 0) {
        factor = M_PI;
        t.erase(t.size() - 2);
        if (!t.empty() && t.back() == '*') t.pop_back();
        if (t.empty()) t = "1";
    }
    const double x = parse_list(t, 1, "--ell")[0] * factor;
    if (!(x > 0.0)) throw ConfigError("--ell must be positive, got '" + text + "'");
    return x;
}

cd parse_complex(const std::string& text, const std::string& flag) {
    if (text.find(',') == std::string::npos) return {parse_list(text, 1, flag)[0], 0.0};
    const auto v = parse_list(text, 2, flag);
    return {v[0], v[1]};
}

std::string problem_hash(const Problem& p) { return hex64(fnv1a64(serialize(p).dump())); }

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw InputError("cannot write '" + path + "'");
    return os;
}

// ---------------------------------------------------------------- absspec

struct AbsspecArgs {
    Common common;
    std::string problem;
    std::string side = "plus";
    std::string domain;
    std::string disk;
    int res = 0;
    std::size_t validateSamples = 16;
};

int cmd_absspec(const AbsspecArgs& a) {
    const Stopwatch clock;
    const Config cfg = make_config(a.common);
    const Problem p = resolve_problem(a.problem);
    const Side side = parse_side(a.side);

    ParameterDomain domain = p.domain;
    if (!a.domain.empty() && !a.disk.empty()) throw ConfigError("--domain and --disk are exclusive");
    const int res = a.res > 0 ? a.res : domain.resolution;
    if (!a.domain.empty()) {
        const auto r = parse_list(a.domain, 4, "--domain");
        domain = ParameterDomain::rectangle(r[0], r[1], r[2], r[3], res);
    } else if (!a.disk.empty()) {
        const auto d = parse_list(a.disk, 3, "--disk");
        domain = ParameterDomain::disk(cd(d[0], d[1]), d[2], res);
    } else if (a.res > 0) {
        domain.resolution = res;
    }

    if (side == Side::Zero) {
        if (!p.periodic()) throw ConfigError("--side zero needs a periodic problem");
    } else {
        const HypothesisReport rep =
            validate_hypotheses(p.coefficients(), p.separated_boundary(), domain, a.validateSamples, cfg);
        for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
        if (!rep.pass) {
            std::cerr << "hypothesis check failed at " << rep.failures() << " of " << rep.samples.size()
                      << " samples\n";
            return kInvalid;
        }
    }

    const GapFunction g = side == Side::Zero
                              ? GapFunction(p.coefficients(), side, p.coefficients().crossing_index(), cfg)
                              : GapFunction::for_problem(p.coefficients(), p.separated_boundary(), side, cfg);
    const SpectrumLocus locus = trace_locus(g, domain, cfg.jobs);
    {
        auto os = open_out(a.common.out);
        locus.write_csv(os);
    }

    RunManifest m;
    m.subcommand = "absspec";
    m.parameters = {{"problem", a.problem}, {"side", to_string(side)}, {"resolution", domain.resolution},
                    {"domain", a.domain}, {"disk", a.disk}, {"vertices", locus.vertex_count()},
                    {"polylines", locus.polylines.size()}};
    m.tolerances = cfg.to_json();
    m.problemHash = problem_hash(p);
    m.seed = a.common.seed;
    m.jobs = cfg.jobs;
    m.outputs.push_back(a.common.out);
    if (a.common.gnuplot) {
        const std::string gp = sibling_path(a.common.out, "plot", "gp");
        write_gnuplot(gp, "locus " + p.name, "Re lambda", "Im lambda", {{a.common.out, "1:2", "locus", "lines"}});
        m.outputs.push_back(gp);
    }
    const std::string manifest = sibling_path(a.common.out, "manifest", "json");
    m.seconds = clock.seconds();
    m.write(manifest);
    std::cout << "locus: " << locus.vertex_count() << " vertices in " << locus.polylines.size()
              << " polylines -> " << a.common.out << '\n';
    return kOk;
}

// ---------------------------------------------------------------- count

struct CountArgs {
    Common common;
    std::string problem;
    std::string lambdaC;
    double delta = 0.0;
    std::vector<std::string> ells;
    std::string bc = "separated";
    std::string trace;
    bool dumpTrajectory = false;
};

int cmd_count(const CountArgs& a) {
    const Stopwatch clock;
    const Config cfg = make_config(a.common);
    const Problem p = resolve_problem(a.problem);
    const cd center = parse_complex(a.lambdaC, "--lambda-c");
    if (!(a.delta > 0.0)) throw ConfigError("--delta must be positive");
    std::vector<double> ells;
    for (const auto& e : a.ells) ells.push_back(parse_length(e));
    if (ells.empty()) throw ConfigError("at least one --ell is required");

    std::optional<cd> gamma;
    if (a.bc == "periodic") {
        gamma = 1.0;
    } else if (a.bc.rfind("gamma=", 0) == 0) {
        gamma = std::polar(1.0, 2.0 * M_PI * parse_list(a.bc.substr(6), 1, "--bc gamma")[0]);
    } else if (a.bc != "separated") {
        throw ConfigError("--bc must be separated, periodic or gamma=<turns>, got '" + a.bc + "'");
    }

    RunManifest m;
    m.subcommand = "count";
    m.parameters = {{"problem", a.problem},          {"lambda_c", {center.real(), center.imag()}},
                    {"delta", a.delta},              {"ell", ells},
                    {"bc", a.bc}};
    m.tolerances = cfg.to_json();
    m.problemHash = problem_hash(p);
    m.seed = a.common.seed;
    m.jobs = cfg.jobs;

    std::vector<int> counts;
    if (gamma) {
        const DoubledProblem d = double_system(p.profile, *gamma);
        std::vector<PeriodicCount> rows;
        for (double ell : ells) {
            rows.push_back(periodic_count(d, ell, center, a.delta, cfg));
            if (!rows.back().agree)
                std::cerr << "warning: monodromy count " << rows.back().monodromy.winding << " differs at ell = "
                          << ell << '\n';
            for (const auto& line : rows.back().doubled.perturbationLog) std::cerr << "contour: " << line << '\n';
            counts.push_back(rows.back().count);
        }
        auto os = open_out(a.common.out);
        write_periodic_csv(os, d, center, a.delta, rows);
    } else {
        const AccumulationTable t =
            accumulation_experiment(p.coefficients(), p.separated_boundary(), center, a.delta, ells, cfg);
        for (const auto& r : t.rows) {
            counts.push_back(r.count);
            for (const auto& line : r.report.perturbationLog) std::cerr << "contour: " << line << '\n';
        }
        if (!t.certificationNote.empty()) std::cerr << "note: " << t.certificationNote << '\n';
        auto os = open_out(a.common.out);
        t.write_csv(os);
        m.parameters["slope"] = t.slope;
        m.parameters["certified"] = t.certification && t.certification->nondegenerate;
    }
    m.parameters["counts"] = counts;
    m.outputs.push_back(a.common.out);

    if (!a.trace.empty()) {
        if (gamma) throw ConfigError("--trace needs separated boundary conditions");
        const auto seg = parse_list(a.trace, 4, "--trace");
        for (std::size_t j = 0; j < ells.size(); ++j) {
            const CoveringTrace tr = covering_trace(p.coefficients(), p.separated_boundary(), ells[j],
                                                    cd(seg[0], seg[1]), cd(seg[2], seg[3]), cfg);
            const std::string path = sibling_path(a.common.out, "trace" + std::to_string(j), "csv");
            auto os = open_out(path);
            tr.write_csv(os);
            m.outputs.push_back(path);
            std::cout << "trace ell=" << ells[j] << ": " << tr.turns << " turns -> " << path << '\n';
        }
    }

    if (a.dumpTrajectory) {
        if (gamma) throw ConfigError("--dump-trajectory needs separated boundary conditions");
        const double ell = ells.front();
        const Propagator prop(p.coefficients(), center, cfg.flow);
        std::vector<double> xs;
        for (int j = 1; j <= 64; ++j) xs.push_back(-ell + 2.0 * ell * j / 64.0);
        const TrajectoryRecord rec = record_trajectory(prop, -ell, xs, p.separated_boundary().left());
        const std::string path = sibling_path(a.common.out, "trajectory", "csv");
        auto os = open_out(path);
        rec.write_csv(os);
        m.outputs.push_back(path);
    }

    if (a.common.gnuplot) {
        const std::string gp = sibling_path(a.common.out, "plot", "gp");
        write_gnuplot(gp, "eigenvalue count " + p.name, "ell", "count", {{a.common.out, "1:3", "count", "linespoints"}});
        m.outputs.push_back(gp);
    }
    m.seconds = clock.seconds();
    m.write(sibling_path(a.common.out, "manifest", "json"));

    std::cout << "ell,count\n";
    for (std::size_t j = 0; j < ells.size(); ++j) std::cout << fmt17(ells[j]) << ',' << counts[j] << '\n';
    return kOk;
}

// ---------------------------------------------------------------- selftest

struct SelftestArgs {
    Common common;
    bool quick = false;
    std::string inject;
};

int cmd_selftest(const SelftestArgs& a) {
    const Stopwatch clock;
    const Config cfg = make_config(a.common);
    SelftestOptions opt;
    opt.quick = a.quick;
    opt.seed = a.common.seed;
    opt.jobs = cfg.jobs;
    opt.inject = a.inject;
    const auto checks = run_selftest(opt);
    print_selftest_table(std::cout, checks);

    bool ok = true;
    {
        auto os = open_out(a.common.out);
        os << "# absspec selftest v1\nname,status,measured,tolerance,seconds\n";
        for (const auto& c : checks) {
            ok = ok && c.pass;
            os << c.name << ',' << (c.pass ? "pass" : "fail") << ',' << fmt17(c.measured) << ','
               << fmt17(c.tolerance) << ',' << fmt17(c.seconds) << '\n';
        }
    }
    RunManifest m;
    m.subcommand = "selftest";
    m.parameters = {{"quick", a.quick}, {"inject", a.inject}, {"checks", checks.size()}, {"pass", ok}};
    m.tolerances = cfg.to_json();
    m.seed = a.common.seed;
    m.jobs = cfg.jobs;
    m.outputs.push_back(a.common.out);
    m.seconds = clock.seconds();
    m.write(sibling_path(a.common.out, "manifest", "json"));
    std::cout << (ok ? "all checks passed" : "selftest FAILED") << " (" << m.seconds << " s)\n";
    return ok ? kOk : kSelftestFailed;
}

// ---------------------------------------------------------------- problems

int cmd_problems_list() {
    for (const auto& b : builtin_catalog())
        std::cout << "builtin:" << b.family << "  [" << b.parameters << "]  " << b.summary << '\n';
    return kOk;
}

int cmd_problems_show(const std::string& spec) {
    std::cout << serialize(resolve_problem(spec)).dump(2) << '\n';
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    // `absspec --problem ...` without a subcommand means the absspec subcommand.
    std::vector<std::string> args(argv + 1, argv + argc);
    if (!args.empty() && args.front().rfind("--", 0) == 0 && args.front() != "--help" && args.front() != "--version")
        args.insert(args.begin(), "absspec");

    CLI::App app{"absolute and essential spectra of truncated linear ODE eigenvalue problems"};
    app.set_version_flag("--version", std::string(ABSSPEC_VERSION));
    app.require_subcommand(1);

    AbsspecArgs aa;
    auto* abs = app.add_subcommand("absspec", "trace the absolute (or essential) spectrum locus");
    abs->add_option("--problem", aa.problem, "builtin:<family>[,k=v...] or a problem file")->required();
    abs->add_option("--side", aa.side, "plus, minus or zero")->check(CLI::IsMember({"plus", "minus", "zero"}));
    abs->add_option("--domain", aa.domain, "re0,re1,im0,im1");
    abs->add_option("--disk", aa.disk, "re,im,radius");
    abs->add_option("--res", aa.res, "grid points per axis");
    abs->add_option("--validate-samples", aa.validateSamples, "lambda samples for the hypothesis check");
    add_common(abs, aa.common, "locus.csv");

    CountArgs ca;
    auto* cnt = app.add_subcommand("count", "eigenvalue counts in a disk for growing interval lengths");
    cnt->add_option("--problem", ca.problem, "builtin:<family>[,k=v...] or a problem file")->required();
    cnt->add_option("--lambda-c", ca.lambdaC, "disk center re[,im]")->required();
    cnt->add_option("--delta", ca.delta, "disk radius")->required();
    cnt->add_option("--ell", ca.ells, "half length, repeatable; accepts e.g. 10pi")->required();
    cnt->add_option("--bc", ca.bc, "separated, periodic or gamma=<turns>");
    cnt->add_option("--trace", ca.trace, "covering trace along re0,im0,re1,im1");
    cnt->add_flag("--dump-trajectory", ca.dumpTrajectory, "record both flow representations at lambda_c");
    add_common(cnt, ca.common, "counts.csv");

    SelftestArgs sa;
    auto* st = app.add_subcommand("selftest", "invariant suite");
    st->add_flag("--quick", sa.quick, "linalg and exterior checks only");
    st->add_option("--inject", sa.inject, "perturb the named check (or all) so it must fail");
    add_common(st, sa.common, "selftest.csv");

    std::string showSpec;
    auto* pr = app.add_subcommand("problems", "built-in problem catalog");
    pr->require_subcommand(1);
    auto* prList = pr->add_subcommand("list", "list built-in families");
    auto* prShow = pr->add_subcommand("show", "print a problem as JSON");
    prShow->add_option("spec", showSpec)->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInvalid;
    }

    try {
        if (*abs) return cmd_absspec(aa);
        if (*cnt) return cmd_count(ca);
        if (*st) return cmd_selftest(sa);
        if (*prList) return cmd_problems_list();
        if (*prShow) return cmd_problems_show(showSpec);
    } catch (const ContourError& e) {
        std::cerr << "contour failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    }
    return kInvalid;
}
