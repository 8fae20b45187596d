#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "absspec/config.hpp"
#include "absspec/errors.hpp"
#include "absspec/io.hpp"
#include "absspec/selftest.hpp"
#include "generators.hpp"

using namespace absspec;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST(Hash, Fnv1aKnownVectors) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
    EXPECT_EQ(hex64(0xcbf29ce484222325ull), "cbf29ce484222325");
    EXPECT_EQ(hex64(1), "0000000000000001");
}

TEST(Format, SeventeenDigitsRoundTrip) {
    gen::for_all(200, 801, [](gen::Gen& g, int) {
        const double v = g.normal() * std::pow(10.0, g.integer(-30, 30));
        EXPECT_EQ(std::strtod(fmt17(v).c_str(), nullptr), v);
    });
    EXPECT_EQ(fmt17(0.5), "0.5");
}

TEST(Paths, SiblingPath) {
    EXPECT_EQ(sibling_path("out.csv", "manifest", "json"), "out.manifest.json");
    EXPECT_EQ(sibling_path("dir.v2/out", "trace0", "csv"), "dir.v2/out.trace0.csv");
    EXPECT_EQ(sibling_path("a/b.c/d.csv", "gp", "gnuplot"), "a/b.c/d.gp.gnuplot");
}

TEST(Manifest, JsonFields) {
    RunManifest m;
    m.subcommand = "count";
    m.parameters["ell"] = {10.0, 20.0};
    m.problemHash = hex64(fnv1a64("x"));
    m.seed = 7;
    m.jobs = 2;
    m.outputs = {"a.csv"};
    m.seconds = 1.25;
    const nlohmann::json j = m.to_json();
    EXPECT_EQ(j["subcommand"], "count");
    EXPECT_EQ(j["seed"], 7);
    EXPECT_EQ(j["jobs"], 2);
    EXPECT_EQ(j["outputs"][0], "a.csv");
    EXPECT_EQ(j["timing"]["wall_seconds"], 1.25);
    EXPECT_EQ(j["version"], ABSSPEC_VERSION);
    const std::string path = ::testing::TempDir() + "absspec_manifest.json";
    m.write(path);
    EXPECT_EQ(nlohmann::json::parse(slurp(path)), j);
    EXPECT_THROW(m.write("/nonexistent-dir/x.json"), InputError);
}

TEST(Gnuplot, ScriptContent) {
    const std::string path = ::testing::TempDir() + "absspec_plot.gnuplot";
    write_gnuplot(path, "locus", "Re", "Im", {{"locus.csv", "2:3", "plus", "points"}, {"b.csv", "1:2", "b"}});
    const std::string s = slurp(path);
    EXPECT_NE(s.find("set datafile separator ','"), std::string::npos);
    EXPECT_NE(s.find("'locus.csv' using 2:3 with points title 'plus'"), std::string::npos);
    EXPECT_NE(s.find("'b.csv' using 1:2 with lines title 'b'"), std::string::npos);
}

TEST(Config, OverridesAndRoundTrip) {
    Config c;
    c.apply_overrides(nlohmann::json::parse(R"({"tol": {"locusGap": 1e-9}, "contour": {"maxSamples": 128}, "jobs": 3})"));
    EXPECT_EQ(c.tol.locusGap, 1e-9);
    EXPECT_EQ(c.contour.maxSamples, 128u);
    EXPECT_EQ(c.jobs, 3);
    Config d;
    d.apply_overrides(c.to_json());
    EXPECT_EQ(d.to_json(), c.to_json());
    EXPECT_THROW(c.apply_overrides(nlohmann::json::parse(R"({"exclusionRadius": 0.9})")), ConfigError);
    EXPECT_THROW(c.apply_overrides(nlohmann::json::parse("[1, 2]")), ConfigError);
    EXPECT_THROW(c.load_overrides_file("/nonexistent/tol.json"), ConfigError);
}

TEST(Selftest, QuickSuitePassesAndInjectionFails) {
    SelftestOptions o;
    o.quick = true;
    const auto ok = run_selftest(o);
    ASSERT_FALSE(ok.empty());
    for (const auto& c : ok) EXPECT_TRUE(c.pass) << c.name << " " << c.measured;
    o.inject = "det-logscaled";
    const auto bad = run_selftest(o);
    bool sawFailure = false;
    for (const auto& c : bad)
        if (c.name == "det-logscaled") sawFailure = !c.pass;
    EXPECT_TRUE(sawFailure);
}
