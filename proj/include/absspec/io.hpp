#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "absspec/config.hpp"

namespace absspec {

/// 64-bit FNV-1a, used for problem hashes in run manifests.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

/// Formats a double with 17 significant digits (round-trip exact).
std::string fmt17(double v);

struct RunManifest {
    std::string version = ABSSPEC_VERSION;
    std::string subcommand;
    nlohmann::json parameters = nlohmann::json::object();
    nlohmann::json tolerances = nlohmann::json::object();
    std::string problemHash;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::vector<std::string> outputs;
    double seconds = 0.0;

    nlohmann::json to_json() const;
    /// Writes pretty-printed JSON; throws InputError if the file cannot be opened.
    void write(const std::string& path) const;
};

/// Wall-clock helper for manifest timing.
class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

struct GnuplotSeries {
    std::string csv;
    std::string using_;   // e.g. "1:2"
    std::string title;
    std::string style = "lines";
};

/// Plain gnuplot script plotting the given CSV series (comma separated, '#'
/// comment lines, first non-comment line is a header).
void write_gnuplot(const std::string& path, const std::string& title, const std::string& xlabel,
                   const std::string& ylabel, const std::vector<GnuplotSeries>& series);

/// Path of `name` next to `base`: "out.csv" + "trace" -> "out.trace.csv".
std::string sibling_path(const std::string& base, const std::string& tag, const std::string& ext);

} // namespace absspec
