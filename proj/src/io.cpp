#include "absspec/io.hpp"

#include <cstdio>
#include <fstream>

#include "absspec/errors.hpp"

namespace absspec {

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

nlohmann::json RunManifest::to_json() const {
    return {{"version", version},       {"subcommand", subcommand}, {"parameters", parameters},
            {"tolerances", tolerances}, {"problem_hash", problemHash}, {"seed", seed},
            {"jobs", jobs},             {"outputs", outputs},       {"timing", {{"wall_seconds", seconds}}}};
}

void RunManifest::write(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw InputError("cannot write manifest '" + path + "'");
    os << to_json().dump(2) << '\n';
}

void write_gnuplot(const std::string& path, const std::string& title, const std::string& xlabel,
                   const std::string& ylabel, const std::vector<GnuplotSeries>& series) {
    std::ofstream os(path);
    if (!os) throw InputError("cannot write gnuplot script '" + path + "'");
    os << "set datafile separator ','\n"
       << "set datafile commentschars '#'\n"
       << "set key autotitle columnhead\n"
       << "set title '" << title << "'\n"
       << "set xlabel '" << xlabel << "'\n"
       << "set ylabel '" << ylabel << "'\n"
       << "set grid\n"
       << "plot ";
    for (std::size_t j = 0; j < series.size(); ++j) {
        const auto& s = series[j];
        if (j) os << ", \\\n     ";
        os << "'" << s.csv << "' using " << s.using_ << " with " << s.style << " title '" << s.title << "'";
    }
    os << '\n';
}

std::string sibling_path(const std::string& base, const std::string& tag, const std::string& ext) {
    const auto slash = base.find_last_of('/');
    const auto dot = base.find_last_of('.');
    const std::string stem = (dot != std::string::npos && (slash == std::string::npos || dot > slash))
                                 ? base.substr(0, dot)
                                 : base;
    return stem + "." + tag + "." + ext;
}

} // namespace absspec
