#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace absspec {

struct SelftestCheck {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    double seconds = 0.0;
    std::string detail;
    /// log10(tolerance / measured); positive when passing with room.
    double margin() const;
};

struct SelftestOptions {
    bool quick = false;          // linalg + exterior only
    std::uint64_t seed = 20240601;
    int jobs = 1;
    /// Test hook: name of a check (or "all") whose input gets a 1e-3
    /// perturbation so that the check must fail.
    std::string inject;
};

std::vector<SelftestCheck> run_selftest(const SelftestOptions& options);
void print_selftest_table(std::ostream& os, const std::vector<SelftestCheck>& checks);

} // namespace absspec
