#pragma once

// Hand-rolled generators for property tests. Every property runs a fixed
// number of cases from a seeded engine; failures report the case index so a
// case can be replayed with the same seed.

#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "absspec/linalg.hpp"

namespace gen {

using absspec::cd;
using absspec::ComplexMatrix;
using absspec::ComplexVector;

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    cd complex_normal() { return {normal(), normal()}; }
    cd complex_in(double re0, double re1, double im0, double im1) { return {uniform(re0, re1), uniform(im0, im1)}; }
    cd unit() { return std::polar(1.0, uniform(0.0, 2.0 * M_PI)); }

    ComplexMatrix matrix(int rows, int cols) {
        ComplexMatrix m(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) m(r, c) = complex_normal();
        return m;
    }
    ComplexVector vector(int n) { return matrix(n, 1).col(0); }
    absspec::Subspace subspace(int N, int k) { return absspec::Subspace::span(matrix(N, k)); }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

/// Runs `property` on `cases` generated inputs.
inline void for_all(int cases, std::uint64_t seed, const std::function<void(Gen&, int)>& property) {
    Gen g(seed);
    for (int i = 0; i < cases; ++i) {
        SCOPED_TRACE("case " + std::to_string(i) + " seed " + std::to_string(seed));
        property(g, i);
        if (::testing::Test::HasFatalFailure()) return;
    }
}

/// Largest distance of a greedy nearest pairing between two multisets.
inline double multiset_distance(std::vector<cd> a, std::vector<cd> b) {
    if (a.size() != b.size()) return 1e300;
    double worst = 0.0;
    for (const cd& x : a) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < b.size(); ++j)
            if (std::abs(b[j] - x) < std::abs(b[best] - x)) best = j;
        worst = std::max(worst, std::abs(b[best] - x));
        b.erase(b.begin() + static_cast<long>(best));
    }
    return worst;
}

} // namespace gen
