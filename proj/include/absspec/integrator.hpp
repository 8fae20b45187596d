#pragma once

#include <functional>

#include "absspec/config.hpp"
#include "absspec/linalg.hpp"

namespace absspec {

/// x -> A(x) for a fixed spectral parameter.
using Generator = std::function<ComplexMatrix(double)>;

struct RkStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

/// Embedded Dormand-Prince 5(4) integration of Y' = A(x) Y from `from` to
/// `to` (either direction). Error control is entrywise relative/absolute on
/// all columns of Y. `afterStep` runs after every accepted step and may
/// rescale Y in place (renormalization).
void integrate_linear(const Generator& A, double from, double to, ComplexMatrix& Y, const FlowSettings& settings,
                      double maxStep, const std::function<void(ComplexMatrix&)>& afterStep = {},
                      RkStats* stats = nullptr);

} // namespace absspec
