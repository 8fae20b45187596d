#include "absspec/integrator.hpp"

#include <algorithm>
#include <cmath>

#include "absspec/errors.hpp"

namespace absspec {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

} // namespace

void integrate_linear(const Generator& A, double from, double to, ComplexMatrix& Y, const FlowSettings& settings,
                      double maxStep, const std::function<void(ComplexMatrix&)>& afterStep, RkStats* stats) {
    const double span = to - from;
    if (span == 0.0) return;
    const double dir = span > 0 ? 1.0 : -1.0;
    const double hmax = std::min(std::abs(span), maxStep > 0 ? maxStep : std::abs(span));
    double h = 0.25 * hmax;
    double x = from;
    std::size_t steps = 0;

    while (dir * (to - x) > 0.0) {
        if (++steps > settings.maxSteps) throw IntegrationError("integrator exceeded the step budget", x);
        const double remaining = std::abs(to - x);
        bool last = false;
        if (h >= remaining) {
            h = remaining;
            last = true;
        }
        const double hs = dir * h;
        const ComplexMatrix k1 = A(x) * Y;
        const ComplexMatrix k2 = A(x + c2 * hs) * (Y + hs * (a21 * k1));
        const ComplexMatrix k3 = A(x + c3 * hs) * (Y + hs * (a31 * k1 + a32 * k2));
        const ComplexMatrix k4 = A(x + c4 * hs) * (Y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
        const ComplexMatrix k5 = A(x + c5 * hs) * (Y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const ComplexMatrix k6 =
            A(x + hs) * (Y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const ComplexMatrix y5 = Y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const ComplexMatrix k7 = A(x + hs) * y5;
        const ComplexMatrix err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double errNorm = 0.0;
        for (Eigen::Index i = 0; i < Y.rows(); ++i)
            for (Eigen::Index j = 0; j < Y.cols(); ++j) {
                const double sc = settings.absTol + settings.relTol * std::max(std::abs(Y(i, j)), std::abs(y5(i, j)));
                errNorm = std::max(errNorm, std::abs(err(i, j)) / sc);
            }
        if (!std::isfinite(errNorm)) throw IntegrationError("integrator produced non-finite values", x);

        if (errNorm <= 1.0) {
            x = last ? to : x + hs;
            Y = y5;
            if (afterStep) afterStep(Y);
            if (stats) ++stats->accepted;
        } else if (stats) {
            ++stats->rejected;
        }
        const double factor = errNorm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(errNorm, -0.2), 0.2, 5.0);
        h = std::min(hmax, h * factor);
        if (h < 1e-14 * std::max(1.0, std::abs(x))) throw IntegrationError("step size underflow", x);
    }
}

} // namespace absspec
