#pragma once

#include <complex>
#include <map>
#include <memory>
#include <string>

namespace absspec {

/// Scalar expression over the problem-file vocabulary: numbers, the
/// imaginary unit `i`, `pi`, the spectral parameter `lambda` (or `λ`), the
/// position `x`, named constants, + - * / and integer powers `^`, and the
/// functions exp, sin, cos, sinh, cosh, tanh. Every expression in this
/// vocabulary is entire or meromorphic in lambda.
class Expression {
public:
    struct Node;

    /// Parses `source`; unknown identifiers are accepted only if they are
    /// keys of `constants` (checked again at evaluation time).
    static Expression parse(const std::string& source);
    static Expression constant(std::complex<double> value);

    struct Context {
        std::complex<double> lambda{0.0, 0.0};
        double x = 0.0;
        const std::map<std::string, std::complex<double>>* constants = nullptr;
    };

    std::complex<double> evaluate(const Context& ctx) const;

    bool depends_on_x() const;
    bool depends_on_lambda() const;
    const std::string& source() const { return source_; }

private:
    std::shared_ptr<const Node> root_;
    std::string source_;
};

} // namespace absspec
