#include "absspec/expression.hpp"

#include <cctype>
#include <cmath>
#include <sstream>
#include <vector>

#include "absspec/errors.hpp"

namespace absspec {

using cplx = std::complex<double>;

struct Expression::Node {
    enum class Kind { Number, Lambda, X, Constant, Neg, Add, Sub, Mul, Div, Pow, Call };
    Kind kind = Kind::Number;
    cplx value{};
    std::string name;
    std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind kind, std::vector<NodePtr> args = {}, std::string name = {}, cplx value = {}) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = kind;
    n->args = std::move(args);
    n->name = std::move(name);
    n->value = value;
    return n;
}

const char* kFunctions[] = {"exp", "sin", "cos", "sinh", "cosh", "tanh"};

bool is_function(const std::string& name) {
    for (const char* f : kFunctions)
        if (name == f) return true;
    return false;
}

class Parser {
public:
    explicit Parser(const std::string& src) : s_(src) {}

    NodePtr parse() {
        NodePtr n = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw SchemaError("expression '" + s_ + "': " + msg + " at offset " + std::to_string(pos_));
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) lhs = make(Kind::Add, {lhs, term()});
            else if (accept('-')) lhs = make(Kind::Sub, {lhs, term()});
            else return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) lhs = make(Kind::Mul, {lhs, unary()});
            else if (accept('/')) lhs = make(Kind::Div, {lhs, unary()});
            else return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Kind::Neg, {unary()});
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return make(Kind::Pow, {base, unary()});
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (accept('(')) {
            NodePtr inner = expr();
            if (!accept(')')) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        // UTF-8 lambda (0xCE 0xBB)
        if (static_cast<unsigned char>(c) == 0xCE && pos_ + 1 < s_.size() &&
            static_cast<unsigned char>(s_[pos_ + 1]) == 0xBB) {
            pos_ += 2;
            return make(Kind::Lambda);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        fail("unexpected character '" + std::string(1, c) + "'");
    }

    NodePtr number() {
        const char* begin = s_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - begin);
        return make(Kind::Number, {}, {}, cplx(v, 0.0));
    }

    NodePtr identifier() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            ++pos_;
        const std::string name = s_.substr(start, pos_ - start);
        if (is_function(name)) {
            if (!accept('(')) fail("expected '(' after " + name);
            NodePtr arg = expr();
            if (!accept(')')) fail("expected ')' closing " + name);
            return make(Kind::Call, {arg}, name);
        }
        if (name == "lambda") return make(Kind::Lambda);
        if (name == "x") return make(Kind::X);
        if (name == "i") return make(Kind::Number, {}, {}, cplx(0.0, 1.0));
        if (name == "pi") return make(Kind::Number, {}, {}, cplx(M_PI, 0.0));
        return make(Kind::Constant, {}, name);
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

cplx integer_power(cplx base, long n) {
    if (n < 0) return 1.0 / integer_power(base, -n);
    cplx result = 1.0;
    while (n > 0) {
        if (n & 1) result *= base;
        base *= base;
        n >>= 1;
    }
    return result;
}

cplx eval(const Expression::Node& n, const Expression::Context& ctx) {
    switch (n.kind) {
    case Kind::Number: return n.value;
    case Kind::Lambda: return ctx.lambda;
    case Kind::X: return ctx.x;
    case Kind::Constant: {
        if (ctx.constants) {
            auto it = ctx.constants->find(n.name);
            if (it != ctx.constants->end()) return it->second;
        }
        throw SchemaError("unknown identifier '" + n.name + "'");
    }
    case Kind::Neg: return -eval(*n.args[0], ctx);
    case Kind::Add: return eval(*n.args[0], ctx) + eval(*n.args[1], ctx);
    case Kind::Sub: return eval(*n.args[0], ctx) - eval(*n.args[1], ctx);
    case Kind::Mul: return eval(*n.args[0], ctx) * eval(*n.args[1], ctx);
    case Kind::Div: return eval(*n.args[0], ctx) / eval(*n.args[1], ctx);
    case Kind::Pow: {
        const cplx e = eval(*n.args[1], ctx);
        const double r = std::round(e.real());
        if (e.imag() != 0.0 || std::abs(e.real() - r) > 0.0 || std::abs(r) > 64) {
            throw SchemaError("exponent must be an integer of modulus <= 64");
        }
        return integer_power(eval(*n.args[0], ctx), static_cast<long>(r));
    }
    case Kind::Call: {
        const cplx a = eval(*n.args[0], ctx);
        if (n.name == "exp") return std::exp(a);
        if (n.name == "sin") return std::sin(a);
        if (n.name == "cos") return std::cos(a);
        if (n.name == "sinh") return std::sinh(a);
        if (n.name == "cosh") return std::cosh(a);
        return std::tanh(a);
    }
    }
    return {};
}

bool depends(const Expression::Node& n, Kind k) {
    if (n.kind == k) return true;
    for (const auto& a : n.args)
        if (depends(*a, k)) return true;
    return false;
}

std::string format_constant(cplx v) {
    std::ostringstream os;
    os.precision(17);
    if (v.imag() == 0.0) {
        os << v.real();
    } else {
        os << "(" << v.real() << (v.imag() < 0 ? "-" : "+") << std::abs(v.imag()) << "*i)";
    }
    return os.str();
}

} // namespace

Expression Expression::parse(const std::string& source) {
    Expression e;
    e.root_ = Parser(source).parse();
    e.source_ = source;
    return e;
}

Expression Expression::constant(std::complex<double> value) {
    Expression e;
    e.root_ = make(Kind::Number, {}, {}, value);
    e.source_ = format_constant(value);
    return e;
}

std::complex<double> Expression::evaluate(const Context& ctx) const { return eval(*root_, ctx); }

bool Expression::depends_on_x() const { return depends(*root_, Kind::X); }
bool Expression::depends_on_lambda() const { return depends(*root_, Kind::Lambda); }

} // namespace absspec
