#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "magtrap/error.hpp"
#include "magtrap/geometry.hpp"

namespace magtrap {

enum class Var { x, y, r, z };
enum class Func { sin, cos, tan, exp, log, sqrt, tanh, abs };

// Declared variable set: surface problems use {x, y}, axisymmetric ones {r, z}.
enum class VarContext { surface, axisymmetric };

const char* to_string(Var v);
const char* to_string(Func f);

// Syntax or name error at a byte offset of the source text.
class ParseError : public Error {
public:
    ParseError(std::size_t offset, const std::string& message);
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    enum class Kind { number, variable, pi, neg, add, sub, mul, div, pow, call };
    Kind kind = Kind::number;
    double value = 0.0;
    Var var = Var::x;
    Func func = Func::sin;
    NodePtr a, b;
};

// Values of x, y, r, z, indexed by Var.
using Bindings = std::array<double, 4>;

class Expr {
public:
    Expr();  // the constant 0

    static Expr parse(std::string_view text, VarContext context);
    static Expr number(double v);
    static Expr variable(Var v);

    // Throws Errc::eval_error on domain errors, naming the sub-expression.
    double eval(const Bindings& b) const;
    // eval with (x, y) or (r, z) taken from p according to the context.
    double eval_at(Point2 p) const;

    Expr derivative(Var v) const;
    // Rename variables, e.g. r -> x and z -> y.
    Expr rename(Var from, Var to) const;

    std::string to_string() const;
    bool structurally_equal(const Expr& other) const;
    bool depends_on(Var v) const;
    VarContext context() const { return context_; }
    const NodePtr& root() const { return root_; }

    // Operators fold numeric constants and identities such as 0 + a and 1 * a.
    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);
    friend Expr pow(const Expr& a, const Expr& b);
    friend Expr call(Func f, const Expr& a);

private:
    struct Program;
    Expr(NodePtr root, VarContext context);
    static VarContext joint_context(const Expr& a, const Expr& b);

    NodePtr root_;
    VarContext context_ = VarContext::surface;
    std::shared_ptr<const Program> program_;
};

// Scalar field from an expression: value, gradient and Hessian handles are
// compiled from symbolic derivatives in the context's two variables.
ScalarField make_scalar_field(const Expr& e);

std::string format_number(double v);

}  // namespace magtrap
