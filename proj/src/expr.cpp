#include "magtrap/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace magtrap {

namespace {

using Kind = ExprNode::Kind;

NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<ExprNode>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr num(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = Kind::number;
    n->value = v;
    return n;
}

NodePtr var_node(Var v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = Kind::variable;
    n->var = v;
    return n;
}

NodePtr call_node(Func f, NodePtr a) {
    auto n = std::make_shared<ExprNode>();
    n->kind = Kind::call;
    n->func = f;
    n->a = std::move(a);
    return n;
}

bool is_num(const NodePtr& n, double v) { return n->kind == Kind::number && n->value == v; }
bool is_num(const NodePtr& n) { return n->kind == Kind::number; }

// Constructors with light constant folding, used by differentiation.
NodePtr s_add(NodePtr a, NodePtr b) {
    if (is_num(a, 0.0)) return b;
    if (is_num(b, 0.0)) return a;
    if (is_num(a) && is_num(b)) return num(a->value + b->value);
    return make(Kind::add, a, b);
}
NodePtr s_neg(NodePtr a) {
    if (is_num(a)) return num(-a->value);
    if (a->kind == Kind::neg) return a->a;
    return make(Kind::neg, a);
}
NodePtr s_sub(NodePtr a, NodePtr b) {
    if (is_num(b, 0.0)) return a;
    if (is_num(a, 0.0)) return s_neg(b);
    if (is_num(a) && is_num(b)) return num(a->value - b->value);
    return make(Kind::sub, a, b);
}
NodePtr s_mul(NodePtr a, NodePtr b) {
    if (is_num(a, 0.0) || is_num(b, 0.0)) return num(0.0);
    if (is_num(a, 1.0)) return b;
    if (is_num(b, 1.0)) return a;
    if (is_num(a) && is_num(b)) return num(a->value * b->value);
    return make(Kind::mul, a, b);
}
NodePtr s_div(NodePtr a, NodePtr b) {
    if (is_num(a, 0.0)) return num(0.0);
    if (is_num(b, 1.0)) return a;
    if (is_num(a) && is_num(b) && std::isfinite(a->value / b->value)) return num(a->value / b->value);
    return make(Kind::div, a, b);
}
NodePtr s_pow(NodePtr a, NodePtr b) {
    if (is_num(b, 1.0)) return a;
    if (is_num(b, 0.0)) return num(1.0);
    if (is_num(a) && is_num(b) && std::isfinite(std::pow(a->value, b->value))) {
        return num(std::pow(a->value, b->value));
    }
    return make(Kind::pow, a, b);
}

bool depends(const NodePtr& n, Var v) {
    if (!n) return false;
    if (n->kind == Kind::variable) return n->var == v;
    return depends(n->a, v) || depends(n->b, v);
}

NodePtr diff(const NodePtr& n, Var v) {
    switch (n->kind) {
        case Kind::number:
        case Kind::pi: return num(0.0);
        case Kind::variable: return num(n->var == v ? 1.0 : 0.0);
        case Kind::neg: return s_neg(diff(n->a, v));
        case Kind::add: return s_add(diff(n->a, v), diff(n->b, v));
        case Kind::sub: return s_sub(diff(n->a, v), diff(n->b, v));
        case Kind::mul:
            return s_add(s_mul(diff(n->a, v), n->b), s_mul(n->a, diff(n->b, v)));
        case Kind::div:
            return s_sub(s_div(diff(n->a, v), n->b),
                         s_div(s_mul(n->a, diff(n->b, v)), s_pow(n->b, num(2.0))));
        case Kind::pow: {
            const NodePtr da = diff(n->a, v);
            if (!depends(n->b, v)) {
                return s_mul(s_mul(n->b, s_pow(n->a, s_sub(n->b, num(1.0)))), da);
            }
            const NodePtr rate = s_add(s_mul(diff(n->b, v), call_node(Func::log, n->a)),
                                       s_div(s_mul(n->b, da), n->a));
            return s_mul(n, rate);
        }
        case Kind::call: {
            const NodePtr a = n->a, da = diff(a, v);
            if (is_num(da, 0.0)) return num(0.0);
            NodePtr outer;
            switch (n->func) {
                case Func::sin: outer = call_node(Func::cos, a); break;
                case Func::cos: outer = s_neg(call_node(Func::sin, a)); break;
                case Func::tan: outer = s_div(num(1.0), s_pow(call_node(Func::cos, a), num(2.0))); break;
                case Func::exp: outer = n; break;
                case Func::log: return s_div(da, a);
                case Func::sqrt: return s_div(da, s_mul(num(2.0), n));
                case Func::tanh: outer = s_sub(num(1.0), s_pow(n, num(2.0))); break;
                case Func::abs: outer = s_div(a, n); break;
            }
            return s_mul(outer, da);
        }
    }
    return num(0.0);
}

NodePtr rename_node(const NodePtr& n, Var from, Var to) {
    if (!n) return n;
    if (n->kind == Kind::variable) return n->var == from ? var_node(to) : n;
    NodePtr a = rename_node(n->a, from, to), b = rename_node(n->b, from, to);
    if (a == n->a && b == n->b) return n;
    auto c = std::make_shared<ExprNode>(*n);
    c->a = a;
    c->b = b;
    return c;
}

bool same(const NodePtr& a, const NodePtr& b) {
    if (!a || !b) return !a && !b;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case Kind::number: return a->value == b->value;
        case Kind::variable: return a->var == b->var;
        case Kind::call: return a->func == b->func && same(a->a, b->a);
        default: return same(a->a, b->a) && same(a->b, b->b);
    }
}

int precedence(const NodePtr& n) {
    switch (n->kind) {
        case Kind::add:
        case Kind::sub: return 1;
        case Kind::mul:
        case Kind::div: return 2;
        case Kind::neg: return 3;
        case Kind::pow: return 4;
        case Kind::number: return n->value < 0 ? 0 : 5;
        default: return 5;
    }
}

void print(const NodePtr& n, std::string& out);

void print_child(const NodePtr& n, int min_prec, std::string& out) {
    if (precedence(n) < min_prec) {
        out += '(';
        print(n, out);
        out += ')';
    } else {
        print(n, out);
    }
}

void print(const NodePtr& n, std::string& out) {
    switch (n->kind) {
        case Kind::number: out += format_number(n->value); return;
        case Kind::variable: out += to_string(n->var); return;
        case Kind::pi: out += "pi"; return;
        case Kind::neg:
            out += '-';
            print_child(n->a, 3, out);
            return;
        case Kind::add:
        case Kind::sub:
            print_child(n->a, 1, out);
            out += n->kind == Kind::add ? " + " : " - ";
            print_child(n->b, 2, out);
            return;
        case Kind::mul:
        case Kind::div:
            print_child(n->a, 2, out);
            out += n->kind == Kind::mul ? "*" : "/";
            print_child(n->b, 3, out);
            return;
        case Kind::pow:
            print_child(n->a, 5, out);
            out += '^';
            print_child(n->b, 3, out);
            return;
        case Kind::call:
            out += to_string(n->func);
            out += '(';
            print(n->a, out);
            out += ')';
            return;
    }
}

std::string print(const NodePtr& n) {
    std::string s;
    print(n, s);
    return s;
}

class Parser {
public:
    Parser(std::string_view text, VarContext context) : text_(text), context_(context) {}

    NodePtr parse() {
        NodePtr n = expr();
        skip();
        if (pos_ < text_.size()) fail(pos_, "unexpected '" + std::string(1, text_[pos_]) + "'");
        return n;
    }

private:
    [[noreturn]] void fail(std::size_t at, const std::string& msg) const { throw ParseError(at, msg); }

    void skip() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                       text_[pos_] == '\n' || text_[pos_] == '\r')) {
            ++pos_;
        }
    }

    bool accept(char c) {
        skip();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        NodePtr n = term();
        for (;;) {
            if (accept('+')) {
                n = make(Kind::add, n, term());
            } else if (accept('-')) {
                n = make(Kind::sub, n, term());
            } else {
                return n;
            }
        }
    }

    NodePtr term() {
        NodePtr n = unary();
        for (;;) {
            if (accept('*')) {
                n = make(Kind::mul, n, unary());
            } else if (accept('/')) {
                n = make(Kind::div, n, unary());
            } else {
                return n;
            }
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Kind::neg, unary());
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return make(Kind::pow, base, power_rhs());
        return base;
    }

    NodePtr power_rhs() {
        if (accept('-')) return make(Kind::neg, power_rhs());
        return power();
    }

    static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
    static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
    static bool digit(char c) { return c >= '0' && c <= '9'; }

    NodePtr primary() {
        skip();
        if (pos_ >= text_.size()) fail(pos_, "unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            const std::size_t open = pos_++;
            NodePtr n = expr();
            if (!accept(')')) {
                skip();
                fail(pos_, "expected ')' to close '(' at byte " + std::to_string(open));
            }
            return n;
        }
        if (digit(c) || (c == '.' && pos_ + 1 < text_.size() && digit(text_[pos_ + 1]))) return number();
        if (ident_start(c)) return identifier();
        fail(pos_, "unexpected '" + std::string(1, c) + "'");
    }

    NodePtr number() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && digit(text_[pos_])) ++pos_;
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (pos_ < text_.size() && digit(text_[pos_])) ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
            if (p < text_.size() && digit(text_[p])) {
                while (p < text_.size() && digit(text_[p])) ++p;
                pos_ = p;
            } else {
                fail(pos_, "malformed exponent in number");
            }
        }
        double v = 0.0;
        const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (res.ec != std::errc() || res.ptr != text_.data() + pos_ || !std::isfinite(v)) {
            fail(start, "invalid number '" + std::string(text_.substr(start, pos_ - start)) + "'");
        }
        return num(v);
    }

    NodePtr identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
        const std::string name(text_.substr(start, pos_ - start));
        static const std::pair<const char*, Func> funcs[] = {
            {"sin", Func::sin},   {"cos", Func::cos},   {"tan", Func::tan},   {"exp", Func::exp},
            {"log", Func::log},   {"sqrt", Func::sqrt}, {"tanh", Func::tanh}, {"abs", Func::abs}};
        for (const auto& [fname, f] : funcs) {
            if (name != fname) continue;
            if (!accept('(')) fail(start, "function '" + name + "' needs an argument in parentheses");
            skip();
            if (pos_ < text_.size() && text_[pos_] == ')') {
                fail(pos_, "function '" + name + "' takes exactly one argument");
            }
            NodePtr arg = expr();
            skip();
            if (pos_ < text_.size() && text_[pos_] == ',') {
                fail(pos_, "function '" + name + "' takes exactly one argument");
            }
            if (!accept(')')) {
                skip();
                fail(pos_, "expected ')' after the argument of '" + name + "'");
            }
            return call_node(f, arg);
        }
        skip();
        if (pos_ < text_.size() && text_[pos_] == '(') fail(start, "unknown function '" + name + "'");
        if (name == "pi") return make(Kind::pi);
        const bool surface = context_ == VarContext::surface;
        if (name == "x" || name == "y") {
            if (!surface) fail(start, "variable '" + name + "' is not available in axisymmetric context (use r, z)");
            return var_node(name == "x" ? Var::x : Var::y);
        }
        if (name == "r" || name == "z") {
            if (surface) {
                fail(start, "variable '" + name +
                                "' is not available in surface context (use x, y; polar radius is sqrt(x^2 + y^2))");
            }
            return var_node(name == "r" ? Var::r : Var::z);
        }
        fail(start, "unknown identifier '" + name + "'");
    }

    std::string_view text_;
    VarContext context_;
    std::size_t pos_ = 0;
};

enum class OpCode : unsigned char { constant, variable, neg, add, sub, mul, div, pow, call };

struct Op {
    OpCode code;
    Func func = Func::sin;
    int var = 0;
    double value = 0.0;
    const ExprNode* node = nullptr;
};

[[noreturn]] void domain_error(const ExprNode* node, const std::string& what) {
    // Re-wrap as shared pointer without ownership for printing.
    const NodePtr view(NodePtr{}, node);
    throw Error(Errc::eval_error, what + " in '" + print(view) + "'");
}

}  // namespace

ParseError::ParseError(std::size_t offset, const std::string& message)
    : Error(Errc::parse_error, "at byte " + std::to_string(offset) + ": " + message), offset_(offset) {}

const char* to_string(Var v) {
    switch (v) {
        case Var::x: return "x";
        case Var::y: return "y";
        case Var::r: return "r";
        case Var::z: return "z";
    }
    return "?";
}

const char* to_string(Func f) {
    switch (f) {
        case Func::sin: return "sin";
        case Func::cos: return "cos";
        case Func::tan: return "tan";
        case Func::exp: return "exp";
        case Func::log: return "log";
        case Func::sqrt: return "sqrt";
        case Func::tanh: return "tanh";
        case Func::abs: return "abs";
    }
    return "?";
}

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

struct Expr::Program {
    std::vector<Op> ops;
    std::size_t depth = 0;
};

namespace {

void emit(const NodePtr& n, std::vector<Op>& ops, std::size_t& depth, std::size_t& max_depth) {
    auto push = [&](Op op) {
        ops.push_back(op);
        max_depth = std::max(max_depth, depth);
    };
    switch (n->kind) {
        case Kind::number:
        case Kind::pi:
            ++depth;
            push({OpCode::constant, Func::sin, 0, n->kind == Kind::pi ? std::numbers::pi : n->value, n.get()});
            return;
        case Kind::variable:
            ++depth;
            push({OpCode::variable, Func::sin, static_cast<int>(n->var), 0.0, n.get()});
            return;
        case Kind::neg:
            emit(n->a, ops, depth, max_depth);
            push({OpCode::neg, Func::sin, 0, 0.0, n.get()});
            return;
        case Kind::call:
            emit(n->a, ops, depth, max_depth);
            push({OpCode::call, n->func, 0, 0.0, n.get()});
            return;
        default: break;
    }
    emit(n->a, ops, depth, max_depth);
    emit(n->b, ops, depth, max_depth);
    --depth;
    OpCode code = OpCode::add;
    switch (n->kind) {
        case Kind::add: code = OpCode::add; break;
        case Kind::sub: code = OpCode::sub; break;
        case Kind::mul: code = OpCode::mul; break;
        case Kind::div: code = OpCode::div; break;
        default: code = OpCode::pow; break;
    }
    push({code, Func::sin, 0, 0.0, n.get()});
}

}  // namespace

Expr::Expr() : Expr(num(0.0), VarContext::surface) {}

Expr::Expr(NodePtr root, VarContext context) : root_(std::move(root)), context_(context) {
    auto p = std::make_shared<Program>();
    std::size_t depth = 0;
    emit(root_, p->ops, depth, p->depth);
    program_ = std::move(p);
}

Expr Expr::parse(std::string_view text, VarContext context) {
    return Expr(Parser(text, context).parse(), context);
}

Expr Expr::number(double v) { return Expr(num(v), VarContext::surface); }

Expr Expr::variable(Var v) {
    const bool surface = v == Var::x || v == Var::y;
    return Expr(var_node(v), surface ? VarContext::surface : VarContext::axisymmetric);
}

double Expr::eval(const Bindings& bind) const {
    double small[32] = {};
    std::vector<double> large;
    double* stack = small;
    if (program_->depth > 32) {
        large.resize(program_->depth);
        stack = large.data();
    }
    std::size_t sp = 0;
    for (const Op& op : program_->ops) {
        double r = 0.0;
        switch (op.code) {
            case OpCode::constant: stack[sp++] = op.value; continue;
            case OpCode::variable: stack[sp++] = bind[op.var]; continue;
            case OpCode::neg: stack[sp - 1] = -stack[sp - 1]; continue;
            case OpCode::call: {
                const double a = stack[sp - 1];
                switch (op.func) {
                    case Func::sin: r = std::sin(a); break;
                    case Func::cos: r = std::cos(a); break;
                    case Func::tan: r = std::tan(a); break;
                    case Func::exp: r = std::exp(a); break;
                    case Func::log:
                        if (!(a > 0.0)) domain_error(op.node, "log of non-positive value " + format_number(a));
                        r = std::log(a);
                        break;
                    case Func::sqrt:
                        if (a < 0.0) domain_error(op.node, "sqrt of negative value " + format_number(a));
                        r = std::sqrt(a);
                        break;
                    case Func::tanh: r = std::tanh(a); break;
                    case Func::abs: r = std::abs(a); break;
                }
                if (!std::isfinite(r)) domain_error(op.node, "non-finite result");
                stack[sp - 1] = r;
                continue;
            }
            default: break;
        }
        const double b = stack[--sp];
        const double a = stack[sp - 1];
        switch (op.code) {
            case OpCode::add: r = a + b; break;
            case OpCode::sub: r = a - b; break;
            case OpCode::mul: r = a * b; break;
            case OpCode::div:
                if (b == 0.0) domain_error(op.node, "division by zero");
                r = a / b;
                break;
            default:
                if (a < 0.0 && b != std::floor(b)) {
                    domain_error(op.node, "negative base " + format_number(a) + " with non-integer exponent");
                }
                if (a == 0.0 && b < 0.0) domain_error(op.node, "zero raised to a negative power");
                r = std::pow(a, b);
                break;
        }
        if (!std::isfinite(r)) domain_error(op.node, "non-finite result");
        stack[sp - 1] = r;
    }
    return stack[0];
}

double Expr::eval_at(Point2 p) const { return eval({p.x, p.y, p.x, p.y}); }

Expr Expr::derivative(Var v) const { return Expr(diff(root_, v), context_); }

Expr Expr::rename(Var from, Var to) const {
    const bool surface = to == Var::x || to == Var::y;
    return Expr(rename_node(root_, from, to), surface ? VarContext::surface : VarContext::axisymmetric);
}

std::string Expr::to_string() const { return print(root_); }

bool Expr::structurally_equal(const Expr& other) const { return same(root_, other.root_); }

bool Expr::depends_on(Var v) const { return depends(root_, v); }

namespace {
bool has_variables(const NodePtr& n) {
    if (!n) return false;
    if (n->kind == ExprNode::Kind::variable) return true;
    return has_variables(n->a) || has_variables(n->b);
}
}  // namespace

VarContext Expr::joint_context(const Expr& a, const Expr& b) {
    return has_variables(a.root_) ? a.context_ : b.context_;
}

Expr operator+(const Expr& a, const Expr& b) { return Expr(s_add(a.root_, b.root_), Expr::joint_context(a, b)); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(s_sub(a.root_, b.root_), Expr::joint_context(a, b)); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(s_mul(a.root_, b.root_), Expr::joint_context(a, b)); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(s_div(a.root_, b.root_), Expr::joint_context(a, b)); }
Expr operator-(const Expr& a) { return Expr(s_neg(a.root_), a.context_); }
Expr pow(const Expr& a, const Expr& b) { return Expr(s_pow(a.root_, b.root_), Expr::joint_context(a, b)); }
Expr call(Func f, const Expr& a) { return Expr(call_node(f, a.root_), a.context_); }

ScalarField make_scalar_field(const Expr& e) {
    const bool surface = e.context() == VarContext::surface;
    const Var u = surface ? Var::x : Var::r, v = surface ? Var::y : Var::z;
    const Expr du = e.derivative(u), dv = e.derivative(v);
    const Expr duu = du.derivative(u), duv = du.derivative(v), dvv = dv.derivative(v);
    ScalarField f;
    f.value = [e](Point2 p) { return e.eval_at(p); };
    f.gradient = [du, dv](Point2 p) { return std::array<double, 2>{du.eval_at(p), dv.eval_at(p)}; };
    f.hessian = [duu, duv, dvv](Point2 p) {
        return Hessian2{duu.eval_at(p), duv.eval_at(p), dvv.eval_at(p)};
    };
    return f;
}

}  // namespace magtrap
