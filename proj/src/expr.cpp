#include "elastoray/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <vector>

namespace elastoray {
namespace detail {

enum class Op { Add, Sub, Mul, Div, Pow, Neg, Exp, Log, Sqrt, Sin, Cos, Tanh, Const, Var };

struct ExprNode {
    Op op = Op::Const;
    double value = 0.0;  // Const
    int axis = 0;        // Var: 0=x 1=y 2=z
    std::shared_ptr<const ExprNode> a, b;
};

using NodeP = std::shared_ptr<const ExprNode>;

NodeP make_const(double v) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Const;
    n->value = v;
    return n;
}

NodeP make_var(int axis) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Var;
    n->axis = axis;
    return n;
}

bool is_const(const NodeP& n, double v) { return n->op == Op::Const && n->value == v; }
bool is_const(const NodeP& n) { return n->op == Op::Const; }

NodeP make_unary(Op op, NodeP a);

// Smart constructors fold constants and prune identities so derivative trees
// stay small enough for repeated pointwise evaluation.
NodeP make_binary(Op op, NodeP a, NodeP b) {
    if (is_const(a) && is_const(b)) {
        double va = a->value, vb = b->value;
        switch (op) {
            case Op::Add: return make_const(va + vb);
            case Op::Sub: return make_const(va - vb);
            case Op::Mul: return make_const(va * vb);
            case Op::Div: if (vb != 0.0) return make_const(va / vb); break;
            case Op::Pow: return make_const(std::pow(va, vb));
            default: break;
        }
    }
    switch (op) {
        case Op::Add:
            if (is_const(a, 0.0)) return b;
            if (is_const(b, 0.0)) return a;
            break;
        case Op::Sub:
            if (is_const(b, 0.0)) return a;
            if (is_const(a, 0.0)) return make_unary(Op::Neg, b);
            break;
        case Op::Mul:
            if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
            if (is_const(a, 1.0)) return b;
            if (is_const(b, 1.0)) return a;
            break;
        case Op::Div:
            if (is_const(a, 0.0)) return make_const(0.0);
            if (is_const(b, 1.0)) return a;
            break;
        case Op::Pow:
            if (is_const(b, 1.0)) return a;
            if (is_const(b, 0.0)) return make_const(1.0);
            break;
        default:
            break;
    }
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodeP make_unary(Op op, NodeP a) {
    if (is_const(a)) {
        double v = a->value;
        switch (op) {
            case Op::Neg: return make_const(-v);
            case Op::Exp: return make_const(std::exp(v));
            case Op::Sin: return make_const(std::sin(v));
            case Op::Cos: return make_const(std::cos(v));
            case Op::Tanh: return make_const(std::tanh(v));
            case Op::Log: if (v > 0.0) return make_const(std::log(v)); break;
            case Op::Sqrt: if (v >= 0.0) return make_const(std::sqrt(v)); break;
            default: break;
        }
    }
    if (op == Op::Neg && a->op == Op::Neg) return a->a;
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->a = std::move(a);
    return n;
}

double eval_node(const ExprNode* n, const Vec3& p) {
    switch (n->op) {
        case Op::Const: return n->value;
        case Op::Var: return p[n->axis];
        case Op::Add: return eval_node(n->a.get(), p) + eval_node(n->b.get(), p);
        case Op::Sub: return eval_node(n->a.get(), p) - eval_node(n->b.get(), p);
        case Op::Mul: return eval_node(n->a.get(), p) * eval_node(n->b.get(), p);
        case Op::Div: {
            double d = eval_node(n->b.get(), p);
            if (d == 0.0) throw ExprDomainError("division by zero in expression evaluation");
            return eval_node(n->a.get(), p) / d;
        }
        case Op::Pow: return std::pow(eval_node(n->a.get(), p), eval_node(n->b.get(), p));
        case Op::Neg: return -eval_node(n->a.get(), p);
        case Op::Exp: return std::exp(eval_node(n->a.get(), p));
        case Op::Log: {
            double v = eval_node(n->a.get(), p);
            if (v <= 0.0) throw ExprDomainError("log of non-positive value in expression evaluation");
            return std::log(v);
        }
        case Op::Sqrt: {
            double v = eval_node(n->a.get(), p);
            if (v < 0.0) throw ExprDomainError("sqrt of negative value in expression evaluation");
            return std::sqrt(v);
        }
        case Op::Sin: return std::sin(eval_node(n->a.get(), p));
        case Op::Cos: return std::cos(eval_node(n->a.get(), p));
        case Op::Tanh: return std::tanh(eval_node(n->a.get(), p));
    }
    return 0.0;
}

NodeP diff_node(const NodeP& n, int axis) {
    switch (n->op) {
        case Op::Const: return make_const(0.0);
        case Op::Var: return make_const(n->axis == axis ? 1.0 : 0.0);
        case Op::Add: return make_binary(Op::Add, diff_node(n->a, axis), diff_node(n->b, axis));
        case Op::Sub: return make_binary(Op::Sub, diff_node(n->a, axis), diff_node(n->b, axis));
        case Op::Mul:
            return make_binary(Op::Add,
                               make_binary(Op::Mul, diff_node(n->a, axis), n->b),
                               make_binary(Op::Mul, n->a, diff_node(n->b, axis)));
        case Op::Div:
            // (u/v)' = u'/v - u v'/v^2
            return make_binary(
                Op::Sub, make_binary(Op::Div, diff_node(n->a, axis), n->b),
                make_binary(Op::Div, make_binary(Op::Mul, n->a, diff_node(n->b, axis)),
                            make_binary(Op::Mul, n->b, n->b)));
        case Op::Pow: {
            if (is_const(n->b)) {
                // (u^c)' = c u^(c-1) u'
                NodeP expo = make_const(n->b->value - 1.0);
                return make_binary(Op::Mul, n->b,
                                   make_binary(Op::Mul, make_binary(Op::Pow, n->a, expo),
                                               diff_node(n->a, axis)));
            }
            // u^v = exp(v log u): (u^v)' = u^v (v' log u + v u'/u)
            NodeP term1 = make_binary(Op::Mul, diff_node(n->b, axis), make_unary(Op::Log, n->a));
            NodeP term2 = make_binary(Op::Div, make_binary(Op::Mul, n->b, diff_node(n->a, axis)), n->a);
            return make_binary(Op::Mul, n, make_binary(Op::Add, term1, term2));
        }
        case Op::Neg: return make_unary(Op::Neg, diff_node(n->a, axis));
        case Op::Exp: return make_binary(Op::Mul, n, diff_node(n->a, axis));
        case Op::Log: return make_binary(Op::Div, diff_node(n->a, axis), n->a);
        case Op::Sqrt:
            return make_binary(Op::Div, diff_node(n->a, axis),
                               make_binary(Op::Mul, make_const(2.0), n));
        case Op::Sin: return make_binary(Op::Mul, make_unary(Op::Cos, n->a), diff_node(n->a, axis));
        case Op::Cos:
            return make_unary(Op::Neg,
                              make_binary(Op::Mul, make_unary(Op::Sin, n->a), diff_node(n->a, axis)));
        case Op::Tanh: {
            // (tanh u)' = (1 - tanh^2 u) u'
            NodeP t2 = make_binary(Op::Mul, n, n);
            return make_binary(Op::Mul, make_binary(Op::Sub, make_const(1.0), t2),
                               diff_node(n->a, axis));
        }
    }
    return make_const(0.0);
}

void print_node(const ExprNode* n, std::ostringstream& out) {
    auto binop = [&](const char* sym) {
        out << '(';
        print_node(n->a.get(), out);
        out << sym;
        print_node(n->b.get(), out);
        out << ')';
    };
    switch (n->op) {
        case Op::Const: out << n->value; break;
        case Op::Var: out << "xyz"[n->axis]; break;
        case Op::Add: binop("+"); break;
        case Op::Sub: binop("-"); break;
        case Op::Mul: binop("*"); break;
        case Op::Div: binop("/"); break;
        case Op::Pow: binop("^"); break;
        case Op::Neg:
            out << "(-";
            print_node(n->a.get(), out);
            out << ')';
            break;
        case Op::Exp: out << "exp("; print_node(n->a.get(), out); out << ')'; break;
        case Op::Log: out << "log("; print_node(n->a.get(), out); out << ')'; break;
        case Op::Sqrt: out << "sqrt("; print_node(n->a.get(), out); out << ')'; break;
        case Op::Sin: out << "sin("; print_node(n->a.get(), out); out << ')'; break;
        case Op::Cos: out << "cos("; print_node(n->a.get(), out); out << ')'; break;
        case Op::Tanh: out << "tanh("; print_node(n->a.get(), out); out << ')'; break;
    }
}

// ---------------------------------------------------------------------------
// Recursive-descent parser
// ---------------------------------------------------------------------------

class Parser {
  public:
    explicit Parser(const std::string& text) : text_(text) {}

    NodeP run() {
        NodeP e = parse_sum();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return e;
    }

  private:
    const std::string& text_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        int line = 1, col = 1;
        for (size_t i = 0; i < pos_ && i < text_.size(); ++i) {
            if (text_[i] == '\n') { ++line; col = 1; } else { ++col; }
        }
        throw ExprParseError(msg, line, col);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) { ++pos_; return true; }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    NodeP parse_sum() {
        NodeP e = parse_term();
        for (;;) {
            if (accept('+')) e = make_binary(Op::Add, e, parse_term());
            else if (accept('-')) e = make_binary(Op::Sub, e, parse_term());
            else return e;
        }
    }

    NodeP parse_term() {
        NodeP e = parse_factor();
        for (;;) {
            if (accept('*')) e = make_binary(Op::Mul, e, parse_factor());
            else if (accept('/')) e = make_binary(Op::Div, e, parse_factor());
            else return e;
        }
    }

    // factor := '-' factor | primary ('^' factor)?   so -x^2 == -(x^2)
    NodeP parse_factor() {
        if (accept('-')) return make_unary(Op::Neg, parse_factor());
        NodeP base = parse_primary();
        if (accept('^')) return make_binary(Op::Pow, base, parse_factor());
        return base;
    }

    NodeP parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodeP e = parse_sum();
            if (!accept(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
        fail(std::string("unexpected character '") + c + "'");
    }

    NodeP parse_number() {
        const char* begin = text_.c_str() + pos_;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed number");
        pos_ += static_cast<size_t>(end - begin);
        return make_const(v);
    }

    NodeP parse_ident() {
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string name = text_.substr(start, pos_ - start);
        if (name == "x") return make_var(0);
        if (name == "y") return make_var(1);
        if (name == "z") return make_var(2);
        static const struct { const char* name; Op op; } kFns[] = {
            {"exp", Op::Exp}, {"log", Op::Log}, {"sqrt", Op::Sqrt},
            {"sin", Op::Sin}, {"cos", Op::Cos}, {"tanh", Op::Tanh}};
        for (const auto& f : kFns) {
            if (name == f.name) {
                if (!accept('(')) fail("expected '(' after function name '" + name + "'");
                NodeP arg = parse_sum();
                if (!accept(')')) fail("expected ')' closing call to '" + name + "'");
                return make_unary(f.op, arg);
            }
        }
        pos_ = start;
        fail("unknown identifier '" + name + "'");
    }
};

}  // namespace detail

Expr Expr::parse(const std::string& text) {
    return Expr(detail::Parser(text).run());
}

Expr Expr::constant(double v) { return Expr(detail::make_const(v)); }

double Expr::eval(const Vec3& p) const {
    if (!root_) return 0.0;
    return detail::eval_node(root_.get(), p);
}

Expr Expr::derivative(int axis) const {
    if (!root_) return constant(0.0);
    return Expr(detail::diff_node(root_, axis));
}

Vec3 Expr::gradient(const Vec3& p) const {
    return {derivative(0).eval(p), derivative(1).eval(p), derivative(2).eval(p)};
}

std::string Expr::to_string() const {
    if (!root_) return "0";
    std::ostringstream out;
    out.precision(17);
    detail::print_node(root_.get(), out);
    return out.str();
}

ScalarFieldExpr::ScalarFieldExpr(Expr e) : f_(std::move(e)) {
    for (int i = 0; i < 3; ++i) d_[i] = f_.derivative(i);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) dd_[Sym3::index(i, j)] = d_[i].derivative(j);
}

ScalarFieldExpr ScalarFieldExpr::parse(const std::string& text) {
    return ScalarFieldExpr(Expr::parse(text));
}

Vec3 ScalarFieldExpr::grad(const Vec3& p) const {
    return {d_[0].eval(p), d_[1].eval(p), d_[2].eval(p)};
}

Sym3 ScalarFieldExpr::hessian(const Vec3& p) const {
    Sym3 h;
    for (int k = 0; k < 6; ++k) h.c[k] = dd_[k].eval(p);
    return h;
}

double ScalarFieldExpr::laplacian(const Vec3& p) const {
    return dd_[0].eval(p) + dd_[1].eval(p) + dd_[2].eval(p);
}

}  // namespace elastoray
