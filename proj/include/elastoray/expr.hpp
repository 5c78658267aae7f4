#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "elastoray/geometry.hpp"

namespace elastoray {

// Thrown on any malformed expression text; column is 1-based within the line.
struct ExprParseError : std::runtime_error {
    int line, column;
    ExprParseError(const std::string& msg, int line_, int column_)
        : std::runtime_error(msg), line(line_), column(column_) {}
};

// Thrown when evaluation hits a domain fault (log/sqrt of a negative value, division by zero).
struct ExprDomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {
struct ExprNode;
}

// Immutable scalar expression over the variables x, y, z.
//
// Grammar: + - * / ^ (right associative), unary minus, parentheses,
// functions exp, log, sqrt, sin, cos, tanh, and numeric literals.
// Parsing is exact: unknown identifiers and trailing junk are rejected.
class Expr {
  public:
    Expr() = default;  // empty; evaluates as 0

    static Expr parse(const std::string& text);
    static Expr constant(double v);

    double eval(const Vec3& p) const;

    // Exact symbolic partial derivative with respect to x (axis 0), y (1), or z (2).
    Expr derivative(int axis) const;

    Vec3 gradient(const Vec3& p) const;

    std::string to_string() const;

  private:
    explicit Expr(std::shared_ptr<const detail::ExprNode> root) : root_(std::move(root)) {}
    std::shared_ptr<const detail::ExprNode> root_;
};

// A scalar field backed by an expression, with cached symbolic first and
// second partials. Differentiation happens once at construction so pointwise
// evaluation carries no finite-difference error.
class ScalarFieldExpr {
  public:
    ScalarFieldExpr() = default;
    explicit ScalarFieldExpr(Expr e);
    static ScalarFieldExpr parse(const std::string& text);

    double value(const Vec3& p) const { return f_.eval(p); }
    Vec3 grad(const Vec3& p) const;
    Sym3 hessian(const Vec3& p) const;
    double laplacian(const Vec3& p) const;

    const Expr& expr() const { return f_; }
    const Expr& partial(int axis) const { return d_[axis]; }

  private:
    Expr f_;
    Expr d_[3];
    Expr dd_[6];  // Sym3 component order
};

}  // namespace elastoray
