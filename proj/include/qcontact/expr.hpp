#ifndef QCONTACT_EXPR_HPP
#define QCONTACT_EXPR_HPP

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qcontact/errors.hpp"
#include "qcontact/point.hpp"

namespace qcontact {

// The expression language in which every scalar field (Lagrangians,
// Hamiltonians, covector and vector field components) is written.
//
// Grammar:
//   expression := term (('+' | '-') term)*
//   term       := unary (('*' | '/') unary)*
//   unary      := '-' unary | power
//   power      := primary ('^' unary)?          (right associative)
//   primary    := number | identifier | identifier '(' expression ')'
//              | '(' expression ')'
//
// Identifiers of the form q<digits>, v<digits>, z<digits> are coordinates
// (1-based); 'pi' and 'e' are constants; everything else is a named
// parameter.  Implicit multiplication is rejected.

enum class TokenKind { Number, Identifier, Operator, Paren, Comma, End };

struct Token {
    TokenKind kind;
    std::string lexeme;
    std::size_t position;
};

std::vector<Token> tokenize(const std::string& source);

enum class CoordKind { Q, V, Z };
enum class BinOp { Add, Sub, Mul, Div, Pow };
enum class FnKind { Sin, Cos, Exp, Log, Sqrt, Tanh, Abs };

struct ExprNode;
using ExprAst = std::shared_ptr<const ExprNode>;

struct ExprNode {
    enum class Kind { Constant, Coord, Param, Unary, Binary, Call };

    Kind kind;
    double number = 0.0;      // Constant
    CoordKind coord{};        // Coord
    int index = 0;            // Coord, 1-based
    std::string name;         // Param
    BinOp op{};               // Binary
    FnKind fn{};              // Call
    ExprAst left, right;      // Unary/Call use left only

    // True when the subtree references any coordinate; a coord-free exponent
    // is a constant with respect to differentiation.
    bool has_coord = false;
};

ExprAst parse_expression(const std::string& source);

// Printed form re-parses to a structurally identical tree.
std::string print_expression(const ExprAst& ast);

bool structurally_equal(const ExprAst& a, const ExprAst& b);

// Largest coordinate index used per kind, for binding-time validation.
struct CoordUsage {
    int max_q = 0, max_v = 0, max_z = 0;
};
CoordUsage coordinate_usage(const ExprAst& ast);

// Parameter names referenced by the tree, in first-appearance order.
std::vector<std::string> parameter_names(const ExprAst& ast);

// Scalar adaptors so the evaluator below works for double and for the
// (possibly nested) hyper-dual types of dual.hpp.  They live in the same
// namespace as Dual2 so the overloads are found by argument-dependent lookup.
inline double scalar_value(double x) { return x; }

inline double pow_scalar(double x, double c) { return std::pow(x, c); }

inline double pow_general(double x, double y) {
    if (x <= 0.0) throw DomainError("x^y with variable exponent requires x > 0");
    return std::pow(x, y);
}

inline double sin_s(double x) { return std::sin(x); }
inline double cos_s(double x) { return std::cos(x); }
inline double exp_s(double x) { return std::exp(x); }
inline double tanh_s(double x) { return std::tanh(x); }

inline double log_s(double x) {
    if (x <= 0.0) throw DomainError("log of non-positive argument");
    return std::log(x);
}

inline double sqrt_s(double x) {
    if (x < 0.0) throw DomainError("sqrt of negative argument");
    return std::sqrt(x);
}

inline double abs_s(double x) { return std::fabs(x); }

// Evaluate a tree over any scalar type providing the adaptors above.
// Coordinates are the flat (q,v,z) vector; parameters come from the map.
template <class S>
S evaluate_as(const ExprAst& ast, std::span<const S> coords, int n, int qcount,
              const ParamMap& params) {
    switch (ast->kind) {
    case ExprNode::Kind::Constant:
        return S(ast->number);
    case ExprNode::Kind::Coord: {
        int offset = 0, limit = 0;
        switch (ast->coord) {
        case CoordKind::Q: offset = 0;     limit = n;      break;
        case CoordKind::V: offset = n;     limit = n;      break;
        case CoordKind::Z: offset = 2 * n; limit = qcount; break;
        }
        if (ast->index < 1 || ast->index > limit)
            throw IndexOutOfRange("coordinate index " + std::to_string(ast->index) +
                                  " out of range for (n=" + std::to_string(n) +
                                  ", q=" + std::to_string(qcount) + ")");
        return coords[static_cast<std::size_t>(offset + ast->index - 1)];
    }
    case ExprNode::Kind::Param: {
        auto it = params.find(ast->name);
        if (it == params.end()) throw UnboundParameter(ast->name);
        return S(it->second);
    }
    case ExprNode::Kind::Unary:
        return -evaluate_as<S>(ast->left, coords, n, qcount, params);
    case ExprNode::Kind::Binary: {
        S lhs = evaluate_as<S>(ast->left, coords, n, qcount, params);
        switch (ast->op) {
        case BinOp::Add: return lhs + evaluate_as<S>(ast->right, coords, n, qcount, params);
        case BinOp::Sub: return lhs - evaluate_as<S>(ast->right, coords, n, qcount, params);
        case BinOp::Mul: return lhs * evaluate_as<S>(ast->right, coords, n, qcount, params);
        case BinOp::Div: return lhs / evaluate_as<S>(ast->right, coords, n, qcount, params);
        case BinOp::Pow:
            if (!ast->right->has_coord) {
                // Constant exponent: exact power rule, valid for any base.
                double c = evaluate_as<double>(ast->right, std::span<const double>{}, n,
                                               qcount, params);
                return pow_scalar(lhs, c);
            }
            return pow_general(lhs, evaluate_as<S>(ast->right, coords, n, qcount, params));
        }
        break;
    }
    case ExprNode::Kind::Call: {
        S arg = evaluate_as<S>(ast->left, coords, n, qcount, params);
        switch (ast->fn) {
        case FnKind::Sin:  return sin_s(arg);
        case FnKind::Cos:  return cos_s(arg);
        case FnKind::Exp:  return exp_s(arg);
        case FnKind::Log:  return log_s(arg);
        case FnKind::Sqrt: return sqrt_s(arg);
        case FnKind::Tanh: return tanh_s(arg);
        case FnKind::Abs:  return abs_s(arg);
        }
        break;
    }
    }
    throw Error("corrupt expression node");
}

double evaluate(const ExprAst& ast, const ExtendedPoint& point, const ParamMap& params);

} // namespace qcontact

#endif // QCONTACT_EXPR_HPP
