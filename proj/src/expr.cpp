#include "qcontact/expr.hpp"

#include <cctype>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>

namespace qcontact {

std::vector<Token> tokenize(const std::string& source) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < source.size()) {
        char c = source[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < source.size() &&
             std::isdigit(static_cast<unsigned char>(source[i + 1])))) {
            while (i < source.size() && std::isdigit(static_cast<unsigned char>(source[i]))) ++i;
            if (i < source.size() && source[i] == '.') {
                ++i;
                while (i < source.size() && std::isdigit(static_cast<unsigned char>(source[i]))) ++i;
            }
            if (i < source.size() && (source[i] == 'e' || source[i] == 'E')) {
                std::size_t mark = i;
                ++i;
                if (i < source.size() && (source[i] == '+' || source[i] == '-')) ++i;
                if (i < source.size() && std::isdigit(static_cast<unsigned char>(source[i]))) {
                    while (i < source.size() && std::isdigit(static_cast<unsigned char>(source[i])))
                        ++i;
                } else {
                    i = mark; // 'e' belongs to the next token, e.g. "2e" -> 2, e
                }
            }
            tokens.push_back({TokenKind::Number, source.substr(start, i - start), start});
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < source.size() && (std::isalnum(static_cast<unsigned char>(source[i])) ||
                                         source[i] == '_'))
                ++i;
            tokens.push_back({TokenKind::Identifier, source.substr(start, i - start), start});
            continue;
        }
        if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
            tokens.push_back({TokenKind::Operator, std::string(1, c), start});
            ++i;
            continue;
        }
        if (c == '(' || c == ')') {
            tokens.push_back({TokenKind::Paren, std::string(1, c), start});
            ++i;
            continue;
        }
        if (c == ',') {
            tokens.push_back({TokenKind::Comma, ",", start});
            ++i;
            continue;
        }
        throw IllegalCharacter(c, start);
    }
    return tokens;
}

namespace {

ExprAst make_constant(double x) {
    auto node = std::make_shared<ExprNode>();
    node->kind = ExprNode::Kind::Constant;
    node->number = x;
    return node;
}

ExprAst make_coord(CoordKind kind, int index) {
    auto node = std::make_shared<ExprNode>();
    node->kind = ExprNode::Kind::Coord;
    node->coord = kind;
    node->index = index;
    node->has_coord = true;
    return node;
}

ExprAst make_param(std::string name) {
    auto node = std::make_shared<ExprNode>();
    node->kind = ExprNode::Kind::Param;
    node->name = std::move(name);
    return node;
}

ExprAst make_unary(ExprAst child) {
    auto node = std::make_shared<ExprNode>();
    node->kind = ExprNode::Kind::Unary;
    node->has_coord = child->has_coord;
    node->left = std::move(child);
    return node;
}

ExprAst make_binary(BinOp op, ExprAst lhs, ExprAst rhs) {
    auto node = std::make_shared<ExprNode>();
    node->kind = ExprNode::Kind::Binary;
    node->op = op;
    node->has_coord = lhs->has_coord || rhs->has_coord;
    node->left = std::move(lhs);
    node->right = std::move(rhs);
    return node;
}

ExprAst make_call(FnKind fn, ExprAst arg) {
    auto node = std::make_shared<ExprNode>();
    node->kind = ExprNode::Kind::Call;
    node->fn = fn;
    node->has_coord = arg->has_coord;
    node->left = std::move(arg);
    return node;
}

// "q12" -> Coord(Q, 12); rejects index 0.
bool classify_coordinate(const std::string& name, CoordKind& kind, int& index) {
    if (name.size() < 2) return false;
    switch (name[0]) {
    case 'q': kind = CoordKind::Q; break;
    case 'v': kind = CoordKind::V; break;
    case 'z': kind = CoordKind::Z; break;
    default: return false;
    }
    long value = 0;
    for (std::size_t i = 1; i < name.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) return false;
        value = value * 10 + (name[i] - '0');
        if (value > 1'000'000) return false;
    }
    index = static_cast<int>(value);
    return true;
}

bool classify_function(const std::string& name, FnKind& fn) {
    if (name == "sin")  { fn = FnKind::Sin;  return true; }
    if (name == "cos")  { fn = FnKind::Cos;  return true; }
    if (name == "exp")  { fn = FnKind::Exp;  return true; }
    if (name == "log")  { fn = FnKind::Log;  return true; }
    if (name == "sqrt") { fn = FnKind::Sqrt; return true; }
    if (name == "tanh") { fn = FnKind::Tanh; return true; }
    if (name == "abs")  { fn = FnKind::Abs;  return true; }
    return false;
}

class Parser {
public:
    Parser(std::vector<Token> tokens, std::size_t source_length)
        : tokens_(std::move(tokens)), end_pos_(source_length) {}

    ExprAst run() {
        ExprAst result = parseSum();
        if (!atEnd()) throw SyntaxError("end of input", peek().position);
        return result;
    }

private:
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    std::size_t end_pos_;

    bool atEnd() const { return pos_ >= tokens_.size(); }

    const Token& peek() const { return tokens_[pos_]; }

    std::size_t herePosition() const { return atEnd() ? end_pos_ : peek().position; }

    bool consumeOperator(const char* op) {
        if (!atEnd() && peek().kind == TokenKind::Operator && peek().lexeme == op) {
            ++pos_;
            return true;
        }
        return false;
    }

    bool consumeParen(char p) {
        if (!atEnd() && peek().kind == TokenKind::Paren && peek().lexeme[0] == p) {
            ++pos_;
            return true;
        }
        return false;
    }

    ExprAst parseSum() {
        ExprAst lhs = parseProduct();
        while (true) {
            if (consumeOperator("+"))      lhs = make_binary(BinOp::Add, lhs, parseProduct());
            else if (consumeOperator("-")) lhs = make_binary(BinOp::Sub, lhs, parseProduct());
            else return lhs;
        }
    }

    ExprAst parseProduct() {
        ExprAst lhs = parseUnary();
        while (true) {
            if (consumeOperator("*"))      lhs = make_binary(BinOp::Mul, lhs, parseUnary());
            else if (consumeOperator("/")) lhs = make_binary(BinOp::Div, lhs, parseUnary());
            else return lhs;
        }
    }

    // '^' binds tighter than unary minus: -q1^2 is -(q1^2).
    ExprAst parseUnary() {
        if (consumeOperator("-")) return make_unary(parseUnary());
        if (consumeOperator("+")) return parseUnary();
        return parsePower();
    }

    ExprAst parsePower() {
        ExprAst base = parsePrimary();
        if (consumeOperator("^")) {
            // Right-assoc, and the exponent may carry its own unary sign.
            return make_binary(BinOp::Pow, base, parseUnary());
        }
        return base;
    }

    ExprAst parsePrimary() {
        if (atEnd()) throw SyntaxError("a number, identifier or '('", end_pos_);
        const Token tok = peek();
        switch (tok.kind) {
        case TokenKind::Number: {
            ++pos_;
            try {
                return make_constant(std::stod(tok.lexeme));
            } catch (const std::exception&) {
                throw SyntaxError("a representable number", tok.position);
            }
        }
        case TokenKind::Identifier: {
            ++pos_;
            if (consumeParen('(')) {
                FnKind fn;
                if (!classify_function(tok.lexeme, fn))
                    throw UnknownFunction(tok.lexeme, tok.position);
                ExprAst arg = parseSum();
                if (!consumeParen(')')) throw SyntaxError("')'", herePosition());
                return make_call(fn, arg);
            }
            CoordKind kind;
            int index;
            if (classify_coordinate(tok.lexeme, kind, index)) {
                if (index < 1)
                    throw SyntaxError("coordinate index >= 1", tok.position);
                return make_coord(kind, index);
            }
            if (tok.lexeme == "pi") return make_constant(std::numbers::pi);
            if (tok.lexeme == "e")  return make_constant(std::numbers::e);
            return make_param(tok.lexeme);
        }
        case TokenKind::Paren:
            if (tok.lexeme == "(") {
                ++pos_;
                ExprAst inner = parseSum();
                if (!consumeParen(')')) throw SyntaxError("')'", herePosition());
                return inner;
            }
            throw SyntaxError("a number, identifier or '('", tok.position);
        default:
            throw SyntaxError("a number, identifier or '('", tok.position);
        }
    }
};

} // namespace

ExprAst parse_expression(const std::string& source) {
    return Parser(tokenize(source), source.size()).run();
}

namespace {

// Precedence levels used by the printer; higher binds tighter.
int node_precedence(const ExprAst& ast) {
    switch (ast->kind) {
    case ExprNode::Kind::Binary:
        switch (ast->op) {
        case BinOp::Add:
        case BinOp::Sub: return 1;
        case BinOp::Mul:
        case BinOp::Div: return 2;
        case BinOp::Pow: return 4;
        }
        return 0;
    case ExprNode::Kind::Unary: return 3;
    default: return 5; // atoms and calls never need parentheses
    }
}

std::string format_number(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void print_rec(const ExprAst& ast, std::string& out) {
    auto child = [&](const ExprAst& c, bool needs_paren) {
        if (needs_paren) {
            out += '(';
            print_rec(c, out);
            out += ')';
        } else {
            print_rec(c, out);
        }
    };
    switch (ast->kind) {
    case ExprNode::Kind::Constant:
        if (ast->number < 0) {
            out += '(';
            out += format_number(ast->number);
            out += ')';
        } else {
            out += format_number(ast->number);
        }
        return;
    case ExprNode::Kind::Coord:
        out += (ast->coord == CoordKind::Q ? 'q' : ast->coord == CoordKind::V ? 'v' : 'z');
        out += std::to_string(ast->index);
        return;
    case ExprNode::Kind::Param:
        out += ast->name;
        return;
    case ExprNode::Kind::Unary:
        out += '-';
        child(ast->left, node_precedence(ast->left) < 3);
        return;
    case ExprNode::Kind::Binary: {
        int prec = node_precedence(ast);
        const char* op = "";
        bool paren_left = false, paren_right = false;
        // Left-assoc operators parenthesize a right child of equal
        // precedence so the reparsed tree is structurally identical.
        switch (ast->op) {
        case BinOp::Add:
            op = " + ";
            paren_left = node_precedence(ast->left) < prec;
            paren_right = node_precedence(ast->right) <= prec;
            break;
        case BinOp::Sub:
            op = " - ";
            paren_left = node_precedence(ast->left) < prec;
            paren_right = node_precedence(ast->right) <= prec;
            break;
        case BinOp::Mul:
            op = "*";
            paren_left = node_precedence(ast->left) < prec;
            paren_right = node_precedence(ast->right) <= prec;
            break;
        case BinOp::Div:
            op = "/";
            paren_left = node_precedence(ast->left) < prec;
            paren_right = node_precedence(ast->right) <= prec;
            break;
        case BinOp::Pow:
            op = "^";
            paren_left = node_precedence(ast->left) <= prec;  // right-assoc
            paren_right = node_precedence(ast->right) < 3;    // allow -x in exponent
            break;
        }
        child(ast->left, paren_left);
        out += op;
        child(ast->right, paren_right);
        return;
    }
    case ExprNode::Kind::Call: {
        switch (ast->fn) {
        case FnKind::Sin:  out += "sin";  break;
        case FnKind::Cos:  out += "cos";  break;
        case FnKind::Exp:  out += "exp";  break;
        case FnKind::Log:  out += "log";  break;
        case FnKind::Sqrt: out += "sqrt"; break;
        case FnKind::Tanh: out += "tanh"; break;
        case FnKind::Abs:  out += "abs";  break;
        }
        out += '(';
        print_rec(ast->left, out);
        out += ')';
        return;
    }
    }
}

} // namespace

std::string print_expression(const ExprAst& ast) {
    std::string out;
    print_rec(ast, out);
    return out;
}

bool structurally_equal(const ExprAst& a, const ExprAst& b) {
    if (a == b) return true;
    if (!a || !b || a->kind != b->kind) return false;
    switch (a->kind) {
    case ExprNode::Kind::Constant: return a->number == b->number;
    case ExprNode::Kind::Coord:    return a->coord == b->coord && a->index == b->index;
    case ExprNode::Kind::Param:    return a->name == b->name;
    case ExprNode::Kind::Unary:    return structurally_equal(a->left, b->left);
    case ExprNode::Kind::Binary:
        return a->op == b->op && structurally_equal(a->left, b->left) &&
               structurally_equal(a->right, b->right);
    case ExprNode::Kind::Call:
        return a->fn == b->fn && structurally_equal(a->left, b->left);
    }
    return false;
}

CoordUsage coordinate_usage(const ExprAst& ast) {
    CoordUsage usage;
    std::function<void(const ExprAst&)> walk = [&](const ExprAst& node) {
        if (!node) return;
        if (node->kind == ExprNode::Kind::Coord) {
            switch (node->coord) {
            case CoordKind::Q: usage.max_q = std::max(usage.max_q, node->index); break;
            case CoordKind::V: usage.max_v = std::max(usage.max_v, node->index); break;
            case CoordKind::Z: usage.max_z = std::max(usage.max_z, node->index); break;
            }
        }
        walk(node->left);
        walk(node->right);
    };
    walk(ast);
    return usage;
}

std::vector<std::string> parameter_names(const ExprAst& ast) {
    std::vector<std::string> names;
    std::set<std::string> seen;
    std::function<void(const ExprAst&)> walk = [&](const ExprAst& node) {
        if (!node) return;
        if (node->kind == ExprNode::Kind::Param && seen.insert(node->name).second)
            names.push_back(node->name);
        walk(node->left);
        walk(node->right);
    };
    walk(ast);
    return names;
}

double evaluate(const ExprAst& ast, const ExtendedPoint& point, const ParamMap& params) {
    return evaluate_as<double>(ast, std::span<const double>(point.coords), point.n,
                               point.qcount, params);
}

} // namespace qcontact
