#include "imprel/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

namespace imprel
{

int arity(Opcode op) noexcept
{
    switch (op) {
    case Opcode::Const:
    case Opcode::VarZ:
    case Opcode::VarP:
        return 0;
    case Opcode::Neg:
    case Opcode::Exp:
    case Opcode::PowInt:
        return 1;
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Mul:
    case Opcode::Div:
        return 2;
    }
    return 0;
}

const char* opcode_name(Opcode op) noexcept
{
    switch (op) {
    case Opcode::Const: return "const";
    case Opcode::VarZ: return "var_z";
    case Opcode::VarP: return "var_p";
    case Opcode::Neg: return "neg";
    case Opcode::Add: return "add";
    case Opcode::Sub: return "sub";
    case Opcode::Mul: return "mul";
    case Opcode::Div: return "div";
    case Opcode::Exp: return "exp";
    case Opcode::PowInt: return "pow_int";
    }
    return "?";
}

ExprGraph::ExprGraph(std::vector<ExprNode> nodes, int n_z, int n_p, int root)
    : nodes_(std::move(nodes)), n_z_(n_z), n_p_(n_p), root_(root)
{
    if (n_z < 0 || n_p < 0)
        throw std::invalid_argument("ExprGraph: negative dimension");
    if (root < 0 || static_cast<std::size_t>(root) >= nodes_.size())
        throw std::invalid_argument("ExprGraph: root out of range");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const ExprNode& n = nodes_[i];
        const int k = arity(n.op);
        for (int a = 0; a < 2; ++a) {
            const int arg = n.args[static_cast<std::size_t>(a)];
            if (a < k) {
                if (arg < 0 || static_cast<std::size_t>(arg) >= i)
                    throw std::invalid_argument("ExprGraph: operand does not precede node " + std::to_string(i));
            } else if (arg != -1) {
                throw std::invalid_argument("ExprGraph: arity mismatch at node " + std::to_string(i));
            }
        }
        if (n.op == Opcode::VarZ && (n.index < 0 || n.index >= n_z))
            throw std::invalid_argument("ExprGraph: z index out of range");
        if (n.op == Opcode::VarP && (n.index < 0 || n.index >= n_p))
            throw std::invalid_argument("ExprGraph: p index out of range");
        if (n.op == Opcode::Const && !std::isfinite(n.value))
            throw std::invalid_argument("ExprGraph: non-finite constant");
    }
}

ParseError::ParseError(const std::string& msg, std::size_t position)
    : std::runtime_error(msg + " at position " + std::to_string(position)), position_(position)
{
}

namespace
{

class Parser
{
public:
    Parser(std::string_view text, int n_z, int n_p) : text_(text), n_z_(n_z), n_p_(n_p) {}

    ExprGraph run()
    {
        const int root = expression();
        skip_space();
        if (pos_ != text_.size())
            throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
        return ExprGraph(std::move(nodes_), n_z_, n_p_, root);
    }

private:
    int push(ExprNode n)
    {
        nodes_.push_back(n);
        return static_cast<int>(nodes_.size()) - 1;
    }

    int binary(Opcode op, int lhs, int rhs)
    {
        ExprNode n;
        n.op = op;
        n.args = {lhs, rhs};
        return push(n);
    }

    int unary(Opcode op, int arg, int index = 0)
    {
        ExprNode n;
        n.op = op;
        n.args = {arg, -1};
        n.index = index;
        return push(n);
    }

    void skip_space()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c)) {
            if (pos_ >= text_.size())
                throw ParseError(std::string("expected '") + c + "' before end of input", pos_);
            throw ParseError(std::string("expected '") + c + "'", pos_);
        }
    }

    int expression()
    {
        int lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = binary(Opcode::Add, lhs, term());
            else if (accept('-'))
                lhs = binary(Opcode::Sub, lhs, term());
            else
                return lhs;
        }
    }

    int term()
    {
        int lhs = signed_factor();
        for (;;) {
            if (accept('*'))
                lhs = binary(Opcode::Mul, lhs, signed_factor());
            else if (accept('/'))
                lhs = binary(Opcode::Div, lhs, signed_factor());
            else
                return lhs;
        }
    }

    int signed_factor()
    {
        if (accept('-'))
            return unary(Opcode::Neg, signed_factor());
        if (accept('+'))
            return signed_factor();
        return power();
    }

    int power()
    {
        const int base = primary();
        if (!accept('^'))
            return base;
        const int exponent = integer_exponent();
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == '^')
            throw ParseError("chained exponent; parenthesize the base", pos_);
        return unary(Opcode::PowInt, base, exponent);
    }

    int integer_exponent()
    {
        if (accept('(')) {
            const int m = integer_exponent();
            expect(')');
            return m;
        }
        skip_space();
        const std::size_t start = pos_;
        bool negative = false;
        if (accept('-'))
            negative = true;
        else
            accept('+');
        skip_space();
        const std::size_t digits = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        if (pos_ == digits)
            throw ParseError("non-integer exponent", start);
        if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E'))
            throw ParseError("non-integer exponent", start);
        int m = 0;
        const auto res = std::from_chars(text_.data() + digits, text_.data() + pos_, m);
        if (res.ec != std::errc())
            throw ParseError("exponent out of range", start);
        return negative ? -m : m;
    }

    int primary()
    {
        skip_space();
        if (pos_ >= text_.size())
            throw ParseError("unexpected end of input", pos_);
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            const int inner = expression();
            expect(')');
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
            return identifier();
        throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }

    int number()
    {
        const std::size_t start = pos_;
        auto is_digit = [&](std::size_t i) {
            return i < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i]));
        };
        while (is_digit(pos_))
            ++pos_;
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (is_digit(pos_))
                ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < text_.size() && (text_[look] == '+' || text_[look] == '-'))
                ++look;
            if (is_digit(look)) {
                pos_ = look;
                while (is_digit(pos_))
                    ++pos_;
            }
        }
        double v = 0.0;
        const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (res.ec != std::errc() || res.ptr != text_.data() + pos_ || !std::isfinite(v))
            throw ParseError("malformed number", start);
        ExprNode n;
        n.op = Opcode::Const;
        n.value = v;
        return push(n);
    }

    int identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string_view name = text_.substr(start, pos_ - start);
        if (name == "exp") {
            expect('(');
            const int arg = expression();
            expect(')');
            return unary(Opcode::Exp, arg);
        }
        if (name.size() >= 2 && (name[0] == 'z' || name[0] == 'p')) {
            int k = 0;
            const auto res = std::from_chars(name.data() + 1, name.data() + name.size(), k);
            const int limit = name[0] == 'z' ? n_z_ : n_p_;
            if (res.ec == std::errc() && res.ptr == name.data() + name.size() && name[1] != '0' && k >= 1 &&
                k <= limit) {
                ExprNode n;
                n.op = name[0] == 'z' ? Opcode::VarZ : Opcode::VarP;
                n.index = k - 1;
                return push(n);
            }
        }
        throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int n_z_;
    int n_p_;
    std::vector<ExprNode> nodes_;
};

void check_finite(double v, const char* what)
{
    if (!std::isfinite(v))
        throw EvalError(EvalError::Kind::Overflow, std::string("overflow in ") + what);
}

}  // namespace

ExprGraph parse(std::string_view text, int n_z, int n_p)
{
    return Parser(text, n_z, n_p).run();
}

std::string to_string(const ExprGraph& graph)
{
    return forward_sweep<std::string>(
        graph,
        [](const ExprNode& n) -> std::string {
            switch (n.op) {
            case Opcode::VarZ: return "z" + std::to_string(n.index + 1);
            case Opcode::VarP: return "p" + std::to_string(n.index + 1);
            default: {
                char buf[40];
                std::snprintf(buf, sizeof buf, "%.17g", n.value);
                return buf[0] == '-' ? "(" + std::string(buf) + ")" : std::string(buf);
            }
            }
        },
        [](const ExprNode& n, const std::string& x, const std::string& y) -> std::string {
            switch (n.op) {
            case Opcode::Neg: return "(-" + x + ")";
            case Opcode::Add: return "(" + x + " + " + y + ")";
            case Opcode::Sub: return "(" + x + " - " + y + ")";
            case Opcode::Mul: return "(" + x + " * " + y + ")";
            case Opcode::Div: return "(" + x + " / " + y + ")";
            case Opcode::Exp: return "exp(" + x + ")";
            case Opcode::PowInt: return "(" + x + "^" + std::to_string(n.index) + ")";
            default: return x;
            }
        });
}

namespace
{

void check_dims(const ExprGraph& graph, std::size_t nz, std::size_t np)
{
    if (nz != static_cast<std::size_t>(graph.n_z()) || np != static_cast<std::size_t>(graph.n_p()))
        throw std::invalid_argument("dimension mismatch: expected " + std::to_string(graph.n_z()) + " z and " +
                                    std::to_string(graph.n_p()) + " p values");
}

double ipow(double x, int m)
{
    if (m < 0) {
        if (x == 0.0)
            throw EvalError(EvalError::Kind::DivisionByZero, "negative power of zero");
        return 1.0 / ipow(x, -m);
    }
    double result = 1.0;
    double base = x;
    unsigned e = static_cast<unsigned>(m);
    while (e) {
        if (e & 1u)
            result *= base;
        base *= base;
        e >>= 1u;
    }
    return result;
}

}  // namespace

double eval_real(const ExprGraph& graph, std::span<const double> z, std::span<const double> p)
{
    check_dims(graph, z.size(), p.size());
    return forward_sweep<double>(
        graph,
        [&](const ExprNode& n) {
            switch (n.op) {
            case Opcode::VarZ: return z[static_cast<std::size_t>(n.index)];
            case Opcode::VarP: return p[static_cast<std::size_t>(n.index)];
            default: return n.value;
            }
        },
        [](const ExprNode& n, double x, double y) {
            double r = 0.0;
            switch (n.op) {
            case Opcode::Neg: r = -x; break;
            case Opcode::Add: r = x + y; break;
            case Opcode::Sub: r = x - y; break;
            case Opcode::Mul: r = x * y; break;
            case Opcode::Div:
                if (y == 0.0)
                    throw EvalError(EvalError::Kind::DivisionByZero, "division by zero");
                r = x / y;
                break;
            case Opcode::Exp: r = std::exp(x); break;
            case Opcode::PowInt: r = ipow(x, n.index); break;
            default: break;
            }
            check_finite(r, opcode_name(n.op));
            return r;
        });
}

Tangent eval_tangent(const ExprGraph& graph, std::span<const double> z, std::span<const double> p,
                     std::span<const double> dz, std::span<const double> dp)
{
    check_dims(graph, z.size(), p.size());
    check_dims(graph, dz.size(), dp.size());
    return forward_sweep<Tangent>(
        graph,
        [&](const ExprNode& n) {
            switch (n.op) {
            case Opcode::VarZ: {
                const auto k = static_cast<std::size_t>(n.index);
                return Tangent{z[k], dz[k]};
            }
            case Opcode::VarP: {
                const auto k = static_cast<std::size_t>(n.index);
                return Tangent{p[k], dp[k]};
            }
            default: return Tangent{n.value, 0.0};
            }
        },
        [](const ExprNode& n, const Tangent& x, const Tangent& y) {
            Tangent r;
            switch (n.op) {
            case Opcode::Neg: r = {-x.value, -x.derivative}; break;
            case Opcode::Add: r = {x.value + y.value, x.derivative + y.derivative}; break;
            case Opcode::Sub: r = {x.value - y.value, x.derivative - y.derivative}; break;
            case Opcode::Mul:
                r = {x.value * y.value, x.derivative * y.value + x.value * y.derivative};
                break;
            case Opcode::Div: {
                if (y.value == 0.0)
                    throw EvalError(EvalError::Kind::DivisionByZero, "division by zero");
                const double q = x.value / y.value;
                r = {q, (x.derivative - q * y.derivative) / y.value};
                break;
            }
            case Opcode::Exp: {
                const double e = std::exp(x.value);
                r = {e, e * x.derivative};
                break;
            }
            case Opcode::PowInt: {
                const int m = n.index;
                r.value = ipow(x.value, m);
                r.derivative = m == 0 ? 0.0 : m * ipow(x.value, m - 1) * x.derivative;
                break;
            }
            default: break;
            }
            check_finite(r.value, opcode_name(n.op));
            check_finite(r.derivative, opcode_name(n.op));
            return r;
        });
}

}  // namespace imprel
