#ifndef IMPREL_EXPR_HPP
#define IMPREL_EXPR_HPP

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace imprel
{

//! Closed opcode set of residual graphs.
enum class Opcode { Const, VarZ, VarP, Neg, Add, Sub, Mul, Div, Exp, PowInt };

int arity(Opcode op) noexcept;
const char* opcode_name(Opcode op) noexcept;

struct ExprNode
{
    Opcode op = Opcode::Const;
    std::array<int, 2> args{-1, -1};
    double value = 0.0;  //!< constant payload (Const)
    int index = 0;       //!< variable index (VarZ, VarP) or exponent (PowInt)
};

//! Immutable, topologically ordered computational graph of one residual
//! component f(z, p).
class ExprGraph
{
public:
    ExprGraph() = default;
    //! Validates ordering, arity and variable ranges; throws std::invalid_argument.
    ExprGraph(std::vector<ExprNode> nodes, int n_z, int n_p, int root);

    const std::vector<ExprNode>& nodes() const noexcept { return nodes_; }
    const ExprNode& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
    std::size_t size() const noexcept { return nodes_.size(); }
    int n_z() const noexcept { return n_z_; }
    int n_p() const noexcept { return n_p_; }
    int root() const noexcept { return root_; }

private:
    std::vector<ExprNode> nodes_;
    int n_z_ = 0;
    int n_p_ = 0;
    int root_ = -1;
};

class ParseError : public std::runtime_error
{
public:
    ParseError(const std::string& msg, std::size_t position);
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

class EvalError : public std::runtime_error
{
public:
    enum class Kind { DivisionByZero, Overflow, Domain };
    EvalError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

//! Parses an infix residual over z1..z{n_z}, p1..p{n_p} with + - * / ^,
//! exp() and parentheses. Exponents must be integer literals.
ExprGraph parse(std::string_view text, int n_z, int n_p);

//! Canonical fully parenthesized infix form; parse(to_string(g)) evaluates
//! bit-identically to g.
std::string to_string(const ExprGraph& graph);

//! Generic forward sweep. `leaf(node)` produces the value of Const/VarZ/VarP
//! nodes; `apply(node, lhs, rhs)` combines operand values (for unary opcodes
//! rhs aliases lhs and must be ignored).
template <typename T, typename Leaf, typename Apply>
T forward_sweep(const ExprGraph& graph, Leaf&& leaf, Apply&& apply)
{
    std::vector<T> values;
    values.reserve(graph.size());
    for (const ExprNode& n : graph.nodes()) {
        switch (arity(n.op)) {
        case 0:
            values.push_back(leaf(n));
            break;
        case 1: {
            const T& x = values[static_cast<std::size_t>(n.args[0])];
            values.push_back(apply(n, x, x));
            break;
        }
        default: {
            const T& x = values[static_cast<std::size_t>(n.args[0])];
            const T& y = values[static_cast<std::size_t>(n.args[1])];
            values.push_back(apply(n, x, y));
            break;
        }
        }
    }
    return values[static_cast<std::size_t>(graph.root())];
}

double eval_real(const ExprGraph& graph, std::span<const double> z, std::span<const double> p);

struct Tangent
{
    double value = 0.0;
    double derivative = 0.0;
};

//! Value and directional derivative along (dz, dp), forward mode.
Tangent eval_tangent(const ExprGraph& graph, std::span<const double> z, std::span<const double> p,
                     std::span<const double> dz, std::span<const double> dp);

}  // namespace imprel

#endif  // IMPREL_EXPR_HPP
