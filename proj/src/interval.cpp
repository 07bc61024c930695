#include "imprel/interval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace imprel
{

namespace
{

constexpr double kInf = std::numeric_limits<double>::infinity();

Interval outward(double lo, double hi)
{
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw IntervalError("interval overflow");
    lo = std::nextafter(lo, -kInf);
    hi = std::nextafter(hi, kInf);
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw IntervalError("interval overflow");
    return Interval(lo, hi);
}

double ipow(double x, int m)
{
    double result = 1.0;
    while (m-- > 0)
        result *= x;
    return result;
}

}  // namespace

Interval::Interval(double lo_, double hi_) : lo(lo_), hi(hi_)
{
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw IntervalError("interval endpoints must be finite");
    if (lo > hi)
        throw IntervalError("interval lower bound exceeds upper bound: [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
}

std::ostream& operator<<(std::ostream& os, const Interval& x)
{
    return os << '[' << x.lo << ", " << x.hi << ']';
}

Interval operator-(const Interval& x)
{
    return Interval(-x.hi, -x.lo);
}

Interval operator+(const Interval& x, const Interval& y)
{
    return outward(x.lo + y.lo, x.hi + y.hi);
}

Interval operator-(const Interval& x, const Interval& y)
{
    return outward(x.lo - y.hi, x.hi - y.lo);
}

Interval operator*(const Interval& x, const Interval& y)
{
    const double c[4] = {x.lo * y.lo, x.lo * y.hi, x.hi * y.lo, x.hi * y.hi};
    return outward(*std::min_element(c, c + 4), *std::max_element(c, c + 4));
}

Interval operator/(const Interval& x, const Interval& y)
{
    if (y.contains(0.0))
        throw IntervalError("division by an interval containing zero");
    const double c[4] = {x.lo / y.lo, x.lo / y.hi, x.hi / y.lo, x.hi / y.hi};
    return outward(*std::min_element(c, c + 4), *std::max_element(c, c + 4));
}

Interval exp(const Interval& x)
{
    return outward(std::exp(x.lo), std::exp(x.hi));
}

Interval pow(const Interval& x, int m)
{
    if (m == 0)
        return Interval(1.0);
    if (m == 1)
        return x;
    if (m < 0) {
        if (x.contains(0.0))
            throw IntervalError("negative integer power of an interval containing zero");
        const Interval d = pow(x, -m);
        return outward(1.0 / d.hi, 1.0 / d.lo);
    }
    if (m % 2 == 1)
        return outward(ipow(x.lo, m), ipow(x.hi, m));
    if (x.lo >= 0.0)
        return outward(ipow(x.lo, m), ipow(x.hi, m));
    if (x.hi <= 0.0)
        return outward(ipow(x.hi, m), ipow(x.lo, m));
    const double r = std::max(-x.lo, x.hi);
    return Interval(0.0, std::nextafter(ipow(r, m), kInf));
}

Interval interval_apply(Opcode op, std::span<const Interval> operands, int exponent)
{
    if (operands.size() != static_cast<std::size_t>(arity(op)) || arity(op) == 0)
        throw std::invalid_argument(std::string("interval_apply: bad operand count for ") + opcode_name(op));
    const Interval& x = operands[0];
    switch (op) {
    case Opcode::Neg: return -x;
    case Opcode::Exp: return exp(x);
    case Opcode::PowInt: return pow(x, exponent);
    case Opcode::Add: return x + operands[1];
    case Opcode::Sub: return x - operands[1];
    case Opcode::Mul: return x * operands[1];
    case Opcode::Div: return x / operands[1];
    default: break;
    }
    throw std::invalid_argument("interval_apply: leaf opcode");
}

Interval eval_interval(const ExprGraph& graph, std::span<const Interval> Z, std::span<const Interval> P)
{
    if (Z.size() != static_cast<std::size_t>(graph.n_z()) || P.size() != static_cast<std::size_t>(graph.n_p()))
        throw std::invalid_argument("eval_interval: dimension mismatch");
    return forward_sweep<Interval>(
        graph,
        [&](const ExprNode& n) {
            switch (n.op) {
            case Opcode::VarZ: return Z[static_cast<std::size_t>(n.index)];
            case Opcode::VarP: return P[static_cast<std::size_t>(n.index)];
            default: return Interval(n.value);
            }
        },
        [](const ExprNode& n, const Interval& x, const Interval& y) {
            const Interval ops[2] = {x, y};
            return interval_apply(n.op, std::span<const Interval>(ops, static_cast<std::size_t>(arity(n.op))),
                                  n.index);
        });
}

}  // namespace imprel
