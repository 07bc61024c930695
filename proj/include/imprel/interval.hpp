#ifndef IMPREL_INTERVAL_HPP
#define IMPREL_INTERVAL_HPP

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "imprel/expr.hpp"

namespace imprel
{

class IntervalError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

//! Closed bounded interval [lo, hi] with finite endpoints.
struct Interval
{
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    //! Throws IntervalError unless lo <= hi and both are finite.
    Interval(double lo_, double hi_);
    explicit Interval(double point) : Interval(point, point) {}

    double width() const noexcept { return hi - lo; }
    double mid() const noexcept { return 0.5 * (lo + hi); }
    bool contains(double x) const noexcept { return lo <= x && x <= hi; }
    bool contains(const Interval& other) const noexcept { return lo <= other.lo && other.hi <= hi; }

    friend bool operator==(const Interval&, const Interval&) = default;
};

std::ostream& operator<<(std::ostream& os, const Interval& x);

// Elemental inclusion functions. Every result is widened outward by one ulp.
Interval operator-(const Interval& x);
Interval operator+(const Interval& x, const Interval& y);
Interval operator-(const Interval& x, const Interval& y);
Interval operator*(const Interval& x, const Interval& y);
//! Throws IntervalError when 0 lies in y.
Interval operator/(const Interval& x, const Interval& y);
Interval exp(const Interval& x);
//! Parity-aware integer power; negative m requires 0 outside x.
Interval pow(const Interval& x, int m);

//! Applies the inclusion function of `op` (a non-leaf opcode) to its
//! operands. `exponent` is only read for PowInt.
Interval interval_apply(Opcode op, std::span<const Interval> operands, int exponent = 0);

//! Natural interval extension of a residual graph over Z x P.
Interval eval_interval(const ExprGraph& graph, std::span<const Interval> Z, std::span<const Interval> P);

using IntervalVector = std::vector<Interval>;

}  // namespace imprel

#endif  // IMPREL_INTERVAL_HPP
