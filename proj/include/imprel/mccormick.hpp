#ifndef IMPREL_MCCORMICK_HPP
#define IMPREL_MCCORMICK_HPP

#include <span>

#include <Eigen/Dense>

#include "imprel/expr.hpp"
#include "imprel/interval.hpp"

namespace imprel
{

//! McCormick relaxation object: interval bounds, convex/concave relaxation
//! values at the current point and one subgradient of each, over a fixed
//! set of sweep directions.
//!
//! Composition follows the forward subgradient rules for McCormick
//! relaxations: univariate elementals use the mid-function
//! u^cv(mid(cv, cc, argmin)) and the bilinear term uses the McCormick
//! envelope. Every result is cut against its interval bounds; the clipped
//! side gets a zero subgradient.
//!
//! Tie-breaking order for mid(cv, cc, ref) is cv, then cc, then ref; for the
//! max/min of the bilinear planes the first plane wins.
struct McCormick
{
    Interval bounds;
    double cv = 0.0;
    double cc = 0.0;
    Eigen::VectorXd sub_cv;
    Eigen::VectorXd sub_cc;

    Eigen::Index n_dirs() const noexcept { return sub_cv.size(); }
};

//! Seeds a variable with value `point` in `box`; its subgradients are the
//! unit vector e^(dir_offset + index) in R^n_dirs. Throws std::invalid_argument
//! if the point is outside the box or the direction is out of range.
McCormick mc_seed(Eigen::Index index, double point, const Interval& box, Eigen::Index n_dirs,
                  Eigen::Index dir_offset);

McCormick mc_constant(double value, Eigen::Index n_dirs);

//! Applies a non-leaf opcode. Throws IntervalError for a zero-straddling
//! denominator (div, negative pow_int).
McCormick mc_apply(Opcode op, std::span<const McCormick> operands, int exponent = 0);

McCormick operator-(const McCormick& x);
McCormick operator+(const McCormick& x, const McCormick& y);
McCormick operator-(const McCormick& x, const McCormick& y);
McCormick operator*(const McCormick& x, const McCormick& y);
McCormick operator/(const McCormick& x, const McCormick& y);
McCormick exp(const McCormick& x);
McCormick pow(const McCormick& x, int m);

//! Forward sweep over the graph. Subgradients have length n_z + n_p with
//! z-directions first.
McCormick eval_mccormick(const ExprGraph& graph, std::span<const double> z, std::span<const double> p,
                         std::span<const Interval> Z, std::span<const Interval> P);

}  // namespace imprel

#endif  // IMPREL_MCCORMICK_HPP
