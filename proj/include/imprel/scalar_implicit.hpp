#ifndef IMPREL_SCALAR_IMPLICIT_HPP
#define IMPREL_SCALAR_IMPLICIT_HPP

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "imprel/interval.hpp"
#include "imprel/pwa.hpp"

namespace imprel
{

enum class Side { Cv, Cc };

//! Affine bound on x as a function of p: coef^T p + offset, recording the
//! residual piece it came from.
struct ImplicitBound
{
    Eigen::VectorXd coef;
    double offset = 0.0;
    Side source = Side::Cv;
    std::size_t piece = 0;

    double operator()(const Eigen::VectorXd& p) const { return coef.dot(p) + offset; }
};

//! A zero-slope piece constrains p only: a^T p + b <= 0 for a cv piece and
//! a^T p + b >= 0 for a cc piece.
struct ParameterConstraint
{
    Eigen::VectorXd a;
    double b = 0.0;
    Side source = Side::Cv;
    std::size_t piece = 0;

    double violation(const Eigen::VectorXd& p) const
    {
        const double v = a.dot(p) + b;
        return source == Side::Cv ? v : -v;
    }
};

//! Closed-form relaxation data of a scalar implicit function x(p) with
//! piecewise-affine residual relaxations.
//!
//! A cv piece alpha x + a^T p + b <= 0 bounds x from below when alpha < 0
//! (set K-) and from above when alpha > 0 (set K+); a cc piece
//! alpha x + a^T p + b >= 0 bounds x from below when alpha > 0 (L+) and from
//! above when alpha < 0 (L-). The bound is g(p) = -(a^T p + b) / alpha.
struct ScalarImplicitRelaxation
{
    Interval X;
    std::vector<ImplicitBound> g_pieces;      //!< from cv pieces, K- and K+
    std::vector<ImplicitBound> gamma_pieces;  //!< from cc pieces, L- and L+
    std::vector<std::size_t> K_minus, K_plus, L_minus, L_plus;
    std::vector<ParameterConstraint> p_only_constraints;
    double feasibility_tol = 1e-9;

    //! Bound derived from cv piece i (must be in K- or K+).
    const ImplicitBound& g(std::size_t i) const;
    //! Bound derived from cc piece j (must be in L- or L+).
    const ImplicitBound& gamma(std::size_t j) const;
};

ScalarImplicitRelaxation classify_pieces(const PWARelaxationPair& pair, const Interval& X);

struct ActiveBound
{
    Side source;
    std::size_t piece;

    friend bool operator==(const ActiveBound&, const ActiveBound&) = default;
};

//! h_cv = max over K- and L+ bounds, h_cc = min over K+ and L- bounds. A side
//! with no contributing pieces is absent. Ties go to the first candidate in
//! the order K- (or K+) by index, then L+ (or L-) by index.
struct HValue
{
    std::optional<double> h_cv;
    std::optional<double> h_cc;
    std::optional<ActiveBound> active_cv;
    std::optional<ActiveBound> active_cc;
};

HValue h_eval(const ScalarImplicitRelaxation& rel, const Eigen::VectorXd& p);

struct RelaxationValue
{
    double x_cv;
    double x_cc;

    bool feasible() const noexcept { return x_cv <= x_cc; }
};

//! x_cv = max(x^L, h_cv(p)), x_cc = min(x^U, h_cc(p)); (+inf, -inf) when the
//! bounds cross or a parameter-only constraint is violated.
RelaxationValue relax_eval_scalar(const ScalarImplicitRelaxation& rel, const Eigen::VectorXd& p);

class InfeasibleRelaxation : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct ScalarSubgradients
{
    Eigen::VectorXd s_cv;
    Eigen::VectorXd s_cc;
};

//! Subgradients of x_cv and x_cc at p. The clipped branch (x_cv = x^L,
//! decided by the max itself) gives zero; otherwise the active bound's
//! coefficient vector. Throws InfeasibleRelaxation when the relaxations are
//! infinite at p. Whether p is interior to the feasible parameter set is the
//! caller's responsibility.
ScalarSubgradients subgrad_scalar(const ScalarImplicitRelaxation& rel, const Eigen::VectorXd& p);

//! Two display lines "x^cv(p) := max{ x^L, ... }" and "x^cc(p) := min{ x^U, ... }".
std::string format_closed_form(const ScalarImplicitRelaxation& rel, const std::string& x_name,
                               std::span<const std::string> p_names, int decimals = 2);

}  // namespace imprel

#endif  // IMPREL_SCALAR_IMPLICIT_HPP
