#ifndef IMPREL_LP_HPP
#define IMPREL_LP_HPP

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace imprel
{

enum class LPSense { Minimize, Maximize };

//! Dense linear program
//!   min/max c^T x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lower <= x <= upper.
//! Bounds may be infinite; an empty `lower`/`upper` means unbounded.
struct LinearProgram
{
    Eigen::VectorXd c;
    Eigen::MatrixXd A_ub;
    Eigen::VectorXd b_ub;
    Eigen::MatrixXd A_eq;
    Eigen::VectorXd b_eq;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    LPSense sense = LPSense::Minimize;

    explicit LinearProgram(Eigen::Index n_vars = 0);

    Eigen::Index n_vars() const noexcept { return c.size(); }
    Eigen::Index n_ub() const noexcept { return b_ub.size(); }
    Eigen::Index n_eq() const noexcept { return b_eq.size(); }

    void add_ub(const Eigen::RowVectorXd& row, double rhs);
    void add_eq(const Eigen::RowVectorXd& row, double rhs);

    //! Throws std::invalid_argument on inconsistent dimensions or non-finite data.
    void validate() const;
};

enum class LPStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LPStatus status) noexcept;

struct LPSolution
{
    LPStatus status = LPStatus::Infeasible;
    Eigen::VectorXd x;
    double value = 0.0;
    //! Inequality rows tight at x: the active-set certificate.
    std::vector<Eigen::Index> active_ub;
    //! Marginals d(value)/d(b) for the inequality rows followed by the
    //! equality rows.
    Eigen::VectorXd duals;
    //! c - A_ub^T y_ub - A_eq^T y_eq in the sense of the reported objective.
    Eigen::VectorXd reduced_costs;
    int iterations = 0;
};

struct LPTolerances
{
    double feasibility = 1e-8;
    double tie = 1e-9;
    double pivot = 1e-10;
    double min_rcond = 1e-14;
    int max_iterations = 100000;
};

//! Solver failure that is neither infeasibility nor unboundedness: an
//! ill-conditioned final basis or residuals above tolerance.
class LPNumericalError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

//! Two-phase dense simplex with Bland's rule; deterministic. Optimal
//! solutions are recomputed from the final basis and certified (primal and
//! dual feasibility, complementary slackness, duality gap); a failed
//! certificate throws LPNumericalError.
LPSolution lp_solve(const LinearProgram& lp, const LPTolerances& tol = {});

struct LPCertificate
{
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double complementarity = 0.0;
    double duality_gap = 0.0;
};

LPCertificate certify(const LinearProgram& lp, const LPSolution& sol);

//! One-sided uniqueness test: true only if the optimal face is a single
//! point. Solves one auxiliary LP over the cone of improving feasible
//! directions at sol.x and, if that cone has no direction with a strict
//! inequality, checks that the active constraints have full column rank.
bool optimal_face_is_singleton(const LinearProgram& lp, const LPSolution& sol, const LPTolerances& tol = {});

//! Human-readable listing with stable ordering:
//!   sense, objective, "ub i: coeffs <= rhs", "eq i: coeffs = rhs", bounds.
void dump(std::ostream& os, const LinearProgram& lp);

}  // namespace imprel

#endif  // IMPREL_LP_HPP
