#ifndef IMPREL_NEWTON_HPP
#define IMPREL_NEWTON_HPP

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "imprel/expr.hpp"
#include "imprel/interval.hpp"

namespace imprel
{

struct NewtonOptions
{
    int max_iter = 100;
    double tol = 1e-10;      //!< bound on the residual infinity-norm
    double damping = 0.5;    //!< backtracking factor
    bool box_projection = true;

    //! Throws std::invalid_argument unless tol > 0 and 0 < damping < 1.
    void validate() const;
};

enum class NewtonStatus { Converged, NoConvergence, SingularJacobian };

const char* to_string(NewtonStatus status) noexcept;

struct NewtonResult
{
    NewtonStatus status = NewtonStatus::NoConvergence;
    Eigen::VectorXd x;
    double residual_norm = 0.0;
    int iterations = 0;

    bool converged() const noexcept { return status == NewtonStatus::Converged; }
};

//! Residual vector f(z, p) for a square system; throws EvalError.
Eigen::VectorXd eval_residuals(std::span<const ExprGraph> graphs, const Eigen::VectorXd& z, const Eigen::VectorXd& p);

//! Jacobian with respect to z, one forward tangent sweep per column.
Eigen::MatrixXd jacobian_z(std::span<const ExprGraph> graphs, const Eigen::VectorXd& z, const Eigen::VectorXd& p);

//! Damped Newton from x0. A singular Jacobian gets one steepest-descent
//! step on |f|^2/2; a second one ends the solve.
NewtonResult newton_solve(std::span<const ExprGraph> graphs, const Eigen::VectorXd& p, const Eigen::VectorXd& x0,
                          std::span<const Interval> Z, const NewtonOptions& opts = {});

//! Starts at the box midpoint, then at up to 16 box corners.
NewtonResult solve_implicit(std::span<const ExprGraph> graphs, const Eigen::VectorXd& p, std::span<const Interval> Z,
                            const NewtonOptions& opts = {});

}  // namespace imprel

#endif  // IMPREL_NEWTON_HPP
