#include "imprel/newton.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace imprel
{

namespace
{

std::span<const double> as_span(const Eigen::VectorXd& v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

void project(Eigen::VectorXd& x, std::span<const Interval> Z)
{
    for (Eigen::Index k = 0; k < x.size(); ++k)
        x(k) = std::clamp(x(k), Z[static_cast<std::size_t>(k)].lo, Z[static_cast<std::size_t>(k)].hi);
}

}  // namespace

void NewtonOptions::validate() const
{
    if (!(tol > 0.0))
        throw std::invalid_argument("Newton tolerance must be positive");
    if (!(damping > 0.0 && damping < 1.0))
        throw std::invalid_argument("Newton damping must lie in (0, 1)");
    if (max_iter < 0)
        throw std::invalid_argument("Newton max_iter must be nonnegative");
}

const char* to_string(NewtonStatus status) noexcept
{
    switch (status) {
    case NewtonStatus::Converged: return "converged";
    case NewtonStatus::NoConvergence: return "no_convergence";
    case NewtonStatus::SingularJacobian: return "singular_jacobian";
    }
    return "?";
}

Eigen::VectorXd eval_residuals(std::span<const ExprGraph> graphs, const Eigen::VectorXd& z, const Eigen::VectorXd& p)
{
    Eigen::VectorXd f(static_cast<Eigen::Index>(graphs.size()));
    for (std::size_t i = 0; i < graphs.size(); ++i)
        f(static_cast<Eigen::Index>(i)) = eval_real(graphs[i], as_span(z), as_span(p));
    return f;
}

Eigen::MatrixXd jacobian_z(std::span<const ExprGraph> graphs, const Eigen::VectorXd& z, const Eigen::VectorXd& p)
{
    const Eigen::Index n = z.size();
    Eigen::MatrixXd J(static_cast<Eigen::Index>(graphs.size()), n);
    const Eigen::VectorXd dp = Eigen::VectorXd::Zero(p.size());
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::VectorXd dz = Eigen::VectorXd::Unit(n, k);
        for (std::size_t i = 0; i < graphs.size(); ++i)
            J(static_cast<Eigen::Index>(i), k) =
                eval_tangent(graphs[i], as_span(z), as_span(p), as_span(dz), as_span(dp)).derivative;
    }
    return J;
}

NewtonResult newton_solve(std::span<const ExprGraph> graphs, const Eigen::VectorXd& p, const Eigen::VectorXd& x0,
                          std::span<const Interval> Z, const NewtonOptions& opts)
{
    opts.validate();
    const auto n = static_cast<Eigen::Index>(graphs.size());
    if (x0.size() != n || static_cast<Eigen::Index>(Z.size()) != n)
        throw std::invalid_argument("newton_solve: system must be square with one box per unknown");
    for (Eigen::Index k = 0; k < n; ++k)
        if (!Z[static_cast<std::size_t>(k)].contains(x0(k)))
            throw std::invalid_argument("newton_solve: starting point outside the box");

    NewtonResult res;
    res.x = x0;
    Eigen::VectorXd f;
    try {
        f = eval_residuals(graphs, res.x, p);
    } catch (const EvalError&) {
        res.residual_norm = std::numeric_limits<double>::infinity();
        return res;
    }
    res.residual_norm = f.lpNorm<Eigen::Infinity>();
    bool gradient_used = false;
    for (; res.iterations < opts.max_iter; ++res.iterations) {
        if (res.residual_norm <= opts.tol) {
            res.status = NewtonStatus::Converged;
            return res;
        }
        const Eigen::MatrixXd J = jacobian_z(graphs, res.x, p);
        Eigen::VectorXd step;
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
        if (!J.allFinite() || lu.rank() < n) {
            if (gradient_used) {
                res.status = NewtonStatus::SingularJacobian;
                return res;
            }
            gradient_used = true;
            step = -(J.transpose() * f);
            if (!step.allFinite() || step.norm() == 0.0) {
                res.status = NewtonStatus::SingularJacobian;
                return res;
            }
        } else {
            step = lu.solve(-f);
        }
        double t = 1.0;
        bool accepted = false;
        while (t > 1e-12) {
            Eigen::VectorXd xn = res.x + t * step;
            if (opts.box_projection)
                project(xn, Z);
            try {
                const Eigen::VectorXd fn = eval_residuals(graphs, xn, p);
                const double norm = fn.lpNorm<Eigen::Infinity>();
                if (norm < (1.0 - 1e-4 * t) * res.residual_norm) {
                    res.x = xn;
                    f = fn;
                    res.residual_norm = norm;
                    accepted = true;
                    break;
                }
            } catch (const EvalError&) {
            }
            t *= opts.damping;
        }
        if (!accepted)
            return res;
    }
    if (res.residual_norm <= opts.tol)
        res.status = NewtonStatus::Converged;
    return res;
}

NewtonResult solve_implicit(std::span<const ExprGraph> graphs, const Eigen::VectorXd& p, std::span<const Interval> Z,
                            const NewtonOptions& opts)
{
    const auto n = static_cast<Eigen::Index>(Z.size());
    Eigen::VectorXd mid(n);
    for (Eigen::Index k = 0; k < n; ++k)
        mid(k) = Z[static_cast<std::size_t>(k)].mid();
    NewtonResult first = newton_solve(graphs, p, mid, Z, opts);
    if (first.converged())
        return first;
    const std::uint64_t corners = n >= 4 ? 16 : (std::uint64_t{1} << n);
    for (std::uint64_t c = 0; c < corners; ++c) {
        Eigen::VectorXd x0(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            const Interval& box = Z[static_cast<std::size_t>(k)];
            x0(k) = (c >> k) & 1u ? box.hi : box.lo;
        }
        NewtonResult r = newton_solve(graphs, p, x0, Z, opts);
        if (r.converged())
            return r;
    }
    return first;
}

}  // namespace imprel
