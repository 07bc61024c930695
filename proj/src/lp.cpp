#include "imprel/lp.hpp"

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

// x_j = shift + sign * y[col] - (neg >= 0 ? y[neg] : 0)
struct VarMap
{
    Eigen::Index col = 0;
    double sign = 1.0;
    Eigen::Index neg = -1;
    double shift = 0.0;
};

// min c^T y + c0  s.t.  A y (<= | =) b,  y >= 0; the first m_ub rows are
// inequalities, of which the first n_orig_ub come from the caller.
struct StandardForm
{
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    double c0 = 0.0;
    Eigen::Index m_ub = 0;
    Eigen::Index n_orig_ub = 0;
    std::vector<VarMap> map;
};

StandardForm to_standard(const LinearProgram& lp)
{
    const Eigen::Index n = lp.n_vars();
    StandardForm sf;
    sf.map.resize(static_cast<std::size_t>(n));
    Eigen::Index cols = 0;
    std::vector<std::pair<Eigen::Index, double>> bound_rows;  // (column, rhs)
    for (Eigen::Index j = 0; j < n; ++j) {
        const double l = lp.lower(j), u = lp.upper(j);
        VarMap& m = sf.map[static_cast<std::size_t>(j)];
        if (std::isfinite(l)) {
            m = {cols++, 1.0, -1, l};
            if (std::isfinite(u))
                bound_rows.emplace_back(m.col, u - l);
        } else if (std::isfinite(u)) {
            m = {cols++, -1.0, -1, u};
        } else {
            m.col = cols++;
            m.neg = cols++;
        }
    }
    const Eigen::Index m_ub = lp.n_ub() + static_cast<Eigen::Index>(bound_rows.size());
    const Eigen::Index m = m_ub + lp.n_eq();
    sf.A = Eigen::MatrixXd::Zero(m, cols);
    sf.b = Eigen::VectorXd::Zero(m);
    sf.c = Eigen::VectorXd::Zero(cols);
    sf.m_ub = m_ub;
    sf.n_orig_ub = lp.n_ub();

    const double obj_sign = lp.sense == LPSense::Maximize ? -1.0 : 1.0;
    auto substitute = [&](const auto& row, double rhs, Eigen::Index r) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const VarMap& vm = sf.map[static_cast<std::size_t>(j)];
            const double a = row(j);
            sf.A(r, vm.col) += a * vm.sign;
            if (vm.neg >= 0)
                sf.A(r, vm.neg) -= a;
            rhs -= a * vm.shift;
        }
        sf.b(r) = rhs;
    };
    for (Eigen::Index i = 0; i < lp.n_ub(); ++i)
        substitute(lp.A_ub.row(i), lp.b_ub(i), i);
    for (std::size_t k = 0; k < bound_rows.size(); ++k) {
        const auto r = lp.n_ub() + static_cast<Eigen::Index>(k);
        sf.A(r, bound_rows[k].first) = 1.0;
        sf.b(r) = bound_rows[k].second;
    }
    for (Eigen::Index i = 0; i < lp.n_eq(); ++i)
        substitute(lp.A_eq.row(i), lp.b_eq(i), m_ub + i);
    for (Eigen::Index j = 0; j < n; ++j) {
        const VarMap& vm = sf.map[static_cast<std::size_t>(j)];
        const double cj = obj_sign * lp.c(j);
        sf.c(vm.col) += cj * vm.sign;
        if (vm.neg >= 0)
            sf.c(vm.neg) -= cj;
        sf.c0 += cj * vm.shift;
    }
    return sf;
}

class Tableau
{
public:
    Tableau(const StandardForm& sf, const LPTolerances& tol) : tol_(tol)
    {
        m_ = sf.A.rows();
        ns_ = sf.A.cols();
        // Row normalization to b >= 0 and basis choice.
        flip_ = Eigen::VectorXd::Ones(m_);
        n_art_ = 0;
        std::vector<bool> needs_art(static_cast<std::size_t>(m_), false);
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (sf.b(i) < 0.0)
                flip_(i) = -1.0;
            if (i >= sf.m_ub || flip_(i) < 0.0) {
                needs_art[static_cast<std::size_t>(i)] = true;
                ++n_art_;
            }
        }
        slack0_ = ns_;
        art0_ = ns_ + sf.m_ub;
        n_ = art0_ + n_art_;
        full_ = Eigen::MatrixXd::Zero(m_, n_);
        full_.leftCols(ns_) = sf.A;
        for (Eigen::Index i = 0; i < sf.m_ub; ++i)
            full_(i, slack0_ + i) = 1.0;
        basis_.assign(static_cast<std::size_t>(m_), -1);
        Eigen::Index a = art0_;
        for (Eigen::Index i = 0; i < m_; ++i) {
            full_.row(i) *= flip_(i);
            if (needs_art[static_cast<std::size_t>(i)]) {
                full_(i, a) = 1.0;
                basis_[static_cast<std::size_t>(i)] = a++;
            } else {
                basis_[static_cast<std::size_t>(i)] = slack0_ + i;
            }
        }
        rhs_ = sf.b.cwiseProduct(flip_);
        T_ = Eigen::MatrixXd::Zero(m_ + 1, n_ + 1);
        T_.topLeftCorner(m_, n_) = full_;
        T_.topRightCorner(m_, 1) = rhs_;
    }

    enum class Outcome { Optimal, Unbounded };

    Outcome run(const Eigen::VectorXd& cost, bool allow_artificial, int& iterations)
    {
        T_.row(m_).setZero();
        T_.row(m_).head(n_) = cost.transpose();
        for (Eigen::Index i = 0; i < m_; ++i)
            T_.row(m_) -= cost(basis_[static_cast<std::size_t>(i)]) * T_.row(i);
        const Eigen::Index limit = allow_artificial ? n_ : art0_;
        for (;;) {
            if (++iterations > tol_.max_iterations)
                throw LPNumericalError("simplex iteration limit exceeded");
            Eigen::Index enter = -1;
            for (Eigen::Index j = 0; j < limit; ++j)
                if (T_(m_, j) < -tol_.tie) {
                    enter = j;
                    break;
                }
            if (enter < 0)
                return Outcome::Optimal;
            Eigen::Index leave = -1;
            double best = kInf;
            for (Eigen::Index i = 0; i < m_; ++i) {
                const double a = T_(i, enter);
                if (a <= tol_.pivot)
                    continue;
                const double ratio = std::max(T_(i, n_), 0.0) / a;
                if (leave < 0 || ratio < best - tol_.tie * (1.0 + std::abs(best))) {
                    best = ratio;
                    leave = i;
                } else if (ratio <= best + tol_.tie * (1.0 + std::abs(best)) &&
                           basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)]) {
                    leave = i;
                    best = std::min(best, ratio);
                }
            }
            if (leave < 0)
                return Outcome::Unbounded;
            pivot(leave, enter);
        }
    }

    void pivot(Eigen::Index r, Eigen::Index k)
    {
        T_.row(r) /= T_(r, k);
        for (Eigen::Index i = 0; i <= m_; ++i)
            if (i != r && T_(i, k) != 0.0)
                T_.row(i) -= T_(i, k) * T_.row(r);
        basis_[static_cast<std::size_t>(r)] = k;
    }

    double phase1_infeasibility() const { return -T_(m_, n_); }

    // Pivots zero-level artificials out of the basis where possible; rows
    // where that fails are redundant and keep their artificial.
    void expel_artificials()
    {
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (basis_[static_cast<std::size_t>(i)] < art0_)
                continue;
            Eigen::Index best = -1;
            for (Eigen::Index j = 0; j < art0_; ++j)
                if (std::abs(T_(i, j)) > tol_.pivot && (best < 0 || std::abs(T_(i, j)) > std::abs(T_(i, best)) * 10))
                    best = j;
            if (best >= 0)
                pivot(i, best);
        }
    }

    Eigen::Index m() const { return m_; }
    Eigen::Index n() const { return n_; }
    Eigen::Index art0() const { return art0_; }
    Eigen::Index slack0() const { return slack0_; }
    const std::vector<Eigen::Index>& basis() const { return basis_; }
    const Eigen::MatrixXd& full() const { return full_; }
    const Eigen::VectorXd& rhs() const { return rhs_; }
    const Eigen::VectorXd& flip() const { return flip_; }

private:
    LPTolerances tol_;
    Eigen::Index m_ = 0, ns_ = 0, n_ = 0, n_art_ = 0, slack0_ = 0, art0_ = 0;
    Eigen::MatrixXd full_;
    Eigen::VectorXd rhs_;
    Eigen::VectorXd flip_;
    Eigen::MatrixXd T_;
    std::vector<Eigen::Index> basis_;
};

double max_abs(const Eigen::VectorXd& v)
{
    return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace

LinearProgram::LinearProgram(Eigen::Index n_vars)
    : c(Eigen::VectorXd::Zero(n_vars)),
      A_ub(0, n_vars),
      b_ub(0),
      A_eq(0, n_vars),
      b_eq(0),
      lower(Eigen::VectorXd::Constant(n_vars, -kInf)),
      upper(Eigen::VectorXd::Constant(n_vars, kInf))
{
}

void LinearProgram::add_ub(const Eigen::RowVectorXd& row, double rhs)
{
    if (row.size() != n_vars())
        throw std::invalid_argument("LinearProgram: row has " + std::to_string(row.size()) + " entries, expected " +
                                    std::to_string(n_vars()));
    A_ub.conservativeResize(A_ub.rows() + 1, n_vars());
    A_ub.row(A_ub.rows() - 1) = row;
    b_ub.conservativeResize(b_ub.size() + 1);
    b_ub(b_ub.size() - 1) = rhs;
}

void LinearProgram::add_eq(const Eigen::RowVectorXd& row, double rhs)
{
    if (row.size() != n_vars())
        throw std::invalid_argument("LinearProgram: row has " + std::to_string(row.size()) + " entries, expected " +
                                    std::to_string(n_vars()));
    A_eq.conservativeResize(A_eq.rows() + 1, n_vars());
    A_eq.row(A_eq.rows() - 1) = row;
    b_eq.conservativeResize(b_eq.size() + 1);
    b_eq(b_eq.size() - 1) = rhs;
}

void LinearProgram::validate() const
{
    const Eigen::Index n = n_vars();
    if (A_ub.cols() != n || A_ub.rows() != b_ub.size() || A_eq.cols() != n || A_eq.rows() != b_eq.size())
        throw std::invalid_argument("LinearProgram: inconsistent constraint dimensions");
    if (lower.size() != n || upper.size() != n)
        throw std::invalid_argument("LinearProgram: bound vectors must have one entry per variable");
    if (!c.allFinite() || !A_ub.allFinite() || !b_ub.allFinite() || !A_eq.allFinite() || !b_eq.allFinite())
        throw std::invalid_argument("LinearProgram: non-finite data");
    for (Eigen::Index j = 0; j < n; ++j) {
        if (std::isnan(lower(j)) || std::isnan(upper(j)) || lower(j) == kInf || upper(j) == -kInf)
            throw std::invalid_argument("LinearProgram: invalid bound on variable " + std::to_string(j));
    }
}

const char* to_string(LPStatus status) noexcept
{
    switch (status) {
    case LPStatus::Optimal: return "optimal";
    case LPStatus::Infeasible: return "infeasible";
    case LPStatus::Unbounded: return "unbounded";
    }
    return "?";
}

LPSolution lp_solve(const LinearProgram& lp, const LPTolerances& tol)
{
    lp.validate();
    const Eigen::Index n = lp.n_vars();
    LPSolution sol;
    const double worst = lp.sense == LPSense::Minimize ? kInf : -kInf;
    for (Eigen::Index j = 0; j < n; ++j)
        if (lp.lower(j) > lp.upper(j)) {
            sol.status = LPStatus::Infeasible;
            sol.value = worst;
            return sol;
        }

    const StandardForm sf = to_standard(lp);
    Tableau tab(sf, tol);

    // Phase 1: minimize the sum of artificials.
    Eigen::VectorXd cost1 = Eigen::VectorXd::Zero(tab.n());
    cost1.tail(tab.n() - tab.art0()).setOnes();
    tab.run(cost1, true, sol.iterations);
    if (tab.phase1_infeasibility() > tol.feasibility * (1.0 + max_abs(sf.b))) {
        sol.status = LPStatus::Infeasible;
        sol.value = worst;
        return sol;
    }
    tab.expel_artificials();

    // Phase 2.
    Eigen::VectorXd cost2 = Eigen::VectorXd::Zero(tab.n());
    cost2.head(sf.c.size()) = sf.c;
    if (tab.run(cost2, false, sol.iterations) == Tableau::Outcome::Unbounded) {
        sol.status = LPStatus::Unbounded;
        sol.value = lp.sense == LPSense::Minimize ? -kInf : kInf;
        return sol;
    }

    // Recompute primal and dual values from the final basis.
    const Eigen::Index m = tab.m();
    Eigen::MatrixXd B(m, m);
    Eigen::VectorXd cB(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index col = tab.basis()[static_cast<std::size_t>(i)];
        B.col(i) = tab.full().col(col);
        cB(i) = cost2(col);
    }
    Eigen::VectorXd y_std = Eigen::VectorXd::Zero(tab.n());
    Eigen::VectorXd y_rows = Eigen::VectorXd::Zero(m);
    if (m > 0) {
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
        if (!(lu.rcond() >= tol.min_rcond))
            throw LPNumericalError("ill-conditioned optimal basis (rcond " + std::to_string(lu.rcond()) + ")");
        const Eigen::VectorXd xB = lu.solve(tab.rhs());
        for (Eigen::Index i = 0; i < m; ++i)
            y_std(tab.basis()[static_cast<std::size_t>(i)]) = xB(i);
        y_rows = B.transpose().partialPivLu().solve(cB).cwiseProduct(tab.flip());
    }

    sol.x.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const VarMap& vm = sf.map[static_cast<std::size_t>(j)];
        double v = vm.shift + vm.sign * y_std(vm.col);
        if (vm.neg >= 0)
            v -= y_std(vm.neg);
        sol.x(j) = v;
    }
    const double sgn = lp.sense == LPSense::Maximize ? -1.0 : 1.0;
    sol.duals.resize(lp.n_ub() + lp.n_eq());
    sol.duals.head(lp.n_ub()) = sgn * y_rows.head(lp.n_ub());
    sol.duals.tail(lp.n_eq()) = sgn * y_rows.tail(lp.n_eq());
    sol.reduced_costs = lp.c - lp.A_ub.transpose() * sol.duals.head(lp.n_ub()) -
                        lp.A_eq.transpose() * sol.duals.tail(lp.n_eq());
    sol.value = lp.c.dot(sol.x);
    sol.status = LPStatus::Optimal;
    for (Eigen::Index i = 0; i < lp.n_ub(); ++i)
        if (std::abs(lp.A_ub.row(i).dot(sol.x) - lp.b_ub(i)) <= tol.tie * (1.0 + std::abs(lp.b_ub(i))))
            sol.active_ub.push_back(i);

    const LPCertificate cert = certify(lp, sol);
    const double scale = 1.0 + std::max({max_abs(lp.b_ub), max_abs(lp.b_eq), max_abs(lp.c)});
    if (cert.primal_residual > tol.feasibility * scale || cert.dual_residual > tol.feasibility * scale ||
        cert.complementarity > tol.feasibility * scale * scale ||
        std::abs(cert.duality_gap) > tol.feasibility * scale * (1.0 + std::abs(sol.value)))
        throw LPNumericalError("LP certificate failed: primal " + std::to_string(cert.primal_residual) + ", dual " +
                               std::to_string(cert.dual_residual) + ", complementarity " +
                               std::to_string(cert.complementarity) + ", gap " +
                               std::to_string(cert.duality_gap));
    return sol;
}

LPCertificate certify(const LinearProgram& lp, const LPSolution& sol)
{
    LPCertificate cert;
    if (sol.status != LPStatus::Optimal)
        return cert;
    const Eigen::Index n = lp.n_vars();
    const double sgn = lp.sense == LPSense::Maximize ? -1.0 : 1.0;
    // Work in minimization form: y_ub <= 0, r = c - A^T y.
    const Eigen::VectorXd c = sgn * lp.c;
    const Eigen::VectorXd y_ub = sgn * sol.duals.head(lp.n_ub());
    const Eigen::VectorXd y_eq = sgn * sol.duals.tail(lp.n_eq());
    const Eigen::VectorXd r = sgn * sol.reduced_costs;
    const Eigen::VectorXd& x = sol.x;

    double dual_obj = lp.b_ub.dot(y_ub) + lp.b_eq.dot(y_eq);
    for (Eigen::Index i = 0; i < lp.n_ub(); ++i) {
        const double slack = lp.b_ub(i) - lp.A_ub.row(i).dot(x);
        cert.primal_residual = std::max(cert.primal_residual, -slack);
        cert.dual_residual = std::max(cert.dual_residual, y_ub(i));
        cert.complementarity = std::max(cert.complementarity, std::abs(y_ub(i) * slack));
    }
    for (Eigen::Index i = 0; i < lp.n_eq(); ++i)
        cert.primal_residual = std::max(cert.primal_residual, std::abs(lp.A_eq.row(i).dot(x) - lp.b_eq(i)));
    for (Eigen::Index j = 0; j < n; ++j) {
        const double l = lp.lower(j), u = lp.upper(j);
        if (std::isfinite(l))
            cert.primal_residual = std::max(cert.primal_residual, l - x(j));
        if (std::isfinite(u))
            cert.primal_residual = std::max(cert.primal_residual, x(j) - u);
        if (r(j) > 0.0) {
            if (std::isfinite(l)) {
                cert.complementarity = std::max(cert.complementarity, r(j) * (x(j) - l));
                dual_obj += r(j) * l;
            } else {
                cert.dual_residual = std::max(cert.dual_residual, r(j));
            }
        } else if (r(j) < 0.0) {
            if (std::isfinite(u)) {
                cert.complementarity = std::max(cert.complementarity, -r(j) * (u - x(j)));
                dual_obj += r(j) * u;
            } else {
                cert.dual_residual = std::max(cert.dual_residual, -r(j));
            }
        }
    }
    cert.duality_gap = c.dot(x) - dual_obj;
    return cert;
}

bool optimal_face_is_singleton(const LinearProgram& lp, const LPSolution& sol, const LPTolerances& tol)
{
    if (sol.status != LPStatus::Optimal)
        throw std::invalid_argument("optimal_face_is_singleton: solution is not optimal");
    const Eigen::Index n = lp.n_vars();
    if (n == 0)
        return true;
    const double sgn = lp.sense == LPSense::Maximize ? -1.0 : 1.0;
    const Eigen::RowVectorXd c = sgn * lp.c.transpose();
    const Eigen::VectorXd& x = sol.x;

    // Rows of the cone {d : R d <= 0, A_eq d = 0}; the auxiliary objective
    // maximizes -sum(R d), which is zero exactly when every row is tight.
    std::vector<Eigen::RowVectorXd> rows;
    for (Eigen::Index i = 0; i < lp.n_ub(); ++i)
        if (std::abs(lp.A_ub.row(i).dot(x) - lp.b_ub(i)) <= tol.tie * (1.0 + std::abs(lp.b_ub(i))))
            rows.push_back(lp.A_ub.row(i));
    for (Eigen::Index j = 0; j < n; ++j) {
        if (std::isfinite(lp.lower(j)) && std::abs(x(j) - lp.lower(j)) <= tol.tie * (1.0 + std::abs(lp.lower(j))))
            rows.push_back(-Eigen::RowVectorXd::Unit(n, j));
        if (std::isfinite(lp.upper(j)) && std::abs(x(j) - lp.upper(j)) <= tol.tie * (1.0 + std::abs(lp.upper(j))))
            rows.push_back(Eigen::RowVectorXd::Unit(n, j));
    }
    if (c.norm() > 0.0)
        rows.push_back(c);

    LinearProgram aux(n);
    aux.sense = LPSense::Maximize;
    aux.lower.setConstant(-1.0);
    aux.upper.setConstant(1.0);
    for (const Eigen::RowVectorXd& row : rows) {
        const double norm = row.norm();
        if (norm == 0.0)
            continue;
        aux.add_ub(row / norm, 0.0);
        aux.c -= row.transpose() / norm;
    }
    for (Eigen::Index i = 0; i < lp.n_eq(); ++i)
        aux.add_eq(lp.A_eq.row(i), 0.0);
    const LPSolution aux_sol = lp_solve(aux, tol);
    if (aux_sol.status != LPStatus::Optimal || aux_sol.value > tol.tie)
        return false;

    // Every cone direction keeps all rows tight: the face is a point iff the
    // tight rows have full column rank.
    Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()) + lp.n_eq(), n);
    Eigen::Index k = 0;
    for (const Eigen::RowVectorXd& row : rows)
        M.row(k++) = row / std::max(row.norm(), 1e-300);
    for (Eigen::Index i = 0; i < lp.n_eq(); ++i) {
        const double norm = lp.A_eq.row(i).norm();
        M.row(k++) = norm > 0.0 ? (lp.A_eq.row(i) / norm).eval() : lp.A_eq.row(i);
    }
    if (M.rows() < n)
        return false;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    lu.setThreshold(1e-9);
    return lu.rank() == n;
}

void dump(std::ostream& os, const LinearProgram& lp)
{
    os << (lp.sense == LPSense::Minimize ? "minimize" : "maximize");
    for (Eigen::Index j = 0; j < lp.n_vars(); ++j)
        os << ' ' << lp.c(j);
    os << '\n';
    for (Eigen::Index i = 0; i < lp.n_ub(); ++i) {
        os << "ub " << i << ':';
        for (Eigen::Index j = 0; j < lp.n_vars(); ++j)
            os << ' ' << lp.A_ub(i, j);
        os << " <= " << lp.b_ub(i) << '\n';
    }
    for (Eigen::Index i = 0; i < lp.n_eq(); ++i) {
        os << "eq " << i << ':';
        for (Eigen::Index j = 0; j < lp.n_vars(); ++j)
            os << ' ' << lp.A_eq(i, j);
        os << " = " << lp.b_eq(i) << '\n';
    }
    for (Eigen::Index j = 0; j < lp.n_vars(); ++j)
        os << "x" << j << " in [" << lp.lower(j) << ", " << lp.upper(j) << "]\n";
}

}  // namespace imprel
