#include "imprel/vector_implicit.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "imprel/mccormick.hpp"

namespace imprel
{

namespace
{

constexpr double kInf = std::numeric_limits<double>::infinity();

std::span<const double> as_span(const Eigen::VectorXd& v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

InequalityRow row_from(const AffinePiece& piece, InequalityRow::Kind kind, std::size_t residual, std::size_t index)
{
    const double s = kind == InequalityRow::Kind::CvPiece ? 1.0 : -1.0;
    return InequalityRow{kind, s * piece.alpha, s * piece.a, s * piece.b, residual, index};
}

void check_point(const VectorImplicitProblem& prob, const Eigen::VectorXd& p)
{
    if (p.size() != prob.n_p())
        throw std::invalid_argument("parameter point has " + std::to_string(p.size()) + " entries, expected " +
                                    std::to_string(prob.n_p()));
}

}  // namespace

VectorImplicitProblem::VectorImplicitProblem(std::vector<Interval> Z, std::vector<Interval> P,
                                             std::vector<PWARelaxationPair> pieces,
                                             std::vector<std::size_t> residuals,
                                             std::vector<AffineEquality> equalities)
    : Z_(std::move(Z)),
      P_(std::move(P)),
      pieces_(std::move(pieces)),
      residuals_(std::move(residuals)),
      equalities_(std::move(equalities))
{
    const Eigen::Index nz = n_z(), np = n_p();
    if (nz == 0)
        throw std::invalid_argument("problem has no z variables");
    if (residuals_.size() != pieces_.size())
        throw std::invalid_argument("one residual index per piece pair is required");
    if (pieces_.size() + equalities_.size() != Z_.size())
        throw std::invalid_argument("residual count " + std::to_string(pieces_.size() + equalities_.size()) +
                                    " does not match the number of z variables " + std::to_string(nz));
    auto check = [&](const Eigen::VectorXd& alpha, const Eigen::VectorXd& a, double b, const std::string& what) {
        if (alpha.size() != nz || a.size() != np)
            throw std::invalid_argument(what + ": coefficient dimensions do not match the problem");
        if (!alpha.allFinite() || !a.allFinite() || !std::isfinite(b))
            throw std::invalid_argument(what + ": non-finite coefficient");
    };
    for (std::size_t r = 0; r < pieces_.size(); ++r) {
        const PWARelaxationPair& pair = pieces_[r];
        const std::string name = "residual " + std::to_string(residuals_[r] + 1);
        if (pair.cv_pieces.empty() || pair.cc_pieces.empty())
            throw std::invalid_argument(name + ": needs at least one cv and one cc piece");
        for (std::size_t k = 0; k < pair.cv_pieces.size(); ++k) {
            check(pair.cv_pieces[k].alpha, pair.cv_pieces[k].a, pair.cv_pieces[k].b, name);
            rows_.push_back(row_from(pair.cv_pieces[k], InequalityRow::Kind::CvPiece, residuals_[r], k));
        }
        for (std::size_t k = 0; k < pair.cc_pieces.size(); ++k) {
            check(pair.cc_pieces[k].alpha, pair.cc_pieces[k].a, pair.cc_pieces[k].b, name);
            rows_.push_back(row_from(pair.cc_pieces[k], InequalityRow::Kind::CcPiece, residuals_[r], k));
        }
    }
    for (Eigen::Index k = 0; k < nz; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        rows_.push_back({InequalityRow::Kind::BoxUpper, Eigen::VectorXd::Unit(nz, k), Eigen::VectorXd::Zero(np),
                         -Z_[kk].hi, kk, 0});
        rows_.push_back({InequalityRow::Kind::BoxLower, -Eigen::VectorXd::Unit(nz, k), Eigen::VectorXd::Zero(np),
                         Z_[kk].lo, kk, 0});
    }
    if (!equalities_.empty()) {
        Eigen::MatrixXd B(static_cast<Eigen::Index>(equalities_.size()), nz);
        for (std::size_t r = 0; r < equalities_.size(); ++r) {
            check(equalities_[r].alpha, equalities_[r].a, equalities_[r].b,
                  "equality " + std::to_string(equalities_[r].residual + 1));
            B.row(static_cast<Eigen::Index>(r)) = equalities_[r].alpha.transpose();
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
        lu.setThreshold(1e-10);
        if (lu.rank() < B.rows())
            throw std::invalid_argument("affine residuals have linearly dependent z-gradients");
    }
}

std::optional<AffineEquality> detect_affine(const ExprGraph& graph, std::span<const Interval> Z,
                                            std::span<const Interval> P, const BuildOptions& opts)
{
    const Eigen::Index nz = graph.n_z(), np = graph.n_p(), n = nz + np;
    const std::vector<Eigen::VectorXd> probes = halton_points(Z, P, opts.n_halton, opts.seed);
    try {
        for (const Eigen::VectorXd& x : probes) {
            const Eigen::VectorXd z = x.head(nz), p = x.tail(np);
            const McCormick mc = eval_mccormick(graph, as_span(z), as_span(p), Z, P);
            if (std::abs(mc.cc - mc.cv) > 1e-10 * (1.0 + std::abs(mc.cv)))
                return std::nullopt;
        }
        Eigen::VectorXd c(n);
        for (Eigen::Index k = 0; k < n; ++k)
            c(k) = k < nz ? Z[static_cast<std::size_t>(k)].mid() : P[static_cast<std::size_t>(k - nz)].mid();
        const Eigen::VectorXd cz = c.head(nz), cp = c.tail(np);
        Eigen::VectorXd grad(n);
        double fc = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            const Eigen::VectorXd e = Eigen::VectorXd::Unit(n, k);
            const Eigen::VectorXd ez = e.head(nz), ep = e.tail(np);
            const Tangent t = eval_tangent(graph, as_span(cz), as_span(cp), as_span(ez), as_span(ep));
            grad(k) = t.derivative;
            fc = t.value;
        }
        if (n == 0)
            fc = eval_real(graph, {}, {});
        std::vector<Eigen::VectorXd> stencil = probes;
        for (Eigen::Index k = 0; k < n; ++k) {
            const Interval& box = k < nz ? Z[static_cast<std::size_t>(k)] : P[static_cast<std::size_t>(k - nz)];
            stencil.push_back(c + 0.5 * box.width() * Eigen::VectorXd::Unit(n, k));
            stencil.push_back(c - 0.5 * box.width() * Eigen::VectorXd::Unit(n, k));
        }
        for (const Eigen::VectorXd& x : stencil) {
            const Eigen::VectorXd z = x.head(nz), p = x.tail(np);
            const double f = eval_real(graph, as_span(z), as_span(p));
            if (std::abs(f - (fc + grad.dot(x - c))) > 1e-9 * (1.0 + std::abs(f)))
                return std::nullopt;
        }
        return AffineEquality{grad.head(nz), grad.tail(np), fc - grad.dot(c), 0};
    } catch (const EvalError&) {
        return std::nullopt;
    } catch (const IntervalError&) {
        return std::nullopt;
    }
}

VectorImplicitProblem make_problem(std::span<const ExprGraph> graphs, std::vector<Interval> Z, std::vector<Interval> P,
                                   std::span<const Eigen::VectorXd> refs, const BuildOptions& opts)
{
    std::vector<PWARelaxationPair> pieces;
    std::vector<std::size_t> residuals;
    std::vector<AffineEquality> equalities;
    for (std::size_t r = 0; r < graphs.size(); ++r) {
        const ExprGraph& g = graphs[r];
        if (g.n_z() != static_cast<int>(Z.size()) || g.n_p() != static_cast<int>(P.size()))
            throw std::invalid_argument("residual " + std::to_string(r + 1) + " has mismatched dimensions");
        if (auto eq = detect_affine(g, Z, P, opts)) {
            eq->residual = r;
            equalities.push_back(std::move(*eq));
        } else {
            pieces.push_back(build_pwa(g, Z, P, refs));
            residuals.push_back(r);
        }
    }
    return VectorImplicitProblem(std::move(Z), std::move(P), std::move(pieces), std::move(residuals),
                                 std::move(equalities));
}

LinearProgram relaxation_lp(const VectorImplicitProblem& prob, const Eigen::VectorXd& p, Eigen::Index i, Side sense)
{
    check_point(prob, p);
    if (i < 0 || i >= prob.n_z())
        throw std::out_of_range("component " + std::to_string(i + 1) + " out of range");
    LinearProgram lp(prob.n_z());
    lp.c(i) = 1.0;
    lp.sense = sense == Side::Cv ? LPSense::Minimize : LPSense::Maximize;
    for (const InequalityRow& row : prob.rows())
        lp.add_ub(row.alpha.transpose(), -row.a.dot(p) - row.b);
    for (const AffineEquality& eq : prob.equalities())
        lp.add_eq(eq.alpha.transpose(), -eq.a.dot(p) - eq.b);
    return lp;
}

RelaxValue relax_value(const VectorImplicitProblem& prob, const Eigen::VectorXd& p, Eigen::Index i, Side sense,
                       const LPTolerances& tol)
{
    const LPSolution sol = lp_solve(relaxation_lp(prob, p, i, sense), tol);
    if (sol.status == LPStatus::Optimal)
        return {sol.value, sol.x};
    if (sol.status == LPStatus::Infeasible)
        return {sense == Side::Cv ? kInf : -kInf, {}};
    throw LPNumericalError("relaxation LP unbounded despite box rows");
}

ActiveSet identify_active(const VectorImplicitProblem& prob, const Eigen::VectorXd& p, const Eigen::VectorXd& xi_hat,
                          double tol)
{
    check_point(prob, p);
    ActiveSet act;
    for (std::size_t r = 0; r < prob.rows().size(); ++r)
        if (std::abs(prob.rows()[r](xi_hat, p)) <= tol)
            act.inequalities.push_back(r);
    for (std::size_t r = 0; r < prob.equalities().size(); ++r)
        act.equalities.push_back(r);
    return act;
}

Eigen::MatrixXd SensitivitySystem::G() const
{
    Eigen::MatrixXd g(G_A.rows() + G_B.rows(), n_p());
    g << G_A, G_B;
    return g;
}

SensitivitySystem build_sensitivity(const VectorImplicitProblem& prob, const ActiveSet& act, Eigen::Index i,
                                    Side sense)
{
    const Eigen::Index nz = prob.n_z(), np = prob.n_p();
    SensitivitySystem sys;
    for (std::size_t r : act.inequalities) {
        const InequalityRow& row = prob.rows().at(r);
        const double scale = 1.0 + row.alpha.cwiseAbs().maxCoeff() + (np ? row.a.cwiseAbs().maxCoeff() : 0.0);
        bool duplicate = false;
        for (std::size_t kept : sys.rows) {
            const InequalityRow& other = prob.rows()[kept];
            if ((row.alpha - other.alpha).cwiseAbs().maxCoeff() <= 1e-12 * scale &&
                (np == 0 || (row.a - other.a).cwiseAbs().maxCoeff() <= 1e-12 * scale)) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate)
            sys.rows.push_back(r);
    }
    const auto nA = static_cast<Eigen::Index>(sys.rows.size());
    const auto nB = static_cast<Eigen::Index>(act.equalities.size());
    sys.A.resize(nA, nz);
    sys.G_A.resize(nA, np);
    for (Eigen::Index k = 0; k < nA; ++k) {
        const InequalityRow& row = prob.rows()[sys.rows[static_cast<std::size_t>(k)]];
        sys.A.row(k) = row.alpha.transpose();
        sys.G_A.row(k) = -row.a.transpose();
    }
    sys.B.resize(nB, nz);
    sys.G_B.resize(nB, np);
    for (Eigen::Index k = 0; k < nB; ++k) {
        const AffineEquality& eq = prob.equalities().at(act.equalities[static_cast<std::size_t>(k)]);
        sys.B.row(k) = eq.alpha.transpose();
        sys.G_B.row(k) = -eq.a.transpose();
    }
    sys.obj_index = i;
    sys.sense = sense;
    sys.objective = (sense == Side::Cv ? 1.0 : -1.0) * Eigen::VectorXd::Unit(nz, i);
    return sys;
}

double phi_dir_deriv(const SensitivitySystem& sys, const Eigen::VectorXd& d, const LPTolerances& tol)
{
    if (d.size() != sys.n_p())
        throw std::invalid_argument("direction has wrong dimension");
    LinearProgram lp(sys.A.cols());
    lp.c = sys.objective;
    lp.A_ub = sys.A;
    lp.b_ub = sys.G_A * d;
    lp.A_eq = sys.B;
    lp.b_eq = sys.G_B * d;
    const LPSolution sol = lp_solve(lp, tol);
    if (sol.status != LPStatus::Optimal)
        throw AssumptionViolation(std::string("directional-derivative LP is ") + to_string(sol.status));
    return sol.value;
}

double dir_deriv(const SensitivitySystem& sys, const Eigen::VectorXd& d, const LPTolerances& tol)
{
    return sys.sign() * phi_dir_deriv(sys, d, tol);
}

double subgrad_np1(const SensitivitySystem& sys, const LPTolerances& tol)
{
    if (sys.n_p() != 1)
        throw std::invalid_argument("subgrad_np1 needs exactly one parameter");
    return dir_deriv(sys, Eigen::VectorXd::Ones(1), tol);
}

Eigen::Vector2d subgrad_np2(const SensitivitySystem& sys, const LPTolerances& tol)
{
    if (sys.n_p() != 2)
        throw std::invalid_argument("subgrad_np2 needs exactly two parameters");
    Eigen::Vector2d s;
    for (Eigen::Index k = 0; k < 2; ++k) {
        const Eigen::VectorXd e = Eigen::VectorXd::Unit(2, k);
        s(k) = 0.5 * (dir_deriv(sys, e, tol) - dir_deriv(sys, -e, tol));
    }
    return s;
}

LDResult ld_subgrad(const SensitivitySystem& sys, const Eigen::MatrixXd& M_in, const LPTolerances& tol)
{
    const Eigen::Index np = sys.n_p(), nz = sys.A.cols();
    const Eigen::MatrixXd M = M_in.size() == 0 ? Eigen::MatrixXd::Identity(np, np) : M_in;
    if (M.rows() != np || M.cols() != np)
        throw std::invalid_argument("direction matrix must be n_p x n_p");
    const Eigen::FullPivLU<Eigen::MatrixXd> Mlu(M);
    if (!Mlu.isInvertible())
        throw std::invalid_argument("direction matrix is singular");

    const Eigen::MatrixXd G = sys.G();
    const Eigen::Index nA = sys.A.rows(), nl = G.rows();
    LinearProgram base(nl);
    base.sense = LPSense::Maximize;
    for (Eigen::Index k = 0; k < nA; ++k)
        base.upper(k) = 0.0;
    for (Eigen::Index k = 0; k < nz; ++k) {
        Eigen::RowVectorXd row(nl);
        row << sys.A.col(k).transpose(), sys.B.col(k).transpose();
        base.add_eq(row, sys.objective(k));
    }

    LDResult res;
    Eigen::VectorXd lambda;
    double cut_tol = 1e-9;
    for (Eigen::Index j = 0; j < np; ++j) {
        auto solve_stage = [&](double slack) {
            LinearProgram lp = base;
            lp.c = G * M.col(j);
            for (Eigen::Index k = 0; k < j; ++k) {
                const double v = res.trace.stage_values[static_cast<std::size_t>(k)];
                lp.add_ub(-(G * M.col(k)).transpose(), -v + slack * (1.0 + std::abs(v)));
            }
            return std::pair{lp, lp_solve(lp, tol)};
        };
        auto [lp, sol] = solve_stage(cut_tol);
        ++res.lps_solved;
        if (sol.status == LPStatus::Infeasible && j > 0 && !res.trace.escalated) {
            res.trace.escalated = true;
            cut_tol = 1e-7;
            std::tie(lp, sol) = solve_stage(cut_tol);
            ++res.lps_solved;
        }
        if (sol.status != LPStatus::Optimal)
            throw AssumptionViolation("dual stage " + std::to_string(j) + " LP is " + to_string(sol.status));
        lambda = sol.x;
        double resid = 0.0;
        for (Eigen::Index k = 0; k < j; ++k)
            resid = std::max(resid, res.trace.stage_values[static_cast<std::size_t>(k)] - (G * M.col(k)).dot(lambda));
        res.trace.stage_values.push_back(sol.value);
        res.trace.lambdas.push_back(lambda);
        res.trace.cut_residuals.push_back(resid);
        if (j + 1 < np) {
            ++res.lps_solved;
            if (optimal_face_is_singleton(lp, sol, tol)) {
                res.early_stop_stage = static_cast<int>(j);
                break;
            }
        }
    }
    const Eigen::RowVectorXd lgm = lambda.transpose() * G * M;
    res.subgradient = sys.sign() * M.transpose().fullPivLu().solve(lgm.transpose());
    return res;
}

const char* to_string(Regime regime) noexcept
{
    switch (regime) {
    case Regime::ClosedForm: return "closed_form";
    case Regime::NP1: return "np1";
    case Regime::NP2: return "np2";
    case Regime::LDSequence: return "ld_sequence";
    }
    return "?";
}

SubgradientResult subgradient(const VectorImplicitProblem& prob, const Eigen::VectorXd& p, Eigen::Index i, Side sense,
                              const SubgradientOptions& opts)
{
    const Eigen::Index np = prob.n_p();
    SubgradientResult out;
    out.regime = opts.regime ? *opts.regime : np == 1 ? Regime::NP1 : np == 2 ? Regime::NP2 : Regime::LDSequence;
    if ((out.regime == Regime::NP1 && np != 1) || (out.regime == Regime::NP2 && np != 2))
        throw std::invalid_argument(std::string("regime ") + to_string(out.regime) + " does not apply to n_p = " +
                                    std::to_string(np));

    if (out.regime == Regime::ClosedForm) {
        if (prob.n_z() != 1 || prob.pieces().size() != 1)
            throw std::invalid_argument("closed-form regime needs a single nonaffine residual in one variable");
        check_point(prob, p);
        const ScalarImplicitRelaxation rel = classify_pieces(prob.pieces()[0], prob.Z()[0]);
        const ScalarSubgradients s = subgrad_scalar(rel, p);
        const RelaxationValue v = relax_eval_scalar(rel, p);
        out.value = sense == Side::Cv ? v.x_cv : v.x_cc;
        out.subgradient = sense == Side::Cv ? s.s_cv : s.s_cc;
        out.xi_hat = Eigen::VectorXd::Constant(1, out.value);
        return out;
    }

    const RelaxValue v = relax_value(prob, p, i, sense, opts.lp);
    if (!std::isfinite(v.value))
        throw InfeasibleRelaxation("implicit relaxation is infeasible at the requested parameter point");
    out.value = v.value;
    out.xi_hat = v.xi_hat;
    out.lps_solved = 1;
    const SensitivitySystem sys = build_sensitivity(prob, identify_active(prob, p, v.xi_hat, opts.tol_active), i, sense);
    switch (out.regime) {
    case Regime::NP1:
        out.subgradient = Eigen::VectorXd::Constant(1, subgrad_np1(sys, opts.lp));
        out.lps_solved += 1;
        break;
    case Regime::NP2:
        out.subgradient = subgrad_np2(sys, opts.lp);
        out.lps_solved += 4;
        break;
    default: {
        LDResult ld = ld_subgrad(sys, {}, opts.lp);
        out.subgradient = std::move(ld.subgradient);
        out.lps_solved += ld.lps_solved;
        out.early_stop_stage = ld.early_stop_stage;
        out.trace = std::move(ld.trace);
    }
    }
    return out;
}

double slater_margin(const VectorImplicitProblem& prob, const Eigen::VectorXd& p, const LPTolerances& tol)
{
    check_point(prob, p);
    const Eigen::Index nz = prob.n_z();
    LinearProgram lp(nz + 1);
    lp.sense = LPSense::Maximize;
    lp.c(nz) = 1.0;
    lp.upper(nz) = 1.0;
    for (const InequalityRow& row : prob.rows()) {
        Eigen::RowVectorXd r(nz + 1);
        r << row.alpha.transpose(), 1.0;
        lp.add_ub(r, -row.a.dot(p) - row.b);
    }
    for (const AffineEquality& eq : prob.equalities()) {
        Eigen::RowVectorXd r(nz + 1);
        r << eq.alpha.transpose(), 0.0;
        lp.add_eq(r, -eq.a.dot(p) - eq.b);
    }
    const LPSolution sol = lp_solve(lp, tol);
    return sol.status == LPStatus::Optimal ? sol.value : -kInf;
}

}  // namespace imprel
