#include "imprel/scalar_implicit.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace imprel
{

namespace
{

const ImplicitBound& find_bound(const std::vector<ImplicitBound>& bounds, std::size_t piece)
{
    for (const ImplicitBound& b : bounds)
        if (b.piece == piece)
            return b;
    throw std::out_of_range("no implicit bound for piece " + std::to_string(piece) + " (zero slope?)");
}

ImplicitBound make_bound(const AffinePiece& piece, Side side, std::size_t index)
{
    const double alpha = piece.alpha(0);
    return ImplicitBound{-piece.a / alpha, -piece.b / alpha, side, index};
}

template <typename Better>
void scan(const ScalarImplicitRelaxation& rel, const Eigen::VectorXd& p, const std::vector<std::size_t>& g_ids,
          const std::vector<std::size_t>& gamma_ids, Better better, std::optional<double>& value,
          std::optional<ActiveBound>& active)
{
    auto consider = [&](const ImplicitBound& b) {
        const double v = b(p);
        if (!value || better(v, *value)) {
            value = v;
            active = ActiveBound{b.source, b.piece};
        }
    };
    for (std::size_t i : g_ids)
        consider(rel.g(i));
    for (std::size_t j : gamma_ids)
        consider(rel.gamma(j));
}

}  // namespace

const ImplicitBound& ScalarImplicitRelaxation::g(std::size_t i) const
{
    return find_bound(g_pieces, i);
}

const ImplicitBound& ScalarImplicitRelaxation::gamma(std::size_t j) const
{
    return find_bound(gamma_pieces, j);
}

ScalarImplicitRelaxation classify_pieces(const PWARelaxationPair& pair, const Interval& X)
{
    ScalarImplicitRelaxation rel;
    rel.X = X;
    for (std::size_t i = 0; i < pair.cv_pieces.size(); ++i) {
        const AffinePiece& piece = pair.cv_pieces[i];
        if (piece.alpha.size() != 1)
            throw std::invalid_argument("classify_pieces: pieces must have a scalar z-coefficient");
        const double alpha = piece.alpha(0);
        if (alpha < 0.0)
            rel.K_minus.push_back(i);
        else if (alpha > 0.0)
            rel.K_plus.push_back(i);
        else {
            rel.p_only_constraints.push_back({piece.a, piece.b, Side::Cv, i});
            continue;
        }
        rel.g_pieces.push_back(make_bound(piece, Side::Cv, i));
    }
    for (std::size_t j = 0; j < pair.cc_pieces.size(); ++j) {
        const AffinePiece& piece = pair.cc_pieces[j];
        if (piece.alpha.size() != 1)
            throw std::invalid_argument("classify_pieces: pieces must have a scalar z-coefficient");
        const double alpha = piece.alpha(0);
        if (alpha < 0.0)
            rel.L_minus.push_back(j);
        else if (alpha > 0.0)
            rel.L_plus.push_back(j);
        else {
            rel.p_only_constraints.push_back({piece.a, piece.b, Side::Cc, j});
            continue;
        }
        rel.gamma_pieces.push_back(make_bound(piece, Side::Cc, j));
    }
    return rel;
}

HValue h_eval(const ScalarImplicitRelaxation& rel, const Eigen::VectorXd& p)
{
    HValue h;
    scan(rel, p, rel.K_minus, rel.L_plus, [](double v, double best) { return v > best; }, h.h_cv, h.active_cv);
    scan(rel, p, rel.K_plus, rel.L_minus, [](double v, double best) { return v < best; }, h.h_cc, h.active_cc);
    return h;
}

RelaxationValue relax_eval_scalar(const ScalarImplicitRelaxation& rel, const Eigen::VectorXd& p)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (const ParameterConstraint& c : rel.p_only_constraints)
        if (c.violation(p) > rel.feasibility_tol)
            return {inf, -inf};
    const HValue h = h_eval(rel, p);
    const double x_cv = h.h_cv ? std::max(rel.X.lo, *h.h_cv) : rel.X.lo;
    const double x_cc = h.h_cc ? std::min(rel.X.hi, *h.h_cc) : rel.X.hi;
    if (x_cv > x_cc + rel.feasibility_tol)
        return {inf, -inf};
    return {x_cv, x_cc};
}

ScalarSubgradients subgrad_scalar(const ScalarImplicitRelaxation& rel, const Eigen::VectorXd& p)
{
    const RelaxationValue value = relax_eval_scalar(rel, p);
    if (!std::isfinite(value.x_cv) || !std::isfinite(value.x_cc))
        throw InfeasibleRelaxation("implicit relaxation is infeasible at the requested parameter point");
    const HValue h = h_eval(rel, p);
    auto pick = [&](const std::optional<double>& hv, const std::optional<ActiveBound>& active, bool clipped) {
        if (!hv || clipped)
            return Eigen::VectorXd::Zero(p.size()).eval();
        return (active->source == Side::Cv ? rel.g(active->piece) : rel.gamma(active->piece)).coef;
    };
    ScalarSubgradients s;
    s.s_cv = pick(h.h_cv, h.active_cv, h.h_cv && !(*h.h_cv > rel.X.lo));
    s.s_cc = pick(h.h_cc, h.active_cc, h.h_cc && !(*h.h_cc < rel.X.hi));
    return s;
}

std::string format_closed_form(const ScalarImplicitRelaxation& rel, const std::string& x_name,
                               std::span<const std::string> p_names, int decimals)
{
    std::string args;
    for (const std::string& n : p_names)
        args += (args.empty() ? "" : ",") + n;
    auto constant = [&](double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*g", 15, v);
        return std::string(buf);
    };
    auto side = [&](const char* label, const char* op, double clip, const std::vector<std::size_t>& g_ids,
                    const std::vector<std::size_t>& gamma_ids) {
        std::string s = x_name + "^" + label + "(" + args + ") := " + op + "{ " + constant(clip);
        for (std::size_t i : g_ids) {
            const ImplicitBound& b = rel.g(i);
            s += ", " + format_affine(b.coef, p_names, b.offset, decimals);
        }
        for (std::size_t j : gamma_ids) {
            const ImplicitBound& b = rel.gamma(j);
            s += ", " + format_affine(b.coef, p_names, b.offset, decimals);
        }
        return s + " }\n";
    };
    return side("cv", "max", rel.X.lo, rel.K_minus, rel.L_plus) + side("cc", "min", rel.X.hi, rel.K_plus, rel.L_minus);
}

}  // namespace imprel
