#include "imprel/mccormick.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace imprel
{

namespace
{

struct EnvelopePoint
{
    double value;
    double slope;
};

using Envelope = std::function<EnvelopePoint(double)>;

double ipow(double x, int m)
{
    if (m < 0)
        return 1.0 / ipow(x, -m);
    double r = 1.0;
    while (m-- > 0)
        r *= x;
    return r;
}

Envelope power_fn(int m)
{
    return [m](double t) { return EnvelopePoint{ipow(t, m), m * ipow(t, m - 1)}; };
}

Envelope secant(const std::function<double(double)>& f, double lo, double hi)
{
    const double flo = f(lo);
    const double slope = hi > lo ? (f(hi) - flo) / (hi - lo) : 0.0;
    return [flo, slope, lo](double t) { return EnvelopePoint{flo + slope * (t - lo), slope}; };
}

void cut(McCormick& r)
{
    if (r.cv < r.bounds.lo) {
        r.cv = r.bounds.lo;
        r.sub_cv.setZero();
    }
    if (r.cc > r.bounds.hi) {
        r.cc = r.bounds.hi;
        r.sub_cc.setZero();
    }
}

// mid(cv, cc, ref) with ties resolved toward cv, then cc.
// Returns the selected argument and writes the selected subgradient.
double mid_select(const McCormick& x, double ref, Eigen::VectorXd& sub)
{
    if (ref <= x.cv) {
        sub = x.sub_cv;
        return x.cv;
    }
    if (ref >= x.cc) {
        sub = x.sub_cc;
        return x.cc;
    }
    sub = Eigen::VectorXd::Zero(x.n_dirs());
    return ref;
}

// Univariate composition u(x): cv_env is a convex underestimator of u on
// x.bounds minimized at xmin, cc_env a concave overestimator maximized at xmax.
McCormick compose(const McCormick& x, const Interval& range, const Envelope& cv_env, double xmin,
                  const Envelope& cc_env, double xmax)
{
    McCormick r;
    r.bounds = range;
    Eigen::VectorXd sel;
    const double tcv = mid_select(x, xmin, sel);
    const EnvelopePoint ecv = cv_env(tcv);
    r.cv = ecv.value;
    r.sub_cv = ecv.slope * sel;
    const double tcc = mid_select(x, xmax, sel);
    const EnvelopePoint ecc = cc_env(tcc);
    r.cc = ecc.value;
    r.sub_cc = ecc.slope * sel;
    cut(r);
    return r;
}

// Positive root of (m-1) s^m + m s^(m-1) - 1 on (0, 1): the tangent point of
// the convex envelope of an odd power on [-1, 1], scaled by the box bound.
double odd_power_tangent_ratio(int m)
{
    auto f = [m](double s) { return (m - 1) * ipow(s, m) + m * ipow(s, m - 1) - 1.0; };
    double a = 0.0, b = 1.0;
    for (int it = 0; it < 200 && b - a > 0.0; ++it) {
        const double c = 0.5 * (a + b);
        if (c == a || c == b)
            break;
        (f(c) < 0.0 ? a : b) = c;
    }
    return b;
}

// Convex envelope of t^m (m odd >= 3) on [lo, hi] with lo < 0 < hi.
Envelope odd_power_convex(int m, double lo, double hi)
{
    const double tp = odd_power_tangent_ratio(m) * (-lo);
    auto f = [m](double t) { return ipow(t, m); };
    if (tp >= hi)
        return secant(f, lo, hi);
    const Envelope line = secant(f, lo, tp);
    const Envelope curve = power_fn(m);
    return [line, curve, tp](double t) { return t <= tp ? line(t) : curve(t); };
}

// Concave envelope of t^m (m odd >= 3) on [lo, hi] with lo < 0 < hi.
Envelope odd_power_concave(int m, double lo, double hi)
{
    const double tn = -odd_power_tangent_ratio(m) * hi;
    auto f = [m](double t) { return ipow(t, m); };
    if (tn <= lo)
        return secant(f, lo, hi);
    const Envelope line = secant(f, tn, hi);
    const Envelope curve = power_fn(m);
    return [line, curve, tn](double t) { return t >= tn ? line(t) : curve(t); };
}

// Chooses x.cv or x.cc for a monotone scaling k * x: k >= 0 keeps the order.
struct Scaled
{
    double value;
    Eigen::VectorXd sub;
};

Scaled scaled_lower(double k, const McCormick& x)
{
    if (k >= 0.0)
        return {k * x.cv, k * x.sub_cv};
    return {k * x.cc, k * x.sub_cc};
}

Scaled scaled_upper(double k, const McCormick& x)
{
    if (k >= 0.0)
        return {k * x.cc, k * x.sub_cc};
    return {k * x.cv, k * x.sub_cv};
}

bool is_point(const McCormick& x)
{
    return x.bounds.lo == x.bounds.hi;
}

McCormick scale(const McCormick& x, double k, const Interval& range)
{
    McCormick r;
    r.bounds = range;
    const Scaled lo = scaled_lower(k, x);
    const Scaled hi = scaled_upper(k, x);
    r.cv = lo.value;
    r.sub_cv = lo.sub;
    r.cc = hi.value;
    r.sub_cc = hi.sub;
    cut(r);
    return r;
}

void check_dirs(const McCormick& x, const McCormick& y)
{
    if (x.n_dirs() != y.n_dirs())
        throw std::invalid_argument("McCormick: inconsistent subgradient dimension");
}

}  // namespace

McCormick mc_seed(Eigen::Index index, double point, const Interval& box, Eigen::Index n_dirs,
                  Eigen::Index dir_offset)
{
    if (!box.contains(point))
        throw std::invalid_argument("mc_seed: point " + std::to_string(point) + " outside its box");
    const Eigen::Index dir = dir_offset + index;
    if (index < 0 || dir_offset < 0 || dir >= n_dirs)
        throw std::invalid_argument("mc_seed: direction out of range");
    McCormick r;
    r.bounds = box;
    r.cv = r.cc = point;
    r.sub_cv = Eigen::VectorXd::Unit(n_dirs, dir);
    r.sub_cc = r.sub_cv;
    return r;
}

McCormick mc_constant(double value, Eigen::Index n_dirs)
{
    McCormick r;
    r.bounds = Interval(value);
    r.cv = r.cc = value;
    r.sub_cv = Eigen::VectorXd::Zero(n_dirs);
    r.sub_cc = Eigen::VectorXd::Zero(n_dirs);
    return r;
}

McCormick operator-(const McCormick& x)
{
    McCormick r;
    r.bounds = -x.bounds;
    r.cv = -x.cc;
    r.cc = -x.cv;
    r.sub_cv = -x.sub_cc;
    r.sub_cc = -x.sub_cv;
    return r;
}

McCormick operator+(const McCormick& x, const McCormick& y)
{
    check_dirs(x, y);
    McCormick r;
    r.bounds = x.bounds + y.bounds;
    r.cv = x.cv + y.cv;
    r.cc = x.cc + y.cc;
    r.sub_cv = x.sub_cv + y.sub_cv;
    r.sub_cc = x.sub_cc + y.sub_cc;
    cut(r);
    return r;
}

McCormick operator-(const McCormick& x, const McCormick& y)
{
    check_dirs(x, y);
    McCormick r;
    r.bounds = x.bounds - y.bounds;
    r.cv = x.cv - y.cc;
    r.cc = x.cc - y.cv;
    r.sub_cv = x.sub_cv - y.sub_cc;
    r.sub_cc = x.sub_cc - y.sub_cv;
    cut(r);
    return r;
}

McCormick operator*(const McCormick& x, const McCormick& y)
{
    check_dirs(x, y);
    const Interval range = x.bounds * y.bounds;
    if (is_point(y))
        return scale(x, y.bounds.lo, range);
    if (is_point(x))
        return scale(y, x.bounds.lo, range);

    const double xl = x.bounds.lo, xu = x.bounds.hi;
    const double yl = y.bounds.lo, yu = y.bounds.hi;

    McCormick r;
    r.bounds = range;

    // Underestimating planes: yL x + xL y - xL yL and yU x + xU y - xU yU.
    {
        const Scaled a = scaled_lower(yl, x), b = scaled_lower(xl, y);
        const Scaled c = scaled_lower(yu, x), d = scaled_lower(xu, y);
        const double alpha1 = a.value + b.value - xl * yl;
        const double alpha2 = c.value + d.value - xu * yu;
        if (alpha1 >= alpha2) {
            r.cv = alpha1;
            r.sub_cv = a.sub + b.sub;
        } else {
            r.cv = alpha2;
            r.sub_cv = c.sub + d.sub;
        }
    }
    // Overestimating planes: yU x + xL y - xL yU and yL x + xU y - xU yL.
    {
        const Scaled a = scaled_upper(yu, x), b = scaled_upper(xl, y);
        const Scaled c = scaled_upper(yl, x), d = scaled_upper(xu, y);
        const double beta1 = a.value + b.value - xl * yu;
        const double beta2 = c.value + d.value - xu * yl;
        if (beta1 <= beta2) {
            r.cc = beta1;
            r.sub_cc = a.sub + b.sub;
        } else {
            r.cc = beta2;
            r.sub_cc = c.sub + d.sub;
        }
    }
    cut(r);
    return r;
}

McCormick pow(const McCormick& x, int m)
{
    if (m == 0)
        return mc_constant(1.0, x.n_dirs());
    if (m == 1)
        return x;
    const Interval range = pow(x.bounds, m);
    if (is_point(x)) {
        McCormick r = mc_constant(ipow(x.bounds.lo, m), x.n_dirs());
        r.bounds = range;
        return r;
    }
    const double lo = x.bounds.lo, hi = x.bounds.hi;
    auto f = [m](double t) { return ipow(t, m); };
    const Envelope curve = power_fn(m);
    const Envelope chord = secant(f, lo, hi);

    if (m > 0 && m % 2 == 0) {
        const double xmin = std::clamp(0.0, lo, hi);
        const double xmax = f(hi) >= f(lo) ? hi : lo;
        return compose(x, range, curve, xmin, chord, xmax);
    }
    if (m > 0) {
        if (lo >= 0.0)
            return compose(x, range, curve, lo, chord, hi);
        if (hi <= 0.0)
            return compose(x, range, chord, lo, curve, hi);
        return compose(x, range, odd_power_convex(m, lo, hi), lo, odd_power_concave(m, lo, hi), hi);
    }
    // m < 0: the interval rule already rejected boxes containing zero.
    if (lo > 0.0)
        return compose(x, range, curve, hi, chord, lo);  // convex, decreasing
    if ((-m) % 2 == 0)
        return compose(x, range, curve, lo, chord, hi);  // convex, increasing
    return compose(x, range, chord, hi, curve, lo);      // concave, decreasing
}

McCormick operator/(const McCormick& x, const McCormick& y)
{
    check_dirs(x, y);
    const Interval range = x.bounds / y.bounds;
    McCormick r = x * pow(y, -1);
    r.bounds = range;
    cut(r);
    return r;
}

McCormick exp(const McCormick& x)
{
    const Interval range = exp(x.bounds);
    if (is_point(x)) {
        McCormick r = mc_constant(std::exp(x.bounds.lo), x.n_dirs());
        r.bounds = range;
        return r;
    }
    auto f = [](double t) { return std::exp(t); };
    const Envelope curve = [](double t) {
        const double e = std::exp(t);
        return EnvelopePoint{e, e};
    };
    return compose(x, range, curve, x.bounds.lo, secant(f, x.bounds.lo, x.bounds.hi), x.bounds.hi);
}

McCormick mc_apply(Opcode op, std::span<const McCormick> operands, int exponent)
{
    if (arity(op) == 0 || operands.size() != static_cast<std::size_t>(arity(op)))
        throw std::invalid_argument(std::string("mc_apply: bad operand count for ") + opcode_name(op));
    const McCormick& x = operands[0];
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
    throw std::invalid_argument("mc_apply: leaf opcode");
}

McCormick eval_mccormick(const ExprGraph& graph, std::span<const double> z, std::span<const double> p,
                         std::span<const Interval> Z, std::span<const Interval> P)
{
    const auto nz = static_cast<std::size_t>(graph.n_z());
    const auto np = static_cast<std::size_t>(graph.n_p());
    if (z.size() != nz || p.size() != np || Z.size() != nz || P.size() != np)
        throw std::invalid_argument("eval_mccormick: dimension mismatch");
    const auto n_dirs = static_cast<Eigen::Index>(nz + np);
    return forward_sweep<McCormick>(
        graph,
        [&](const ExprNode& n) {
            const auto k = static_cast<std::size_t>(n.index);
            switch (n.op) {
            case Opcode::VarZ: return mc_seed(n.index, z[k], Z[k], n_dirs, 0);
            case Opcode::VarP: return mc_seed(n.index, p[k], P[k], n_dirs, static_cast<Eigen::Index>(nz));
            default: return mc_constant(n.value, n_dirs);
            }
        },
        [](const ExprNode& n, const McCormick& x, const McCormick& y) {
            switch (arity(n.op)) {
            case 1: return mc_apply(n.op, std::span<const McCormick>(&x, 1), n.index);
            default: {
                const McCormick ops[2] = {x, y};
                return mc_apply(n.op, ops, n.index);
            }
            }
        });
}

}  // namespace imprel
