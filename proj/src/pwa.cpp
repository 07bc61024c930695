#include "imprel/pwa.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "imprel/mccormick.hpp"

namespace imprel
{

namespace
{

AffinePiece piece_from(double value, const Eigen::VectorXd& sub, const Eigen::VectorXd& ref, Eigen::Index nz)
{
    AffinePiece piece;
    piece.alpha = sub.head(nz);
    piece.a = sub.tail(sub.size() - nz);
    piece.b = value - sub.dot(ref);
    return piece;
}

double radical_inverse(std::uint64_t i, unsigned base)
{
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

unsigned nth_prime(std::size_t n)
{
    unsigned count = 0;
    for (unsigned c = 2;; ++c) {
        bool prime = true;
        for (unsigned d = 2; d * d <= c; ++d)
            if (c % d == 0) {
                prime = false;
                break;
            }
        if (prime && count++ == n)
            return c;
    }
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Subtangents subtangent(const ExprGraph& graph, std::span<const Interval> Z, std::span<const Interval> P,
                       const Eigen::VectorXd& ref)
{
    const Eigen::Index nz = graph.n_z(), np = graph.n_p();
    if (ref.size() != nz + np)
        throw std::invalid_argument("subtangent: reference point has wrong dimension");
    const Eigen::VectorXd z = ref.head(nz), p = ref.tail(np);
    const McCormick mc = eval_mccormick(graph, std::span<const double>(z.data(), static_cast<std::size_t>(nz)),
                                        std::span<const double>(p.data(), static_cast<std::size_t>(np)), Z, P);
    return {piece_from(mc.cv, mc.sub_cv, ref, nz), piece_from(mc.cc, mc.sub_cc, ref, nz)};
}

PWARelaxationPair build_pwa(const ExprGraph& graph, std::span<const Interval> Z, std::span<const Interval> P,
                            std::span<const Eigen::VectorXd> refs)
{
    if (refs.empty())
        throw std::invalid_argument("build_pwa: no reference points");
    PWARelaxationPair pair;
    for (const Eigen::VectorXd& ref : refs) {
        Subtangents s = subtangent(graph, Z, P, ref);
        pair.cv_pieces.push_back(std::move(s.cv_piece));
        pair.cc_pieces.push_back(std::move(s.cc_piece));
    }
    return pair;
}

PieceValue pwa_eval(std::span<const AffinePiece> pieces, PieceMode mode, const Eigen::VectorXd& z,
                    const Eigen::VectorXd& p)
{
    if (pieces.empty())
        throw std::invalid_argument("pwa_eval: empty piece list");
    PieceValue best{pieces[0](z, p), 0};
    for (std::size_t k = 1; k < pieces.size(); ++k) {
        const double v = pieces[k](z, p);
        if (mode == PieceMode::Max ? v > best.value : v < best.value)
            best = {v, k};
    }
    return best;
}

std::vector<Eigen::VectorXd> halton_points(std::span<const Interval> Z, std::span<const Interval> P,
                                           std::size_t count, std::uint64_t seed)
{
    const std::size_t dim = Z.size() + P.size();
    std::vector<Eigen::VectorXd> pts;
    pts.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        Eigen::VectorXd x(static_cast<Eigen::Index>(dim));
        for (std::size_t d = 0; d < dim; ++d) {
            const Interval& box = d < Z.size() ? Z[d] : P[d - Z.size()];
            const double u = radical_inverse(seed + k + 1, nth_prime(d));
            x(static_cast<Eigen::Index>(d)) = box.lo + u * box.width();
        }
        pts.push_back(std::move(x));
    }
    return pts;
}

std::string format_affine(const Eigen::VectorXd& coefs, std::span<const std::string> names, double offset,
                          int decimals)
{
    std::string out;
    auto number = [&](double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*f", decimals, std::abs(v));
        return std::string(buf);
    };
    auto negative = [&](double v) {
        // a value that rounds to zero prints without a minus sign
        return v < 0.0 && number(v).find_first_not_of("0.") != std::string::npos;
    };
    auto term = [&](double v, const std::string& name) {
        if (out.empty())
            out += (negative(v) ? "-" : "") + number(v) + name;
        else
            out += (negative(v) ? " - " : " + ") + number(v) + name;
    };
    for (Eigen::Index k = 0; k < coefs.size(); ++k)
        term(coefs(k), names[static_cast<std::size_t>(k)]);
    term(offset, "");
    return out;
}

std::string format_pwa(const PWARelaxationPair& pair, std::span<const std::string> z_names,
                       std::span<const std::string> p_names, int decimals)
{
    std::vector<std::string> names(z_names.begin(), z_names.end());
    names.insert(names.end(), p_names.begin(), p_names.end());
    std::string args;
    for (const std::string& n : names)
        args += (args.empty() ? "" : ",") + n;
    auto side = [&](const char* label, const char* op, const std::vector<AffinePiece>& pieces) {
        std::string s = std::string("f^") + label + "(" + args + ") = " + op + "{";
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            Eigen::VectorXd c(pieces[i].alpha.size() + pieces[i].a.size());
            c << pieces[i].alpha, pieces[i].a;
            s += (i ? ", " : " ") + format_affine(c, names, pieces[i].b, decimals);
        }
        return s + " }\n";
    };
    return side("cv", "max", pair.cv_pieces) + side("cc", "min", pair.cc_pieces);
}

void write_pieces_csv(std::ostream& os, std::span<const PWARelaxationPair> pairs, int n_z, int n_p)
{
    os << "side,residual,index";
    for (int k = 1; k <= n_p; ++k)
        os << ",a" << k;
    for (int k = 1; k <= n_z; ++k)
        os << ",alpha" << k;
    os << ",b\n";
    auto row = [&](const char* side, std::size_t r, std::size_t i, const AffinePiece& piece) {
        os << side << ',' << r + 1 << ',' << i + 1;
        for (Eigen::Index k = 0; k < piece.a.size(); ++k)
            os << ',' << fmt(piece.a(k));
        for (Eigen::Index k = 0; k < piece.alpha.size(); ++k)
            os << ',' << fmt(piece.alpha(k));
        os << ',' << fmt(piece.b) << '\n';
    };
    for (std::size_t r = 0; r < pairs.size(); ++r) {
        for (std::size_t i = 0; i < pairs[r].cv_pieces.size(); ++i)
            row("cv", r, i, pairs[r].cv_pieces[i]);
        for (std::size_t i = 0; i < pairs[r].cc_pieces.size(); ++i)
            row("cc", r, i, pairs[r].cc_pieces[i]);
    }
}

}  // namespace imprel
