#ifndef IMPREL_PWA_HPP
#define IMPREL_PWA_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "imprel/expr.hpp"
#include "imprel/interval.hpp"

namespace imprel
{

//! Affine function  a^T p + alpha^T z + b.
struct AffinePiece
{
    Eigen::VectorXd a;      //!< p-coefficients
    Eigen::VectorXd alpha;  //!< z-coefficients
    double b = 0.0;

    double operator()(const Eigen::VectorXd& z, const Eigen::VectorXd& p) const
    {
        return a.dot(p) + alpha.dot(z) + b;
    }
};

//! Convex max-of-pieces underestimator and concave min-of-pieces
//! overestimator of one residual component.
struct PWARelaxationPair
{
    std::vector<AffinePiece> cv_pieces;
    std::vector<AffinePiece> cc_pieces;
};

struct Subtangents
{
    AffinePiece cv_piece;
    AffinePiece cc_piece;
};

//! Subtangents of the McCormick relaxations of `graph` at `ref`, where ref
//! stacks z then p. Each piece touches its relaxation at ref.
Subtangents subtangent(const ExprGraph& graph, std::span<const Interval> Z, std::span<const Interval> P,
                       const Eigen::VectorXd& ref);

//! One cv and one cc subtangent per reference point, in order. Throws
//! std::invalid_argument on an empty reference list.
PWARelaxationPair build_pwa(const ExprGraph& graph, std::span<const Interval> Z, std::span<const Interval> P,
                            std::span<const Eigen::VectorXd> refs);

enum class PieceMode { Max, Min };

struct PieceValue
{
    double value;
    std::size_t active_index;  //!< lowest index attaining the value
};

//! Pointwise max or min of the pieces. Throws std::invalid_argument when
//! `pieces` is empty.
PieceValue pwa_eval(std::span<const AffinePiece> pieces, PieceMode mode, const Eigen::VectorXd& z,
                    const Eigen::VectorXd& p);

//! Deterministic reference points in the box Z x P from the Halton
//! sequence (bases 2, 3, 5, ... one prime per coordinate), starting at
//! sequence index `seed + 1`.
std::vector<Eigen::VectorXd> halton_points(std::span<const Interval> Z, std::span<const Interval> P,
                                           std::size_t count, std::uint64_t seed = 0);

//! Renders coefficient-weighted names plus an offset with fixed decimals,
//! e.g. "0.50V + 9.96P - 0.08T - 4.86". Zero coefficients are kept.
std::string format_affine(const Eigen::VectorXd& coefs, std::span<const std::string> names, double offset,
                          int decimals);

//! "f^cv(V,P,T) = max{...}" and "f^cc(V,P,T) = min{...}" display lines.
std::string format_pwa(const PWARelaxationPair& pair, std::span<const std::string> z_names,
                       std::span<const std::string> p_names, int decimals = 2);

//! Writes one CSV row per piece: side,residual,index,a...,alpha...,b
void write_pieces_csv(std::ostream& os, std::span<const PWARelaxationPair> pairs, int n_z, int n_p);

}  // namespace imprel

#endif  // IMPREL_PWA_HPP
