#ifndef IMPREL_VECTOR_IMPLICIT_HPP
#define IMPREL_VECTOR_IMPLICIT_HPP

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "imprel/expr.hpp"
#include "imprel/interval.hpp"
#include "imprel/lp.hpp"
#include "imprel/pwa.hpp"
#include "imprel/scalar_implicit.hpp"

namespace imprel
{

//! One inequality row g(xi, p) = alpha^T xi + a^T p + b <= 0 of the
//! relaxation LP.
struct InequalityRow
{
    enum class Kind { CvPiece, CcPiece, BoxUpper, BoxLower };

    Kind kind = Kind::CvPiece;
    Eigen::VectorXd alpha;
    Eigen::VectorXd a;
    double b = 0.0;
    std::size_t residual = 0;  //!< residual index, or z index for box rows
    std::size_t piece = 0;

    double operator()(const Eigen::VectorXd& xi, const Eigen::VectorXd& p) const
    {
        return alpha.dot(xi) + a.dot(p) + b;
    }
};

//! Affine residual kept as an equality alpha^T xi + a^T p + b = 0.
struct AffineEquality
{
    Eigen::VectorXd alpha;
    Eigen::VectorXd a;
    double b = 0.0;
    std::size_t residual = 0;

    double operator()(const Eigen::VectorXd& xi, const Eigen::VectorXd& p) const
    {
        return alpha.dot(xi) + a.dot(p) + b;
    }
};

//! Residual system with piecewise-affine relaxations of its nonaffine
//! residuals and exact affine equalities. Row order of the relaxation LP:
//! for each nonaffine residual its cv pieces then its cc pieces, then for
//! each z_k the rows xi_k <= z_k^U and -xi_k <= -z_k^L.
class VectorImplicitProblem
{
public:
    //! `pieces[r]` relaxes residual `residuals[r]`. Throws
    //! std::invalid_argument on dimension mismatch or linearly dependent
    //! equality z-gradients.
    VectorImplicitProblem(std::vector<Interval> Z, std::vector<Interval> P, std::vector<PWARelaxationPair> pieces,
                          std::vector<std::size_t> residuals, std::vector<AffineEquality> equalities);

    Eigen::Index n_z() const noexcept { return static_cast<Eigen::Index>(Z_.size()); }
    Eigen::Index n_p() const noexcept { return static_cast<Eigen::Index>(P_.size()); }
    const std::vector<Interval>& Z() const noexcept { return Z_; }
    const std::vector<Interval>& P() const noexcept { return P_; }
    const std::vector<PWARelaxationPair>& pieces() const noexcept { return pieces_; }
    const std::vector<std::size_t>& piece_residuals() const noexcept { return residuals_; }
    const std::vector<AffineEquality>& equalities() const noexcept { return equalities_; }
    const std::vector<InequalityRow>& rows() const noexcept { return rows_; }
    //! Number of piece rows, sum of k_i + l_i (box rows excluded).
    std::size_t n_g() const noexcept { return rows_.size() - 2 * Z_.size(); }

private:
    std::vector<Interval> Z_;
    std::vector<Interval> P_;
    std::vector<PWARelaxationPair> pieces_;
    std::vector<std::size_t> residuals_;
    std::vector<AffineEquality> equalities_;
    std::vector<InequalityRow> rows_;
};

struct BuildOptions
{
    std::size_t n_halton = 5;  //!< probe points for affine detection
    std::uint64_t seed = 0;
};

//! Returns the residual as an equality when it is affine on Z x P (McCormick
//! cv and cc coincide at probe points and the tangent-plane reconstruction is
//! exact on a stencil), otherwise nullopt.
std::optional<AffineEquality> detect_affine(const ExprGraph& graph, std::span<const Interval> Z,
                                            std::span<const Interval> P, const BuildOptions& opts = {});

//! Affine residuals become equalities, the rest get PWA relaxations from
//! subtangents at `refs` (points in Z x P, z first).
VectorImplicitProblem make_problem(std::span<const ExprGraph> graphs, std::vector<Interval> Z, std::vector<Interval> P,
                                   std::span<const Eigen::VectorXd> refs, const BuildOptions& opts = {});

struct RelaxValue
{
    double value;             //!< +inf (cv) or -inf (cc) when infeasible
    Eigen::VectorXd xi_hat;   //!< empty when infeasible
};

//! x_i^cv(p) = min xi_i or x_i^cc(p) = max xi_i over the relaxation LP; i is 0-based.
RelaxValue relax_value(const VectorImplicitProblem& prob, const Eigen::VectorXd& p, Eigen::Index i, Side sense,
                       const LPTolerances& tol = {});

LinearProgram relaxation_lp(const VectorImplicitProblem& prob, const Eigen::VectorXd& p, Eigen::Index i, Side sense);

struct ActiveSet
{
    std::vector<std::size_t> inequalities;  //!< indices into prob.rows()
    std::vector<std::size_t> equalities;
};

ActiveSet identify_active(const VectorImplicitProblem& prob, const Eigen::VectorXd& p, const Eigen::VectorXd& xi_hat,
                          double tol = 1e-7);

//! Linearization A w <= G_A d, B w = G_B d of the active constraints. The
//! machinery works on phi = x_i^cv or phi = -x_i^cc; `objective` is the
//! corresponding +e_i or -e_i. Active rows with identical coefficients
//! appear once.
struct SensitivitySystem
{
    Eigen::MatrixXd A, G_A;
    std::vector<std::size_t> rows;  //!< prob.rows() index of each A row
    Eigen::MatrixXd B, G_B;
    Eigen::VectorXd objective;
    Eigen::Index obj_index = 0;
    Side sense = Side::Cv;

    Eigen::Index n_p() const noexcept { return G_A.cols(); }
    //! [G_A; G_B]
    Eigen::MatrixXd G() const;
    double sign() const noexcept { return sense == Side::Cv ? 1.0 : -1.0; }
};

SensitivitySystem build_sensitivity(const VectorImplicitProblem& prob, const ActiveSet& act, Eigen::Index i,
                                    Side sense);

//! The sensitivity LP had no optimal solution, so a constraint
//! qualification assumed by the derivative formulas fails at this point.
class AssumptionViolation : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

//! min objective^T w s.t. A w <= G_A d, B w = G_B d: the directional
//! derivative of phi.
double phi_dir_deriv(const SensitivitySystem& sys, const Eigen::VectorXd& d, const LPTolerances& tol = {});

//! Directional derivative of the targeted relaxation (x^cv or x^cc) along d.
double dir_deriv(const SensitivitySystem& sys, const Eigen::VectorXd& d, const LPTolerances& tol = {});

double subgrad_np1(const SensitivitySystem& sys, const LPTolerances& tol = {});

//! Half-differences of the four cardinal directional derivatives.
Eigen::Vector2d subgrad_np2(const SensitivitySystem& sys, const LPTolerances& tol = {});

struct LDTrace
{
    std::vector<double> stage_values;          //!< optimal values of phi's dual stage LPs
    std::vector<Eigen::VectorXd> lambdas;      //!< stage optimal multipliers [lambda_A; lambda_B]
    std::vector<double> cut_residuals;         //!< worst violation of earlier stage cuts by each stage's lambda
    bool escalated = false;                    //!< a stage needed the loose cut tolerance
};

struct LDResult
{
    Eigen::VectorXd subgradient;
    int lps_solved = 0;
    std::optional<int> early_stop_stage;
    LDTrace trace;
};

//! Dual LP sequence along the columns of M (identity when empty):
//! stage j maximizes (G m_j)^T lambda over A^T lambda_A + B^T lambda_B = objective,
//! lambda_A <= 0, with cuts (G m_k)^T lambda >= v_k for k < j. Stops early
//! once a stage's optimal multiplier is unique. The subgradient is
//! (lambda^T G M) M^{-1}, sign-corrected for cc.
LDResult ld_subgrad(const SensitivitySystem& sys, const Eigen::MatrixXd& M = {}, const LPTolerances& tol = {});

enum class Regime { ClosedForm, NP1, NP2, LDSequence };

const char* to_string(Regime regime) noexcept;

struct SubgradientOptions
{
    std::optional<Regime> regime;  //!< default: by n_p
    double tol_active = 1e-7;
    LPTolerances lp;
};

struct SubgradientResult
{
    double value = 0.0;
    Eigen::VectorXd subgradient;
    Regime regime = Regime::NP1;
    int lps_solved = 0;  //!< includes the value LP
    std::optional<int> early_stop_stage;
    Eigen::VectorXd xi_hat;
    std::optional<LDTrace> trace;
};

//! Value and subgradient of x_i^cv (or supergradient of x_i^cc) at p.
//! Throws InfeasibleRelaxation when the relaxation is infinite at p and
//! AssumptionViolation from the derivative LPs.
SubgradientResult subgradient(const VectorImplicitProblem& prob, const Eigen::VectorXd& p, Eigen::Index i, Side sense,
                              const SubgradientOptions& opts = {});

//! Largest t <= 1 with g(xi, p) + t <= 0 for every row and h(xi, p) = 0;
//! -inf when even that is infeasible. A margin below ~1e-8 means the strict
//! feasibility needed by the derivative formulas is doubtful.
double slater_margin(const VectorImplicitProblem& prob, const Eigen::VectorXd& p, const LPTolerances& tol = {});

}  // namespace imprel

#endif  // IMPREL_VECTOR_IMPLICIT_HPP
