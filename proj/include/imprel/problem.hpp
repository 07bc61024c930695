#ifndef IMPREL_PROBLEM_HPP
#define IMPREL_PROBLEM_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "imprel/expr.hpp"
#include "imprel/interval.hpp"
#include "imprel/newton.hpp"
#include "imprel/pwa.hpp"
#include "imprel/scalar_implicit.hpp"
#include "imprel/vector_implicit.hpp"

namespace imprel
{

//! Unreadable file, malformed JSON, bad expression or inconsistent
//! dimensions in a problem file.
class ProblemError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

//! Relaxation construction failed for a well-formed problem.
class ConstructionError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct ProblemOptions
{
    std::size_t n_refs = 4;
    std::uint64_t seed = 0;
    double tol_active = 1e-7;
    NewtonOptions newton;
};

//! Contents of a problem file; see docs/problem_schema.md.
struct Problem
{
    std::string name;
    std::vector<std::string> z_names;
    std::vector<std::string> p_names;
    std::vector<std::string> residual_text;
    std::vector<ExprGraph> residuals;
    std::vector<Interval> Z;
    std::vector<Interval> P;
    std::vector<Eigen::VectorXd> reference_points;            //!< z then p
    std::vector<std::optional<PWARelaxationPair>> pieces;     //!< explicit pieces per residual
    ProblemOptions options;

    Eigen::Index n_z() const noexcept { return static_cast<Eigen::Index>(Z.size()); }
    Eigen::Index n_p() const noexcept { return static_cast<Eigen::Index>(P.size()); }
};

Problem parse_problem(std::string_view json_text);
Problem load_problem(const std::string& path);

//! Relaxations built from a problem. `scalar` is set when there is one
//! unknown with a nonaffine residual, so the closed form applies.
struct Model
{
    VectorImplicitProblem relaxation;
    std::optional<ScalarImplicitRelaxation> scalar;
    std::vector<Eigen::VectorXd> refs;
};

//! Throws ConstructionError.
Model build_model(const Problem& problem);

//! Relaxation value of component i (0-based); the closed form when available.
double model_value(const Model& model, const Eigen::VectorXd& p, Eigen::Index i, Side sense);

}  // namespace imprel

#endif  // IMPREL_PROBLEM_HPP
