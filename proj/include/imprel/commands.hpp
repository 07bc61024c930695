#ifndef IMPREL_COMMANDS_HPP
#define IMPREL_COMMANDS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "imprel/problem.hpp"
#include "imprel/vector_implicit.hpp"

namespace imprel
{

//! Process exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitVerifyFailed = 1,
    kExitInput = 2,         //!< unreadable or malformed file, bad arguments
    kExitConstruction = 3,  //!< relaxations could not be built
    kExitInfeasible = 4,    //!< relaxation infeasible at the requested point
    kExitDerivative = 5,    //!< derivative LPs failed (constraint qualification or numerics)
};

//! "%.12g", with infinities as "+inf" and "-inf".
std::string format_number(double v);

//! Lexicographic grid over P, first parameter slowest. A count of 1 gives
//! the midpoint; larger counts include both endpoints.
std::vector<Eigen::VectorXd> parameter_grid(const std::vector<Interval>& P, const std::vector<int>& counts);

struct RelaxArgs
{
    std::vector<int> grid{11};  //!< one count per parameter, or one for all
    Eigen::Index component = 0;
};

int cmd_relax(const Problem& problem, const Model& model, const RelaxArgs& args, std::ostream& out, std::ostream& err);

struct SubgradArgs
{
    Eigen::VectorXd point;
    Eigen::Index component = 0;
    Side sense = Side::Cv;
    SubgradientOptions options;
};

int cmd_subgrad(const Problem& problem, const Model& model, const SubgradArgs& args, std::ostream& out,
                std::ostream& err);

struct VerifyArgs
{
    std::size_t samples = 200;
    std::uint64_t seed = 0;
    double tol_active = 1e-7;
    std::size_t max_witnesses = 5;
};

struct VerifyCounts
{
    std::size_t checked = 0;
    std::size_t failed = 0;
};

struct VerifyReport
{
    VerifyCounts sandwich, subgradient, convexity, finite_difference;
    std::size_t fd_refined = 0;  //!< quotients that agreed only at the smaller step

    bool passed() const noexcept
    {
        return !sandwich.failed && !subgradient.failed && !convexity.failed && !finite_difference.failed;
    }
};

//! Runs the property checks, writing witnesses and a summary to `out`.
VerifyReport run_verify(const Problem& problem, const Model& model, const VerifyArgs& args, std::ostream& out);

int cmd_verify(const Problem& problem, const Model& model, const VerifyArgs& args, std::ostream& out,
               std::ostream& err);

//! Pieces, equalities and the closed form (for one unknown) in readable
//! form, followed by the pieces as CSV.
int cmd_report(const Problem& problem, const Model& model, std::ostream& out, std::ostream& err);

//! Full command line without the program name, e.g. {"relax", "f.json", "--grid", "5"}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace imprel

#endif  // IMPREL_COMMANDS_HPP
