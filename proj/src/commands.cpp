#include "imprel/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

namespace imprel
{

namespace
{

constexpr double kInf = std::numeric_limits<double>::infinity();

// Deterministic across standard libraries, unlike std::uniform_real_distribution.
double uniform01(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Eigen::VectorXd random_point(const std::vector<Interval>& box, std::mt19937_64& rng)
{
    Eigen::VectorXd x(static_cast<Eigen::Index>(box.size()));
    for (std::size_t k = 0; k < box.size(); ++k)
        x(static_cast<Eigen::Index>(k)) = box[k].lo + uniform01(rng) * box[k].width();
    return x;
}

Eigen::VectorXd random_direction(Eigen::Index n, std::mt19937_64& rng)
{
    Eigen::VectorXd d(n);
    do {
        for (Eigen::Index k = 0; k < n; ++k)
            d(k) = 2.0 * uniform01(rng) - 1.0;
    } while (d.norm() < 1e-3);
    return d / d.norm();
}

bool inside(const std::vector<Interval>& box, const Eigen::VectorXd& x)
{
    for (std::size_t k = 0; k < box.size(); ++k)
        if (!box[k].contains(x(static_cast<Eigen::Index>(k))))
            return false;
    return true;
}

std::string format_point(const Eigen::VectorXd& x)
{
    std::string s = "(";
    for (Eigen::Index k = 0; k < x.size(); ++k)
        s += (k ? "," : "") + format_number(x(k));
    return s + ")";
}

const char* sense_name(Side s)
{
    return s == Side::Cv ? "cv" : "cc";
}

void csv_header(std::ostream& os, const std::string& first_line, const std::vector<std::string>& columns)
{
    os << first_line << '\n';
    for (std::size_t k = 0; k < columns.size(); ++k)
        os << (k ? "," : "") << columns[k];
    os << '\n';
}

// Writes to --out when given, else to `out`.
class Sink
{
public:
    Sink(const std::string& path, std::ostream& fallback)
    {
        if (!path.empty()) {
            file_.open(path);
            if (!file_)
                throw ProblemError("cannot write '" + path + "'");
        }
        os_ = path.empty() ? &fallback : &file_;
    }
    std::ostream& stream() { return *os_; }

private:
    std::ofstream file_;
    std::ostream* os_;
};

}  // namespace

std::string format_number(double v)
{
    if (std::isinf(v))
        return v > 0 ? "+inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::vector<Eigen::VectorXd> parameter_grid(const std::vector<Interval>& P, const std::vector<int>& counts_in)
{
    std::vector<int> counts = counts_in;
    if (counts.size() == 1 && P.size() > 1)
        counts.assign(P.size(), counts[0]);
    if (counts.size() != P.size())
        throw std::invalid_argument("grid needs one count per parameter (" + std::to_string(P.size()) + ")");
    std::size_t total = 1;
    for (int c : counts) {
        if (c < 1)
            throw std::invalid_argument("grid counts must be positive");
        total *= static_cast<std::size_t>(c);
    }
    auto coord = [&](std::size_t k, int idx) {
        const Interval& box = P[k];
        if (counts[k] == 1)
            return box.mid();
        if (idx == counts[k] - 1)
            return box.hi;
        return box.lo + box.width() * idx / (counts[k] - 1);
    };
    std::vector<Eigen::VectorXd> pts;
    pts.reserve(total);
    std::vector<int> idx(P.size(), 0);
    for (std::size_t n = 0; n < total; ++n) {
        Eigen::VectorXd p(static_cast<Eigen::Index>(P.size()));
        for (std::size_t k = 0; k < P.size(); ++k)
            p(static_cast<Eigen::Index>(k)) = coord(k, idx[k]);
        pts.push_back(std::move(p));
        for (std::size_t k = P.size(); k-- > 0;) {
            if (++idx[k] < counts[k])
                break;
            idx[k] = 0;
        }
    }
    return pts;
}

int cmd_relax(const Problem& problem, const Model& model, const RelaxArgs& args, std::ostream& out, std::ostream& err)
{
    if (args.component < 0 || args.component >= problem.n_z()) {
        err << "error: component " << args.component + 1 << " out of range 1.." << problem.n_z() << '\n';
        return kExitInput;
    }
    std::vector<Eigen::VectorXd> grid;
    try {
        grid = parameter_grid(problem.P, args.grid);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
    std::vector<std::string> cols = problem.p_names;
    cols.insert(cols.end(), {"x_cv", "x_cc", "x_newton"});
    csv_header(out, "# imprel relax v1 component=" + std::to_string(args.component + 1), cols);
    const auto i = args.component;
    for (const Eigen::VectorXd& p : grid) {
        for (Eigen::Index k = 0; k < p.size(); ++k)
            out << format_number(p(k)) << ',';
        out << format_number(model_value(model, p, i, Side::Cv)) << ','
            << format_number(model_value(model, p, i, Side::Cc)) << ',';
        const NewtonResult nr = solve_implicit(problem.residuals, p, problem.Z, problem.options.newton);
        if (nr.converged())
            out << format_number(nr.x(i));
        out << '\n';
    }
    return kExitOk;
}

int cmd_subgrad(const Problem& problem, const Model& model, const SubgradArgs& args, std::ostream& out,
                std::ostream& err)
{
    if (args.component < 0 || args.component >= problem.n_z()) {
        err << "error: component " << args.component + 1 << " out of range 1.." << problem.n_z() << '\n';
        return kExitInput;
    }
    if (args.point.size() != problem.n_p() || !inside(problem.P, args.point)) {
        err << "error: --point must have " << problem.n_p() << " coordinates inside the parameter bounds\n";
        return kExitInput;
    }
    SubgradientResult res;
    try {
        res = subgradient(model.relaxation, args.point, args.component, args.sense, args.options);
    } catch (const InfeasibleRelaxation& e) {
        err << "error: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const AssumptionViolation& e) {
        err << "error: " << e.what() << '\n';
        return kExitDerivative;
    } catch (const LPNumericalError& e) {
        err << "error: " << e.what() << '\n';
        return kExitDerivative;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
    std::vector<std::string> cols = problem.p_names;
    cols.push_back("value");
    for (Eigen::Index k = 1; k <= problem.n_p(); ++k)
        cols.push_back("s" + std::to_string(k));
    cols.insert(cols.end(), {"regime", "lps_solved", "early_stop_stage"});
    csv_header(out,
               "# imprel subgrad v1 component=" + std::to_string(args.component + 1) + " sense=" +
                   sense_name(args.sense),
               cols);
    for (Eigen::Index k = 0; k < args.point.size(); ++k)
        out << format_number(args.point(k)) << ',';
    out << format_number(res.value);
    for (Eigen::Index k = 0; k < res.subgradient.size(); ++k)
        out << ',' << format_number(res.subgradient(k));
    out << ',' << to_string(res.regime) << ',' << res.lps_solved << ',';
    if (res.early_stop_stage)
        out << *res.early_stop_stage;
    out << '\n';
    return kExitOk;
}

VerifyReport run_verify(const Problem& problem, const Model& model, const VerifyArgs& args, std::ostream& out)
{
    VerifyReport rep;
    std::mt19937_64 rng(args.seed);
    const Eigen::Index nz = problem.n_z(), np = problem.n_p();
    SubgradientOptions sopts;
    sopts.tol_active = args.tol_active;
    std::size_t witnesses = 0;
    auto fail = [&](VerifyCounts& c, const std::string& line) {
        ++c.failed;
        if (witnesses++ < args.max_witnesses * 4)
            out << "FAIL " << line << '\n';
    };
    constexpr double fd_step = 1e-5, fd_small = 1e-7;

    for (std::size_t s = 0; s < args.samples; ++s) {
        const Eigen::VectorXd a = random_point(problem.P, rng);
        const Eigen::VectorXd q = random_point(problem.P, rng);
        const Eigen::VectorXd d = random_direction(np, rng);
        const Eigen::VectorXd mid = 0.5 * (a + q);

        const NewtonResult nr = solve_implicit(problem.residuals, a, problem.Z, problem.options.newton);
        for (Eigen::Index i = 0; i < nz; ++i) {
            const std::string tag = " component=" + std::to_string(i + 1);
            const double cv_a = model_value(model, a, i, Side::Cv);
            const double cc_a = model_value(model, a, i, Side::Cc);
            if (nr.converged()) {
                ++rep.sandwich.checked;
                const double x = nr.x(i);
                if (!(cv_a - 1e-6 <= x && x <= cc_a + 1e-6))
                    fail(rep.sandwich, "sandwich p=" + format_point(a) + tag + " x=" + format_number(x) +
                                           " cv=" + format_number(cv_a) + " cc=" + format_number(cc_a));
            }
            for (Side sense : {Side::Cv, Side::Cc}) {
                const double sg = sense == Side::Cv ? 1.0 : -1.0;
                const std::string stag = tag + " sense=" + sense_name(sense);
                const double v_a = sense == Side::Cv ? cv_a : cc_a;
                if (!std::isfinite(v_a))
                    continue;
                const double v_q = model_value(model, q, i, sense);
                if (std::isfinite(v_q)) {
                    ++rep.convexity.checked;
                    const double v_m = model_value(model, mid, i, sense);
                    if (!(sg * v_m <= 0.5 * sg * (v_a + v_q) + 1e-7))
                        fail(rep.convexity, "convexity a=" + format_point(a) + " b=" + format_point(q) + stag +
                                                " mid=" + format_number(v_m));
                }
                ++rep.subgradient.checked;
                try {
                    const SubgradientResult r = subgradient(model.relaxation, a, i, sense, sopts);
                    const double lin = v_a + r.subgradient.dot(q - a);
                    if (std::isfinite(v_q) && !(sg * v_q >= sg * lin - 1e-7))
                        fail(rep.subgradient, "subgradient a=" + format_point(a) + " q=" + format_point(q) + stag +
                                                  " value=" + format_number(v_q) + " bound=" + format_number(lin));
                } catch (const std::exception& e) {
                    fail(rep.subgradient, "subgradient a=" + format_point(a) + stag + " error: " + e.what());
                }
                const Eigen::VectorXd ad = a + fd_step * d;
                if (!inside(problem.P, ad))
                    continue;
                const double v_ad = model_value(model, ad, i, sense);
                if (!std::isfinite(v_ad))
                    continue;
                ++rep.finite_difference.checked;
                try {
                    const RelaxValue rv = relax_value(model.relaxation, a, i, sense);
                    const SensitivitySystem sys = build_sensitivity(
                        model.relaxation, identify_active(model.relaxation, a, rv.xi_hat, args.tol_active), i, sense);
                    const double dd = dir_deriv(sys, d);
                    auto agrees = [&](double fd) { return std::abs(dd - fd) <= 1e-3 * (1.0 + std::abs(dd)); };
                    const double fd = (v_ad - v_a) / fd_step;
                    bool ok = agrees(fd);
                    if (!ok) {
                        // a kink within the step: retry closer to p
                        const double v_small = model_value(model, a + fd_small * d, i, sense);
                        ok = std::isfinite(v_small) && agrees((v_small - v_a) / fd_small);
                        rep.fd_refined += ok;
                    }
                    if (!ok)
                        fail(rep.finite_difference, "finite_difference p=" + format_point(a) + " d=" +
                                                        format_point(d) + stag + " dir_deriv=" + format_number(dd) +
                                                        " quotient=" + format_number(fd));
                } catch (const std::exception& e) {
                    fail(rep.finite_difference, "finite_difference p=" + format_point(a) + stag + " error: " +
                                                    e.what());
                }
            }
        }
    }
    auto line = [&](const char* name, const VerifyCounts& c) {
        out << name << ": " << c.checked << " checked, " << c.failed << " failed\n";
    };
    line("sandwich", rep.sandwich);
    line("subgradient", rep.subgradient);
    line("convexity", rep.convexity);
    line("finite_difference", rep.finite_difference);
    if (rep.fd_refined)
        out << "finite_difference: " << rep.fd_refined << " passed only with step 1e-7\n";
    out << "result: " << (rep.passed() ? "pass" : "FAIL") << '\n';
    return rep;
}

int cmd_verify(const Problem& problem, const Model& model, const VerifyArgs& args, std::ostream& out, std::ostream&)
{
    out << "# imprel verify v1 samples=" << args.samples << " seed=" << args.seed << '\n';
    return run_verify(problem, model, args, out).passed() ? kExitOk : kExitVerifyFailed;
}

int cmd_report(const Problem& problem, const Model& model, std::ostream& out, std::ostream&)
{
    out << "# imprel report v1\n";
    if (!problem.name.empty())
        out << "problem: " << problem.name << '\n';
    const VectorImplicitProblem& rel = model.relaxation;
    for (std::size_t r = 0; r < rel.pieces().size(); ++r)
        out << "residual " << rel.piece_residuals()[r] + 1 << ":\n"
            << format_pwa(rel.pieces()[r], problem.z_names, problem.p_names, 2);
    std::vector<std::string> names = problem.z_names;
    names.insert(names.end(), problem.p_names.begin(), problem.p_names.end());
    for (const AffineEquality& eq : rel.equalities()) {
        Eigen::VectorXd c(eq.alpha.size() + eq.a.size());
        c << eq.alpha, eq.a;
        out << "residual " << eq.residual + 1 << " (affine): " << format_affine(c, names, eq.b, 4) << " = 0\n";
    }
    if (model.scalar)
        out << format_closed_form(*model.scalar, problem.z_names[0], problem.p_names, 2);
    write_pieces_csv(out, rel.pieces(), static_cast<int>(problem.n_z()), static_cast<int>(problem.n_p()));
    return kExitOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Convex and concave relaxations of implicit functions", "imprel"};
    app.require_subcommand(1);

    std::string path, out_path, sense = "cv", regime;
    std::vector<int> grid{11};
    std::vector<double> point;
    int component = 1;
    std::size_t samples = 200;
    std::uint64_t seed = 0;
    std::optional<double> tol_active;

    auto* relax = app.add_subcommand("relax", "Evaluate x_cv, x_cc and a Newton solution on a parameter grid");
    auto* subgrad = app.add_subcommand("subgrad", "Value and subgradient of one relaxation at a point");
    auto* verify = app.add_subcommand("verify", "Check relaxation properties at random points");
    auto* report = app.add_subcommand("report", "Print the relaxation pieces");
    for (auto* sub : {relax, subgrad, verify, report}) {
        sub->add_option("problem", path, "Problem file (JSON)")->required();
        sub->add_option("--out", out_path, "Write output to PATH");
    }
    for (auto* sub : {relax, subgrad, verify})
        sub->add_option("--tol-active", tol_active, "Activity tolerance for constraints");
    for (auto* sub : {relax, subgrad})
        sub->add_option("--component", component, "Component of x (1-based)");
    relax->add_option("--grid", grid, "Points per parameter, N or N,N,...")->delimiter(',');
    subgrad->add_option("--point", point, "Parameter point v,v,...")->delimiter(',')->required();
    subgrad->add_option("--sense", sense, "cv or cc")->check(CLI::IsMember({"cv", "cc"}));
    subgrad->add_option("--regime", regime, "Override the regime")
        ->check(CLI::IsMember({"closed_form", "np1", "np2", "ld_sequence"}));
    verify->add_option("--samples", samples, "Number of random sample points");
    verify->add_option("--seed", seed, "Random seed");

    std::vector<std::string> storage{"imprel"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (std::string& s : storage)
        argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help(app.get_subcommands().empty() ? "" : app.get_subcommands()[0]->get_name());
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }

    try {
        const Problem problem = load_problem(path);
        const double tol = tol_active.value_or(problem.options.tol_active);
        if (!(tol > 0.0)) {
            err << "error: --tol-active must be positive\n";
            return kExitInput;
        }
        const Model model = build_model(problem);
        Sink sink(out_path, out);
        if (relax->parsed()) {
            RelaxArgs ra;
            ra.grid = grid;
            ra.component = component - 1;
            return cmd_relax(problem, model, ra, sink.stream(), err);
        }
        if (subgrad->parsed()) {
            SubgradArgs sa;
            sa.point = Eigen::Map<const Eigen::VectorXd>(point.data(), static_cast<Eigen::Index>(point.size()));
            sa.component = component - 1;
            sa.sense = sense == "cc" ? Side::Cc : Side::Cv;
            sa.options.tol_active = tol;
            if (regime == "closed_form")
                sa.options.regime = Regime::ClosedForm;
            else if (regime == "np1")
                sa.options.regime = Regime::NP1;
            else if (regime == "np2")
                sa.options.regime = Regime::NP2;
            else if (regime == "ld_sequence")
                sa.options.regime = Regime::LDSequence;
            return cmd_subgrad(problem, model, sa, sink.stream(), err);
        }
        if (verify->parsed()) {
            VerifyArgs va;
            va.samples = samples;
            va.seed = seed;
            va.tol_active = tol;
            return cmd_verify(problem, model, va, sink.stream(), err);
        }
        return cmd_report(problem, model, sink.stream(), err);
    } catch (const ProblemError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const ConstructionError& e) {
        err << "error: cannot construct relaxations: " << e.what() << '\n';
        return kExitConstruction;
    } catch (const LPNumericalError& e) {
        err << "error: " << e.what() << '\n';
        return kExitDerivative;
    }
}

}  // namespace imprel
