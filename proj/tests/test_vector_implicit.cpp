#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "imprel/problem.hpp"
#include "imprel/vector_implicit.hpp"
#include "oracles.hpp"

using namespace imprel;
using Idx = std::vector<std::size_t>;

namespace
{

AffinePiece piece(double alpha, Eigen::VectorXd a, double b)
{
    return {std::move(a), Eigen::VectorXd::Constant(1, alpha), b};
}

Eigen::VectorXd vec(std::initializer_list<double> v)
{
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index k = 0;
    for (double e : v)
        x(k++) = e;
    return x;
}

// x >= p and x >= -p, so x^cv(p) = |p|; the cc piece never binds.
VectorImplicitProblem abs_problem()
{
    PWARelaxationPair pair;
    pair.cv_pieces = {piece(-1, vec({1}), 0), piece(-1, vec({-1}), 0)};
    pair.cc_pieces = {piece(1, vec({0}), 100)};
    return VectorImplicitProblem({{-10, 10}}, {{-2, 3}}, {pair}, {0}, {});
}

// x >= -p
VectorImplicitProblem neg_problem()
{
    PWARelaxationPair pair;
    pair.cv_pieces = {piece(-1, vec({-1}), 0)};
    pair.cc_pieces = {piece(1, vec({0}), 100)};
    return VectorImplicitProblem({{-10, 10}}, {{-2, 3}}, {pair}, {0}, {});
}

// x >= p1 and x >= p2
VectorImplicitProblem max_problem()
{
    PWARelaxationPair pair;
    pair.cv_pieces = {piece(-1, vec({1, 0}), 0), piece(-1, vec({0, 1}), 0)};
    pair.cc_pieces = {piece(1, vec({0, 0}), 100)};
    return VectorImplicitProblem({{-10, 10}}, {{-1, 1}, {-1, 1}}, {pair}, {0}, {});
}

SensitivitySystem system_at(const VectorImplicitProblem& prob, const Eigen::VectorXd& p, Side sense = Side::Cv)
{
    const RelaxValue v = relax_value(prob, p, 0, sense);
    return build_sensitivity(prob, identify_active(prob, p, v.xi_hat), 0, sense);
}

Model example(const char* name) { return build_model(load_problem(std::string(IMPREL_EXAMPLES_DIR "/") + name)); }

}  // namespace

TEST_CASE("problem construction")
{
    const VectorImplicitProblem prob = abs_problem();
    CHECK(prob.n_z() == 1);
    CHECK(prob.n_p() == 1);
    CHECK(prob.n_g() == 3);
    REQUIRE(prob.rows().size() == 5);
    CHECK(prob.rows()[2].kind == InequalityRow::Kind::CcPiece);
    CHECK(prob.rows()[2].alpha(0) == -1);
    CHECK(prob.rows()[3].kind == InequalityRow::Kind::BoxUpper);
    CHECK(prob.rows()[4].kind == InequalityRow::Kind::BoxLower);

    AffineEquality e1{vec({1, 0}), vec({-1}), 0, 0}, e2{vec({2, 0}), vec({0}), 1, 1};
    CHECK_THROWS_AS(VectorImplicitProblem({{0, 1}, {0, 1}}, {{0, 1}}, {}, {}, {e1, e2}), std::invalid_argument);
}

TEST_CASE("affine residuals become equalities")
{
    const std::vector<ExprGraph> graphs{parse("z1 - p1", 2, 1), parse("z2 - z1", 2, 1)};
    const std::vector<Interval> Z{{0, 10}, {0, 10}}, P{{0, 10}};
    const auto refs = halton_points(Z, P, 2);
    const VectorImplicitProblem prob = make_problem(graphs, Z, P, refs);
    CHECK(prob.pieces().empty());
    REQUIRE(prob.equalities().size() == 2);
    const Eigen::VectorXd p = vec({3});
    CHECK(relax_value(prob, p, 0, Side::Cv).value == doctest::Approx(3));
    CHECK(relax_value(prob, p, 1, Side::Cc).value == doctest::Approx(3));

    const RelaxValue v = relax_value(prob, p, 0, Side::Cv);
    const ActiveSet act = identify_active(prob, p, v.xi_hat);
    CHECK(act.inequalities.empty());
    CHECK(act.equalities == Idx{0, 1});
    const SensitivitySystem sys = build_sensitivity(prob, act, 0, Side::Cv);
    CHECK(sys.B.row(0) == Eigen::RowVector2d(1, 0));
    CHECK(sys.G_B(0, 0) == doctest::Approx(1));
    CHECK(subgradient(prob, p, 0, Side::Cv).subgradient(0) == doctest::Approx(1));

    CHECK(detect_affine(parse("2*z1 - 3*p1 + 1", 1, 1), std::vector<Interval>{{0, 1}}, std::vector<Interval>{{0, 1}}));
    CHECK_FALSE(detect_affine(parse("z1*p1", 1, 1), std::vector<Interval>{{0, 1}}, std::vector<Interval>{{0, 1}}));
    CHECK_FALSE(detect_affine(parse("z1^2 - z1^2 + 1e-6*z1^3", 1, 0), std::vector<Interval>{{-1, 2}}, {}));
}

TEST_CASE("relaxation value of the absolute value system")
{
    const VectorImplicitProblem prob = abs_problem();
    for (double p : {-1.5, 0.0, 2.0})
        CHECK(relax_value(prob, vec({p}), 0, Side::Cv).value == doctest::Approx(std::abs(p)).epsilon(1e-12));
    CHECK(relax_value(prob, vec({1}), 0, Side::Cc).value == doctest::Approx(10));
    CHECK(slater_margin(prob, vec({0})) > 1e-3);
}

TEST_CASE("active sets")
{
    const VectorImplicitProblem prob = abs_problem();
    CHECK(identify_active(prob, vec({0}), vec({0})).inequalities == Idx{0, 1});
    CHECK(identify_active(prob, vec({2}), vec({2})).inequalities == Idx{0});
    CHECK(identify_active(prob, vec({2}), vec({10})).inequalities == Idx{3});
}

TEST_CASE("sensitivity system")
{
    const VectorImplicitProblem prob = abs_problem();
    const SensitivitySystem sys = build_sensitivity(prob, identify_active(prob, vec({0}), vec({0})), 0, Side::Cv);
    REQUIRE(sys.A.rows() == 2);
    CHECK(sys.A(0, 0) == -1);
    CHECK(sys.A(1, 0) == -1);
    CHECK(sys.G_A(0, 0) == -1);
    CHECK(sys.G_A(1, 0) == 1);
    CHECK(sys.B.rows() == 0);
    CHECK(sys.objective(0) == 1);

    const SensitivitySystem top = build_sensitivity(prob, identify_active(prob, vec({2}), vec({10})), 0, Side::Cc);
    REQUIRE(top.A.rows() == 1);
    CHECK(top.A(0, 0) == 1);
    CHECK(top.G_A(0, 0) == 0);
    CHECK(top.objective(0) == -1);
    CHECK(top.sign() == -1);
}

TEST_CASE("directional derivatives")
{
    const SensitivitySystem a0 = system_at(abs_problem(), vec({0}));
    CHECK(dir_deriv(a0, vec({1})) == doctest::Approx(1));
    CHECK(dir_deriv(a0, vec({-1})) == doctest::Approx(1));
    CHECK(subgrad_np1(a0) == doctest::Approx(1));
    CHECK(subgrad_np1(system_at(abs_problem(), vec({2}))) == doctest::Approx(1));
    CHECK(subgrad_np1(system_at(neg_problem(), vec({1}))) == doctest::Approx(-1));

    const SensitivitySystem m0 = system_at(max_problem(), vec({0, 0}));
    CHECK(dir_deriv(m0, vec({1, 0})) == doctest::Approx(1));
    CHECK(dir_deriv(m0, vec({-1, 0})) == doctest::Approx(0).epsilon(1e-12));
    CHECK(dir_deriv(m0, vec({0.3, -0.7})) == doctest::Approx(0.3));
    const Eigen::Vector2d s = subgrad_np2(m0);
    CHECK(s(0) == doctest::Approx(0.5));
    CHECK(s(1) == doctest::Approx(0.5));

    // smooth point: only x >= p1 active
    const SensitivitySystem m1 = system_at(max_problem(), vec({0.5, -0.5}));
    const Eigen::VectorXd d = vec({0.4, 0.9});
    CHECK(dir_deriv(m1, d) + dir_deriv(m1, -d) == doctest::Approx(0).epsilon(1e-12));
    const Eigen::Vector2d g = subgrad_np2(m1);
    CHECK(g(0) == doctest::Approx(1));
    CHECK(g(1) == doctest::Approx(0).epsilon(1e-12));

    // p-independent active set: the upper box facet under the cc sense
    const SensitivitySystem flat = system_at(max_problem(), vec({0.2, 0.1}), Side::Cc);
    const Eigen::Vector2d z = subgrad_np2(flat);
    CHECK(z.norm() == doctest::Approx(0).epsilon(1e-12));
}

TEST_CASE("dual LP sequence")
{
    const SensitivitySystem m0 = system_at(max_problem(), vec({0, 0}));
    const LDResult ld = ld_subgrad(m0);
    CHECK(ld.subgradient(0) == doctest::Approx(1));
    CHECK(ld.subgradient(1) == doctest::Approx(0).epsilon(1e-12));
    REQUIRE(ld.early_stop_stage);
    CHECK(*ld.early_stop_stage == 0);
    CHECK(ld.lps_solved == 2);
    CHECK(ld.trace.stage_values[0] == doctest::Approx(dir_deriv(m0, vec({1, 0}))).epsilon(1e-8));

    const SensitivitySystem m1 = system_at(max_problem(), vec({0.5, -0.5}));
    const LDResult smooth = ld_subgrad(m1);
    CHECK(smooth.lps_solved == 2);
    CHECK(smooth.early_stop_stage == 0);
    CHECK((smooth.subgradient - subgrad_np2(m1)).norm() <= 1e-8);

    // a rotated direction matrix recovers the same subgradient at a smooth point
    Eigen::Matrix2d M;
    M << 1, 1, -1, 1;
    const LDResult rot = ld_subgrad(m1, M);
    CHECK((rot.subgradient - smooth.subgradient).norm() <= 1e-8);
    CHECK_THROWS_AS(ld_subgrad(m1, Eigen::Matrix2d::Ones()), std::invalid_argument);
}

TEST_CASE("subgradient dispatch")
{
    SubgradientResult r = subgradient(abs_problem(), vec({0.5}), 0, Side::Cv);
    CHECK(r.regime == Regime::NP1);
    CHECK(r.lps_solved == 2);
    CHECK(r.value == doctest::Approx(0.5));

    r = subgradient(max_problem(), vec({0, 0}), 0, Side::Cv);
    CHECK(r.regime == Regime::NP2);
    CHECK(r.lps_solved == 5);

    SubgradientOptions opts;
    opts.regime = Regime::LDSequence;
    r = subgradient(max_problem(), vec({0, 0}), 0, Side::Cv, opts);
    CHECK(r.regime == Regime::LDSequence);
    CHECK(r.lps_solved == 3);
    REQUIRE(r.trace);

    opts.regime = Regime::NP1;
    CHECK_THROWS_AS(subgradient(max_problem(), vec({0, 0}), 0, Side::Cv, opts), std::invalid_argument);

    PWARelaxationPair empty;
    empty.cv_pieces = {piece(-1, vec({0}), 5)};  // x >= 5
    empty.cc_pieces = {piece(-1, vec({0}), 1)};  // x <= 1
    const VectorImplicitProblem bad({{-10, 10}}, {{0, 1}}, {empty}, {0}, {});
    CHECK_THROWS_AS(subgradient(bad, vec({0.5}), 0, Side::Cv), InfeasibleRelaxation);

    CHECK(std::string(to_string(Regime::LDSequence)) == "ld_sequence");
}

TEST_CASE("exponential system relaxation")
{
    const Model m = example("exp_system.json");
    CHECK(m.relaxation.n_z() == 3);
    const Eigen::VectorXd p = vec({0.6, 1.348});
    const RelaxValue v = relax_value(m.relaxation, p, 2, Side::Cv);
    CHECK(v.value >= 0.42);
    CHECK(v.value <= 0.53);
    const SubgradientResult r = subgradient(m.relaxation, p, 2, Side::Cv);
    CHECK(r.regime == Regime::NP2);
    CHECK(r.lps_solved == 5);
}

TEST_CASE("reactor system uses the dual sequence")
{
    const Model m = example("cstr.json");
    CHECK(m.relaxation.n_p() == 3);
    CHECK(m.relaxation.equalities().size() == 1);
    const SubgradientResult r = subgradient(m.relaxation, vec({0.40, 0.0575, 8.7}), 0, Side::Cv);
    CHECK(r.regime == Regime::LDSequence);
    CHECK(r.subgradient.size() == 3);
    CHECK(r.subgradient.allFinite());
}

TEST_CASE("subgradient inequality, regime agreement and convexity")
{
    for (const char* name : {"quadratic_pair.json", "exp_system.json", "cstr.json"}) {
        const Model m = example(name);
        const VectorImplicitProblem& prob = m.relaxation;
        std::mt19937_64 rng(99);
        int checked = 0, agreed = 0;
        for (int s = 0; s < 60; ++s) {
            const Eigen::VectorXd a = oracle::uniform_point(rng, prob.P()), q = oracle::uniform_point(rng, prob.P());
            for (Eigen::Index i = 0; i < prob.n_z(); ++i) {
                for (Side sense : {Side::Cv, Side::Cc}) {
                    const double vq = relax_value(prob, q, i, sense).value;
                    const double vm = relax_value(prob, 0.5 * (a + q), i, sense).value;
                    SubgradientResult ra;
                    try {
                        ra = subgradient(prob, a, i, sense);
                    } catch (const InfeasibleRelaxation&) {
                        continue;
                    }
                    if (!std::isfinite(vq))
                        continue;
                    ++checked;
                    const double sg = sense == Side::Cv ? 1.0 : -1.0;
                    INFO(std::string(name), " component ", i, " sense ", sg);
                    CHECK(sg * vq >= sg * ra.value + sg * ra.subgradient.dot(q - a) - 1e-7);
                    CHECK(sg * vm <= 0.5 * sg * (ra.value + vq) + 1e-9);
                    SubgradientOptions ld;
                    ld.regime = Regime::LDSequence;
                    const SubgradientResult rl = subgradient(prob, a, i, sense, ld);
                    CHECK(sg * vq >= sg * rl.value + sg * rl.subgradient.dot(q - a) - 1e-7);
                    for (double res : rl.trace->cut_residuals)
                        CHECK(res <= 1e-8);
                    if (rl.early_stop_stage == 0 && ra.regime != Regime::LDSequence) {
                        ++agreed;
                        CHECK((rl.subgradient - ra.subgradient).norm() <= 1e-8);
                    }
                }
            }
        }
        CHECK(checked > 100);
        if (std::string(name) == "exp_system.json")
            CHECK(agreed > 0);
    }
}
