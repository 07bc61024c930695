#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "corpus.hpp"
#include "imprel/mccormick.hpp"
#include "oracles.hpp"

using namespace imprel;

namespace
{

McCormick sweep(const CorpusEntry& e, const ExprGraph& g, const Eigen::VectorXd& z, const Eigen::VectorXd& p)
{
    return eval_mccormick(g, {z.data(), std::size_t(z.size())}, {p.data(), std::size_t(p.size())}, e.Z, e.P);
}

Eigen::VectorXd stack(const Eigen::VectorXd& z, const Eigen::VectorXd& p)
{
    Eigen::VectorXd x(z.size() + p.size());
    x << z, p;
    return x;
}

}  // namespace

TEST_CASE("seeding")
{
    McCormick z = mc_seed(0, 0.5, Interval(0, 1), 3, 0);
    CHECK(z.cv == 0.5);
    CHECK(z.cc == 0.5);
    CHECK(z.sub_cv == Eigen::Vector3d(1, 0, 0));
    CHECK(z.sub_cc == Eigen::Vector3d(1, 0, 0));
    McCormick p = mc_seed(1, 274.27, Interval(250, 320), 3, 1);
    CHECK(p.sub_cv == Eigen::Vector3d(0, 0, 1));
    CHECK_THROWS_AS(mc_seed(0, 2, Interval(0, 1), 3, 0), std::invalid_argument);
    CHECK_THROWS_AS(mc_seed(2, 0.5, Interval(0, 1), 3, 1), std::invalid_argument);
}

TEST_CASE("elemental rules")
{
    const McCormick x = mc_seed(0, 0.0, Interval(-1, 1), 1, 0);
    const McCormick sq = pow(x, 2);
    CHECK(sq.cv == 0.0);
    CHECK(sq.cc == doctest::Approx(1.0));
    CHECK(sq.sub_cv(0) == 0.0);
    CHECK(sq.sub_cc(0) == doctest::Approx(0.0));

    // bilinear planes at (0.5, 0.5) on [0,1]^2: max(0, x + y - 1) = 0 and min(y, x) = 0.5
    const McCormick a = mc_seed(0, 0.5, Interval(0, 1), 2, 0);
    const McCormick b = mc_seed(1, 0.5, Interval(0, 1), 2, 0);
    const McCormick ab = a * b;
    CHECK(ab.cv == doctest::Approx(0.0));
    CHECK(ab.cc == doctest::Approx(0.5));

    const McCormick u = mc_seed(0, 0.3, Interval(0, 1), 2, 0);
    const McCormick v = mc_seed(1, 0.4, Interval(0, 1), 2, 0);
    const McCormick s = u + v;
    CHECK(s.cv == doctest::Approx(0.7));
    CHECK(s.cc == doctest::Approx(0.7));
    CHECK(s.sub_cv == Eigen::Vector2d(1, 1));
    CHECK(s.sub_cc == Eigen::Vector2d(1, 1));

    CHECK_THROWS(mc_seed(0, 0.0, Interval(-1, 1), 1, 0) / mc_seed(0, 0.0, Interval(-1, 1), 1, 0));
}

TEST_CASE("eval_mccormick")
{
    const std::vector<Interval> Z{{0, 1}}, P{{0, 1}};
    const std::vector<double> z{0.3}, p{0.8};
    const McCormick aff = eval_mccormick(parse("z1 - p1", 1, 1), z, p, Z, P);
    CHECK(aff.cv == doctest::Approx(-0.5));
    CHECK(aff.cc == doctest::Approx(-0.5));
    CHECK(aff.sub_cv == Eigen::Vector2d(1, -1));
    CHECK(aff.sub_cc == Eigen::Vector2d(1, -1));

    const McCormick ex = eval_mccormick(parse("exp(z1)", 1, 0), std::vector<double>{0}, {}, Z, {});
    CHECK(ex.cv == doctest::Approx(1.0));
    CHECK(ex.cc == doctest::Approx(1.0));
    CHECK(ex.sub_cv(0) == doctest::Approx(1.0));
    CHECK(ex.sub_cc(0) == doctest::Approx(std::exp(1.0) - 1.0));
    CHECK(ex.n_dirs() == 1);
}

TEST_CASE("sandwich, subgradient inequality and convexity on the corpus")
{
    std::mt19937_64 rng(8);
    for (const CorpusEntry& e : corpus()) {
        const ExprGraph g = e.graph();
        INFO(e.text);
        for (int s = 0; s < 300; ++s) {
            const Eigen::VectorXd za = oracle::uniform_point(rng, e.Z), pa = oracle::uniform_point(rng, e.P);
            const Eigen::VectorXd zq = oracle::uniform_point(rng, e.Z), pq = oracle::uniform_point(rng, e.P);
            const McCormick ma = sweep(e, g, za, pa), mq = sweep(e, g, zq, pq);
            const double f = eval_real(g, {za.data(), std::size_t(za.size())}, {pa.data(), std::size_t(pa.size())});
            const double tol = 1e-9 * (1.0 + std::abs(f));
            CHECK(ma.cv <= f + tol);
            CHECK(f <= ma.cc + tol);
            CHECK(ma.bounds.lo <= ma.cv);
            CHECK(ma.cc <= ma.bounds.hi);
            const Eigen::VectorXd step = stack(zq, pq) - stack(za, pa);
            const double tol2 = 1e-9 * (1.0 + std::abs(ma.cv) + std::abs(ma.cc));
            CHECK(mq.cv >= ma.cv + ma.sub_cv.dot(step) - tol2);
            CHECK(mq.cc <= ma.cc + ma.sub_cc.dot(step) + tol2);
            const McCormick mm = sweep(e, g, 0.5 * (za + zq), 0.5 * (pa + pq));
            CHECK(mm.cv <= 0.5 * (ma.cv + mq.cv) + tol2);
            CHECK(mm.cc >= 0.5 * (ma.cc + mq.cc) - tol2);
        }
    }
}
