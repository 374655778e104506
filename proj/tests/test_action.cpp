#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "test_systems.hpp"
#include "wkam/action.hpp"
#include "wkam/errors.hpp"

using namespace wkam;

namespace {
CostMatrix random_matrix(const TorusGrid& g, unsigned seed, double t) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    CostMatrix k;
    k.grid = g;
    k.t_step = t;
    k.k.resize(static_cast<size_t>(g.size()) * g.size());
    for (auto& v : k.k) v = uni(rng);
    return k;
}
}  // namespace

TEST_CASE("one_step_cost: zero velocity, cap, and pendulum value") {
    const auto flat = testsys::flat(1);
    CHECK(one_step_cost(flat, Vec(0.0), Vec(0.3), Vec(0.3), 0.1, 4.0) == doctest::Approx(0.0));
    CHECK(one_step_cost(flat, Vec(0.0), Vec(0.0), Vec(0.1), 0.1, 4.0) ==
          doctest::Approx(0.05).epsilon(1e-13));
    CHECK(one_step_cost(flat, Vec(0.0), Vec(0.0), Vec(0.45), 0.1, 4.0) == kInfCost);
    CHECK_THROWS_AS(one_step_cost(flat, Vec(0.0), Vec(0.0), Vec(0.1), -0.1, 4.0), ConfigError);

    const auto pend = testsys::pendulum();
    CHECK(one_step_cost(pend, Vec(0.0), Vec(0.5), Vec(0.5), 0.1, 4.0) ==
          doctest::Approx(0.2).epsilon(1e-13));
}

TEST_CASE("compose: identity, associativity, grid mismatch") {
    const TorusGrid g(1, 8);
    CostMatrix k1 = random_matrix(g, 1, 0.1);

    CostMatrix id;
    id.grid = g;
    id.t_step = 0.0;
    id.k.assign(64, kInfCost);
    for (int i = 0; i < 8; ++i) id.at(i, i) = 0.0;
    const CostMatrix same = compose(k1, id);
    for (size_t i = 0; i < k1.k.size(); ++i) CHECK(same.k[i] == k1.k[i]);

    const CostMatrix k2 = random_matrix(g, 2, 0.1);
    const CostMatrix k3 = random_matrix(g, 3, 0.1);
    const CostMatrix left = compose(compose(k1, k2), k3);
    const CostMatrix right = compose(k1, compose(k2, k3));
    // brute force over both intermediate nodes
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            double best = kInfCost;
            for (int z1 = 0; z1 < 8; ++z1)
                for (int z2 = 0; z2 < 8; ++z2)
                    best = std::min(best, k1.at(y, z1) + k2.at(z1, z2) + k3.at(z2, x));
            CHECK(std::abs(left.at(y, x) - best) < 1e-12);
            CHECK(std::abs(right.at(y, x) - best) < 1e-12);
        }

    const TorusGrid g2(1, 16);
    CHECK_THROWS_AS(compose(k1, random_matrix(g2, 4, 0.1)), ConfigError);
}

TEST_CASE("compose: min-plus monotonicity") {
    const TorusGrid g(1, 16);
    const CostMatrix k1 = random_matrix(g, 10, 0.1);
    CostMatrix k1p = k1;
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> uni(0.0, 0.5);
    for (auto& v : k1p.k) v += uni(rng);
    const CostMatrix k2 = random_matrix(g, 12, 0.1);
    const CostMatrix a = compose(k1, k2);
    const CostMatrix b = compose(k1p, k2);
    for (size_t i = 0; i < a.k.size(); ++i) CHECK(a.k[i] <= b.k[i] + 1e-15);
}

TEST_CASE("compose: two half steps against one step (flat, then Richardson on the pendulum)") {
    const auto flat = testsys::flat(1);
    const TorusGrid g(1, 256);
    const double dt = 0.05;
    {
        const CostMatrix one = one_step_matrix(flat, Vec(0.0), g, 2.0 * dt, 4.0);
        const CostMatrix two = compose(one_step_matrix(flat, Vec(0.0), g, dt, 4.0),
                                       one_step_matrix(flat, Vec(0.0), g, dt, 4.0));
        double worst = 0.0;
        for (int y = 0; y < g.size(); ++y)
            for (int x = 0; x < g.size(); ++x) {
                if (!(one.at(y, x) < kInfCost) || !(two.at(y, x) < kInfCost)) continue;
                worst = std::max(worst, std::abs(one.at(y, x) - two.at(y, x)));
            }
        // flat costs are pure parabolas; the defect is the grid snap h^2/(4 dt)
        CHECK(worst <= g.h() * g.h() / (2.0 * dt) + 1e-12);
    }
    {
        // midpoint refinement at fixed velocity: the defect between one 2dt step
        // and two dt steps scales like dt^3
        const auto pend = testsys::pendulum();
        const double v = 1.5;
        auto defect = [&](double step) {
            const CostMatrix one = one_step_matrix(pend, Vec(0.0), g, 2.0 * step, 6.0);
            const CostMatrix two = compose(one_step_matrix(pend, Vec(0.0), g, step, 6.0),
                                           one_step_matrix(pend, Vec(0.0), g, step, 6.0));
            const int y = static_cast<int>(std::round(0.15 * g.n));
            const int x = g.wrap_axis(y + static_cast<int>(std::round(v * 2.0 * step * g.n)));
            return std::abs(one.at(y, x) - two.at(y, x));
        };
        const double e1 = defect(0.16);
        const double e2 = defect(0.08);
        const double e3 = defect(0.04);
        CHECK(e2 < 0.25 * e1);  // cubic would give 0.125; grid snap costs some
        CHECK(e3 < 0.25 * e2);
    }
}

TEST_CASE("finite_time_action: flat straight line and Bellman equality") {
    const auto flat = testsys::flat(1);
    const TorusGrid g(1, 64);
    const CostMatrix k = finite_time_action(flat, Vec(0.0), g, 1.0, 8, 2.0);
    // 1D flat, c=0, t=1, x-y=0.3 -> 0.045 within grid/step error
    const int y = 0;
    const int x = static_cast<int>(std::round(0.3 * g.n));
    CHECK(k.at(y, x) == doctest::Approx(0.045).epsilon(0.05));
    CHECK(k.at(0, 0) == doctest::Approx(0.0).epsilon(1e-12));

    const TorusGrid g16(1, 16);
    const CostMatrix step = one_step_matrix(flat, Vec(0.3), g16, 0.25, 3.0);
    const CostMatrix lib = finite_time_action(flat, Vec(0.3), g16, 1.0, 4, 3.0);
    const CostMatrix oracle = oracles::bellman_power(step, 4);
    for (size_t i = 0; i < lib.k.size(); ++i) CHECK(std::abs(lib.k[i] - oracle.k[i]) <= 1e-9);

    CHECK_THROWS_AS(finite_time_action(flat, Vec(0.0), g, 1.0, 0, 2.0), ConfigError);
}

TEST_CASE("mane_potential: flat decay and pendulum quadrature") {
    const auto flat = testsys::flat(1);
    const TorusGrid g(1, 64);
    {
        ManeParams mp;
        mp.t_max = 1.0;
        const PairTable short_ladder = mane_potential(flat, Vec(0.0), g, 0.0, mp);
        mp.t_max = 64.0;
        const PairTable long_ladder = mane_potential(flat, Vec(0.0), g, 0.0, mp);
        const int x = 21;
        const double d = 21.0 * g.h();
        // inf over t of d^2/(2t) decays with the ladder until it hits the grid
        // floor d h / (2 dt): the slowest representable speed is one cell per step
        CHECK(long_ladder.at(0, x) < short_ladder.at(0, x));
        const Discretization disc = Discretization::defaults_for(flat, Vec(0.0), g);
        const double floor = d * g.h() / (2.0 * disc.t_step);
        CHECK(long_ladder.at(0, x) == doctest::Approx(floor).epsilon(0.05));
        CHECK(long_ladder.at(0, x) >= 0.0);
    }
    {
        const auto pend = testsys::pendulum();
        const TorusGrid gp(1, 256);
        const PairTable phi = mane_potential(pend, Vec(0.0), gp, 0.0, {});
        const int half = gp.n / 2;
        const double want = std::min(oracles::pendulum_F(0.5),
                                     oracles::pendulum_F(1.0) - oracles::pendulum_F(0.5));
        CHECK(phi.at(0, half) == doctest::Approx(want).epsilon(0.02));
        // phi(x,x) <= 0 + eps at the Aubry point
        CHECK(phi.at(0, 0) <= 1e-12);
    }
}

TEST_CASE("peierls_barrier: pendulum table against quadrature") {
    const auto pend = testsys::pendulum();
    const TorusGrid g(1, 256);
    const PairTable h = peierls_barrier(pend, Vec(0.0), g, 0.0, {});
    CHECK(h.at(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    double worst = 0.0;
    for (int x = 0; x < g.n; ++x) {
        const double want = oracles::pendulum_u(g.node(x)[0]);
        worst = std::max(worst, std::abs(h.at(0, x) - want));
    }
    CHECK(worst < 2e-2);

    // triangle inequality of infima over random triples
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> pick(0, g.n - 1);
    const double tol_h = 5e-3;
    for (int i = 0; i < 200; ++i) {
        const int x = pick(rng), y = pick(rng), z = pick(rng);
        CHECK(h.at(x, z) <= h.at(x, y) + h.at(y, z) + 2.0 * tol_h);
    }
    // nonnegativity of d_c up to tolerance
    for (int i = 0; i < 200; ++i) {
        const int x = pick(rng), y = pick(rng);
        CHECK(h.at(x, y) + h.at(y, x) >= -2.0 * tol_h);
    }
}

TEST_CASE("peierls_barrier: reports non-convergence on a hopeless window") {
    const auto pend = testsys::pendulum();
    const TorusGrid g(1, 64);
    PeierlsParams pp;
    pp.t_lo = 0.25;
    pp.t_hi = 0.5;
    pp.n_march = 8;
    pp.tol_h = 1e-12;
    CHECK_THROWS_AS(peierls_barrier(pend, Vec(0.0), g, 0.0, pp), ConvergenceError);
}

TEST_CASE("dense tables refuse oversized grids") {
    const auto flat = testsys::flat(2);
    CHECK_THROWS_AS(one_step_matrix(flat, Vec::zero(2), TorusGrid(2, 128), 0.05, 2.0),
                    ConfigError);
}
