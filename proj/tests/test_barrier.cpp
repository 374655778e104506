#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "test_systems.hpp"
#include "wkam/barrier.hpp"
#include "wkam/errors.hpp"
#include "wkam/weakkam.hpp"

using namespace wkam;

namespace {
const double kFourOverPi = 4.0 / std::numbers::pi;
}

TEST_CASE("aubry_set: pendulum equilibrium, flat everywhere, supercritical guard") {
    const auto pend = testsys::pendulum();
    const TorusGrid g(1, 256);
    const PairTable h = peierls_barrier(pend, Vec(0.0), g, 0.0, {});
    const auto nodes = aubry_set(h, 1e-4);
    REQUIRE(nodes.size() == 1);
    CHECK(nodes[0] == 0);

    const auto flat = testsys::flat(1);
    const TorusGrid gf(1, 64);
    const PairTable hf = peierls_barrier(flat, Vec(0.0), gf, 0.0, {});
    CHECK(aubry_set(hf, 1e-4).size() == static_cast<size_t>(gf.n));

    // supercritical: no diagonal zeros; the detection belongs to the critical case
    const double a15 = oracles::alpha_1d(pend, 1.5);
    PeierlsParams pp;
    pp.tol_h = 5e-2;  // rotation-phase window wobble is fine for this check
    const PairTable h15 = peierls_barrier(pend, Vec(1.5), g, a15, pp);
    CHECK_THROWS_WITH_AS(aubry_set(h15, 1e-4, a15, pend.max_potential()),
                         doctest::Contains("supercritical"), InvariantError);
}

TEST_CASE("mather_pseudometric: symmetry and the pendulum distance") {
    const auto pend = testsys::pendulum();
    const TorusGrid g(1, 256);
    const PairTable h = peierls_barrier(pend, Vec(0.0), g, 0.0, {});
    CHECK(mather_pseudometric(h, 0, 0) == doctest::Approx(0.0));
    for (int x : {13, 77, 191})
        CHECK(mather_pseudometric(h, 0, x) == mather_pseudometric(h, x, 0));
    CHECK(mather_pseudometric(h, 0, g.n / 2) == doctest::Approx(kFourOverPi).epsilon(0.016));
}

TEST_CASE("aubry_classes: one class, two wells, and the flat continuum") {
    const auto pend = testsys::pendulum();
    const TorusGrid g(1, 256);
    const PairTable h = peierls_barrier(pend, Vec(0.0), g, 0.0, {});
    // widen the tolerance so the boundary-layer neighbors join the class
    const auto nodes = aubry_set(h, 1e-3);
    CHECK(nodes.size() >= 2);
    CHECK(aubry_classes(nodes, h, 5e-2).size() == 1);

    const auto tw = testsys::twowell();
    const PairTable htw = peierls_barrier(tw, Vec(0.0), g, 0.0, {});
    const auto tw_nodes = aubry_set(htw, 1e-4);
    REQUIRE(tw_nodes.size() == 2);
    CHECK(tw_nodes[0] == 0);
    CHECK(tw_nodes[1] == g.n / 2);
    const auto classes = aubry_classes(tw_nodes, htw, 5e-2);
    CHECK(classes.size() == 2);
    // the two wells sit at Mather distance 2/pi
    CHECK(mather_pseudometric(htw, 0, g.n / 2) ==
          doctest::Approx(2.0 / std::numbers::pi).epsilon(0.03));

    const auto flat = testsys::flat(1);
    const TorusGrid gf(1, 64);
    const PairTable hf = peierls_barrier(flat, Vec(0.0), gf, 0.0, {});
    const auto all = aubry_set(hf, 1e-4);
    CHECK(aubry_classes(all, hf, 5e-2).size() == 1);
}

TEST_CASE("barrier_function: pendulum profile and conjugate-pair identity") {
    const auto pend = testsys::pendulum();
    const TorusGrid g(1, 256);
    const PairTable h = peierls_barrier(pend, Vec(0.0), g, 0.0, {});
    const auto nodes = aubry_set(h, 1e-4);
    const ScalarField b = barrier_function(h, nodes);
    CHECK(b.at(0) <= 2e-2);
    for (int i = 0; i < g.n; ++i) CHECK(b.at(i) >= -2e-2);
    // max at the shock equals d_0(0, 1/2) = 4/pi
    int argmax = 0;
    for (int i = 0; i < g.n; ++i)
        if (b.at(i) > b.at(argmax)) argmax = i;
    CHECK(argmax == g.n / 2);
    CHECK(b.at(argmax) == doctest::Approx(kFourOverPi).epsilon(0.016));

    // single class: B* equals u- - u+ from the conjugate pair
    auto [um, up] = conjugate_pair(h, nodes[0]);
    for (int i = 0; i < g.n; ++i)
        CHECK(b.at(i) == doctest::Approx(um.at(i) - up.at(i)).epsilon(1e-12));

    CHECK_THROWS_AS(barrier_function(h, {}), InvariantError);
}

TEST_CASE("conjugate_pair: quadrature profile and operator residual") {
    const auto pend = testsys::pendulum();
    const TorusGrid g(1, 256);
    const PairTable h = peierls_barrier(pend, Vec(0.0), g, 0.0, {});
    auto [um, up] = conjugate_pair(h, 0);
    double worst = 0.0;
    for (int i = 0; i < g.n; ++i)
        worst = std::max(worst, std::abs(um.at(i) - oracles::pendulum_u(g.node(i)[0])));
    CHECK(worst < 2e-2);
    for (int i = 0; i < g.n; ++i) CHECK(um.at(i) - up.at(i) >= -1e-12);

    // u- is a fixed point of the one-step operator with the table's own step
    const Discretization disc = Discretization::defaults_for(pend, Vec(0.0), g);
    const CostMatrix k = one_step_matrix(pend, Vec(0.0), g, h.t_step, disc.v_cap);
    const ScalarField tu = lax_oleinik_step(um, k);
    double resid = 0.0;
    for (int i = 0; i < g.n; ++i) resid = std::max(resid, std::abs(tu.at(i) - um.at(i)));
    CHECK(resid <= 5.0 * 1e-6);
}

TEST_CASE("class_constancy_check: same class shifts, distinct classes split") {
    const auto pend = testsys::pendulum();
    const TorusGrid g(1, 256);
    const PairTable h = peierls_barrier(pend, Vec(0.0), g, 0.0, {});
    CHECK(class_constancy_check(h, 0, 0) == doctest::Approx(0.0));
    // boundary-layer neighbors of the equilibrium behave as the same class
    CHECK(class_constancy_check(h, 0, 1) < 2e-2);
    // additivity within the class: h(0,x) = h(0,y) + h(y,x) when d(0,y) = 0
    const auto nodes = aubry_set(h, 1e-3);
    for (int y : nodes)
        for (int x : {17, 101, 222})
            CHECK(std::abs(h.at(0, x) - h.at(0, y) - h.at(y, x)) <= 2e-2);

    const auto tw = testsys::twowell();
    const PairTable htw = peierls_barrier(tw, Vec(0.0), g, 0.0, {});
    const double d = mather_pseudometric(htw, 0, g.n / 2);
    CHECK(class_constancy_check(htw, 0, g.n / 2) >= 0.45 * d);
}

TEST_CASE("barrier_superdifferential: smooth singleton, shock segment, min contains zero") {
    const auto pend = testsys::pendulum();
    const TorusGrid g(1, 256);
    const PairTable h = peierls_barrier(pend, Vec(0.0), g, 0.0, {});
    auto [um, up] = conjugate_pair(h, 0);
    EstimatorParams est = EstimatorParams::defaults_for(pend, 0.0, g, false);

    // B* = d_0(0, .) away from the shock: smooth with slope 2 F'(x)
    const CovectorPolytope smooth = barrier_superdifferential(um, up, Vec(0.25), est);
    CHECK(smooth.diameter() < 0.1);
    CHECK(smooth.vertices.front()[0] ==
          doctest::Approx(2.0 * std::numbers::sqrt2).epsilon(0.02));
    // where the pair is calibrated (the Aubry point) the difference vanishes
    const CovectorPolytope calib = barrier_superdifferential(um, up, Vec(0.0), est);
    bool has_zero = false;
    for (const Vec& v : calib.vertices)
        if (std::abs(v[0]) < 0.25) has_zero = true;
    CHECK(has_zero);

    const CovectorPolytope shock = barrier_superdifferential(um, up, Vec(0.5), est);
    REQUIRE(shock.vertices.size() == 2);
    CHECK(shock.vertices.front()[0] == doctest::Approx(-4.0).epsilon(0.025));
    CHECK(shock.vertices.back()[0] == doctest::Approx(4.0).epsilon(0.025));

    // B* has a local min at the Aubry node: 0 in D+B*
    const CovectorPolytope atmin = barrier_superdifferential(um, up, Vec(0.0), est);
    CHECK(regularity_margin(atmin) <= 0.05);
}

TEST_CASE("build_barrier_data: pendulum pipeline and invariants") {
    const auto pend = testsys::pendulum();
    const TorusGrid g(1, 256);
    const BarrierData bd = build_barrier_data(pend, Vec(0.0), g, 0.0, {});
    CHECK(bd.aubry_nodes.size() == 1);
    CHECK(bd.base_node == 0);
    CHECK(bd.classes.size() == 1);
    CHECK(bd.barrier.at(g.n / 2) == doctest::Approx(kFourOverPi).epsilon(0.016));
    CHECK(bd.h.window_gap <= 5e-3);
}

TEST_CASE("barrier propagation proxy on the supercritical 2D separable system") {
    // every singular node of B* should have a singular node of u- or u+ within
    // 5h whose reachable set fails to cover the shell
    const auto sys = testsys::separable2d();
    const TorusGrid g(2, 16);
    SolveParams sp;
    auto [u, rep] = solve_alpha_u(sys, Vec(0.0, 0.8), g, sp);
    REQUIRE(check_energy_condition(rep.alpha, sys));

    BarrierParams bp;
    bp.tol_aubry = 2e-2;   // coarse grid, coarse diagonal zeros
    bp.tol_b = 0.1;
    bp.peierls.tol_h = 5e-2;
    const BarrierData bd = build_barrier_data(sys, Vec(0.0, 0.8), g, rep.alpha, bp);
    CHECK(bd.classes.size() == 1);

    EstimatorParams est = EstimatorParams::defaults_for(sys, rep.alpha, g, false);
    const double tol_sing = 0.2 * shell_scale(sys, rep.alpha);
    ScalarField neg_up = bd.u_plus;
    for (auto& v : neg_up.values) v = -v;

    int checked = 0;
    for (int idx = 0; idx < g.size(); ++idx) {
        CovectorPolytope db;
        try {
            db = barrier_superdifferential(bd.u_minus, bd.u_plus, g.node(idx), est);
        } catch (const ConvergenceError&) {
            continue;
        }
        if (db.diameter() <= 2.0 * tol_sing) continue;
        ++checked;
        bool witness = false;
        for (int a = -5; a <= 5 && !witness; ++a)
            for (int b = -5; b <= 5 && !witness; ++b) {
                const auto ij = g.coords(idx);
                const Vec y = g.node(g.index(ij[0] + a, ij[1] + b));
                const ScalarField* fields[] = {&bd.u_minus, &neg_up};
                for (const ScalarField* f : fields) {
                    try {
                        const CovectorPolytope poly = reachable_gradients(*f, y, est);
                        if (poly.diameter() > tol_sing) {
                            const ShellCoverage cov =
                                shell_coverage_test(poly, sys, rep.alpha, y, 1.0);
                            if (!cov.covers_shell) {
                                witness = true;
                                break;
                            }
                        }
                    } catch (const ConvergenceError&) {
                    }
                }
            }
        CHECK(witness);
    }
    CHECK(checked > 0);
}
