#include "wkam/detail/branch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wkam::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Extended {
    Vec x, p;
    double s;  // running action
};

Extended rhs(const MechanicalSystem& sys, const Extended& q) {
    const Vec xw = wrap(q.x);
    Extended d;
    d.x = matvec(sys.metric_at(xw), q.p);
    d.p = -sys.potential_grad_at(xw);
    if (!sys.identity_metric)
        for (int k = 0; k < sys.dim; ++k)
            d.p[k] -= 0.5 * quad_form(sys.metric_partial(xw, k), q.p);
    d.s = lagrangian(sys, xw, d.x);
    return d;
}

Extended rk4(const MechanicalSystem& sys, const Extended& q, double dt) {
    const Extended k1 = rhs(sys, q);
    const Extended k2 = rhs(sys, {q.x + 0.5 * dt * k1.x, q.p + 0.5 * dt * k1.p, 0.0});
    const Extended k3 = rhs(sys, {q.x + 0.5 * dt * k2.x, q.p + 0.5 * dt * k2.p, 0.0});
    const Extended k4 = rhs(sys, {q.x + dt * k3.x, q.p + dt * k3.p, 0.0});
    Extended out;
    out.x = q.x + (dt / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    out.p = q.p + (dt / 6.0) * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
    out.s = q.s + (dt / 6.0) * (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s);
    return out;
}

// Closest approach of the arc to a critical point of V, used to decide whether
// the orbit dived into an equilibrium.
struct Approach {
    double dist = kInf;
    double x_near = 0.0;
};

Approach closest_slow_point(const MechanicalSystem& sys, const BranchArc& arc, double h_cell) {
    Approach best;
    for (const auto& st : arc.states) {
        const Vec xw = wrap(st.x);
        const double speed = norm(matvec(sys.metric_at(xw), st.p));
        if (speed < best.dist) {
            best.dist = speed;
            best.x_near = xw[0];
        }
    }
    // refine against the actual critical point
    const auto eq = refine_equilibrium_1d(sys, best.x_near, h_cell);
    if (!eq) return {kInf, 0.0};
    double d = kInf;
    for (const auto& st : arc.states)
        d = std::min(d, std::abs(min_displacement(Vec(*eq), wrap(st.x))[0]));
    return {d, *eq};
}

}  // namespace

BranchArc integrate_arc(const MechanicalSystem& sys, const Vec& x0, const Vec& p0, double T,
                        double dt) {
    const int n = std::max(1, static_cast<int>(std::round(std::abs(T) / dt)));
    const double step = T / n;
    Extended q{x0, p0, 0.0};
    BranchArc arc;
    const double h0 = hamiltonian(sys, q.x, q.p);
    arc.states.reserve(static_cast<size_t>(n) + 1);
    arc.states.push_back({0.0, q.x, q.p, h0});
    for (int k = 1; k <= n; ++k) {
        q = rk4(sys, q, step);
        const double h = hamiltonian(sys, q.x, q.p);
        arc.drift = std::max(arc.drift, std::abs(h - h0));
        arc.states.push_back({k * step, q.x, q.p, h});
    }
    arc.action = q.s;
    if (T < 0.0) {
        std::reverse(arc.states.begin(), arc.states.end());
        arc.action = -arc.action;
    }
    return arc;
}

std::optional<double> refine_equilibrium_1d(const MechanicalSystem& sys, double seed,
                                            double h_cell) {
    if (sys.dim != 1) return std::nullopt;
    double x = seed;
    for (int it = 0; it < 40; ++it) {
        const double g = sys.potential_grad_at(Vec(x))[0];
        const double h = sys.potential_hess_at(Vec(x)).at(0, 0);
        if (h == 0.0) return std::nullopt;
        const double nx = x - g / h;
        if (std::abs(nx - x) < 1e-15) {
            x = nx;
            break;
        }
        x = nx;
    }
    if (std::abs(sys.potential_grad_at(Vec(x))[0]) > 1e-10) return std::nullopt;
    if (sys.potential_hess_at(Vec(x)).at(0, 0) >= 0.0) return std::nullopt;
    if (std::abs(min_displacement(Vec(seed), wrap(Vec(x)))[0]) > 2.0 * h_cell) return std::nullopt;
    return wrap(Vec(x))[0];
}

std::optional<BranchArc> shoot_manifold_1d(const MechanicalSystem& sys, double x_eq, int side,
                                           double s_target, double T, double dt) {
    if (!(s_target > 0.0) || !(T > 0.0)) return std::nullopt;
    const double a_eq = sys.metric_at(Vec(x_eq)).at(0, 0);
    const double vpp = sys.potential_hess_at(Vec(x_eq)).at(0, 0);
    if (vpp >= 0.0) return std::nullopt;
    const double lambda = std::sqrt(-a_eq * vpp);
    const double slope = lambda / a_eq;  // unstable manifold: p = slope (x - x_eq)

    auto tau = [&](double delta) -> double {
        Extended q{Vec(x_eq + side * delta), Vec(side * slope * delta), 0.0};
        const int n_max = static_cast<int>(std::ceil((T + 10.0) / dt));
        double prev = delta;
        for (int k = 1; k <= n_max; ++k) {
            q = rk4(sys, q, dt);
            const double rel = side * (q.x[0] - x_eq);
            if (rel >= s_target) {
                const double frac = (s_target - prev) / (rel - prev);
                return (k - 1 + frac) * dt;
            }
            prev = rel;
        }
        return kInf;
    };

    double lo = 1e-280, hi = 0.45 * s_target;
    if (!(tau(hi) < T)) {
        // target too close for even a macroscopic start; fall back
        return std::nullopt;
    }
    if (!(tau(lo) > T)) return std::nullopt;
    for (int it = 0; it < 140; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (tau(mid) > T) lo = mid;
        else hi = mid;
    }
    const double delta = std::sqrt(lo * hi);
    BranchArc arc =
        integrate_arc(sys, Vec(x_eq + side * delta), Vec(side * slope * delta), T, dt);
    arc.shot = true;
    return arc;
}

namespace {

// Replace a 1D branch that collapses onto a hyperbolic equilibrium by the
// manifold shot landing at the original start point.
void maybe_reshoot(const MechanicalSystem& sys, const Vec& glue, double T, double dt,
                   bool backward, BranchArc& arc) {
    if (sys.dim != 1) return;
    const Approach ap = closest_slow_point(sys, arc, 1.0 / 256.0);
    if (!(ap.dist < 0.3)) return;
    const double x_eq = ap.x_near;
    // approach side: the first arc point entering the corner, walking from the
    // glue end of the branch
    int side = 0;
    const auto scan = [&](auto begin, auto end) {
        for (auto it = begin; it != end; ++it) {
            const double rel = min_displacement(Vec(x_eq), wrap(it->x))[0];
            if (std::abs(rel) < 0.1 && rel != 0.0) {
                side = rel > 0.0 ? 1 : -1;
                return;
            }
        }
    };
    if (backward) scan(arc.states.rbegin(), arc.states.rend());
    else scan(arc.states.begin(), arc.states.end());
    if (side == 0) return;
    const double rel_glue = min_displacement(Vec(x_eq), wrap(glue))[0];
    if (rel_glue == 0.0) return;
    const double s_target =
        ((side > 0) == (rel_glue > 0.0)) ? std::abs(rel_glue) : 1.0 - std::abs(rel_glue);
    auto shot = shoot_manifold_1d(sys, x_eq, side, s_target, T, dt);
    if (!shot) return;
    if (backward) {
        // shot runs equilibrium -> glue on [0, T]; relabel to [-T, 0]
        for (auto& st : shot->states) st.t -= T;
    } else {
        // reverse into glue -> equilibrium on [0, T]; mechanical reversibility
        // flips momenta and preserves the action integral
        std::vector<FlowState> rev;
        rev.reserve(shot->states.size());
        for (auto it = shot->states.rbegin(); it != shot->states.rend(); ++it)
            rev.push_back({T - it->t, it->x, -it->p, it->H});
        shot->states = std::move(rev);
    }
    arc = std::move(*shot);
}

}  // namespace

BranchArc backward_branch(const MechanicalSystem& sys, const Vec& x, const Vec& p, double T,
                          double dt, bool allow_shooting) {
    BranchArc arc = integrate_arc(sys, x, p, -T, dt);
    if (allow_shooting) maybe_reshoot(sys, x, T, dt, /*backward=*/true, arc);
    return arc;
}

BranchArc forward_branch(const MechanicalSystem& sys, const Vec& x, const Vec& p, double T,
                         double dt, bool allow_shooting) {
    BranchArc arc = integrate_arc(sys, x, p, T, dt);
    if (allow_shooting) maybe_reshoot(sys, x, T, dt, /*backward=*/false, arc);
    return arc;
}

}  // namespace wkam::detail
