#include "wkam/characteristics.hpp"

#include <algorithm>
#include <cmath>

#include "wkam/detail/branch.hpp"
#include "wkam/errors.hpp"

namespace wkam {

Vec minimal_selection(const CovectorPolytope& poly, const Mat& a) {
    if (poly.empty()) throw ConfigError("minimal_selection: empty polytope");
    if (regularity_margin(poly) <= 0.0) return Vec::zero(poly.dim);

    Vec best = poly.vertices.front();
    double best_val = quad_form(a, best);
    auto consider = [&](const Vec& q) {
        const double v = quad_form(a, q);
        if (v < best_val) {
            best_val = v;
            best = q;
        }
    };
    for (const Vec& v : poly.vertices) consider(v);
    const size_t n = poly.vertices.size();
    if (poly.dim == 2 && n >= 2) {
        for (size_t i = 0; i < n; ++i) {
            const Vec& p = poly.vertices[i];
            const Vec& q = poly.vertices[(i + 1) % n];
            if (n == 2 && i == 1) break;
            const Vec e = q - p;
            const double den = quad_form(a, e);
            if (den <= 0.0) continue;
            const double t = std::clamp(-dot(matvec(a, p), e) / den, 0.0, 1.0);
            consider(p + t * e);
        }
    }
    return best;
}

GeneralizedCharacteristic integrate_generalized(const ScalarField& u, const MechanicalSystem& sys,
                                                const Vec& x0, double tau, double ds,
                                                const CharParams& params) {
    if (!(ds > 0.0) || !(tau > 0.0)) throw ConfigError("integrate_generalized: need ds, tau > 0");
    GeneralizedCharacteristic chi;
    chi.ds = ds;
    const int n_steps = static_cast<int>(std::round(tau / ds));
    Vec x = x0;
    bool frozen = false;
    Vec p_frozen = Vec::zero(u.grid.dim);
    double diam_frozen = 0.0;
    for (int k = 0; k <= n_steps; ++k) {
        Vec p_sel = p_frozen;
        double diam = diam_frozen;
        if (!frozen) {
            const CovectorPolytope dplus = superdifferential(u, wrap(x), params.estimator);
            diam = dplus.diameter();
            p_sel = minimal_selection(dplus, sys.metric_at(wrap(x)));
            if (norm(p_sel) < params.zero_threshold) {
                // constant-arc case: the selection vanished, the arc parks here
                p_sel = Vec::zero(u.grid.dim);
                frozen = true;
                p_frozen = p_sel;
                diam_frozen = diam;
            }
        }
        const double v = u.interp(wrap(x)) + dot(u.c, x);
        chi.nodes.push_back({k * ds, x, p_sel, v, diam});
        if (k < n_steps) x = x + ds * matvec(sys.metric_at(wrap(x)), p_sel);
    }
    return chi;
}

double monotonicity_check(const GeneralizedCharacteristic& chi, const MechanicalSystem& sys,
                          double q_tol) {
    double worst = 0.0;
    for (size_t k = 0; k + 1 < chi.nodes.size(); ++k) {
        const CharNode& a = chi.nodes[k];
        const CharNode& b = chi.nodes[k + 1];
        if (norm(a.p_sel) == 0.0) continue;
        const double rate = (b.v - a.v) / chi.ds;
        const double target = quad_form(sys.metric_at(wrap(a.x)), a.p_sel);
        worst = std::max(worst, target - q_tol - rate);
    }
    return worst;
}

double singular_persistence_check(const GeneralizedCharacteristic& chi, double tol_sing) {
    if (chi.nodes.empty()) throw ConfigError("singular_persistence_check: empty arc");
    if (chi.nodes.front().diam <= tol_sing)
        throw InvariantError("singular_persistence_check: start node is not singular");
    int hits = 0;
    for (const CharNode& n : chi.nodes)
        if (n.diam > tol_sing) ++hits;
    return static_cast<double>(hits) / chi.nodes.size();
}

std::vector<FlowState> hamiltonian_flow(const MechanicalSystem& sys, const Vec& x0, const Vec& p0,
                                        double t0, double t1, double dt,
                                        const FlowParams& params) {
    if (!(dt > 0.0)) throw ConfigError("hamiltonian_flow: dt must be positive");
    detail::BranchArc arc = detail::integrate_arc(sys, x0, p0, t1 - t0, dt);
    if (params.check_energy && arc.drift > params.e_tol)
        throw ConvergenceError("integrator accuracy: energy drift " + format_double(arc.drift) +
                               " exceeds e_tol " + format_double(params.e_tol));
    std::vector<FlowState> traj = std::move(arc.states);
    if (t1 < t0) std::reverse(traj.begin(), traj.end());
    for (auto& s : traj) s.t += t0;
    return traj;
}

CalibratedCurve calibrated_backward_curve(const ScalarField& u, const MechanicalSystem& sys,
                                          double alpha, const Vec& x, const Vec& p, double T,
                                          double dt, const FlowParams& params) {
    if (!(T > 0.0)) throw ConfigError("calibrated_backward_curve: T must be positive");
    detail::BranchArc arc = detail::backward_branch(sys, x, p, T, dt, params.refine_shooting);
    if (params.check_energy && arc.drift > params.e_tol)
        throw ConvergenceError("integrator accuracy: energy drift " + format_double(arc.drift) +
                               " exceeds e_tol " + format_double(params.e_tol));
    CalibratedCurve out;
    out.states = std::move(arc.states);
    out.action = arc.action;
    const auto v_at = [&](const Vec& z) { return u.interp(wrap(z)) + dot(u.c, z); };
    out.defect = std::abs(v_at(out.states.back().x) - v_at(out.states.front().x) - out.action -
                          alpha * T);
    return out;
}

}  // namespace wkam
