#include "wkam/homoclinic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wkam/detail/branch.hpp"
#include "wkam/errors.hpp"

namespace wkam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Vec> reachable_minus(const ScalarField& u, const Vec& x, EstimatorParams params) {
    params.lifted = false;
    return reachable_gradients(u, x, params).vertices;
}

// D*u+ via the semiconvex mirror: u+ is semiconvex, so -u+ is semiconcave and
// the estimator applies; reachable gradients come back negated.
std::vector<Vec> reachable_plus(const ScalarField& u_plus, const Vec& x, EstimatorParams params) {
    params.lifted = false;
    ScalarField neg = u_plus;
    for (auto& v : neg.values) v = -v;
    std::vector<Vec> out = reachable_gradients(neg, x, params).vertices;
    for (auto& v : out) v = -v;
    return out;
}

double torus_dist(const Vec& a, const Vec& b) { return norm(min_displacement(a, b)); }

double calibration_defect(const ScalarField& u, double alpha, const detail::BranchArc& arc) {
    const auto v_at = [&](const Vec& z) { return u.interp(wrap(z)) + dot(u.c, z); };
    const double span = arc.states.back().t - arc.states.front().t;
    return std::abs(v_at(arc.states.back().x) - v_at(arc.states.front().x) - arc.action -
                    alpha * span);
}

// Shared assembly once both branches exist and their calibration defects are
// measured: gluing, drift, endpoint classification against the Aubry proxy.
HomoclinicOrbit assemble(const MechanicalSystem& sys, double alpha, const Vec& x,
                         const Vec& p_report, detail::BranchArc back, detail::BranchArc fwd,
                         double defect_back, double defect_fwd, const TorusGrid& grid,
                         const std::vector<int>& aubry_nodes,
                         const std::vector<std::vector<int>>& classes,
                         const HomoclinicParams& params) {
    HomoclinicOrbit orbit;
    orbit.glue_x = x;
    orbit.p = p_report;
    orbit.shot_backward = back.shot;
    orbit.shot_forward = fwd.shot;
    orbit.cal_defect_backward = defect_back;
    orbit.cal_defect_forward = defect_fwd;
    if (orbit.cal_defect_backward > params.cal_tol || orbit.cal_defect_forward > params.cal_tol)
        throw ConvergenceError("build_homoclinic: calibration defect beyond cal_tol (backward " +
                               format_double(orbit.cal_defect_backward) + ", forward " +
                               format_double(orbit.cal_defect_forward) + ")");
    orbit.backward = std::move(back.states);
    orbit.forward = std::move(fwd.states);

    const FlowState& b0 = orbit.backward.back();
    const FlowState& f0 = orbit.forward.front();
    orbit.gluing_defect = norm(matvec(sys.metric_at(wrap(b0.x)), b0.p) -
                               matvec(sys.metric_at(wrap(f0.x)), f0.p));
    if (orbit.gluing_defect > params.v_tol)
        throw InvariantError("build_homoclinic: C1 gluing defect " +
                             format_double(orbit.gluing_defect) + " exceeds v_tol");

    double drift = 0.0;
    for (const auto& st : orbit.backward) drift = std::max(drift, std::abs(st.H - alpha));
    for (const auto& st : orbit.forward) drift = std::max(drift, std::abs(st.H - alpha));
    orbit.energy_drift = drift;

    auto nearest_aubry = [&](const Vec& z) {
        double best = kInf;
        int node = -1;
        for (int idx : aubry_nodes) {
            const double d = torus_dist(z, grid.node(idx));
            if (d < best) {
                best = d;
                node = idx;
            }
        }
        return std::pair<double, int>(best, node);
    };
    const auto [db, nb] = nearest_aubry(orbit.backward.front().x);
    const auto [df, nf] = nearest_aubry(orbit.forward.back().x);
    orbit.d_backward = db;
    orbit.d_forward = df;
    orbit.settled = std::max(db, df) <= params.settle_tol;
    auto class_of = [&](int node) {
        for (size_t k = 0; k < classes.size(); ++k)
            for (int idx : classes[k])
                if (idx == node) return static_cast<int>(k);
        return -1;
    };
    orbit.class_backward = class_of(nb);
    orbit.class_forward = class_of(nf);
    return orbit;
}

// Reachable gradients sit exactly on the energy shell; estimator noise does
// not, so the glue covector is rescaled onto it before integrating.
Vec snap_to_shell(const MechanicalSystem& sys, double alpha, const Vec& x, const Vec& pc) {
    const double want = 2.0 * (alpha - sys.potential_at(wrap(x)));
    if (want <= 0.0) return Vec::zero(pc.dim);  // degenerate shell: the fixed point
    const double q = quad_form(sys.metric_at(wrap(x)), pc);
    if (!(q > 0.0)) return pc;
    return std::sqrt(want / q) * pc;
}

}  // namespace

std::optional<Vec> common_reachable_gradient(const ScalarField& u_minus,
                                             const ScalarField& u_plus, const Vec& x,
                                             double match_tol, const EstimatorParams& params) {
    const std::vector<Vec> dm = reachable_minus(u_minus, x, params);
    const std::vector<Vec> dp = reachable_plus(u_plus, x, params);
    double best = kInf;
    Vec pick = Vec::zero(u_minus.grid.dim);
    for (const Vec& a : dm)
        for (const Vec& b : dp) {
            const double d = norm(a - b);
            if (d < best) {
                best = d;
                pick = 0.5 * (a + b);
            }
        }
    if (best <= match_tol) return pick;
    return std::nullopt;
}

std::optional<std::pair<Vec, Vec>> antipodal_detection(const ScalarField& vfield, const Vec& x,
                                                       double anti_tol,
                                                       const EstimatorParams& params) {
    const std::vector<Vec> ds = reachable_gradients(vfield, x, params).vertices;
    double best = kInf;
    std::pair<Vec, Vec> pick{Vec::zero(vfield.grid.dim), Vec::zero(vfield.grid.dim)};
    for (size_t i = 0; i < ds.size(); ++i)
        for (size_t j = i + 1; j < ds.size(); ++j) {
            const double d = norm(ds[i] + ds[j]);
            if (d < best) {
                best = d;
                pick = {ds[i], ds[j]};
            }
        }
    if (best <= anti_tol) return pick;
    return std::nullopt;
}

HomoclinicOrbit build_homoclinic(const MechanicalSystem& sys, double alpha,
                                 const ScalarField& u_minus, const ScalarField& u_plus,
                                 const Vec& x, const Vec& p, const TorusGrid& grid,
                                 const std::vector<int>& aubry_nodes,
                                 const std::vector<std::vector<int>>& classes,
                                 const HomoclinicParams& params) {
    const Vec c = u_minus.c;
    Vec pc = c + p;
    const double resid = energy_shell_residual(sys, alpha, x, pc);
    if (resid > params.tol_shell)
        throw InvariantError("build_homoclinic: shell residual " + format_double(resid) +
                             " of c+p exceeds tol_shell");
    pc = snap_to_shell(sys, alpha, x, pc);

    detail::BranchArc back =
        detail::backward_branch(sys, x, pc, params.T, params.dt, params.refine_shooting);
    detail::BranchArc fwd =
        detail::forward_branch(sys, x, pc, params.T, params.dt, params.refine_shooting);
    const double defect_back = calibration_defect(u_minus, alpha, back);
    const double defect_fwd = calibration_defect(u_plus, alpha, fwd);
    return assemble(sys, alpha, x, pc - c, std::move(back), std::move(fwd), defect_back,
                    defect_fwd, grid, aubry_nodes, classes, params);
}

HomoclinicOrbit build_homoclinic_antipodal(const MechanicalSystem& sys, double alpha,
                                           const ScalarField& u, const Vec& x, const Vec& p1,
                                           const Vec& p2, const TorusGrid& grid,
                                           const std::vector<int>& aubry_nodes,
                                           const std::vector<std::vector<int>>& classes,
                                           const HomoclinicParams& params) {
    const double r1 = energy_shell_residual(sys, alpha, x, p1);
    const double r2 = energy_shell_residual(sys, alpha, x, p2);
    if (std::max(r1, r2) > params.tol_shell)
        throw InvariantError("build_homoclinic_antipodal: shell residual of p1/p2 exceeds "
                             "tol_shell");
    const Vec q1 = snap_to_shell(sys, alpha, x, p1);
    const Vec q2 = snap_to_shell(sys, alpha, x, p2);

    detail::BranchArc back =
        detail::backward_branch(sys, x, q1, params.T, params.dt, params.refine_shooting);
    // gamma_2(t) = gamma~(-t) with gamma~ the backward arc of the antipode:
    // reverse it into a forward branch, flipping momenta. Its calibration is
    // the backward identity of gamma~ itself.
    detail::BranchArc tilde =
        detail::backward_branch(sys, x, q2, params.T, params.dt, params.refine_shooting);
    const double defect_back = calibration_defect(u, alpha, back);
    const double defect_fwd = calibration_defect(u, alpha, tilde);
    detail::BranchArc fwd;
    fwd.shot = tilde.shot;
    fwd.drift = tilde.drift;
    fwd.action = tilde.action;
    fwd.states.reserve(tilde.states.size());
    for (auto it = tilde.states.rbegin(); it != tilde.states.rend(); ++it)
        fwd.states.push_back({-it->t, it->x, -it->p, it->H});

    return assemble(sys, alpha, x, q1, std::move(back), std::move(fwd), defect_back, defect_fwd,
                    grid, aubry_nodes, classes, params);
}

std::pair<double, double> omega_limit_distance(const HomoclinicOrbit& orbit,
                                               const TorusGrid& grid,
                                               const std::vector<int>& aubry_nodes) {
    auto nearest = [&](const Vec& z) {
        double best = kInf;
        for (int idx : aubry_nodes) best = std::min(best, torus_dist(z, grid.node(idx)));
        return best;
    };
    return {nearest(orbit.backward.front().x), nearest(orbit.forward.back().x)};
}

}  // namespace wkam
