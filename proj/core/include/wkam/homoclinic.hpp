#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "wkam/characteristics.hpp"
#include "wkam/grid.hpp"
#include "wkam/semiconcave.hpp"

namespace wkam {

// Nearest pair (a, b) with a in D*u-(x), b in D*u+(x); their midpoint when
// |a - b| <= match_tol.
std::optional<Vec> common_reachable_gradient(const ScalarField& u_minus,
                                             const ScalarField& u_plus, const Vec& x,
                                             double match_tol, const EstimatorParams& params);

// Pair p1, p2 in D*v(x) with |p1 + p2| <= anti_tol (local-maximum pathway).
std::optional<std::pair<Vec, Vec>> antipodal_detection(const ScalarField& vfield, const Vec& x,
                                                       double anti_tol,
                                                       const EstimatorParams& params);

struct HomoclinicParams {
    double T = 20.0;
    double dt = 1e-3;
    double tol_shell = 0.1;
    double cal_tol = 2e-2;
    double v_tol = 1e-3;
    double settle_tol = 5e-2;       // endpoint-to-Aubry distance for "settled"
    double e_tol = 1e-6;
    bool refine_shooting = true;    // 1D branches re-shot from the unstable manifold
};

struct HomoclinicOrbit {
    Vec glue_x;
    Vec p;                          // common reachable gradient (u-gradient units)
    std::vector<FlowState> backward;  // gamma_1 on [-T, 0]
    std::vector<FlowState> forward;   // gamma_2 on [0, T]
    double d_backward = 0.0, d_forward = 0.0;  // endpoint distances to the Aubry proxy
    double cal_defect_backward = 0.0, cal_defect_forward = 0.0;
    double gluing_defect = 0.0;     // |gamma1'(0) - gamma2'(0)|
    double energy_drift = 0.0;      // max |H - alpha| over both branches
    bool settled = false;
    int class_backward = -1, class_forward = -1;  // Aubry class of each endpoint
    bool shot_backward = false, shot_forward = false;
};

// Glues the backward calibrated branch of u- and the forward branch of u+ at
// (x, c + p), with c + p snapped onto the energy shell first. On 1D systems
// whose rough branch settles near a hyperbolic equilibrium of V, the branch is
// re-shot from the linearized unstable manifold, which pins the asymptotics to
// machine precision.
HomoclinicOrbit build_homoclinic(const MechanicalSystem& sys, double alpha,
                                 const ScalarField& u_minus, const ScalarField& u_plus,
                                 const Vec& x, const Vec& p, const TorusGrid& grid,
                                 const std::vector<int>& aubry_nodes,
                                 const std::vector<std::vector<int>>& classes,
                                 const HomoclinicParams& params = {});

// Local-maximum pathway: both branches are backward arcs of the same solution
// taken at antipodal reachable gradients of the lift, the second reversed in
// time. p1, p2 are lifted covectors (c included); so is the stored orbit.p.
HomoclinicOrbit build_homoclinic_antipodal(const MechanicalSystem& sys, double alpha,
                                           const ScalarField& u, const Vec& x, const Vec& p1,
                                           const Vec& p2, const TorusGrid& grid,
                                           const std::vector<int>& aubry_nodes,
                                           const std::vector<std::vector<int>>& classes,
                                           const HomoclinicParams& params = {});

// Torus distances of gamma1(-T) and gamma2(T) to the Aubry proxy nodes.
std::pair<double, double> omega_limit_distance(const HomoclinicOrbit& orbit,
                                               const TorusGrid& grid,
                                               const std::vector<int>& aubry_nodes);

}  // namespace wkam
