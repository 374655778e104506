#pragma once

// Shared Hamiltonian-arc machinery for calibrated curves and homoclinic
// branches: RK4 with action accumulation, and the 1D unstable-manifold
// shooting that replaces an orbit collapsing onto a hyperbolic equilibrium
// (plain integration cannot hold a separatrix beyond a few Lyapunov times).

#include <optional>
#include <vector>

#include "wkam/characteristics.hpp"
#include "wkam/model.hpp"

namespace wkam::detail {

struct BranchArc {
    std::vector<FlowState> states;  // increasing t
    double action = 0.0;            // int L dt from first to last state
    double drift = 0.0;             // max |H - H(first)|
    bool shot = false;
};

// Integrate from (x0, p0) over a signed span T; states carry t in [0, T] (or
// [T, 0] reordered to increasing t for T < 0).
BranchArc integrate_arc(const MechanicalSystem& sys, const Vec& x0, const Vec& p0, double T,
                        double dt);

// Newton-refined critical point of V near seed (1D); requires a strict local
// maximum within two cells.
std::optional<double> refine_equilibrium_1d(const MechanicalSystem& sys, double seed,
                                            double h_cell);

// Separatrix branch from the unstable manifold of x_eq, landing on the glue
// point at parameter time exactly T. side = +-1 selects the branch; s_target
// is the covering-space distance from x_eq to the landing point along it.
std::optional<BranchArc> shoot_manifold_1d(const MechanicalSystem& sys, double x_eq, int side,
                                           double s_target, double T, double dt);

// Backward arc from (x, p) on [-T, 0]; when the plain orbit dives into a 1D
// hyperbolic equilibrium, it is re-shot from the manifold (target time T).
BranchArc backward_branch(const MechanicalSystem& sys, const Vec& x, const Vec& p, double T,
                          double dt, bool allow_shooting);

// Forward arc from (x, p) on [0, T]; shooting uses time reversal.
BranchArc forward_branch(const MechanicalSystem& sys, const Vec& x, const Vec& p, double T,
                         double dt, bool allow_shooting);

}  // namespace wkam::detail
