#pragma once

#include <limits>
#include <string>
#include <vector>

#include "wkam/grid.hpp"
#include "wkam/model.hpp"

namespace wkam {

inline constexpr double kInfCost = std::numeric_limits<double>::infinity();

// Shared default derivations for the discretization.
//
// alpha_guess is the a-priori upper bound max_x H(x, c); the velocity cap is
// four times the largest shell speed compatible with that bound, so minimizers
// never touch the truncated stencil boundary. The time step trades stencil
// truncation (small dt) against speed quantization (dt >= 5h keeps the
// per-step displacement grid fine relative to the optimal speed).
struct Discretization {
    double alpha_guess = 0.0;
    double v_cap = 1.0;
    double t_step = 0.0;

    static Discretization defaults_for(const MechanicalSystem& sys, const Vec& c,
                                       const TorusGrid& grid, double dt_override = 0.0,
                                       double v_cap_override = 0.0);
};

// One-step action cost t * L_c(midpoint, d/t) for the displacement
// d = min_displacement(y, x); +inf past the velocity cap.
double one_step_cost(const MechanicalSystem& sys, const Vec& c, const Vec& y, const Vec& x,
                     double t, double v_cap);

// Dense cost table K[y][x] ~ h^c_t(y, x) for one short step.
struct CostMatrix {
    TorusGrid grid;
    double t_step = 0.0;
    std::vector<double> k;  // row-major, k[y * M + x]

    double at(int y, int x) const { return k[static_cast<size_t>(y) * grid.size() + x]; }
    double& at(int y, int x) { return k[static_cast<size_t>(y) * grid.size() + x]; }

    void write_csv(const std::string& path) const;
};

CostMatrix one_step_matrix(const MechanicalSystem& sys, const Vec& c, const TorusGrid& grid,
                           double t, double v_cap);

// Min-plus product: K[y][x] = min_z K1[y][z] + K2[z][x]; time steps add.
CostMatrix compose(const CostMatrix& k1, const CostMatrix& k2);

// n_steps-fold left composition of one-step matrices with step t / n_steps.
CostMatrix finite_time_action(const MechanicalSystem& sys, const Vec& c, const TorusGrid& grid,
                              double t, int n_steps, double v_cap);

// Pairwise table of action values between all grid nodes.
struct PairTable {
    TorusGrid grid;
    std::vector<double> h;
    double t_step = 0.0;      // one-step dt the table was built from
    double window_gap = 0.0;  // stabilization gap for Peierls tables

    double at(int y, int x) const { return h[static_cast<size_t>(y) * grid.size() + x]; }
    double& at(int y, int x) { return h[static_cast<size_t>(y) * grid.size() + x]; }

    void write_csv(const std::string& path) const;
};

struct ManeParams {
    double t_max = 64.0;
    double dt_override = 0.0;
    double v_cap_override = 0.0;
};

// phi_c(x, y): running min of h^c_t + alpha t over the geometric horizon
// ladder t in {dt, 2 dt, 4 dt, ...} up to t_max.
PairTable mane_potential(const MechanicalSystem& sys, const Vec& c, const TorusGrid& grid,
                         double alpha, const ManeParams& params = {});

struct PeierlsParams {
    double t_lo = 4.0;
    double t_hi = 8.0;
    int n_march = 64;
    double tol_h = 5e-3;
    double dt_override = 0.0;
    double v_cap_override = 0.0;
};

// h_c(x, y): min of h^c_t + alpha t over a long horizon window [t_lo, t_hi],
// accepted when the two half-window minima agree within tol_h; throws
// ConvergenceError("barrier not converged ...") otherwise.
PairTable peierls_barrier(const MechanicalSystem& sys, const Vec& c, const TorusGrid& grid,
                          double alpha, const PeierlsParams& params = {});

// Effective alpha from dyadic min-plus powers: the optimal-cycle mean extracted
// from diagonal differences min_x K_{2t}(x,x) - min_x K_t(x,x). Used when the
// Lax-Oleinik iteration stalls on a periodic critical cycle.
double effective_alpha_minplus(const MechanicalSystem& sys, const Vec& c, const TorusGrid& grid,
                               double dt, double v_cap, int n_doublings = 16);

}  // namespace wkam
