#pragma once

#include <utility>
#include <vector>

#include "wkam/action.hpp"
#include "wkam/grid.hpp"
#include "wkam/model.hpp"

namespace wkam {

struct SolveParams {
    double dt = 0.0;     // 0 = derive from Discretization defaults
    double v_cap = 0.0;  // 0 = derive
    double tol_fp = 1e-6;
    int max_iter = 20000;
    int stall_check = 500;   // sweeps between stall probes
    int window = 2000;       // compensated-min window for the stalled path
};

struct SolveReport {
    double alpha = 0.0;
    int iterations = 0;
    double residual = 0.0;
    double semiconcavity_estimate = 0.0;
    int phase = 1;  // 1 = plain fixed point, 2 = windowed min-plus recovery
    double dt = 0.0;
    double v_cap = 0.0;
};

// One backward Lax-Oleinik sweep with an explicit cost table:
// (Tu)(x) = min_y u(y) + K[y][x].
ScalarField lax_oleinik_step(const ScalarField& u, const CostMatrix& K);

// Weak KAM solve: iterate u <- T u - shift with shift = max(T u - u) until the
// oscillation of (T u - u) drops below tol_fp; alpha = -shift/dt. If the
// iteration stalls on a periodic min-plus cycle (supercritical tables do this),
// alpha is recovered from dyadic min-plus powers and u as the windowed min of
// compensated iterates; the returned residual is measured either way.
std::pair<ScalarField, SolveReport> solve_alpha_u(const MechanicalSystem& sys, const Vec& c,
                                                  const TorusGrid& grid,
                                                  const SolveParams& params = {});

// Forward solution via the reversed operator (Ť u)(x) = max_y u(y) - K[x][y];
// throws ConvergenceError("alpha mismatch ...") when the two alphas disagree.
std::pair<ScalarField, SolveReport> solve_forward(const MechanicalSystem& sys, const Vec& c,
                                                  const TorusGrid& grid,
                                                  const SolveParams& params = {});

LiftedField lift_v(const ScalarField& u_c);

// Domination defect u(b) - u(a) - int L_c - alpha T along a time-stamped
// polyline on the covering space (trapezoid quadrature); subsolutions give
// defect <= 0 up to quadrature error.
struct ArcNode {
    double t;
    Vec x;
};
double check_domination(const MechanicalSystem& sys, const ScalarField& u, const Vec& c,
                        double alpha, const std::vector<ArcNode>& arc);

bool check_energy_condition(double alpha, const MechanicalSystem& sys, double margin = 1e-6);

// Largest upward second difference of v per h^2 over all axes (discrete
// semiconcavity constant of the lift).
double semiconcavity_estimate(const ScalarField& u);

}  // namespace wkam
