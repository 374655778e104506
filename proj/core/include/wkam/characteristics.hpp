#pragma once

#include <vector>

#include "wkam/grid.hpp"
#include "wkam/model.hpp"
#include "wkam/semiconcave.hpp"

namespace wkam {

// The unique minimizer of 1/2 <A q, q> over the hull: vertex, edge projection
// in the A-inner product, or the origin when the hull contains it.
Vec minimal_selection(const CovectorPolytope& poly, const Mat& a);

struct CharNode {
    double s;
    Vec x;      // covering-space coordinate (unwrapped)
    Vec p_sel;
    double v;   // lifted value along the arc
    double diam;
};

struct GeneralizedCharacteristic {
    std::vector<CharNode> nodes;
    double ds = 0.0;
};

struct CharParams {
    EstimatorParams estimator;      // lifted = true expected
    double zero_threshold = 0.05;   // |p_sel| below this is the constant-arc case
};

// Forward Euler on xdot = A(x) p_sel(x), p_sel from the minimal selection over
// the superdifferential at the nearest grid node. Higher order would be
// meaningless across superdifferential jumps.
GeneralizedCharacteristic integrate_generalized(const ScalarField& u, const MechanicalSystem& sys,
                                                const Vec& x0, double tau, double ds,
                                                const CharParams& params);

// Worst violation of (v(x(s+ds)) - v(x(s)))/ds >= <p_sel, A p_sel> - q_tol over
// steps with nonzero selection.
double monotonicity_check(const GeneralizedCharacteristic& chi, const MechanicalSystem& sys,
                          double q_tol);

// Fraction of arc nodes flagged singular; requires a singular start node.
double singular_persistence_check(const GeneralizedCharacteristic& chi, double tol_sing);

struct FlowState {
    double t;
    Vec x;  // covering-space coordinate
    Vec p;
    double H;
};

struct FlowParams {
    double e_tol = 1e-6;          // energy-drift guard
    bool check_energy = true;
    bool refine_shooting = true;  // 1D separatrix branches re-shot from the manifold
};

// RK4 for xdot = A(x) p, pdot = -1/2 <dA/dx p, p> - DV(x); throws
// ConvergenceError("integrator accuracy ...") when |H - H(0)| exceeds e_tol.
std::vector<FlowState> hamiltonian_flow(const MechanicalSystem& sys, const Vec& x0, const Vec& p0,
                                        double t0, double t1, double dt,
                                        const FlowParams& params = {});

struct CalibratedCurve {
    std::vector<FlowState> states;  // ordered by increasing t, t in [-T, 0]
    double defect = 0.0;            // |v(0) - v(-T) - int L - alpha T|
    double action = 0.0;
};

// Backward Hamiltonian arc from (x, p) with p a lifted reachable gradient;
// the defect measures the v-calibration identity along it.
CalibratedCurve calibrated_backward_curve(const ScalarField& u, const MechanicalSystem& sys,
                                          double alpha, const Vec& x, const Vec& p, double T,
                                          double dt, const FlowParams& params = {});

}  // namespace wkam
