#pragma once

#include <optional>
#include <vector>

#include "wkam/grid.hpp"
#include "wkam/model.hpp"

namespace wkam {

// Convex hull of finitely many covectors; vertices are kept as extreme points.
struct CovectorPolytope {
    int dim = 1;
    std::vector<Vec> vertices;

    double diameter() const;
    bool empty() const { return vertices.empty(); }
};

// Builds the hull of a point cloud and drops non-extreme points (monotone
// chain in 2D, interval endpoints in 1D).
CovectorPolytope convex_hull(int dim, const std::vector<Vec>& points);

// Momentum scale sqrt(2 (alpha - min V) lambda_max(A^{-1})), floored at 1;
// estimator and singularity tolerances default to fractions of it.
double shell_scale(const MechanicalSystem& sys, double alpha);

struct EstimatorParams {
    double radius = 0.0;       // collection radius, >= 2 grid cells
    double tol_smooth = 0.1;   // gradient-oscillation smoothness proxy
    double eps_cluster = 0.05; // clustering radius for branch separation
    bool lifted = false;       // add the field's c to every gradient sample

    static EstimatorParams defaults_for(const MechanicalSystem& sys, double alpha,
                                        const TorusGrid& grid, bool lifted = true);
};

// D* estimate: central-difference gradients at nearby nodes that pass the
// smoothness proxy, clustered and reduced to extreme points. Throws
// ConvergenceError("no smooth neighbors ...") on an empty collection.
CovectorPolytope reachable_gradients(const ScalarField& field, const Vec& x,
                                     const EstimatorParams& params);

// D+ estimate: convex hull of the reachable-gradient estimate.
CovectorPolytope superdifferential(const ScalarField& field, const Vec& x,
                                   const EstimatorParams& params);

// Signed distance from the origin to the polytope boundary: positive outside,
// negative inside, zero on the boundary. Exact for dim <= 2.
double regularity_margin(const CovectorPolytope& poly);

// 0 not in D+v, with a margin threshold absorbing estimation noise. Pass
// margin_tol = 0 for the exact membership predicate.
bool regularity_test(const CovectorPolytope& poly, double margin_tol = 0.05);

struct SingularSet {
    std::vector<int> nodes;          // flagged node indices
    std::vector<double> diameters;   // diam of the D+ estimate per flagged node
    std::vector<int> unresolved;     // nodes where estimation failed
    double tol_sing = 0.0;
};

bool is_singular(const ScalarField& field, const Vec& x, const EstimatorParams& params,
                 double tol_sing);
SingularSet singular_set(const ScalarField& field, const EstimatorParams& params,
                         double tol_sing);

// True iff the lifted value v = u + <c, .> has no larger value within torus
// distance r of x.
bool local_max_test(const ScalarField& field, const Vec& x, double r);

// Nodes y with |v(y) - v(x)| <= tol_level (lifted values on the fundamental
// domain).
std::vector<int> level_set_points(const ScalarField& field, const Vec& x, double tol_level);

// |<A(x) p, p> - 2 (alpha - V(x))| for a lifted gradient p (c included).
double energy_shell_residual(const MechanicalSystem& sys, double alpha, const Vec& x,
                             const Vec& p);

struct ShellCoverage {
    double fraction = 0.0;   // vertices passing the shell-residual test
    bool covers_shell = false;
    double max_gap = 0.0;    // largest angular gap (radians, dim 2)
};

// Do the polytope vertices epsilon-net the energy-shell boundary? Weak KAM
// singular points leave gaps; a full net flags a non-weak-KAM field.
ShellCoverage shell_coverage_test(const CovectorPolytope& poly, const MechanicalSystem& sys,
                                  double alpha, const Vec& x, double tol_shell,
                                  double gap_tol = 1.0471975511965976 /* pi/3 */);

}  // namespace wkam
