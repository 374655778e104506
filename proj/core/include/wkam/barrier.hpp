#pragma once

#include <utility>
#include <vector>

#include "wkam/action.hpp"
#include "wkam/grid.hpp"
#include "wkam/semiconcave.hpp"

namespace wkam {

// Nodes with h_c(x, x) <= tol_aubry. When the set comes out empty and alpha is
// supercritical, the query is rejected: the detection is a critical-case tool.
std::vector<int> aubry_set(const PairTable& h, double tol_aubry);
std::vector<int> aubry_set(const PairTable& h, double tol_aubry, double alpha, double max_v,
                           double margin = 1e-6);

// d_c(x, y) = h_c(x, y) + h_c(y, x), symmetric by construction.
double mather_pseudometric(const PairTable& h, int x, int y);

// Connected components of the graph {d_c <= tol_class} on the Aubry nodes.
std::vector<std::vector<int>> aubry_classes(const std::vector<int>& aubry_nodes,
                                            const PairTable& h, double tol_class);

// B*_c(x) = inf over Aubry pairs (y, z) of h(y,x) + h(x,z) - h(y,z). The
// detected Aubry nodes stand in for the Mather set; a violation of B* >= 0
// would surface the difference.
ScalarField barrier_function(const PairTable& h, const std::vector<int>& aubry_nodes);

// (u-, u+) = (h_c(y, .), -h_c(., y)) for an Aubry base node y.
std::pair<ScalarField, ScalarField> conjugate_pair(const PairTable& h, int y);

// Sup-norm distance of h_c(x, .) - h_c(y, .) from the best constant.
double class_constancy_check(const PairTable& h, int x, int y);

// D+B* = D+u- - D-u+, realized as the hull of pairwise vertex differences;
// D-u+ is estimated by running the semiconcave estimator on -u+.
CovectorPolytope barrier_superdifferential(const ScalarField& u_minus, const ScalarField& u_plus,
                                           const Vec& x, const EstimatorParams& params);

struct BarrierParams {
    PeierlsParams peierls;
    double tol_aubry = 1e-4;
    double tol_class = 5e-2;
    double tol_b = 2e-2;
};

struct BarrierData {
    double alpha = 0.0;
    PairTable h;
    std::vector<int> aubry_nodes;
    std::vector<double> aubry_values;          // h(x,x) on those nodes
    std::vector<std::vector<int>> classes;
    ScalarField barrier;                       // B*_c
    ScalarField u_minus, u_plus;               // conjugate pair at the base node
    int base_node = -1;
};

// Full pipeline: Peierls table -> Aubry nodes -> classes -> B* -> conjugate
// pair. Throws InvariantError when B* dips below -tol_b or fails to vanish on
// the Aubry proxy.
BarrierData build_barrier_data(const MechanicalSystem& sys, const Vec& c, const TorusGrid& grid,
                               double alpha, const BarrierParams& params = {});

}  // namespace wkam
