#include "wkam/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wkam/errors.hpp"

namespace wkam {

std::vector<int> aubry_set(const PairTable& h, double tol_aubry) {
    std::vector<int> nodes;
    for (int i = 0; i < h.grid.size(); ++i)
        if (h.at(i, i) <= tol_aubry) nodes.push_back(i);
    return nodes;
}

std::vector<int> aubry_set(const PairTable& h, double tol_aubry, double alpha, double max_v,
                           double margin) {
    std::vector<int> nodes = aubry_set(h, tol_aubry);
    if (nodes.empty() && alpha > max_v + margin)
        throw InvariantError(
            "Aubry detection at supercritical alpha is for the critical-case pathway");
    return nodes;
}

double mather_pseudometric(const PairTable& h, int x, int y) { return h.at(x, y) + h.at(y, x); }

std::vector<std::vector<int>> aubry_classes(const std::vector<int>& aubry_nodes,
                                            const PairTable& h, double tol_class) {
    const size_t n = aubry_nodes.size();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) {
        while (parent[static_cast<size_t>(a)] != a) {
            parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
            a = parent[static_cast<size_t>(a)];
        }
        return a;
    };
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            if (mather_pseudometric(h, aubry_nodes[i], aubry_nodes[j]) <= tol_class) {
                const int a = find(static_cast<int>(i)), b = find(static_cast<int>(j));
                if (a != b) parent[static_cast<size_t>(std::max(a, b))] = std::min(a, b);
            }
    std::vector<std::vector<int>> classes;
    std::vector<int> root_to_class(n, -1);
    for (size_t i = 0; i < n; ++i) {
        const int r = find(static_cast<int>(i));
        if (root_to_class[static_cast<size_t>(r)] < 0) {
            root_to_class[static_cast<size_t>(r)] = static_cast<int>(classes.size());
            classes.emplace_back();
        }
        classes[static_cast<size_t>(root_to_class[static_cast<size_t>(r)])].push_back(aubry_nodes[i]);
    }
    return classes;
}

ScalarField barrier_function(const PairTable& h, const std::vector<int>& aubry_nodes) {
    if (aubry_nodes.empty()) throw InvariantError("barrier_function: empty Aubry set");
    ScalarField b(h.grid, kInfCost);
    b.kind = FieldKind::barrier;
    const int m = h.grid.size();
    for (int y : aubry_nodes) {
        for (int z : aubry_nodes) {
            const double hyz = h.at(y, z);
            for (int x = 0; x < m; ++x) {
                const double v = h.at(y, x) + h.at(x, z) - hyz;
                if (v < b.at(x)) b.at(x) = v;
            }
        }
    }
    return b;
}

std::pair<ScalarField, ScalarField> conjugate_pair(const PairTable& h, int y) {
    ScalarField um(h.grid), up(h.grid);
    um.kind = FieldKind::backward_solution;
    up.kind = FieldKind::forward_solution;
    const int m = h.grid.size();
    for (int x = 0; x < m; ++x) {
        um.at(x) = h.at(y, x);
        up.at(x) = -h.at(x, y);
    }
    return {std::move(um), std::move(up)};
}

double class_constancy_check(const PairTable& h, int x, int y) {
    const int m = h.grid.size();
    double mn = kInfCost, mx = -kInfCost;
    for (int z = 0; z < m; ++z) {
        const double f = h.at(x, z) - h.at(y, z);
        mn = std::min(mn, f);
        mx = std::max(mx, f);
    }
    return 0.5 * (mx - mn);
}

CovectorPolytope barrier_superdifferential(const ScalarField& u_minus, const ScalarField& u_plus,
                                           const Vec& x, const EstimatorParams& params) {
    EstimatorParams raw = params;
    raw.lifted = false;  // conjugate fields carry the same c; it cancels in the difference
    const CovectorPolytope dplus_minus = reachable_gradients(u_minus, x, raw);
    ScalarField neg = u_plus;
    for (auto& v : neg.values) v = -v;
    const CovectorPolytope dplus_neg = reachable_gradients(neg, x, raw);
    std::vector<Vec> diffs;
    for (const Vec& a : dplus_minus.vertices)
        for (const Vec& nb : dplus_neg.vertices)
            diffs.push_back(a + nb);  // b = -nb, so a - b = a + nb
    return convex_hull(u_minus.grid.dim, diffs);
}

BarrierData build_barrier_data(const MechanicalSystem& sys, const Vec& c, const TorusGrid& grid,
                               double alpha, const BarrierParams& params) {
    BarrierData out;
    out.alpha = alpha;
    out.h = peierls_barrier(sys, c, grid, alpha, params.peierls);
    out.aubry_nodes = aubry_set(out.h, params.tol_aubry, alpha, sys.max_potential());
    if (out.aubry_nodes.empty()) throw InvariantError("empty Aubry set at tol_aubry");
    for (int i : out.aubry_nodes) out.aubry_values.push_back(out.h.at(i, i));
    out.classes = aubry_classes(out.aubry_nodes, out.h, params.tol_class);
    out.barrier = barrier_function(out.h, out.aubry_nodes);
    out.barrier.c = c;
    out.barrier.alpha = alpha;

    const double tol_h = params.peierls.tol_h;
    for (int x = 0; x < grid.size(); ++x)
        if (out.barrier.at(x) < -params.tol_b)
            throw InvariantError("barrier invariant violated: B* < -tol_b at node " +
                                 std::to_string(x));
    for (int i : out.aubry_nodes)
        if (out.barrier.at(i) > params.tol_b)
            throw InvariantError("barrier invariant violated: B* does not vanish on the Aubry proxy");
    for (size_t a = 0; a < out.aubry_nodes.size(); ++a)
        for (size_t b = a + 1; b < out.aubry_nodes.size(); ++b)
            if (mather_pseudometric(out.h, out.aubry_nodes[a], out.aubry_nodes[b]) < -2.0 * tol_h)
                throw InvariantError("barrier invariant violated: d_c < -2 tol_h");

    // Base point: lowest node index in the largest class.
    size_t best = 0;
    for (size_t i = 1; i < out.classes.size(); ++i)
        if (out.classes[i].size() > out.classes[best].size()) best = i;
    out.base_node = *std::min_element(out.classes[best].begin(), out.classes[best].end());
    auto pair = conjugate_pair(out.h, out.base_node);
    out.u_minus = std::move(pair.first);
    out.u_plus = std::move(pair.second);
    out.u_minus.c = c;
    out.u_minus.alpha = alpha;
    out.u_plus.c = c;
    out.u_plus.alpha = alpha;
    return out;
}

}  // namespace wkam
