#include "wkam/semiconcave.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wkam/errors.hpp"

namespace wkam {

namespace {

double cross2(const Vec& o, const Vec& a, const Vec& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double dist_point_segment(const Vec& q, const Vec& a, const Vec& b) {
    const Vec ab = b - a;
    const double den = dot(ab, ab);
    if (den == 0.0) return norm(q - a);
    double t = dot(q - a, ab) / den;
    t = std::clamp(t, 0.0, 1.0);
    return norm(q - (a + t * ab));
}

}  // namespace

double CovectorPolytope::diameter() const {
    double best = 0.0;
    for (size_t i = 0; i < vertices.size(); ++i)
        for (size_t j = i + 1; j < vertices.size(); ++j)
            best = std::max(best, norm(vertices[i] - vertices[j]));
    return best;
}

CovectorPolytope convex_hull(int dim, const std::vector<Vec>& points) {
    CovectorPolytope poly;
    poly.dim = dim;
    if (points.empty()) return poly;
    if (dim == 1) {
        double lo = points.front()[0], hi = lo;
        for (const auto& p : points) {
            lo = std::min(lo, p[0]);
            hi = std::max(hi, p[0]);
        }
        poly.vertices.push_back(Vec(lo));
        if (hi > lo) poly.vertices.push_back(Vec(hi));
        return poly;
    }
    // Andrew monotone chain. Collinear points are dropped, so vertices are
    // extreme points of their own hull.
    std::vector<Vec> pts = points;
    std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) {
        return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Vec& a, const Vec& b) { return a[0] == b[0] && a[1] == b[1]; }),
              pts.end());
    const size_t n = pts.size();
    if (n <= 2) {
        poly.vertices = pts;
        return poly;
    }
    std::vector<Vec> hull(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    const size_t lower = k + 1;
    for (size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    poly.vertices = hull;
    return poly;
}

double shell_scale(const MechanicalSystem& sys, double alpha) {
    const double vmin = sys.min_potential();
    double lmax_inv = 1.0;
    if (!sys.identity_metric) {
        lmax_inv = 0.0;
        const int probe = 64;
        const double h = 1.0 / probe;
        const int nj = (sys.dim == 2) ? probe : 1;
        for (int i = 0; i < probe; ++i)
            for (int j = 0; j < nj; ++j) {
                const Vec x = (sys.dim == 1) ? Vec(i * h) : Vec(i * h, j * h);
                lmax_inv = std::max(lmax_inv, max_eigenvalue(sys.metric_inv_at(x)));
            }
    }
    const double rho = std::sqrt(2.0 * std::max(alpha - vmin, 0.0) * lmax_inv);
    return std::max(rho, 1.0);
}

EstimatorParams EstimatorParams::defaults_for(const MechanicalSystem& sys, double alpha,
                                              const TorusGrid& grid, bool lifted) {
    EstimatorParams p;
    const double rho = shell_scale(sys, alpha);
    p.radius = 3.0 * grid.h();
    p.tol_smooth = 0.1 * rho;
    p.eps_cluster = 0.05 * rho;
    p.lifted = lifted;
    return p;
}

namespace {

// Central-difference gradient of the raw grid values at a node.
Vec node_gradient(const ScalarField& f, int idx) {
    const TorusGrid& g = f.grid;
    const double inv2h = 0.5 / g.h();
    const auto ij = g.coords(idx);
    if (g.dim == 1) {
        return Vec((f.at(g.index(ij[0] + 1)) - f.at(g.index(ij[0] - 1))) * inv2h);
    }
    return Vec((f.at(g.index(ij[0] + 1, ij[1])) - f.at(g.index(ij[0] - 1, ij[1]))) * inv2h,
               (f.at(g.index(ij[0], ij[1] + 1)) - f.at(g.index(ij[0], ij[1] - 1))) * inv2h);
}

double gradient_oscillation(const ScalarField& f, int idx) {
    const TorusGrid& g = f.grid;
    const Vec g0 = node_gradient(f, idx);
    const auto ij = g.coords(idx);
    double osc = 0.0;
    if (g.dim == 1) {
        osc = std::max(norm(node_gradient(f, g.index(ij[0] - 1)) - g0),
                       norm(node_gradient(f, g.index(ij[0] + 1)) - g0));
    } else {
        osc = std::max({norm(node_gradient(f, g.index(ij[0] - 1, ij[1])) - g0),
                        norm(node_gradient(f, g.index(ij[0] + 1, ij[1])) - g0),
                        norm(node_gradient(f, g.index(ij[0], ij[1] - 1)) - g0),
                        norm(node_gradient(f, g.index(ij[0], ij[1] + 1)) - g0)});
    }
    return osc;
}

}  // namespace

CovectorPolytope reachable_gradients(const ScalarField& field, const Vec& x,
                                     const EstimatorParams& params) {
    const TorusGrid& g = field.grid;
    const double r = std::max(params.radius, 2.0 * g.h());
    const int cells = static_cast<int>(std::floor(r / g.h() + 1e-12));
    const int center = g.nearest(x);
    const auto cij = g.coords(center);
    const Vec cx = g.node(center);

    std::vector<Vec> collected;
    const int lo2 = (g.dim == 2) ? -cells : 0;
    const int hi2 = (g.dim == 2) ? cells : 0;
    for (int a = -cells; a <= cells; ++a) {
        for (int b = lo2; b <= hi2; ++b) {
            const int idx = (g.dim == 1) ? g.index(cij[0] + a) : g.index(cij[0] + a, cij[1] + b);
            const Vec y = g.node(idx);
            if (norm(min_displacement(cx, y)) > r + 1e-12) continue;
            if (gradient_oscillation(field, idx) >= params.tol_smooth) continue;
            Vec grad = node_gradient(field, idx);
            if (params.lifted) grad = grad + field.c;
            collected.push_back(grad);
        }
    }
    if (collected.empty())
        throw ConvergenceError("no smooth neighbors within the estimation radius");

    // Greedy clustering in node order, centroid representatives.
    std::vector<std::vector<Vec>> clusters;
    for (const Vec& p : collected) {
        bool placed = false;
        for (auto& cl : clusters) {
            Vec centroid = Vec::zero(g.dim);
            for (const Vec& q : cl) centroid = centroid + q;
            centroid = (1.0 / static_cast<double>(cl.size())) * centroid;
            if (norm(p - centroid) <= params.eps_cluster) {
                cl.push_back(p);
                placed = true;
                break;
            }
        }
        if (!placed) clusters.push_back({p});
    }
    std::vector<Vec> reps;
    reps.reserve(clusters.size());
    for (const auto& cl : clusters) {
        Vec centroid = Vec::zero(g.dim);
        for (const Vec& q : cl) centroid = centroid + q;
        reps.push_back((1.0 / static_cast<double>(cl.size())) * centroid);
    }
    // Interior clusters are discretization artifacts; keep extreme points only.
    return convex_hull(g.dim, reps);
}

CovectorPolytope superdifferential(const ScalarField& field, const Vec& x,
                                   const EstimatorParams& params) {
    return reachable_gradients(field, x, params);
}

double regularity_margin(const CovectorPolytope& poly) {
    if (poly.empty()) throw ConfigError("regularity_margin: empty polytope");
    const Vec origin = Vec::zero(poly.dim);
    if (poly.dim == 1) {
        const double lo = poly.vertices.front()[0];
        const double hi = poly.vertices.back()[0];
        if (0.0 < lo) return lo;
        if (0.0 > hi) return -hi;
        return -std::min(0.0 - lo, hi - 0.0);
    }
    const size_t n = poly.vertices.size();
    if (n == 1) return norm(poly.vertices[0]);
    if (n == 2) return dist_point_segment(origin, poly.vertices[0], poly.vertices[1]);
    bool inside = true;
    double boundary = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i) {
        const Vec& a = poly.vertices[i];
        const Vec& b = poly.vertices[(i + 1) % n];
        if (cross2(a, b, origin) < 0.0) inside = false;
        boundary = std::min(boundary, dist_point_segment(origin, a, b));
    }
    return inside ? -boundary : boundary;
}

bool regularity_test(const CovectorPolytope& poly, double margin_tol) {
    return regularity_margin(poly) > margin_tol;
}

bool is_singular(const ScalarField& field, const Vec& x, const EstimatorParams& params,
                 double tol_sing) {
    return superdifferential(field, x, params).diameter() > tol_sing;
}

SingularSet singular_set(const ScalarField& field, const EstimatorParams& params,
                         double tol_sing) {
    SingularSet s;
    s.tol_sing = tol_sing;
    for (int idx = 0; idx < field.grid.size(); ++idx) {
        try {
            const double d = superdifferential(field, field.grid.node(idx), params).diameter();
            if (d > tol_sing) {
                s.nodes.push_back(idx);
                s.diameters.push_back(d);
            }
        } catch (const ConvergenceError&) {
            s.unresolved.push_back(idx);
        }
    }
    return s;
}

bool local_max_test(const ScalarField& field, const Vec& x, double r) {
    const TorusGrid& g = field.grid;
    const int center = g.nearest(x);
    const Vec cx = g.node(center);
    const double v0 = field.at(center) + dot(field.c, cx);
    const int cells = static_cast<int>(std::ceil(r / g.h()));
    const auto cij = g.coords(center);
    const int lo2 = (g.dim == 2) ? -cells : 0;
    const int hi2 = (g.dim == 2) ? cells : 0;
    for (int a = -cells; a <= cells; ++a) {
        for (int b = lo2; b <= hi2; ++b) {
            const int idx = (g.dim == 1) ? g.index(cij[0] + a) : g.index(cij[0] + a, cij[1] + b);
            const Vec d = min_displacement(cx, g.node(idx));
            if (norm(d) > r + 1e-12) continue;
            const double vy = field.at(idx) + dot(field.c, cx + d);
            if (vy > v0) return false;
        }
    }
    return true;
}

std::vector<int> level_set_points(const ScalarField& field, const Vec& x, double tol_level) {
    const TorusGrid& g = field.grid;
    const int center = g.nearest(x);
    const double v0 = field.at(center) + dot(field.c, g.node(center));
    std::vector<int> out;
    for (int idx = 0; idx < g.size(); ++idx) {
        const double vy = field.at(idx) + dot(field.c, g.node(idx));
        if (std::abs(vy - v0) <= tol_level) out.push_back(idx);
    }
    return out;
}

double energy_shell_residual(const MechanicalSystem& sys, double alpha, const Vec& x,
                             const Vec& p) {
    const Vec xw = wrap(x);
    return std::abs(quad_form(sys.metric_at(xw), p) - 2.0 * (alpha - sys.potential_at(xw)));
}

ShellCoverage shell_coverage_test(const CovectorPolytope& poly, const MechanicalSystem& sys,
                                  double alpha, const Vec& x, double tol_shell, double gap_tol) {
    ShellCoverage out;
    if (poly.empty()) return out;
    const Vec xw = wrap(x);
    std::vector<Vec> on_shell;
    for (const Vec& p : poly.vertices)
        if (energy_shell_residual(sys, alpha, xw, p) <= tol_shell) on_shell.push_back(p);
    out.fraction = static_cast<double>(on_shell.size()) / poly.vertices.size();
    if (poly.dim == 1) {
        bool pos = false, neg = false;
        for (const Vec& p : on_shell) {
            if (p[0] > 0.0) pos = true;
            if (p[0] < 0.0) neg = true;
        }
        out.max_gap = (pos && neg) ? 0.0 : 3.141592653589793;
        out.covers_shell = pos && neg;
        return out;
    }
    if (on_shell.size() < 3) {
        out.max_gap = 2.0 * 3.141592653589793;
        out.covers_shell = false;
        return out;
    }
    // Map to the round sphere with the metric square root, then check angular
    // gaps of the vertex directions.
    const Mat a = sys.metric_at(xw);
    const double tr = a.at(0, 0) + a.at(1, 1);
    const double dtm = det(a);
    const double s = std::sqrt(dtm);
    const double tden = std::sqrt(tr + 2.0 * s);
    // sqrt(A) = (A + sqrt(det) I) / sqrt(tr + 2 sqrt(det))
    Mat sq = a;
    sq.at(0, 0) = (a.at(0, 0) + s) / tden;
    sq.at(1, 1) = (a.at(1, 1) + s) / tden;
    sq.at(0, 1) = a.at(0, 1) / tden;
    sq.at(1, 0) = a.at(1, 0) / tden;
    std::vector<double> angles;
    for (const Vec& p : on_shell) {
        const Vec q = matvec(sq, p);
        angles.push_back(std::atan2(q[1], q[0]));
    }
    std::sort(angles.begin(), angles.end());
    double max_gap = 2.0 * 3.141592653589793 + angles.front() - angles.back();
    for (size_t i = 0; i + 1 < angles.size(); ++i)
        max_gap = std::max(max_gap, angles[i + 1] - angles[i]);
    out.max_gap = max_gap;
    out.covers_shell = max_gap < gap_tol;
    return out;
}

}  // namespace wkam
