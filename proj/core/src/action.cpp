#include "wkam/action.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "wkam/errors.hpp"
#include "wkam/parallel.hpp"

namespace wkam {

namespace {

// Dense tables are desk-scale by design; the solver has its own stencil path.
constexpr int kMaxDenseNodes = 4096;

void require_dense(const TorusGrid& grid) {
    if (grid.size() > kMaxDenseNodes)
        throw ConfigError("grid too large for dense cost tables (max 4096 nodes)");
}

}  // namespace

Discretization Discretization::defaults_for(const MechanicalSystem& sys, const Vec& c,
                                            const TorusGrid& grid, double dt_override,
                                            double v_cap_override) {
    Discretization d;
    double ag = -kInfCost;
    double vmax = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
        const Vec x = grid.node(i);
        const Mat a = sys.metric_at(x);
        const double v = sys.potential_at(x);
        ag = std::max(ag, 0.5 * quad_form(a, c) + v);
        vmax = std::max(vmax, max_eigenvalue(a));
    }
    d.alpha_guess = ag;
    double cap = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
        const Vec x = grid.node(i);
        const double s = 2.0 * std::max(ag - sys.potential_at(x), 0.0) *
                         max_eigenvalue(sys.metric_at(x));
        cap = std::max(cap, std::sqrt(s));
    }
    d.v_cap = std::max(4.0 * cap, 1.0);
    if (v_cap_override > 0.0) d.v_cap = v_cap_override;

    const double diam = 0.5 * std::sqrt(static_cast<double>(grid.dim));
    double dt = std::max(0.2 * diam / d.v_cap, 5.0 * grid.h());
    dt = std::min(dt, 0.45 / d.v_cap);  // keep min-displacements unique
    d.t_step = (dt_override > 0.0) ? dt_override : dt;
    return d;
}

double one_step_cost(const MechanicalSystem& sys, const Vec& c, const Vec& y, const Vec& x,
                     double t, double v_cap) {
    if (!(t > 0.0)) throw ConfigError("invalid time step");
    const Vec d = min_displacement(y, x);
    if (norm(d) > v_cap * t) return kInfCost;
    const Vec m = wrap(y + 0.5 * d);
    const Vec q = (1.0 / t) * d;
    return t * lagrangian_c(sys, c, m, q);
}

CostMatrix one_step_matrix(const MechanicalSystem& sys, const Vec& c, const TorusGrid& grid,
                           double t, double v_cap) {
    require_dense(grid);
    if (!(t > 0.0)) throw ConfigError("invalid time step");
    CostMatrix K;
    K.grid = grid;
    K.t_step = t;
    const int m = grid.size();
    K.k.assign(static_cast<size_t>(m) * m, kInfCost);
    parallel_for(m, [&](int y) {
        const Vec yv = grid.node(y);
        for (int x = 0; x < m; ++x)
            K.at(y, x) = one_step_cost(sys, c, yv, grid.node(x), t, v_cap);
    });
    return K;
}

CostMatrix compose(const CostMatrix& k1, const CostMatrix& k2) {
    if (!(k1.grid == k2.grid)) throw ConfigError("compose: grid mismatch");
    const int m = k1.grid.size();
    CostMatrix out;
    out.grid = k1.grid;
    out.t_step = k1.t_step + k2.t_step;
    out.k.assign(static_cast<size_t>(m) * m, kInfCost);
    parallel_for(m, [&](int y) {
        double* row = &out.k[static_cast<size_t>(y) * m];
        const double* a = &k1.k[static_cast<size_t>(y) * m];
        for (int z = 0; z < m; ++z) {
            const double az = a[z];
            if (!(az < kInfCost)) continue;
            const double* b = &k2.k[static_cast<size_t>(z) * m];
            for (int x = 0; x < m; ++x) {
                const double v = az + b[x];
                if (v < row[x]) row[x] = v;
            }
        }
    });
    return out;
}

CostMatrix finite_time_action(const MechanicalSystem& sys, const Vec& c, const TorusGrid& grid,
                              double t, int n_steps, double v_cap) {
    if (n_steps < 1) throw ConfigError("finite_time_action: n_steps must be >= 1");
    const CostMatrix step = one_step_matrix(sys, c, grid, t / n_steps, v_cap);
    CostMatrix acc = step;
    for (int i = 1; i < n_steps; ++i) acc = compose(acc, step);
    return acc;
}

void CostMatrix::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << "# N=" << grid.n << " dim=" << grid.dim << " t=" << format_double(t_step) << "\n";
    const int m = grid.size();
    for (int y = 0; y < m; ++y) {
        for (int x = 0; x < m; ++x) {
            if (x) out << ",";
            out << format_double(at(y, x));
        }
        out << "\n";
    }
}

void PairTable::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << "# N=" << grid.n << " dim=" << grid.dim << " t_step=" << format_double(t_step)
        << " window_gap=" << format_double(window_gap) << "\n";
    const int m = grid.size();
    for (int y = 0; y < m; ++y) {
        for (int x = 0; x < m; ++x) {
            if (x) out << ",";
            out << format_double(at(y, x));
        }
        out << "\n";
    }
}

PairTable mane_potential(const MechanicalSystem& sys, const Vec& c, const TorusGrid& grid,
                         double alpha, const ManeParams& params) {
    require_dense(grid);
    const Discretization disc =
        Discretization::defaults_for(sys, c, grid, params.dt_override, params.v_cap_override);
    CostMatrix K = one_step_matrix(sys, c, grid, disc.t_step, disc.v_cap);
    const int m = grid.size();
    PairTable phi;
    phi.grid = grid;
    phi.t_step = disc.t_step;
    phi.h.assign(static_cast<size_t>(m) * m, kInfCost);
    double t = disc.t_step;
    while (true) {
        for (size_t i = 0; i < phi.h.size(); ++i) phi.h[i] = std::min(phi.h[i], K.k[i] + alpha * t);
        if (2.0 * t > params.t_max) break;
        K = compose(K, K);
        t *= 2.0;
    }
    return phi;
}

PairTable peierls_barrier(const MechanicalSystem& sys, const Vec& c, const TorusGrid& grid,
                          double alpha, const PeierlsParams& params) {
    require_dense(grid);
    const Discretization disc =
        Discretization::defaults_for(sys, c, grid, params.dt_override, params.v_cap_override);
    const CostMatrix step = one_step_matrix(sys, c, grid, disc.t_step, disc.v_cap);
    const int m = grid.size();

    // Dyadic powers to reach the window start.
    CostMatrix Kt = step;
    while (2.0 * Kt.t_step <= params.t_lo) Kt = compose(Kt, Kt);

    // March across [t_lo, t_hi] with a stride of a few base steps, keeping the
    // running min of h^c_t + alpha t in each half window.
    const double span = params.t_hi - params.t_lo;
    if (!(span > 0.0) || params.n_march < 2)
        throw ConfigError("peierls_barrier: window must satisfy t_hi > t_lo, n_march >= 2");
    const int stride_steps = std::max(1, static_cast<int>(std::round(span / params.n_march / disc.t_step)));
    CostMatrix Km = step;
    for (int i = 1; i < stride_steps; ++i) Km = compose(Km, step);

    std::vector<double> w1(static_cast<size_t>(m) * m, kInfCost);
    std::vector<double> w2(static_cast<size_t>(m) * m, kInfCost);
    const double t_mid = params.t_lo + 0.5 * span;
    double t = Kt.t_step;
    {
        std::vector<double>& w = (t <= t_mid) ? w1 : w2;
        for (size_t i = 0; i < w.size(); ++i) w[i] = std::min(w[i], Kt.k[i] + alpha * t);
    }
    while (t + Km.t_step <= params.t_hi + 1e-12) {
        Kt = compose(Kt, Km);
        t = Kt.t_step;
        std::vector<double>& w = (t <= t_mid) ? w1 : w2;
        for (size_t i = 0; i < w.size(); ++i) w[i] = std::min(w[i], Kt.k[i] + alpha * t);
    }

    double gap = 0.0;
    PairTable out;
    out.grid = grid;
    out.t_step = disc.t_step;
    out.h.resize(static_cast<size_t>(m) * m);
    for (size_t i = 0; i < out.h.size(); ++i) {
        out.h[i] = std::min(w1[i], w2[i]);
        gap = std::max(gap, std::abs(out.h[i] - w1[i]));
    }
    out.window_gap = gap;
    if (gap > params.tol_h)
        throw ConvergenceError("barrier not converged: window gap " + format_double(gap) +
                               " exceeds tol_h " + format_double(params.tol_h));
    return out;
}

double effective_alpha_minplus(const MechanicalSystem& sys, const Vec& c, const TorusGrid& grid,
                               double dt, double v_cap, int n_doublings) {
    require_dense(grid);
    CostMatrix K = one_step_matrix(sys, c, grid, dt, v_cap);
    const int m = grid.size();
    auto min_diag = [&](const CostMatrix& A) {
        double b = kInfCost;
        for (int i = 0; i < m; ++i) b = std::min(b, A.at(i, i));
        return b;
    };
    double t = dt;
    double prev = 0.0;
    double est = 0.0;
    for (int k = 0; k < n_doublings; ++k) {
        K = compose(K, K);
        t *= 2.0;
        const double d = min_diag(K);
        if (k > 0) est = -(d - prev) / (0.5 * t);
        prev = d;
    }
    return est;
}

}  // namespace wkam
