#include "wkam/weakkam.hpp"

#include <algorithm>
#include <cmath>

#include "wkam/errors.hpp"
#include "wkam/parallel.hpp"

namespace wkam {

namespace {

// Stencil form of the one-step cost: offsets within the velocity cap, with the
// metric and potential tabulated at half-grid midpoints. Semantically equal to
// the dense one_step_matrix rows, but O(stencil) per node per sweep.
struct Stencil {
    TorusGrid grid;
    double dt = 0.0;
    double v_cap = 0.0;
    bool identity = true;
    int n2 = 0;  // 2N midpoint grid per axis
    std::vector<double> vmid;                  // V at midpoints (size n2 or n2*n2)
    std::vector<double> ai00, ai01, ai11;      // A^{-1} at midpoints (general metric)
    struct Offset {
        int k1, k2;
        double d1, d2;
        double lin;  // -<c, d>
    };
    std::vector<Offset> offsets;

    static Stencil build(const MechanicalSystem& sys, const Vec& c, const TorusGrid& grid,
                         double dt, double v_cap) {
        Stencil s;
        s.grid = grid;
        s.dt = dt;
        s.v_cap = v_cap;
        s.identity = sys.identity_metric;
        s.n2 = 2 * grid.n;
        const double h = grid.h();
        const double r = v_cap * dt;
        if (r > 0.5 - 0.25 * h)
            throw ConfigError("stencil radius v_cap*dt exceeds half the torus; reduce dt");
        const int kmax = static_cast<int>(std::floor(r / h));
        const int lo2 = (grid.dim == 2) ? -kmax : 0;
        const int hi2 = (grid.dim == 2) ? kmax : 0;
        for (int k1 = -kmax; k1 <= kmax; ++k1) {
            for (int k2 = lo2; k2 <= hi2; ++k2) {
                const double d1 = k1 * h, d2 = k2 * h;
                if (d1 * d1 + d2 * d2 > r * r) continue;
                Offset o;
                o.k1 = k1;
                o.k2 = k2;
                o.d1 = d1;
                o.d2 = d2;
                o.lin = -(c[0] * d1 + (grid.dim == 2 ? c[1] * d2 : 0.0));
                s.offsets.push_back(o);
            }
        }
        const double hm = 0.5 * h;
        if (grid.dim == 1) {
            s.vmid.resize(static_cast<size_t>(s.n2));
            if (!s.identity) {
                s.ai00.resize(static_cast<size_t>(s.n2));
            }
            for (int i = 0; i < s.n2; ++i) {
                const Vec m(i * hm);
                s.vmid[static_cast<size_t>(i)] = sys.potential_at(m);
                if (!s.identity) s.ai00[static_cast<size_t>(i)] = sys.metric_inv_at(m).at(0, 0);
            }
        } else {
            const size_t sz = static_cast<size_t>(s.n2) * s.n2;
            s.vmid.resize(sz);
            if (!s.identity) {
                s.ai00.resize(sz);
                s.ai01.resize(sz);
                s.ai11.resize(sz);
            }
            for (int i = 0; i < s.n2; ++i) {
                for (int j = 0; j < s.n2; ++j) {
                    const Vec m(i * hm, j * hm);
                    const size_t idx = static_cast<size_t>(i) * s.n2 + j;
                    s.vmid[idx] = sys.potential_at(m);
                    if (!s.identity) {
                        const Mat ai = sys.metric_inv_at(m);
                        s.ai00[idx] = ai.at(0, 0);
                        s.ai01[idx] = ai.at(0, 1);
                        s.ai11[idx] = ai.at(1, 1);
                    }
                }
            }
        }
        return s;
    }

    // cost of stepping displacement d ending at midpoint index
    double cost(const Offset& o, size_t midx) const {
        double kin;
        if (identity) {
            kin = 0.5 * (o.d1 * o.d1 + o.d2 * o.d2) / dt;
        } else if (grid.dim == 1) {
            kin = 0.5 * ai00[midx] * o.d1 * o.d1 / dt;
        } else {
            kin = 0.5 * (ai00[midx] * o.d1 * o.d1 + 2.0 * ai01[midx] * o.d1 * o.d2 +
                         ai11[midx] * o.d2 * o.d2) / dt;
        }
        return kin + o.lin - dt * vmid[midx];
    }

    // (T u)(x) = min_y u(y) + K[y][x]; midpoint of the step y -> x is x - d/2.
    void sweep_backward(const std::vector<double>& u, std::vector<double>& out) const {
        const int n = grid.n;
        if (grid.dim == 1) {
            for (int i = 0; i < n; ++i) {
                double best = kInfCost;
                for (const auto& o : offsets) {
                    int isrc = i - o.k1;
                    if (isrc < 0) isrc += n; else if (isrc >= n) isrc -= n;
                    int im = 2 * i - o.k1;
                    if (im < 0) im += n2; else if (im >= n2) im -= n2;
                    const double cand = u[static_cast<size_t>(isrc)] + cost(o, static_cast<size_t>(im));
                    if (cand < best) best = cand;
                }
                out[static_cast<size_t>(i)] = best;
            }
            return;
        }
        parallel_for(n, [&](int i) {
            double* row = &out[static_cast<size_t>(i) * n];
            std::fill(row, row + n, kInfCost);
            for (const auto& o : offsets) {
                int isrc = i - o.k1;
                if (isrc < 0) isrc += n; else if (isrc >= n) isrc -= n;
                int im = 2 * i - o.k1;
                if (im < 0) im += n2; else if (im >= n2) im -= n2;
                const double* urow = &u[static_cast<size_t>(isrc) * n];
                const size_t mbase = static_cast<size_t>(im) * n2;
                for (int j = 0; j < n; ++j) {
                    int jsrc = j - o.k2;
                    if (jsrc < 0) jsrc += n; else if (jsrc >= n) jsrc -= n;
                    int jm = 2 * j - o.k2;
                    if (jm < 0) jm += n2; else if (jm >= n2) jm -= n2;
                    const double cand = urow[jsrc] + cost(o, mbase + static_cast<size_t>(jm));
                    if (cand < row[j]) row[j] = cand;
                }
            }
        });
    }

    // (Ť u)(x) = max_y u(y) - K[x][y]; step x -> y, midpoint x + d/2.
    void sweep_forward(const std::vector<double>& u, std::vector<double>& out) const {
        const int n = grid.n;
        if (grid.dim == 1) {
            for (int i = 0; i < n; ++i) {
                double best = -kInfCost;
                for (const auto& o : offsets) {
                    int idst = i + o.k1;
                    if (idst < 0) idst += n; else if (idst >= n) idst -= n;
                    int im = 2 * i + o.k1;
                    if (im < 0) im += n2; else if (im >= n2) im -= n2;
                    const double cand = u[static_cast<size_t>(idst)] - cost(o, static_cast<size_t>(im));
                    if (cand > best) best = cand;
                }
                out[static_cast<size_t>(i)] = best;
            }
            return;
        }
        parallel_for(n, [&](int i) {
            double* row = &out[static_cast<size_t>(i) * n];
            std::fill(row, row + n, -kInfCost);
            for (const auto& o : offsets) {
                int idst = i + o.k1;
                if (idst < 0) idst += n; else if (idst >= n) idst -= n;
                int im = 2 * i + o.k1;
                if (im < 0) im += n2; else if (im >= n2) im -= n2;
                const double* urow = &u[static_cast<size_t>(idst) * n];
                const size_t mbase = static_cast<size_t>(im) * n2;
                for (int j = 0; j < n; ++j) {
                    int jdst = j + o.k2;
                    if (jdst < 0) jdst += n; else if (jdst >= n) jdst -= n;
                    int jm = 2 * j + o.k2;
                    if (jm < 0) jm += n2; else if (jm >= n2) jm -= n2;
                    const double cand = urow[jdst] - cost(o, mbase + static_cast<size_t>(jm));
                    if (cand > row[j]) row[j] = cand;
                }
            }
        });
    }
};

struct IterationResult {
    std::vector<double> u;
    double alpha = 0.0;
    double residual = 0.0;
    int iterations = 0;
    int phase = 1;
};

// Shared driver for the backward (min) and forward (max) operators. `sign` is
// +1 backward (alpha = -shift/dt) and -1 forward (alpha = +shift/dt).
IterationResult iterate_fixed_point(const MechanicalSystem& sys, const Vec& c,
                                    const TorusGrid& grid, const Stencil& st,
                                    const SolveParams& p, bool backward) {
    const int m = grid.size();
    std::vector<double> u(static_cast<size_t>(m), 0.0);
    std::vector<double> tu(static_cast<size_t>(m));
    auto sweep = [&](const std::vector<double>& in, std::vector<double>& out) {
        if (backward) st.sweep_backward(in, out);
        else st.sweep_forward(in, out);
    };
    double shift = 0.0, osc = kInfCost;
    double osc_at_last_probe = kInfCost;
    int it = 0;
    bool stalled = false;
    for (; it < p.max_iter; ++it) {
        sweep(u, tu);
        double mx = -kInfCost, mn = kInfCost;
        for (int i = 0; i < m; ++i) {
            const double d = tu[static_cast<size_t>(i)] - u[static_cast<size_t>(i)];
            mx = std::max(mx, d);
            mn = std::min(mn, d);
        }
        shift = mx;
        osc = mx - mn;
        for (int i = 0; i < m; ++i) u[static_cast<size_t>(i)] = tu[static_cast<size_t>(i)] - shift;
        if (osc < p.tol_fp) break;
        if ((it + 1) % p.stall_check == 0) {
            if (it + 1 >= 2 * p.stall_check && osc > 0.9 * osc_at_last_probe) {
                stalled = true;
                ++it;
                break;
            }
            osc_at_last_probe = osc;
        }
    }

    IterationResult r;
    r.iterations = it < p.max_iter ? it + 1 : p.max_iter;
    if (osc < p.tol_fp) {
        r.u = u;
        r.alpha = (backward ? -shift : shift) / st.dt;
        r.residual = osc;
        r.phase = 1;
        return r;
    }
    if (!stalled && it >= p.max_iter)
        throw ConvergenceError("no convergence after " + std::to_string(p.max_iter) + " sweeps");

    // Periodic min-plus cycle: recover alpha from dyadic powers of the dense
    // table (same discretization), then take the windowed extremum of
    // compensated iterates, which is invariant once the window covers a period.
    if (grid.size() > 4096)
        throw ConvergenceError("no convergence: iteration stalled and the grid is too large "
                               "for the dense min-plus recovery");
    const double alpha = effective_alpha_minplus(sys, c, grid, st.dt, st.v_cap);
    const double drift = (backward ? -alpha : alpha) * st.dt;
    std::vector<double> ubar = u;
    double acc = 0.0;
    for (int j = 0; j < p.window; ++j) {
        sweep(u, tu);
        double mx = -kInfCost;
        for (int i = 0; i < m; ++i)
            mx = std::max(mx, tu[static_cast<size_t>(i)] - u[static_cast<size_t>(i)]);
        for (int i = 0; i < m; ++i) u[static_cast<size_t>(i)] = tu[static_cast<size_t>(i)] - mx;
        acc += mx - drift;
        if (backward) {
            for (int i = 0; i < m; ++i)
                ubar[static_cast<size_t>(i)] =
                    std::min(ubar[static_cast<size_t>(i)], u[static_cast<size_t>(i)] + acc);
        } else {
            for (int i = 0; i < m; ++i)
                ubar[static_cast<size_t>(i)] =
                    std::max(ubar[static_cast<size_t>(i)], u[static_cast<size_t>(i)] + acc);
        }
    }
    sweep(ubar, tu);
    double resid = 0.0;
    for (int i = 0; i < m; ++i)
        resid = std::max(resid, std::abs(tu[static_cast<size_t>(i)] - drift - ubar[static_cast<size_t>(i)]));
    if (resid > p.tol_fp)
        throw ConvergenceError("no convergence: windowed residual " + format_double(resid) +
                               " exceeds tol_fp");
    r.u = std::move(ubar);
    r.alpha = alpha;
    r.residual = resid;
    r.phase = 2;
    r.iterations += p.window;
    return r;
}

ScalarField make_field(const TorusGrid& grid, std::vector<double> vals, const Vec& c,
                       double alpha, FieldKind kind, double residual) {
    ScalarField f(grid);
    f.values = std::move(vals);
    const double mn = f.min_value();
    for (auto& v : f.values) v -= mn;
    f.c = c;
    f.alpha = alpha;
    f.kind = kind;
    f.residual = residual;
    return f;
}

}  // namespace

ScalarField lax_oleinik_step(const ScalarField& u, const CostMatrix& K) {
    if (!(u.grid == K.grid)) throw ConfigError("lax_oleinik_step: grid mismatch");
    const int m = u.grid.size();
    ScalarField out = u;
    parallel_for(m, [&](int x) {
        double best = kInfCost;
        for (int y = 0; y < m; ++y) {
            const double cand = u.at(y) + K.at(y, x);
            if (cand < best) best = cand;
        }
        out.at(x) = best;
    });
    return out;
}

std::pair<ScalarField, SolveReport> solve_alpha_u(const MechanicalSystem& sys, const Vec& c,
                                                  const TorusGrid& grid, const SolveParams& params) {
    if (params.dt > 0.0 && !(params.dt <= 0.5))
        throw ConfigError("solve: dt must lie in (0, 0.5]");
    const Discretization disc = Discretization::defaults_for(sys, c, grid, params.dt, params.v_cap);
    const Stencil st = Stencil::build(sys, c, grid, disc.t_step, disc.v_cap);
    IterationResult r = iterate_fixed_point(sys, c, grid, st, params, /*backward=*/true);
    ScalarField u = make_field(grid, std::move(r.u), c, r.alpha, FieldKind::backward_solution,
                               r.residual);
    SolveReport rep;
    rep.alpha = r.alpha;
    rep.iterations = r.iterations;
    rep.residual = r.residual;
    rep.semiconcavity_estimate = semiconcavity_estimate(u);
    rep.phase = r.phase;
    rep.dt = disc.t_step;
    rep.v_cap = disc.v_cap;
    return {std::move(u), rep};
}

std::pair<ScalarField, SolveReport> solve_forward(const MechanicalSystem& sys, const Vec& c,
                                                  const TorusGrid& grid, const SolveParams& params) {
    const Discretization disc = Discretization::defaults_for(sys, c, grid, params.dt, params.v_cap);
    const Stencil st = Stencil::build(sys, c, grid, disc.t_step, disc.v_cap);
    IterationResult fwd = iterate_fixed_point(sys, c, grid, st, params, /*backward=*/false);
    IterationResult bwd = iterate_fixed_point(sys, c, grid, st, params, /*backward=*/true);
    const double mismatch = std::abs(fwd.alpha - bwd.alpha);
    if (mismatch > 2.0 * params.tol_fp / disc.t_step)
        throw ConvergenceError("alpha mismatch between forward and backward solves: " +
                               format_double(mismatch));
    ScalarField u = make_field(grid, std::move(fwd.u), c, fwd.alpha, FieldKind::forward_solution,
                               fwd.residual);
    SolveReport rep;
    rep.alpha = fwd.alpha;
    rep.iterations = fwd.iterations;
    rep.residual = fwd.residual;
    rep.semiconcavity_estimate = semiconcavity_estimate(u);
    rep.phase = fwd.phase;
    rep.dt = disc.t_step;
    rep.v_cap = disc.v_cap;
    return {std::move(u), rep};
}

LiftedField lift_v(const ScalarField& u_c) { return LiftedField{&u_c, u_c.c}; }

double check_domination(const MechanicalSystem& sys, const ScalarField& u, const Vec& c,
                        double alpha, const std::vector<ArcNode>& arc) {
    if (arc.size() < 2) return 0.0;
    double action = 0.0;
    for (size_t i = 0; i + 1 < arc.size(); ++i) {
        const double dt = arc[i + 1].t - arc[i].t;
        if (!(dt > 0.0)) throw ConfigError("check_domination: arc times must increase");
        const Vec q = (1.0 / dt) * (arc[i + 1].x - arc[i].x);
        const double la = lagrangian_c(sys, c, arc[i].x, q);
        const double lb = lagrangian_c(sys, c, arc[i + 1].x, q);
        action += 0.5 * (la + lb) * dt;
    }
    const double span = arc.back().t - arc.front().t;
    return u.interp(arc.back().x) - u.interp(arc.front().x) - action - alpha * span;
}

bool check_energy_condition(double alpha, const MechanicalSystem& sys, double margin) {
    return alpha > sys.max_potential() + margin;
}

double semiconcavity_estimate(const ScalarField& u) {
    const TorusGrid& g = u.grid;
    const double h2 = g.h() * g.h();
    double best = 0.0;
    if (g.dim == 1) {
        for (int i = 0; i < g.n; ++i) {
            const double d2 = u.at(g.index(i + 1)) + u.at(g.index(i - 1)) - 2.0 * u.at(g.index(i));
            best = std::max(best, d2 / h2);
        }
        return best;
    }
    for (int i = 0; i < g.n; ++i) {
        for (int j = 0; j < g.n; ++j) {
            const double uc = u.at(g.index(i, j));
            const double da = u.at(g.index(i + 1, j)) + u.at(g.index(i - 1, j)) - 2.0 * uc;
            const double db = u.at(g.index(i, j + 1)) + u.at(g.index(i, j - 1)) - 2.0 * uc;
            best = std::max({best, da / h2, db / h2});
        }
    }
    return best;
}

}  // namespace wkam
