// Batch front door: solve / diagnose / export. Identical configuration yields
// byte-identical output files (fixed formatting, no timestamps, deterministic
// sweep order).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wkam/barrier.hpp"
#include "wkam/characteristics.hpp"
#include "wkam/errors.hpp"
#include "wkam/homoclinic.hpp"
#include "wkam/semiconcave.hpp"
#include "wkam/weakkam.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wkam;

namespace {

struct RunConfig {
    std::string system_path;
    std::vector<std::string> c_args;
    int grid_n = 128;
    double dt = 0.0;
    double ds = 0.0;
    double tau = 1.0;
    double horizon = 20.0;  // homoclinic branch length
    std::string at;
    std::string from;
    std::string p0;
    std::string pair_base;
    std::string out_dir = ".";
    double tol_fp = 1e-6;
    double tol_sing = 0.0;  // 0 = derive from the shell scale
    double tol_shell = 0.1;
    double tol_aubry = 1e-4;
    double tol_h = 5e-3;
    double tol_b = 2e-2;
    double cal_tol = 2e-2;
    double match_tol = 0.0;  // 0 = derive
};

Vec parse_vec(const std::string& s, int dim, const std::string& what) {
    std::vector<double> comps;
    std::string token;
    std::stringstream ss(s);
    while (std::getline(ss, token, ',')) {
        try {
            comps.push_back(std::stod(token));
        } catch (...) {
            throw ConfigError(what + ": cannot parse component '" + token + "'");
        }
    }
    if (static_cast<int>(comps.size()) != dim)
        throw ConfigError(what + ": expected " + std::to_string(dim) + " components, got " +
                          std::to_string(comps.size()));
    return dim == 1 ? Vec(comps[0]) : Vec(comps[0], comps[1]);
}

void check_config(const RunConfig& cfg) {
    const int n = cfg.grid_n;
    if (n < 16 || n > 512 || (n & (n - 1)) != 0)
        throw ConfigError("grid N must be a power of two between 16 and 512");
    for (double t : {cfg.tol_fp, cfg.tol_shell, cfg.tol_aubry, cfg.tol_h, cfg.tol_b, cfg.cal_tol})
        if (!(t > 0.0)) throw ConfigError("tolerances must be positive");
}

fs::path out_file(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.out_dir);
    return fs::path(cfg.out_dir) / name;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream o(path);
    if (!o) throw ConfigError("cannot open output file: " + path.string());
    o << j.dump(2) << "\n";
}

struct Loaded {
    MechanicalSystem sys;
    TorusGrid grid;
    Vec c;
};

Loaded load(const RunConfig& cfg, bool need_c = true) {
    if (cfg.system_path.empty()) throw ConfigError("--system is required");
    Loaded l{MechanicalSystem::from_json_file(cfg.system_path), TorusGrid(), Vec()};
    l.grid = TorusGrid(l.sys.dim, cfg.grid_n);
    if (need_c) {
        if (cfg.c_args.empty()) throw ConfigError("--c is required");
        l.c = parse_vec(cfg.c_args.front(), l.sys.dim, "--c");
    }
    return l;
}

json report_json(const SolveReport& rep) {
    return json{{"alpha", rep.alpha},
                {"residual", rep.residual},
                {"iterations", rep.iterations},
                {"semiconcavity_estimate", rep.semiconcavity_estimate}};
}

double derived_tol_sing(const RunConfig& cfg, const MechanicalSystem& sys, double alpha) {
    return cfg.tol_sing > 0.0 ? cfg.tol_sing : 0.2 * shell_scale(sys, alpha);
}

double derived_match_tol(const RunConfig& cfg, const MechanicalSystem& sys, double alpha) {
    return cfg.match_tol > 0.0 ? cfg.match_tol : 0.05 * shell_scale(sys, alpha);
}

int cmd_solve(const RunConfig& cfg) {
    auto [sys, grid, c] = load(cfg);
    SolveParams sp;
    sp.dt = cfg.dt;
    sp.tol_fp = cfg.tol_fp;
    auto [u, rep] = solve_alpha_u(sys, c, grid, sp);
    u.write_csv(out_file(cfg, "u.csv").string());
    write_json(out_file(cfg, "report.json"), report_json(rep));
    return 0;
}

int cmd_alpha(const RunConfig& cfg) {
    auto l = load(cfg, false);
    if (cfg.c_args.empty()) throw ConfigError("--c is required (repeat for a sweep)");
    std::ofstream table(out_file(cfg, "alpha.csv"));
    table << (l.sys.dim == 1 ? "c1,alpha,residual,iterations\n" : "c1,c2,alpha,residual,iterations\n");
    for (const auto& carg : cfg.c_args) {
        const Vec c = parse_vec(carg, l.sys.dim, "--c");
        SolveParams sp;
        sp.dt = cfg.dt;
        sp.tol_fp = cfg.tol_fp;
        auto [u, rep] = solve_alpha_u(l.sys, c, l.grid, sp);
        table << format_double(c[0]);
        if (l.sys.dim == 2) table << "," << format_double(c[1]);
        table << "," << format_double(rep.alpha) << "," << format_double(rep.residual) << ","
              << rep.iterations << "\n";
    }
    return 0;
}

int cmd_singular(const RunConfig& cfg) {
    auto [sys, grid, c] = load(cfg);
    SolveParams sp;
    sp.dt = cfg.dt;
    sp.tol_fp = cfg.tol_fp;
    auto [u, rep] = solve_alpha_u(sys, c, grid, sp);
    const EstimatorParams est = EstimatorParams::defaults_for(sys, rep.alpha, grid, true);
    const double tol_sing = derived_tol_sing(cfg, sys, rep.alpha);
    const SingularSet s = singular_set(u, est, tol_sing);
    std::ofstream out(out_file(cfg, "singular.csv"));
    out << "# N=" << grid.n << " dim=" << grid.dim << " tol_sing=" << format_double(tol_sing)
        << "\n";
    out << (grid.dim == 1 ? "i,x1,diam\n" : "i,j,x1,x2,diam\n");
    for (size_t k = 0; k < s.nodes.size(); ++k) {
        const auto ij = grid.coords(s.nodes[k]);
        const Vec x = grid.node(s.nodes[k]);
        out << ij[0];
        if (grid.dim == 2) out << "," << ij[1];
        out << "," << format_double(x[0]);
        if (grid.dim == 2) out << "," << format_double(x[1]);
        out << "," << format_double(s.diameters[k]) << "\n";
    }
    return 0;
}

int cmd_superdiff(const RunConfig& cfg) {
    auto [sys, grid, c] = load(cfg);
    if (cfg.at.empty()) throw ConfigError("superdiff: --at is required");
    const Vec x = parse_vec(cfg.at, sys.dim, "--at");
    SolveParams sp;
    sp.dt = cfg.dt;
    sp.tol_fp = cfg.tol_fp;
    auto [u, rep] = solve_alpha_u(sys, c, grid, sp);
    const EstimatorParams est = EstimatorParams::defaults_for(sys, rep.alpha, grid, true);
    const CovectorPolytope poly = superdifferential(u, x, est);
    json verts = json::array();
    for (const Vec& v : poly.vertices) {
        json row = json::array();
        for (int i = 0; i < poly.dim; ++i) row.push_back(v[i]);
        verts.push_back(row);
    }
    write_json(out_file(cfg, "superdiff.json"),
               json{{"at", cfg.at},
                    {"alpha", rep.alpha},
                    {"vertices", verts},
                    {"diameter", poly.diameter()},
                    {"margin", regularity_margin(poly)},
                    {"regular", regularity_test(poly)}});
    return 0;
}

int cmd_char(const RunConfig& cfg) {
    auto [sys, grid, c] = load(cfg);
    if (cfg.from.empty()) throw ConfigError("char: --from is required");
    const Vec x0 = parse_vec(cfg.from, sys.dim, "--from");
    SolveParams sp;
    sp.dt = cfg.dt;
    sp.tol_fp = cfg.tol_fp;
    auto [u, rep] = solve_alpha_u(sys, c, grid, sp);
    CharParams cp;
    cp.estimator = EstimatorParams::defaults_for(sys, rep.alpha, grid, true);
    cp.zero_threshold = 0.05 * shell_scale(sys, rep.alpha);
    const Discretization disc = Discretization::defaults_for(sys, c, grid, cfg.dt);
    const double ds = cfg.ds > 0.0 ? cfg.ds : grid.h() / disc.v_cap;
    const GeneralizedCharacteristic chi = integrate_generalized(u, sys, x0, cfg.tau, ds, cp);
    std::ofstream out(out_file(cfg, "char.csv"));
    out << (grid.dim == 1 ? "s,x1,p1,v,diam\n" : "s,x1,x2,p1,p2,v,diam\n");
    for (const auto& n : chi.nodes) {
        out << format_double(n.s) << "," << format_double(n.x[0]);
        if (grid.dim == 2) out << "," << format_double(n.x[1]);
        out << "," << format_double(n.p_sel[0]);
        if (grid.dim == 2) out << "," << format_double(n.p_sel[1]);
        out << "," << format_double(n.v) << "," << format_double(n.diam) << "\n";
    }
    return 0;
}

int cmd_flow(const RunConfig& cfg) {
    auto [sys, grid, c] = load(cfg, false);
    if (cfg.from.empty() || cfg.p0.empty()) throw ConfigError("flow: --from and --p0 are required");
    const Vec x0 = parse_vec(cfg.from, sys.dim, "--from");
    const Vec p0 = parse_vec(cfg.p0, sys.dim, "--p0");
    const double dt = cfg.ds > 0.0 ? cfg.ds : 1e-3;
    const auto traj = hamiltonian_flow(sys, x0, p0, 0.0, cfg.tau, dt);
    std::ofstream out(out_file(cfg, "flow.csv"));
    out << (grid.dim == 1 ? "t,x1,p1,H\n" : "t,x1,x2,p1,p2,H\n");
    for (const auto& s : traj) {
        out << format_double(s.t) << "," << format_double(s.x[0]);
        if (grid.dim == 2) out << "," << format_double(s.x[1]);
        out << "," << format_double(s.p[0]);
        if (grid.dim == 2) out << "," << format_double(s.p[1]);
        out << "," << format_double(s.H) << "\n";
    }
    return 0;
}

BarrierData barrier_pipeline(const RunConfig& cfg, const MechanicalSystem& sys,
                             const TorusGrid& grid, const Vec& c, double* alpha_out) {
    SolveParams sp;
    sp.dt = cfg.dt;
    sp.tol_fp = cfg.tol_fp;
    auto [u, rep] = solve_alpha_u(sys, c, grid, sp);
    BarrierParams bp;
    bp.peierls.tol_h = cfg.tol_h;
    bp.peierls.dt_override = cfg.dt;
    bp.tol_aubry = cfg.tol_aubry;
    bp.tol_b = cfg.tol_b;
    if (alpha_out) *alpha_out = rep.alpha;
    return build_barrier_data(sys, c, grid, rep.alpha, bp);
}

int cmd_barrier(const RunConfig& cfg) {
    auto [sys, grid, c] = load(cfg);
    double alpha = 0.0;
    BarrierData bd = barrier_pipeline(cfg, sys, grid, c, &alpha);
    bd.barrier.write_csv(out_file(cfg, "barrier.csv").string());
    json aubry = json::array();
    for (size_t k = 0; k < bd.aubry_nodes.size(); ++k) {
        const Vec x = grid.node(bd.aubry_nodes[k]);
        json row{{"node", bd.aubry_nodes[k]}, {"h_xx", bd.aubry_values[k]}, {"x", json::array()}};
        for (int i = 0; i < grid.dim; ++i) row["x"].push_back(x[i]);
        aubry.push_back(row);
    }
    write_json(out_file(cfg, "aubry.json"), json{{"alpha", alpha}, {"nodes", aubry}});
    json classes = json::array();
    for (const auto& cl : bd.classes) classes.push_back(cl);
    write_json(out_file(cfg, "classes.json"), json{{"classes", classes}});
    // d_c over Aubry nodes
    std::ofstream dcsv(out_file(cfg, "dc.csv"));
    dcsv << "# d_c over aubry nodes, row/col order as aubry.json\n";
    for (int a : bd.aubry_nodes) {
        bool first = true;
        for (int b : bd.aubry_nodes) {
            if (!first) dcsv << ",";
            dcsv << format_double(mather_pseudometric(bd.h, a, b));
            first = false;
        }
        dcsv << "\n";
    }
    return 0;
}

int cmd_homoclinic(const RunConfig& cfg) {
    auto [sys, grid, c] = load(cfg);
    if (cfg.at.empty()) throw ConfigError("homoclinic: --at is required");
    const Vec x = parse_vec(cfg.at, sys.dim, "--at");
    double alpha = 0.0;
    BarrierData bd = barrier_pipeline(cfg, sys, grid, c, &alpha);
    const ScalarField* um = &bd.u_minus;
    const ScalarField* up = &bd.u_plus;
    std::pair<ScalarField, ScalarField> alt;
    if (!cfg.pair_base.empty()) {
        const Vec y = parse_vec(cfg.pair_base, sys.dim, "--pair-base");
        alt = conjugate_pair(bd.h, grid.nearest(y));
        alt.first.c = c;
        alt.first.alpha = alpha;
        alt.second.c = c;
        alt.second.alpha = alpha;
        um = &alt.first;
        up = &alt.second;
    }
    const EstimatorParams est = EstimatorParams::defaults_for(sys, alpha, grid, false);
    const double match_tol = derived_match_tol(cfg, sys, alpha);
    const auto p = common_reachable_gradient(*um, *up, x, match_tol, est);
    if (!p)
        throw ConvergenceError("homoclinic: no common reachable gradient at --at within match_tol");
    HomoclinicParams hp;
    hp.T = cfg.horizon;
    hp.cal_tol = cfg.cal_tol;
    hp.tol_shell = cfg.tol_shell;
    const HomoclinicOrbit orbit =
        build_homoclinic(sys, alpha, *um, *up, x, *p, grid, bd.aubry_nodes, bd.classes, hp);

    std::ofstream out(out_file(cfg, "homoclinic.csv"));
    out << (grid.dim == 1 ? "t,x1,p1,H\n" : "t,x1,x2,p1,p2,H\n");
    auto dump = [&](const std::vector<FlowState>& states, bool skip_first) {
        for (size_t i = skip_first ? 1 : 0; i < states.size(); ++i) {
            const auto& s = states[i];
            out << format_double(s.t) << "," << format_double(s.x[0]);
            if (grid.dim == 2) out << "," << format_double(s.x[1]);
            out << "," << format_double(s.p[0]);
            if (grid.dim == 2) out << "," << format_double(s.p[1]);
            out << "," << format_double(s.H) << "\n";
        }
    };
    dump(orbit.backward, false);
    dump(orbit.forward, true);
    json jp = json::array();
    for (int i = 0; i < grid.dim; ++i) jp.push_back(orbit.p[i]);
    write_json(out_file(cfg, "homoclinic.json"),
               json{{"alpha", alpha},
                    {"p", jp},
                    {"cal_defect_backward", orbit.cal_defect_backward},
                    {"cal_defect_forward", orbit.cal_defect_forward},
                    {"gluing_defect", orbit.gluing_defect},
                    {"energy_drift", orbit.energy_drift},
                    {"d_backward", orbit.d_backward},
                    {"d_forward", orbit.d_forward},
                    {"class_backward", orbit.class_backward},
                    {"class_forward", orbit.class_forward},
                    {"settled", orbit.settled}});
    return 0;
}

int cmd_validate(const RunConfig& cfg) {
    auto [sys, grid, c] = load(cfg);
    int failures = 0;
    auto check = [&](const std::string& name, bool ok) {
        std::cout << (ok ? "ok   " : "FAIL ") << name << "\n";
        if (!ok) ++failures;
    };

    SolveParams sp;
    sp.dt = cfg.dt;
    sp.tol_fp = cfg.tol_fp;
    auto [u, rep] = solve_alpha_u(sys, c, grid, sp);
    check("fixed-point residual <= tol_fp", rep.residual <= cfg.tol_fp);
    check("semiconcavity estimate finite", std::isfinite(rep.semiconcavity_estimate));

    // Legendre identity on a deterministic sample
    bool legendre = true;
    for (int i = 0; i < 1000; ++i) {
        const double a = static_cast<double>(i) / 1000.0;
        const Vec x = sys.dim == 1 ? Vec(a) : Vec(a, wrap(Vec(3.0 * a))[0]);
        const Vec p = sys.dim == 1 ? Vec(2.0 * a - 1.0) : Vec(2.0 * a - 1.0, 1.0 - a);
        const Vec q = matvec(sys.metric_at(x), p);
        if (std::abs(hamiltonian(sys, x, p) + lagrangian(sys, x, q) - dot(p, q)) > 1e-10)
            legendre = false;
    }
    check("legendre identity", legendre);

    // Energy shell residual over sampled nodes
    const EstimatorParams est = EstimatorParams::defaults_for(sys, rep.alpha, grid, true);
    double worst_shell = 0.0;
    int sampled = 0;
    const int stride = std::max(1, grid.size() / 128);
    for (int idx = 0; idx < grid.size(); idx += stride) {
        try {
            const CovectorPolytope poly = reachable_gradients(u, grid.node(idx), est);
            for (const Vec& v : poly.vertices)
                worst_shell = std::max(worst_shell,
                                       energy_shell_residual(sys, rep.alpha, grid.node(idx), v));
            ++sampled;
        } catch (const ConvergenceError&) {
        }
    }
    check("energy shell residual <= tol_shell (" + std::to_string(sampled) + " nodes)",
          worst_shell <= cfg.tol_shell);

    // Barrier invariants at a dense-table-friendly resolution; the Aubry
    // detection pathway is a critical-case tool, so supercritical runs skip it.
    if (grid.size() <= 4096 && !check_energy_condition(rep.alpha, sys)) {
        try {
            BarrierParams bp;
            bp.peierls.tol_h = cfg.tol_h;
            bp.tol_aubry = cfg.tol_aubry;
            bp.tol_b = cfg.tol_b;
            const BarrierData bd = build_barrier_data(sys, c, grid, rep.alpha, bp);
            check("barrier invariants (B* >= -tol_b, vanishes on Aubry)", true);
            double worst = 0.0;
            for (int a : bd.aubry_nodes)
                for (int b : bd.aubry_nodes)
                    worst = std::min(worst, mather_pseudometric(bd.h, a, b));
            check("d_c >= -2 tol_h", worst >= -2.0 * cfg.tol_h);
        } catch (const InvariantError& e) {
            check(std::string("barrier invariants (") + e.what() + ")", false);
        } catch (const ConvergenceError& e) {
            check(std::string("barrier convergence (") + e.what() + ")", false);
        }
    }

    if (failures) throw InvariantError(std::to_string(failures) + " validate check(s) failed");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weak KAM / Aubry-Mather toolkit for mechanical systems on the torus"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--system", cfg.system_path, "system definition JSON");
        sub->add_option("--c", cfg.c_args, "cohomology vector, e.g. 0.7,0 (repeatable for alpha)");
        sub->add_option("--grid", cfg.grid_n, "grid points per axis (power of two, 16..512)");
        sub->add_option("--dt", cfg.dt, "Lax-Oleinik time step (default: derived)");
        sub->add_option("--ds", cfg.ds, "arc / integrator step (default: derived)");
        sub->add_option("--tau", cfg.tau, "horizon for char/flow");
        sub->add_option("--T", cfg.horizon, "homoclinic branch length");
        sub->add_option("--at", cfg.at, "query point x[,y]");
        sub->add_option("--from", cfg.from, "start point x[,y]");
        sub->add_option("--p0", cfg.p0, "initial momentum for flow");
        sub->add_option("--pair-base", cfg.pair_base, "conjugate-pair base point");
        sub->add_option("--out", cfg.out_dir, "output directory");
        sub->add_option("--tol-fp", cfg.tol_fp, "fixed-point tolerance");
        sub->add_option("--tol-sing", cfg.tol_sing, "singularity diameter threshold");
        sub->add_option("--tol-shell", cfg.tol_shell, "energy-shell residual tolerance");
        sub->add_option("--tol-aubry", cfg.tol_aubry, "Aubry detection tolerance");
        sub->add_option("--tol-h", cfg.tol_h, "Peierls window tolerance");
        sub->add_option("--tol-b", cfg.tol_b, "barrier nonnegativity tolerance");
        sub->add_option("--cal-tol", cfg.cal_tol, "calibration defect tolerance");
        sub->add_option("--match-tol", cfg.match_tol, "common-gradient match tolerance");
    };

    struct Cmd {
        const char* name;
        const char* help;
        int (*fn)(const RunConfig&);
    };
    const std::vector<Cmd> cmds = {
        {"solve", "solve the cell problem: u_c, alpha, report", cmd_solve},
        {"alpha", "alpha(c) table over the given --c values", cmd_alpha},
        {"singular", "flag singular nodes of the lifted solution", cmd_singular},
        {"superdiff", "superdifferential estimate at --at", cmd_superdiff},
        {"char", "generalized characteristic from --from", cmd_char},
        {"flow", "Hamiltonian trajectory from --from, --p0", cmd_flow},
        {"barrier", "Peierls barrier, Aubry set, classes, B*", cmd_barrier},
        {"homoclinic", "glued homoclinic orbit through --at", cmd_homoclinic},
        {"validate", "run the invariant suite for a system", cmd_validate},
    };
    std::vector<std::pair<CLI::App*, int (*)(const RunConfig&)>> handlers;
    for (const auto& c : cmds) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        add_common(sub);
        handlers.emplace_back(sub, c.fn);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        check_config(cfg);
        for (const auto& [sub, fn] : handlers)
            if (sub->parsed()) return fn(cfg);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        return 3;
    } catch (const InvariantError& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
