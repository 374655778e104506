#include "wkam/model.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "wkam/errors.hpp"

namespace wkam {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kMaxDegree = 8;
}  // namespace

double FourierSeries::eval(const Vec& x) const {
    double s = 0.0;
    for (const auto& t : terms) {
        double phase = 0.0;
        for (int i = 0; i < dim; ++i) phase += t.k[static_cast<size_t>(i)] * x[i];
        phase *= kTwoPi;
        s += t.c_cos * std::cos(phase) + t.c_sin * std::sin(phase);
    }
    return s;
}

Vec FourierSeries::grad(const Vec& x) const {
    Vec g = Vec::zero(dim);
    for (const auto& t : terms) {
        double phase = 0.0;
        for (int i = 0; i < dim; ++i) phase += t.k[static_cast<size_t>(i)] * x[i];
        phase *= kTwoPi;
        const double d = -t.c_cos * std::sin(phase) + t.c_sin * std::cos(phase);
        for (int i = 0; i < dim; ++i) g[i] += kTwoPi * t.k[static_cast<size_t>(i)] * d;
    }
    return g;
}

Mat FourierSeries::hess(const Vec& x) const {
    Mat h;
    h.dim = dim;
    h.a = {0.0, 0.0, 0.0, 0.0};
    for (const auto& t : terms) {
        double phase = 0.0;
        for (int i = 0; i < dim; ++i) phase += t.k[static_cast<size_t>(i)] * x[i];
        phase *= kTwoPi;
        const double d2 = -t.c_cos * std::cos(phase) - t.c_sin * std::sin(phase);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                h.at(i, j) += kTwoPi * kTwoPi * t.k[static_cast<size_t>(i)] *
                              t.k[static_cast<size_t>(j)] * d2;
    }
    return h;
}

FourierSeries FourierSeries::constant(int dim, double value) {
    FourierSeries f;
    f.dim = dim;
    if (value != 0.0) f.terms.push_back({{0, 0}, value, 0.0});
    return f;
}

bool FourierSeries::is_constant() const {
    for (const auto& t : terms)
        if (t.k[0] != 0 || t.k[1] != 0) return false;
    return true;
}

Mat MechanicalSystem::metric_at(const Vec& x) const {
    Mat m = Mat::identity(dim);
    if (identity_metric) return m;
    m.at(0, 0) = metric[0].eval(x);
    if (dim == 2) {
        m.at(0, 1) = m.at(1, 0) = metric[1].eval(x);
        m.at(1, 1) = metric[2].eval(x);
    }
    return m;
}

Mat MechanicalSystem::metric_inv_at(const Vec& x) const {
    if (identity_metric) return Mat::identity(dim);
    return inverse(metric_at(x));
}

Mat MechanicalSystem::metric_partial(const Vec& x, int axis) const {
    Mat m;
    m.dim = dim;
    m.a = {0.0, 0.0, 0.0, 0.0};
    if (identity_metric) return m;
    m.at(0, 0) = metric[0].grad(x)[axis];
    if (dim == 2) {
        m.at(0, 1) = m.at(1, 0) = metric[1].grad(x)[axis];
        m.at(1, 1) = metric[2].grad(x)[axis];
    }
    return m;
}

double MechanicalSystem::potential_at(const Vec& x) const { return potential.eval(x); }

Vec MechanicalSystem::potential_grad_at(const Vec& x) const { return potential.grad(x); }

Mat MechanicalSystem::potential_hess_at(const Vec& x) const { return potential.hess(x); }

double MechanicalSystem::max_potential(int probe_per_axis) const {
    double best = -std::numeric_limits<double>::infinity();
    const double h = 1.0 / probe_per_axis;
    if (dim == 1) {
        for (int i = 0; i < probe_per_axis; ++i) best = std::max(best, potential.eval(Vec(i * h)));
    } else {
        for (int i = 0; i < probe_per_axis; ++i)
            for (int j = 0; j < probe_per_axis; ++j)
                best = std::max(best, potential.eval(Vec(i * h, j * h)));
    }
    return best;
}

double MechanicalSystem::min_potential(int probe_per_axis) const {
    double best = std::numeric_limits<double>::infinity();
    const double h = 1.0 / probe_per_axis;
    if (dim == 1) {
        for (int i = 0; i < probe_per_axis; ++i) best = std::min(best, potential.eval(Vec(i * h)));
    } else {
        for (int i = 0; i < probe_per_axis; ++i)
            for (int j = 0; j < probe_per_axis; ++j)
                best = std::min(best, potential.eval(Vec(i * h, j * h)));
    }
    return best;
}

void MechanicalSystem::validate(int probe_per_axis) const {
    if (dim != 1 && dim != 2) throw ConfigError("system dim must be 1 or 2");
    auto check_degree = [](const FourierSeries& f) {
        for (const auto& t : f.terms)
            if (std::abs(t.k[0]) > kMaxDegree || std::abs(t.k[1]) > kMaxDegree)
                throw ConfigError("fourier degree exceeds 8 per axis");
    };
    check_degree(potential);
    for (const auto& f : metric) check_degree(f);
    if (!identity_metric) {
        const double h = 1.0 / probe_per_axis;
        const int nj = (dim == 2) ? probe_per_axis : 1;
        for (int i = 0; i < probe_per_axis; ++i) {
            for (int j = 0; j < nj; ++j) {
                Vec x = (dim == 1) ? Vec(i * h) : Vec(i * h, j * h);
                if (min_eigenvalue(metric_at(x)) <= 0.0)
                    throw ConfigError("metric A(x) is not positive definite on the probe grid");
            }
        }
    }
}

double hamiltonian(const MechanicalSystem& sys, const Vec& x, const Vec& p) {
    const Vec xw = wrap(x);
    return 0.5 * quad_form(sys.metric_at(xw), p) + sys.potential_at(xw);
}

double lagrangian(const MechanicalSystem& sys, const Vec& x, const Vec& q) {
    const Vec xw = wrap(x);
    return 0.5 * quad_form(sys.metric_inv_at(xw), q) - sys.potential_at(xw);
}

double lagrangian_c(const MechanicalSystem& sys, const Vec& c, const Vec& x, const Vec& q) {
    return lagrangian(sys, x, q) - dot(c, q);
}

Vec wrap(Vec x) {
    for (int i = 0; i < x.dim; ++i) {
        double d = x[i] - std::floor(x[i]);
        if (d >= 1.0) d = 0.0;  // seam: 1 - eps can round up to 1.0
        x[i] = d;
    }
    return x;
}

Vec min_displacement(const Vec& x, const Vec& y) {
    Vec d = Vec::zero(x.dim);
    for (int i = 0; i < x.dim; ++i) {
        double t = y[i] - x[i];
        t -= std::floor(t);
        if (t >= 1.0) t = 0.0;
        if (t > 0.5) t -= 1.0;  // exact 0.5 stays +0.5
        d[i] = t;
    }
    return d;
}

namespace {

FourierSeries parse_fourier(const nlohmann::json& rows, int dim, const char* what) {
    FourierSeries f;
    f.dim = dim;
    if (!rows.is_array()) throw ConfigError(std::string(what) + ": \"fourier\" must be an array");
    for (const auto& row : rows) {
        if (!row.is_array() || static_cast<int>(row.size()) != dim + 2)
            throw ConfigError(std::string(what) + ": each fourier row needs " +
                              std::to_string(dim + 2) + " entries [k..., cos_coeff, sin_coeff]");
        FourierSeries::Term t;
        for (int i = 0; i < dim; ++i) t.k[static_cast<size_t>(i)] = row[static_cast<size_t>(i)].get<int>();
        t.c_cos = row[static_cast<size_t>(dim)].get<double>();
        t.c_sin = row[static_cast<size_t>(dim + 1)].get<double>();
        f.terms.push_back(t);
    }
    return f;
}

}  // namespace

MechanicalSystem MechanicalSystem::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("system json parse error: ") + e.what());
    }
    MechanicalSystem sys;
    if (!j.contains("dim")) throw ConfigError("system json: missing \"dim\"");
    sys.dim = j.at("dim").get<int>();
    if (sys.dim != 1 && sys.dim != 2) throw ConfigError("system json: dim must be 1 or 2");
    sys.label = j.value("label", std::string{});

    if (j.contains("metric")) {
        const auto& m = j.at("metric");
        const std::string type = m.value("type", std::string("identity"));
        if (type == "identity") {
            sys.identity_metric = true;
        } else if (type == "fourier") {
            sys.identity_metric = false;
            for (auto& f : sys.metric) f = FourierSeries::constant(sys.dim, 0.0);
            sys.metric[0] = FourierSeries::constant(sys.dim, 1.0);
            sys.metric[2] = FourierSeries::constant(sys.dim, 1.0);
            if (!m.contains("entries")) throw ConfigError("system json: fourier metric needs \"entries\"");
            for (const auto& e : m.at("entries")) {
                const int i = e.at("i").get<int>();
                const int k = e.at("j").get<int>();
                if (i < 0 || i >= sys.dim || k < 0 || k >= sys.dim || i > k)
                    throw ConfigError("system json: metric entry indices must satisfy 0 <= i <= j < dim");
                const int slot = (i == 0 && k == 0) ? 0 : (i == 0 ? 1 : 2);
                sys.metric[static_cast<size_t>(slot)] = parse_fourier(e.at("fourier"), sys.dim, "metric");
            }
        } else {
            throw ConfigError("system json: metric type must be \"identity\" or \"fourier\"");
        }
    }

    if (j.contains("potential")) {
        const auto& p = j.at("potential");
        if (!p.contains("fourier")) throw ConfigError("system json: potential needs \"fourier\"");
        sys.potential = parse_fourier(p.at("fourier"), sys.dim, "potential");
    } else {
        sys.potential = FourierSeries::constant(sys.dim, 0.0);
    }

    sys.validate();
    return sys;
}

MechanicalSystem MechanicalSystem::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open system file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

}  // namespace wkam
