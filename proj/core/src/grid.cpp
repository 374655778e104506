#include "wkam/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "wkam/errors.hpp"

namespace wkam {

TorusGrid::TorusGrid(int dim_, int n_) : dim(dim_), n(n_) {
    if (dim != 1 && dim != 2) throw ConfigError("grid dim must be 1 or 2");
    if (n < 8) throw ConfigError("grid needs at least 8 points per axis");
}

int TorusGrid::nearest(const Vec& x) const {
    const Vec w = wrap(x);
    const int i = wrap_axis(static_cast<int>(std::lround(w[0] * n)));
    if (dim == 1) return index(i);
    const int j = wrap_axis(static_cast<int>(std::lround(w[1] * n)));
    return index(i, j);
}

std::string to_string(FieldKind k) {
    switch (k) {
        case FieldKind::backward_solution: return "backward_solution";
        case FieldKind::forward_solution: return "forward_solution";
        case FieldKind::lift: return "lift";
        case FieldKind::barrier: return "barrier";
        case FieldKind::generic: return "generic";
    }
    return "generic";
}

ScalarField::ScalarField(const TorusGrid& g, double fill)
    : grid(g), values(static_cast<size_t>(g.size()), fill), c(Vec::zero(g.dim)) {}

double ScalarField::interp(const Vec& x) const {
    const Vec w = wrap(x);
    const int n = grid.n;
    const double h = grid.h();
    const double fx = w[0] / h;
    const int i0 = static_cast<int>(std::floor(fx));
    const double tx = fx - i0;
    if (grid.dim == 1) {
        const double a = at(grid.index(i0));
        const double b = at(grid.index(i0 + 1));
        return a + tx * (b - a);
    }
    const double fy = w[1] / h;
    const int j0 = static_cast<int>(std::floor(fy));
    const double ty = fy - j0;
    const double v00 = at(grid.index(i0, j0));
    const double v10 = at(grid.index(i0 + 1, j0));
    const double v01 = at(grid.index(i0, j0 + 1));
    const double v11 = at(grid.index(i0 + 1, j0 + 1));
    const double a = v00 + tx * (v10 - v00);
    const double b = v01 + tx * (v11 - v01);
    (void)n;
    return a + ty * (b - a);
}

double ScalarField::min_value() const { return *std::min_element(values.begin(), values.end()); }
double ScalarField::max_value() const { return *std::max_element(values.begin(), values.end()); }

void ScalarField::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << "# N=" << grid.n << " dim=" << grid.dim << " kind=" << to_string(kind)
        << " alpha=" << format_double(alpha) << " residual=" << format_double(residual) << "\n";
    if (grid.dim == 1) {
        out << "i,x1,value\n";
        for (int i = 0; i < grid.size(); ++i)
            out << i << "," << format_double(grid.node(i)[0]) << "," << format_double(at(i)) << "\n";
    } else {
        out << "i,j,x1,x2,value\n";
        for (int idx = 0; idx < grid.size(); ++idx) {
            const auto ij = grid.coords(idx);
            const Vec x = grid.node(idx);
            out << ij[0] << "," << ij[1] << "," << format_double(x[0]) << ","
                << format_double(x[1]) << "," << format_double(at(idx)) << "\n";
        }
    }
}

}  // namespace wkam
