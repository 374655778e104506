#pragma once

#include <string>
#include <vector>

#include "wkam/linalg.hpp"
#include "wkam/model.hpp"

namespace wkam {

// Uniform periodic grid on [0,1)^n, n in {1,2}.
struct TorusGrid {
    int dim = 1;
    int n = 16;  // points per axis, >= 8

    TorusGrid() = default;
    TorusGrid(int dim_, int n_);

    double h() const { return 1.0 / n; }
    int size() const { return dim == 1 ? n : n * n; }

    int wrap_axis(int i) const {
        i %= n;
        return i < 0 ? i + n : i;
    }
    int index(int i) const { return wrap_axis(i); }
    int index(int i, int j) const { return wrap_axis(i) * n + wrap_axis(j); }
    std::array<int, 2> coords(int idx) const {
        if (dim == 1) return {idx, 0};
        return {idx / n, idx % n};
    }
    Vec node(int idx) const {
        const auto ij = coords(idx);
        if (dim == 1) return Vec(ij[0] * h());
        return Vec(ij[0] * h(), ij[1] * h());
    }
    // Index of the grid node nearest to x (after wrapping).
    int nearest(const Vec& x) const;

    bool operator==(const TorusGrid&) const = default;
};

enum class FieldKind { backward_solution, forward_solution, lift, barrier, generic };

std::string to_string(FieldKind k);

// Grid-sampled periodic function with solve metadata.
struct ScalarField {
    TorusGrid grid;
    std::vector<double> values;
    Vec c = Vec::zero(1);
    double alpha = 0.0;
    FieldKind kind = FieldKind::generic;
    double residual = 0.0;

    ScalarField() = default;
    explicit ScalarField(const TorusGrid& g, double fill = 0.0);

    double at(int idx) const { return values[static_cast<size_t>(idx)]; }
    double& at(int idx) { return values[static_cast<size_t>(idx)]; }

    // Periodic multilinear interpolation of the stored values.
    double interp(const Vec& x) const;

    double min_value() const;
    double max_value() const;

    void write_csv(const std::string& path) const;
};

// Lift to the covering space: v(x) = u(wrap(x)) + <c, x>. The linear part uses
// the unwrapped coordinate, so v(x + e_k) - v(x) = c_k exactly.
struct LiftedField {
    const ScalarField* u = nullptr;
    Vec c = Vec::zero(1);

    double operator()(const Vec& x) const { return u->interp(wrap(x)) + dot(c, x); }
    double at_node(int idx) const { return u->at(idx) + dot(c, u->grid.node(idx)); }
};

}  // namespace wkam
