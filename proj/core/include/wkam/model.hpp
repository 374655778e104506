#pragma once

#include <string>
#include <vector>

#include "wkam/linalg.hpp"

namespace wkam {

// Truncated Fourier series on the torus, degree <= 8 per axis. Keeping A and V
// in this form makes values and derivatives exact and smooth; no interpolation
// error enters the derivative-heavy diagnostics.
struct FourierSeries {
    struct Term {
        std::array<int, 2> k{0, 0};
        double c_cos = 0.0;
        double c_sin = 0.0;
    };
    int dim = 1;
    std::vector<Term> terms;

    double eval(const Vec& x) const;
    Vec grad(const Vec& x) const;
    Mat hess(const Vec& x) const;

    static FourierSeries constant(int dim, double value);
    bool is_constant() const;
};

struct MechanicalSystem {
    int dim = 1;
    bool identity_metric = true;
    // Symmetric metric entries: [0] = a11, [1] = a12 (=a21), [2] = a22.
    std::array<FourierSeries, 3> metric{};
    FourierSeries potential;
    std::string label;

    Mat metric_at(const Vec& x) const;
    Mat metric_inv_at(const Vec& x) const;
    // Entrywise partial derivative dA/dx_axis.
    Mat metric_partial(const Vec& x, int axis) const;
    double potential_at(const Vec& x) const;
    Vec potential_grad_at(const Vec& x) const;
    Mat potential_hess_at(const Vec& x) const;

    double max_potential(int probe_per_axis = 256) const;
    double min_potential(int probe_per_axis = 256) const;

    // Throws ConfigError unless A(x) is SPD on a dense probe grid and the
    // Fourier degrees are within bounds.
    void validate(int probe_per_axis = 64) const;

    static MechanicalSystem from_json_text(const std::string& text);
    static MechanicalSystem from_json_file(const std::string& path);
};

// H(x, p) = 1/2 <A(x) p, p> + V(x)
double hamiltonian(const MechanicalSystem& sys, const Vec& x, const Vec& p);

// L(x, q) = 1/2 <A^{-1}(x) q, q> - V(x)
double lagrangian(const MechanicalSystem& sys, const Vec& x, const Vec& q);

// L_c(x, q) = L(x, q) - <c, q>
double lagrangian_c(const MechanicalSystem& sys, const Vec& c, const Vec& x, const Vec& q);

// Representative in [0,1)^n. Idempotent, including at the seam.
Vec wrap(Vec x);

// Representative of y - x mod Z^n with smallest norm; per-component ties at
// half a period resolve toward +1/2.
Vec min_displacement(const Vec& x, const Vec& y);

}  // namespace wkam
