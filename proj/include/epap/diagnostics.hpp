#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mesh.hpp"
#include "physics.hpp"

namespace epap {

struct ApMetrics {
    double t = 0.0;
    double dev_rho_l2 = 0.0, dev_rho_linf = 0.0;
    double div_u_l2 = 0.0, div_u_linf = 0.0;
    double phi_l2 = 0.0, phi_linf = 0.0;
    double mass = 0.0;
    double dt = 0.0;
    bool blown_up = false;
};

inline double l2_norm(const ScalarField& f) {
    double s = 0.0;
    for (double x : f.v) s += x * x;
    return std::sqrt(s * f.mesh.cell_volume());
}

inline double linf_norm(const ScalarField& f) {
    double m = 0.0;
    for (double x : f.v) {
        if (!std::isfinite(x)) return std::numeric_limits<double>::infinity();
        m = std::fmax(m, std::fabs(x));
    }
    return m;
}

inline double total_mass(const ScalarField& rho) {
    double s = 0.0;
    for (double x : rho.v) s += x;
    return s * rho.mesh.cell_volume();
}

inline ApMetrics ap_metrics(const PlasmaState& s, double blowup_threshold = 1e8) {
    ApMetrics a;
    a.t = s.time;
    const Mesh& g = s.mesh();
    const bool finite = all_finite(s.rho) && all_finite(s.q) && all_finite(s.phi);
    ScalarField dev(g);
    for (std::size_t k = 0; k < g.size(); ++k) dev[k] = s.rho[k] - 1.0;
    a.dev_rho_l2 = l2_norm(dev);
    a.dev_rho_linf = linf_norm(dev);
    a.phi_l2 = l2_norm(s.phi);
    a.phi_linf = linf_norm(s.phi);
    a.mass = total_mass(s.rho);
    bool admissible = finite;
    if (finite) {
        for (double r : s.rho.v) admissible = admissible && r >= kRhoMin;
    }
    if (admissible) {
        VectorField u(g);
        for (std::size_t k = 0; k < g.size(); ++k)
            for (int m = 0; m < g.dim; ++m) u[m][k] = s.q[m][k] / s.rho[k];
        auto div = central_divergence(u);
        a.div_u_l2 = l2_norm(div);
        a.div_u_linf = linf_norm(div);
    } else {
        a.div_u_l2 = a.div_u_linf = std::numeric_limits<double>::quiet_NaN();
    }
    a.blown_up = !admissible || !(a.phi_linf <= blowup_threshold);
    return a;
}

inline double l2_error(const ScalarField& a, const ScalarField& b) {
    if (!a.mesh.same_shape(b.mesh)) throw std::invalid_argument("l2_error: mesh mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s * a.mesh.cell_volume());
}

// Node values of a fine field at the nodes of a nested coarse mesh.
inline ScalarField restrict_to(const ScalarField& fine, const Mesh& coarse) {
    const Mesh& g = fine.mesh;
    if (g.dim != coarse.dim) throw std::invalid_argument("restrict_to: dimension mismatch");
    int r[2] = {1, 1};
    for (int m = 0; m < g.dim; ++m) {
        if (g.n[m] % coarse.n[m] != 0 || std::fabs(g.length[m] - coarse.length[m]) > 1e-12 * g.length[m])
            throw std::invalid_argument("restrict_to: meshes do not nest");
        r[m] = g.n[m] / coarse.n[m];
    }
    ScalarField out(coarse);
    for (int i = 0; i < coarse.n[0]; ++i)
        for (int j = 0; j < coarse.n[1]; ++j) out.at(i, j) = fine.at(i * r[0], j * r[1]);
    return out;
}

struct ConvergenceRow {
    int n_cells = 0;
    double error = 0.0;
    double order = std::numeric_limits<double>::quiet_NaN();  // relative to the previous row
};

inline std::vector<ConvergenceRow> observed_orders(const std::vector<std::pair<int, double>>& rows) {
    std::vector<ConvergenceRow> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ConvergenceRow c{rows[i].first, rows[i].second};
        if (i > 0) {
            if (rows[i].first != 2 * rows[i - 1].first)
                throw std::invalid_argument("observed_orders: resolutions must double");
            const double e0 = rows[i - 1].second, e1 = rows[i].second;
            if (e0 > 0.0 && e1 > 0.0) c.order = std::log2(e0 / e1);
        }
        out.push_back(c);
    }
    return out;
}

}  // namespace epap
