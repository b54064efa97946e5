#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mesh.hpp"

namespace epap {

inline constexpr double kRhoMin = 1e-12;

class AdmissibilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EosParams {
    double gamma = 2.0;
};

struct PlasmaState {
    ScalarField rho;
    VectorField q;
    ScalarField phi;
    double lambda = 0.0;
    double time = 0.0;

    const Mesh& mesh() const { return rho.mesh; }
};

inline void check_density(double r) {
    if (!(r >= kRhoMin)) throw AdmissibilityError("density below positivity floor: " + std::to_string(r));
}

inline double pressure(double rho, const EosParams& eos) {
    check_density(rho);
    return std::pow(rho, eos.gamma);
}

inline ScalarField pressure(const ScalarField& rho, const EosParams& eos) {
    if (eos.gamma < 1.0) throw std::invalid_argument("isentropic exponent must be >= 1");
    ScalarField p(rho.mesh);
    for (std::size_t k = 0; k < rho.size(); ++k) p[k] = pressure(rho[k], eos);
    return p;
}

// Row m of F at one point: F_mn = q_m q_n / rho + p delta_mn.
inline double flux_component(double rho, const double* q, int m, int n, const EosParams& eos) {
    return q[m] * q[n] / rho + (m == n ? pressure(rho, eos) : 0.0);
}

// F as F[m][n], each a cell field.
inline std::vector<std::vector<ScalarField>> flux_tensor(const PlasmaState& s, const EosParams& eos) {
    const Mesh& g = s.mesh();
    const int d = g.dim;
    std::vector<std::vector<ScalarField>> F(d, std::vector<ScalarField>(d, ScalarField(g)));
    for (std::size_t k = 0; k < g.size(); ++k) {
        double q[2] = {s.q[0][k], d > 1 ? s.q[1][k] : 0.0};
        for (int m = 0; m < d; ++m)
            for (int n = 0; n < d; ++n) F[m][n][k] = flux_component(s.rho[k], q, m, n, eos);
    }
    return F;
}

inline VectorField velocity(const PlasmaState& s) {
    VectorField u(s.mesh());
    for (std::size_t k = 0; k < s.rho.size(); ++k) {
        check_density(s.rho[k]);
        for (int m = 0; m < u.dim(); ++m) u[m][k] = s.q[m][k] / s.rho[k];
    }
    return u;
}

// alpha = 2 max(|u_m^-|, |u_m^+|) from the reconstructed interface states.
inline double interface_wave_speed(double rho_l, double qm_l, double rho_r, double qm_r) {
    check_density(rho_l);
    check_density(rho_r);
    return 2.0 * std::max(std::fabs(qm_l / rho_l), std::fabs(qm_r / rho_r));
}

}  // namespace epap
