#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mesh.hpp"
#include "physics.hpp"

namespace epap {

enum class Limiter { Minmod, Central };

inline double minmod(double a, double b) {
    if (a * b <= 0.0) return 0.0;
    return a > 0.0 ? std::min(a, b) : std::max(a, b);
}

// Values on both sides of interface k+1/2 (stored at index k).
struct InterfaceValues {
    ScalarField minus, plus;
};

inline InterfaceValues reconstruct(const ScalarField& w, int m, Limiter lim = Limiter::Minmod) {
    w.mesh.check_direction(m);
    const Mesh& g = w.mesh;
    ScalarField slope(g);
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j) {
            const int ip = m == 0 ? detail::wrap(i + 1, g.n[0]) : i, im = m == 0 ? detail::wrap(i - 1, g.n[0]) : i;
            const int jp = m == 1 ? detail::wrap(j + 1, g.n[1]) : j, jm = m == 1 ? detail::wrap(j - 1, g.n[1]) : j;
            const double fwd = w.at(ip, jp) - w.at(i, j), bwd = w.at(i, j) - w.at(im, jm);
            slope.at(i, j) = lim == Limiter::Minmod ? minmod(fwd, bwd) : 0.5 * (fwd + bwd);
        }
    InterfaceValues out{ScalarField(g), ScalarField(g)};
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j) {
            const int ip = m == 0 ? detail::wrap(i + 1, g.n[0]) : i;
            const int jp = m == 1 ? detail::wrap(j + 1, g.n[1]) : j;
            out.minus.at(i, j) = w.at(i, j) + 0.5 * slope.at(i, j);
            out.plus.at(i, j) = w.at(ip, jp) - 0.5 * slope.at(ip, jp);
        }
    return out;
}

// Rusanov flux for the momentum rows in direction m, one VectorField entry per
// interface k+1/2. Density is not dissipated: its flux is central_mass_flux.
inline VectorField rusanov_momentum_flux(const PlasmaState& s, const EosParams& eos, int m,
                                         Limiter lim = Limiter::Minmod) {
    const Mesh& g = s.mesh();
    const int d = g.dim;
    auto r = reconstruct(s.rho, m, lim);
    std::vector<InterfaceValues> qr;
    for (int c = 0; c < d; ++c) qr.push_back(reconstruct(s.q[c], m, lim));
    VectorField F(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        double qm[2] = {qr[0].minus[k], d > 1 ? qr[1].minus[k] : 0.0};
        double qp[2] = {qr[0].plus[k], d > 1 ? qr[1].plus[k] : 0.0};
        const double rm = r.minus[k], rp = r.plus[k];
        const double alpha = interface_wave_speed(rm, qm[m], rp, qp[m]);
        for (int c = 0; c < d; ++c)
            F[c][k] = 0.5 * (flux_component(rm, qm, m, c, eos) + flux_component(rp, qp, m, c, eos)) -
                      0.5 * alpha * (qp[c] - qm[c]);
    }
    return F;
}

inline ScalarField central_mass_flux(const VectorField& q, int m) {
    const Mesh& g = q.mesh();
    g.check_direction(m);
    ScalarField G(g);
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j) {
            const int ip = m == 0 ? detail::wrap(i + 1, g.n[0]) : i;
            const int jp = m == 1 ? detail::wrap(j + 1, g.n[1]) : j;
            G.at(i, j) = 0.5 * (q[m].at(ip, jp) + q[m].at(i, j));
        }
    return G;
}

// (flux[k+1/2] - flux[k-1/2]) / dx_m with interface k+1/2 stored at k.
inline ScalarField interface_difference(const ScalarField& f, int m) {
    const Mesh& g = f.mesh;
    ScalarField out(g);
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j) {
            const int im = m == 0 ? detail::wrap(i - 1, g.n[0]) : i;
            const int jm = m == 1 ? detail::wrap(j - 1, g.n[1]) : j;
            out.at(i, j) = (f.at(i, j) - f.at(im, jm)) / g.dx[m];
        }
    return out;
}

inline ScalarField mass_flux_divergence(const VectorField& q) {
    ScalarField out(q.mesh());
    for (int m = 0; m < q.dim(); ++m) axpy(1.0, interface_difference(central_mass_flux(q, m), m), out);
    return out;
}

// Discrete div F, one entry per momentum component.
inline VectorField momentum_flux_divergence(const PlasmaState& s, const EosParams& eos,
                                            Limiter lim = Limiter::Minmod) {
    const Mesh& g = s.mesh();
    VectorField out(g);
    for (int m = 0; m < g.dim; ++m) {
        auto F = rusanov_momentum_flux(s, eos, m, lim);
        for (int c = 0; c < g.dim; ++c) axpy(1.0, interface_difference(F[c], m), out[c]);
    }
    return out;
}

// div F - (rho - 1) grad phi
inline VectorField explicit_momentum_rhs(const PlasmaState& s, const EosParams& eos,
                                         Limiter lim = Limiter::Minmod) {
    auto out = momentum_flux_divergence(s, eos, lim);
    for (int m = 0; m < s.mesh().dim; ++m) {
        auto dphi = central_diff(s.phi, m);
        for (std::size_t k = 0; k < dphi.size(); ++k) out[m][k] -= (s.rho[k] - 1.0) * dphi[k];
    }
    for (int m = 0; m < out.dim(); ++m) require_finite(out[m], "explicit momentum rhs");
    return out;
}

// Largest dt with dt * max_k max_m 2|u_m| / dx_m = nu; dt_max when at rest.
inline double cfl_dt(const PlasmaState& s, double nu, double dt_max) {
    const Mesh& g = s.mesh();
    double rate = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        check_density(s.rho[k]);
        for (int m = 0; m < g.dim; ++m) rate = std::max(rate, 2.0 * std::fabs(s.q[m][k] / s.rho[k]) / g.dx[m]);
    }
    if (rate == 0.0) return dt_max;
    return std::min(nu / rate, dt_max);
}

}  // namespace epap
