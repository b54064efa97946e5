#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "integrator.hpp"
#include "mesh.hpp"
#include "physics.hpp"

namespace epap {

struct Scenario {
    std::string name;
    Mesh mesh;
    double lambda = 1e-4;
    EosParams eos;
    double cfl = 0.45;
    double t_final = 0.1;
    // Perturbation parameters; which ones matter depends on the scenario.
    double delta = 0.0;
    double wavenumber = 1.0;
    // (x, y) -> rho, and (x, y) -> velocity component m
    std::function<double(double, double)> rho0;
    std::function<double(int, double, double)> u0;
};

inline Scenario qn_perturbation_1d(double delta2, int K, double lambda = 1e-4, int n = 100, double cfl = 0.45,
                                   double t_final = 0.1, double length = 1.0) {
    if (K <= 0) throw std::invalid_argument("wavenumber K must be a positive integer");
    Scenario s;
    s.name = "qn-perturbation";
    s.mesh = Mesh::make_1d(n, length);
    s.lambda = lambda;
    s.cfl = cfl;
    s.t_final = t_final;
    s.delta = delta2;
    s.wavenumber = K;
    const double L = length;
    s.rho0 = [](double, double) { return 1.0; };
    s.u0 = [=](int, double x, double) { return 1.0 + delta2 * std::cos(2.0 * K * std::numbers::pi * x / L); };
    return s;
}

// Well-prepared: the velocity perturbation is lambda^2.
inline Scenario case1(double lambda = 1e-4, int n = 100) {
    auto s = qn_perturbation_1d(lambda * lambda, 16, lambda, n, 0.45, 0.1);
    s.name = "case1";
    return s;
}

inline Scenario case2(double lambda = 1e-4, int n = 100) {
    auto s = qn_perturbation_1d(1e-2, 16, lambda, n, 0.25, 0.1);
    s.name = "case2";
    return s;
}

inline Scenario maxwellian_perturbation(double delta = 1e-2, double kappa = 2220.0, double lambda = 1e-4,
                                        int n = 100) {
    Scenario s;
    s.name = "maxwellian";
    s.mesh = Mesh::make_1d(n, 1.0);
    s.lambda = lambda;
    s.cfl = 0.45;
    s.t_final = 0.035;
    s.delta = delta;
    s.wavenumber = kappa;
    s.rho0 = [=](double x, double) { return 1.0 + delta * std::sin(kappa * std::numbers::pi * x); };
    s.u0 = [](int, double, double) { return 0.0; };
    return s;
}

inline std::vector<int> aoc_resolutions() { return {320, 640, 1280, 2560}; }

inline Scenario aoc_setup(double lambda, int n = 320, double t_final = 0.1) {
    auto s = qn_perturbation_1d(1e-2, 1, lambda, n, 0.45, t_final, 20.0);
    s.name = "aoc";
    return s;
}

inline Scenario qn_2d(double lambda, int K = 16, int n = 64) {
    Scenario s;
    s.name = "qn2d";
    s.mesh = Mesh::make_2d(n, n, 1.0, 1.0);
    s.lambda = lambda;
    s.cfl = 0.45;
    s.t_final = 0.5;
    s.delta = lambda;
    s.wavenumber = K;
    const double kp = K * std::numbers::pi;
    s.rho0 = [](double, double) { return 1.0; };
    s.u0 = [=](int m, double x, double y) {
        const double base = 1.0 + std::sin(kp * (x - y));
        return m == 0 ? base + lambda * std::sin(kp * (x + y)) : base + lambda * std::cos(kp * (x + y));
    };
    return s;
}

inline std::vector<std::string> scenario_names() { return {"case1", "case2", "maxwellian", "aoc", "qn2d"}; }

inline Scenario make_scenario(const std::string& name, double lambda, int n) {
    if (name == "case1") return case1(lambda, n);
    if (name == "case2") return case2(lambda, n);
    if (name == "maxwellian") return maxwellian_perturbation(1e-2, 2220.0, lambda, n);
    if (name == "aoc") return aoc_setup(lambda, n);
    if (name == "qn2d") return qn_2d(lambda, 16, n);
    throw std::invalid_argument("unknown scenario: " + name);
}

// rho0, q0 = rho0 u0, and phi0 from the Poisson equation.
inline PlasmaState initial_state(const Scenario& sc, const StepOptions& o = {}) {
    PlasmaState s;
    const Mesh& g = sc.mesh;
    s.lambda = sc.lambda;
    s.rho = ScalarField::from_function(g, [&](double x, double y) { return sc.rho0(x, y); });
    s.q = VectorField(g);
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j) {
            const double x = g.coord(0, i), y = g.dim > 1 ? g.coord(1, j) : 0.0;
            for (int m = 0; m < g.dim; ++m) s.q[m].at(i, j) = s.rho.at(i, j) * sc.u0(m, x, y);
        }
    for (double r : s.rho.v)
        if (!(r >= kRhoMin)) throw std::invalid_argument("scenario " + sc.name + " produced a non-positive density");
    s.phi = initial_potential(s, o);
    return s;
}

}  // namespace epap
