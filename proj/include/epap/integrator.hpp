#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "diagnostics.hpp"
#include "mesh.hpp"
#include "physics.hpp"
#include "poisson.hpp"
#include "spatial.hpp"
#include "tableaux.hpp"

namespace epap {

enum class SchemeKind { Penalized, FirstOrder, Classical, Limit };

inline const char* to_string(SchemeKind k) {
    switch (k) {
        case SchemeKind::Penalized: return "penalized";
        case SchemeKind::FirstOrder: return "first-order";
        case SchemeKind::Classical: return "classical";
        default: return "limit";
    }
}

inline SchemeKind parse_scheme(const std::string& s) {
    if (s == "penalized") return SchemeKind::Penalized;
    if (s == "first-order") return SchemeKind::FirstOrder;
    if (s == "classical") return SchemeKind::Classical;
    if (s == "limit") return SchemeKind::Limit;
    throw std::invalid_argument("unknown scheme: " + s);
}

struct StepOptions {
    Laplacian laplacian = Laplacian::Centered;
    Limiter limiter = Limiter::Minmod;
    double poisson_tol = 1e-12;
};

// Base for failures inside a step; stage is 1-based, 0 when not stage-bound.
class StepError : public std::runtime_error {
public:
    StepError(const std::string& what, int stage) : std::runtime_error(what), stage(stage) {}
    int stage;
};

class InstabilityError : public StepError {
public:
    using StepError::StepError;
};

class SolverError : public StepError {
public:
    using StepError::StepError;
};

struct StageWorkspace {
    std::vector<ScalarField> rho, phi;
    std::vector<VectorField> q;
    ScalarField rho_hat;
    VectorField q_hat;

    void reset() {
        rho.clear();
        phi.clear();
        q.clear();
    }
};

namespace detail {

inline ScalarField poisson_with(const ScalarField& rhs, double lambda2, const StepOptions& o, int stage) {
    PoissonProblem p;
    p.mesh = rhs.mesh;
    p.lambda2 = lambda2;
    p.rhs = rhs;
    p.stencil = o.laplacian;
    p.tol = o.poisson_tol;
    try {
        return solve(p);
    } catch (const NonFiniteError& e) {
        throw InstabilityError(e.what(), stage);
    } catch (const std::exception& e) {
        throw SolverError(e.what(), stage);
    }
}

// The periodic problems below are charge-neutral in exact arithmetic. Check
// that on the unscaled charge, then drop the round-off mean so the amplified
// right-hand side passes the solver's own solvability test.
inline void neutralize(ScalarField& charge, double scale, int stage) {
    bool periodic = true;
    for (int m = 0; m < charge.mesh.dim; ++m) periodic = periodic && charge.mesh.bc[m] == PhiBc::Periodic;
    if (!periodic) return;
    const double mu = mean(charge);
    if (!std::isfinite(mu)) throw InstabilityError("non-finite charge", stage);
    if (std::fabs(mu) > 1e-10 * scale + 1e-12)
        throw SolverError("periodic problem is not charge neutral (mean " + std::to_string(mu) + ")", stage);
    for (double& x : charge.v) x -= mu;
}

inline void check_stage(const ScalarField& rho, const VectorField& q, const ScalarField& phi, int stage) {
    if (!all_finite(rho) || !all_finite(q) || !all_finite(phi))
        throw InstabilityError("non-finite stage value", stage);
    for (double r : rho.v)
        if (!(r >= kRhoMin)) throw InstabilityError("density lost positivity", stage);
}

template <class F>
auto guard(int stage, F&& f) {
    try {
        return f();
    } catch (const StepError&) {
        throw;
    } catch (const AdmissibilityError& e) {
        throw InstabilityError(e.what(), stage);
    } catch (const NonFiniteError& e) {
        throw InstabilityError(e.what(), stage);
    }
}

inline PlasmaState stage_state(const ScalarField& rho, const VectorField& q, const ScalarField& phi) {
    PlasmaState s;
    s.rho = rho;
    s.q = q;
    s.phi = phi;
    return s;
}

}  // namespace detail

inline void require_stepper_tableau(const DoubleButcherTableau& t) {
    if (!is_gsa(t)) throw std::invalid_argument("tableau " + t.name + " is not globally stiffly accurate");
    if (classify(t) == TableauType::Other)
        throw std::invalid_argument("tableau " + t.name + " is neither type A nor type CK");
}

inline PlasmaState step_penalized(const PlasmaState& s, const DoubleButcherTableau& tab, const EosParams& eos,
                                  double dt, const StepOptions& o = {}, StageWorkspace* ws = nullptr) {
    require_stepper_tableau(tab);
    const Mesh& g = s.mesh();
    const int d = g.dim;
    const double lam2 = s.lambda * s.lambda;
    StageWorkspace local;
    StageWorkspace& w = ws ? *ws : local;
    w.reset();
    std::vector<ScalarField> divq;
    std::vector<VectorField> gradphi, gex;

    for (int i = 0; i < tab.s; ++i) {
        const int stage = i + 1;
        detail::guard(stage, [&] {
            ScalarField rho_hat = s.rho;
            VectorField q_hat = s.q;
            for (int j = 0; j < i; ++j) {
                const double a = tab.aim(i, j), at = tab.aex(i, j);
                if (a != 0.0) axpy(-dt * a, divq[j], rho_hat);
                for (int m = 0; m < d; ++m) {
                    if (at != 0.0) axpy(-dt * at, gex[j][m], q_hat[m]);
                    if (a != 0.0) axpy(dt * a, gradphi[j][m], q_hat[m]);
                }
            }
            const double aii = tab.aim(i, i);
            ScalarField rho_i(g), phi_i;
            VectorField q_i = q_hat;
            if (aii != 0.0) {
                const double denom = lam2 + dt * dt * aii * aii;
                auto div_hat = central_divergence(q_hat);
                ScalarField B(g), rhs(g);
                for (std::size_t k = 0; k < g.size(); ++k) B[k] = rho_hat[k] - 1.0 - dt * aii * div_hat[k];
                detail::neutralize(B, max_abs(rho_hat) + dt * std::fabs(aii) * max_abs(div_hat), stage);
                for (std::size_t k = 0; k < g.size(); ++k) {
                    rho_i[k] = 1.0 + lam2 / denom * B[k];
                    rhs[k] = B[k] / denom;
                }
                phi_i = detail::poisson_with(rhs, 1.0, o, stage);
                for (int m = 0; m < d; ++m) axpy(dt * aii, central_diff(phi_i, m), q_i[m]);
            } else {
                rho_i = rho_hat;
                if (lam2 > 0.0) {
                    ScalarField rhs(g);
                    for (std::size_t k = 0; k < g.size(); ++k) rhs[k] = rho_i[k] - 1.0;
                    detail::neutralize(rhs, max_abs(rho_i), stage);
                    phi_i = detail::poisson_with(rhs, lam2, o, stage);
                } else {
                    phi_i = s.phi;
                }
            }
            detail::check_stage(rho_i, q_i, phi_i, stage);
            if (i + 1 < tab.s) {
                divq.push_back(central_divergence(q_i));
                gradphi.push_back(central_gradient(phi_i));
                gex.push_back(explicit_momentum_rhs(detail::stage_state(rho_i, q_i, phi_i), eos, o.limiter));
            }
            w.rho_hat = std::move(rho_hat);
            w.q_hat = std::move(q_hat);
            w.rho.push_back(std::move(rho_i));
            w.q.push_back(std::move(q_i));
            w.phi.push_back(std::move(phi_i));
            return 0;
        });
    }
    PlasmaState out;
    out.rho = w.rho.back();
    out.q = w.q.back();
    out.phi = w.phi.back();
    out.lambda = s.lambda;
    out.time = s.time + dt;
    return out;
}

// The three closed-form updates of the first-order scheme, written out
// directly. grad rho . grad phi is realised as the product-rule remainder of
// the discrete operators, so this agrees with the staged form to round-off.
inline PlasmaState step_first_order(const PlasmaState& s, const EosParams& eos, double dt,
                                    const StepOptions& o = {}) {
    const Mesh& g = s.mesh();
    const int d = g.dim;
    if (!(s.lambda > 0.0)) throw std::invalid_argument("step_first_order needs lambda > 0");
    for (int m = 0; m < d; ++m)
        if (g.bc[m] != PhiBc::Periodic) throw std::invalid_argument("step_first_order is written for periodic phi");
    const double lam2 = s.lambda * s.lambda;
    const double denom = lam2 + dt * dt;
    return detail::guard(1, [&] {
        auto fdiv = momentum_flux_divergence(s, eos, o.limiter);
        auto div_q = central_divergence(s.q);
        auto div2F = central_divergence(fdiv);
        auto grad_phi = central_gradient(s.phi);
        VectorField flux(g);
        ScalarField dev(g);
        for (std::size_t k = 0; k < g.size(); ++k) dev[k] = s.rho[k] - 1.0;
        for (int m = 0; m < d; ++m)
            for (std::size_t k = 0; k < g.size(); ++k) flux[m][k] = dev[k] * grad_phi[m][k];
        auto div_flux = central_divergence(flux);
        auto lap_phi = apply_laplacian(s.phi, o.laplacian);
        ScalarField rho(g), rhs(g);
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double grad_rho_grad_phi = div_flux[k] - dev[k] * lap_phi[k];
            const double bracket = dev[k] - dt * div_q[k] + dt * dt * div2F[k] - dt * dt * grad_rho_grad_phi;
            rho[k] = 1.0 + lam2 / denom * bracket - dt * dt / denom * dev[k] * dev[k];
            rhs[k] = bracket / denom - dt * dt / denom * dev[k] * dev[k] / lam2;
        }
        for (double& x : rhs.v) x *= lam2;
        detail::neutralize(rhs, max_abs(rho), 1);
        PlasmaState out;
        out.rho = rho;
        out.phi = detail::poisson_with(rhs, lam2, o, 1);
        out.q = s.q;
        for (int m = 0; m < d; ++m) {
            auto gp = central_diff(out.phi, m);
            for (std::size_t k = 0; k < g.size(); ++k)
                out.q[m][k] += -dt * fdiv[m][k] + dt * dev[k] * grad_phi[m][k] + dt * gp[k];
        }
        detail::check_stage(out.rho, out.q, out.phi, 1);
        out.lambda = s.lambda;
        out.time = s.time + dt;
        return out;
    });
}

// Unpenalized baseline: the whole force rho grad phi is explicit and the
// Poisson equation is imposed on each stage density.
inline PlasmaState step_classical(const PlasmaState& s, const DoubleButcherTableau& tab, const EosParams& eos,
                                  double dt, const StepOptions& o = {}, StageWorkspace* ws = nullptr) {
    if (!is_gsa(tab)) throw std::invalid_argument("tableau " + tab.name + " is not globally stiffly accurate");
    if (!(s.lambda > 0.0)) throw std::invalid_argument("classical scheme needs lambda > 0");
    const Mesh& g = s.mesh();
    const int d = g.dim;
    const double lam2 = s.lambda * s.lambda;
    StageWorkspace local;
    StageWorkspace& w = ws ? *ws : local;
    w.reset();
    std::vector<ScalarField> divq;
    std::vector<VectorField> force;
    for (int i = 0; i < tab.s; ++i) {
        const int stage = i + 1;
        detail::guard(stage, [&] {
            VectorField q_i = s.q;
            for (int j = 0; j < i; ++j)
                if (tab.aex(i, j) != 0.0)
                    for (int m = 0; m < d; ++m) axpy(-dt * tab.aex(i, j), force[j][m], q_i[m]);
            divq.push_back(central_divergence(q_i));
            ScalarField rho_i = s.rho;
            for (int j = 0; j <= i; ++j)
                if (tab.aim(i, j) != 0.0) axpy(-dt * tab.aim(i, j), divq[j], rho_i);
            ScalarField rhs(g);
            for (std::size_t k = 0; k < g.size(); ++k) rhs[k] = rho_i[k] - 1.0;
            detail::neutralize(rhs, max_abs(rho_i), stage);
            auto phi_i = detail::poisson_with(rhs, lam2, o, stage);
            detail::check_stage(rho_i, q_i, phi_i, stage);
            if (i + 1 < tab.s) {
                auto f = momentum_flux_divergence(detail::stage_state(rho_i, q_i, phi_i), eos, o.limiter);
                for (int m = 0; m < d; ++m) {
                    auto gp = central_diff(phi_i, m);
                    for (std::size_t k = 0; k < g.size(); ++k) f[m][k] -= rho_i[k] * gp[k];
                }
                force.push_back(std::move(f));
            }
            w.rho.push_back(std::move(rho_i));
            w.q.push_back(std::move(q_i));
            w.phi.push_back(std::move(phi_i));
            return 0;
        });
    }
    PlasmaState out;
    out.rho = w.rho.back();
    out.q = w.q.back();
    out.phi = w.phi.back();
    out.lambda = s.lambda;
    out.time = s.time + dt;
    return out;
}

// Discrete incompressible limit: rho = 1 and q is the velocity. Each implicit
// stage projects onto the discrete solenoidal fields, which is the stage
// elliptic relation for phi when the previous stages are divergence-free.
inline PlasmaState step_limit(const PlasmaState& s, const DoubleButcherTableau& tab, const EosParams& eos,
                              double dt, const StepOptions& o = {}, StageWorkspace* ws = nullptr) {
    require_stepper_tableau(tab);
    const Mesh& g = s.mesh();
    const int d = g.dim;
    const ScalarField one(g, 1.0);
    StageWorkspace local;
    StageWorkspace& w = ws ? *ws : local;
    w.reset();
    std::vector<VectorField> conv, gradphi;
    for (int i = 0; i < tab.s; ++i) {
        const int stage = i + 1;
        detail::guard(stage, [&] {
            VectorField q_hat = s.q;
            for (int j = 0; j < i; ++j)
                for (int m = 0; m < d; ++m) {
                    if (tab.aex(i, j) != 0.0) axpy(-dt * tab.aex(i, j), conv[j][m], q_hat[m]);
                    if (tab.aim(i, j) != 0.0) axpy(dt * tab.aim(i, j), gradphi[j][m], q_hat[m]);
                }
            const double aii = tab.aim(i, i);
            VectorField q_i = q_hat;
            ScalarField phi_i;
            if (aii != 0.0) {
                auto div_hat = central_divergence(q_hat);
                detail::neutralize(div_hat, max_abs(div_hat), stage);
                for (double& x : div_hat.v) x /= -dt * aii;
                phi_i = detail::poisson_with(div_hat, 1.0, o, stage);
                for (int m = 0; m < d; ++m) axpy(dt * aii, central_diff(phi_i, m), q_i[m]);
            } else {
                phi_i = s.phi;
            }
            detail::check_stage(one, q_i, phi_i, stage);
            if (i + 1 < tab.s) {
                conv.push_back(momentum_flux_divergence(detail::stage_state(one, q_i, phi_i), eos, o.limiter));
                gradphi.push_back(central_gradient(phi_i));
            }
            w.rho.push_back(one);
            w.q.push_back(std::move(q_i));
            w.phi.push_back(std::move(phi_i));
            return 0;
        });
    }
    PlasmaState out;
    out.rho = one;
    out.q = w.q.back();
    out.phi = w.phi.back();
    out.lambda = s.lambda;
    out.time = s.time + dt;
    return out;
}

// Discrete Leray projection of a velocity field (rho = 1).
inline VectorField project_solenoidal(const VectorField& u, const StepOptions& o = {}) {
    auto div = central_divergence(u);
    detail::neutralize(div, max_abs(div), 0);
    auto psi = detail::poisson_with(div, 1.0, o, 0);
    VectorField out = u;
    for (int m = 0; m < u.dim(); ++m) axpy(-1.0, central_diff(psi, m), out[m]);
    return out;
}

struct SchemeConfig {
    SchemeKind kind = SchemeKind::Penalized;
    DoubleButcherTableau tableau = dp2a242();
    EosParams eos;
    StepOptions options;
};

inline PlasmaState step(const PlasmaState& s, const SchemeConfig& c, double dt, StageWorkspace* ws = nullptr) {
    switch (c.kind) {
        case SchemeKind::Penalized: return step_penalized(s, c.tableau, c.eos, dt, c.options, ws);
        case SchemeKind::FirstOrder: return step_penalized(s, first_order(), c.eos, dt, c.options, ws);
        case SchemeKind::Classical: return step_classical(s, c.tableau, c.eos, dt, c.options, ws);
        default: return step_limit(s, c.tableau, c.eos, dt, c.options, ws);
    }
}

// Fresh phi from the Poisson equation for the given state (the limit scheme
// keeps whatever phi it is handed).
inline ScalarField initial_potential(const PlasmaState& s, const StepOptions& o = {}) {
    ScalarField rhs(s.mesh());
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = s.rho[k] - 1.0;
    detail::neutralize(rhs, max_abs(s.rho), 0);
    if (s.lambda > 0.0) return detail::poisson_with(rhs, s.lambda * s.lambda, o, 0);
    return ScalarField(s.mesh());
}

enum class RunStatus { Completed, Instability, SolverFailure };

struct RunOptions {
    double t_final = 0.1;
    double cfl = 0.45;
    double dt_fixed = 0.0;  // > 0 overrides the CFL rule
    double dt_max = 1e-2;
    double blowup_threshold = 1e8;
    int record_every = 1;
    long max_steps = 100000000;
};

struct RunReport {
    std::vector<ApMetrics> series;
    PlasmaState final_state;
    long steps = 0;
    RunStatus status = RunStatus::Completed;
    std::string message;
    int failed_stage = 0;
};

template <class OnStep>
RunReport run(PlasmaState state, const SchemeConfig& scheme, const RunOptions& ro, OnStep&& on_step) {
    RunReport rep;
    rep.series.push_back(ap_metrics(state, ro.blowup_threshold));
    const double T = ro.t_final;
    const double eps = 1e-12 * std::max(1.0, std::fabs(T));
    long since_record = 0;
    bool last_recorded = true;
    ApMetrics last;
    while (state.time < T - eps && rep.steps < ro.max_steps) {
        double dt = 0.0;
        try {
            dt = ro.dt_fixed > 0.0 ? ro.dt_fixed : cfl_dt(state, ro.cfl, ro.dt_max);
        } catch (const AdmissibilityError& e) {
            rep.status = RunStatus::Instability;
            rep.message = e.what();
            break;
        }
        if (state.time + dt > T - eps) dt = T - state.time;
        try {
            state = step(state, scheme, dt);
        } catch (const InstabilityError& e) {
            rep.status = RunStatus::Instability;
            rep.message = e.what();
            rep.failed_stage = e.stage;
            break;
        } catch (const SolverError& e) {
            rep.status = RunStatus::SolverFailure;
            rep.message = e.what();
            rep.failed_stage = e.stage;
            break;
        }
        ++rep.steps;
        auto m = ap_metrics(state, ro.blowup_threshold);
        m.dt = dt;
        on_step(state, m);
        last = m;
        last_recorded = false;
        if (++since_record >= ro.record_every || m.blown_up) {
            rep.series.push_back(m);
            since_record = 0;
            last_recorded = true;
        }
        if (m.blown_up) {
            rep.status = RunStatus::Instability;
            rep.message = "blow-up detected at t = " + std::to_string(state.time);
            break;
        }
    }
    if (!last_recorded) rep.series.push_back(last);
    rep.final_state = std::move(state);
    return rep;
}

inline RunReport run(PlasmaState state, const SchemeConfig& scheme, const RunOptions& ro) {
    return run(std::move(state), scheme, ro, [](const PlasmaState&, const ApMetrics&) {});
}

}  // namespace epap
