#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "epap/epap.hpp"

namespace epap::cli {

enum Exit { kOk = 0, kConfigError = 2, kInstability = 3, kSolverFailure = 4 };

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CommonArgs {
    std::string out = ".";
    std::string scenario = "case1";
    std::string scheme = "penalized";
    std::string tableau = "DP2A242";
    std::string tableau_file;
    std::optional<int> n;
    std::optional<double> lambda;
    std::optional<double> cfl;
    std::optional<double> t_final;
    double dt = 0.0;
    std::string bc_phi = "periodic";
    std::string laplacian = "centered";
    std::string limiter = "minmod";
    double gamma = 2.0;
    double dt_max = 1e-2;
    double blowup = 1e8;
    int record_every = 1;
};

struct ConvergenceArgs {
    CommonArgs c;
    std::vector<double> lambdas{1e-4, 1e-5, 1e-6};
    std::vector<int> ns{320, 640, 1280, 2560};
};

struct ApStudyArgs {
    CommonArgs c;
    std::vector<double> lambdas{1e-3, 1e-4};
    std::vector<std::string> tableaux{"DP1A242", "DP2A242", "ARS222"};
    bool well_prepared = false;
};

inline std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Shortest form that reads back to the same double, for column labels.
inline std::string label(double x) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

inline void add_common(CLI::App* app, CommonArgs& a) {
    app->add_option("--out", a.out, "output directory");
    app->add_option("--scenario", a.scenario, "case1 | case2 | maxwellian | aoc | qn2d");
    app->add_option("--scheme", a.scheme, "penalized | first-order | classical | limit");
    app->add_option("--tableau", a.tableau, "DP1A242 | DP2A242 | ARS222 | FirstOrder");
    app->add_option("--tableau-file", a.tableau_file, "tableau text file (overrides --tableau)");
    app->add_option("--n", a.n, "cells per direction");
    app->add_option("--lambda", a.lambda, "scaled Debye length");
    app->add_option("--cfl", a.cfl, "CFL number");
    app->add_option("--t-final", a.t_final, "final time");
    app->add_option("--dt", a.dt, "fixed time step (overrides the CFL rule)");
    app->add_option("--bc-phi", a.bc_phi, "periodic | dirichlet0");
    app->add_option("--laplacian", a.laplacian, "centered | compact");
    app->add_option("--limiter", a.limiter, "minmod | central");
    app->add_option("--gamma", a.gamma, "isentropic exponent");
    app->add_option("--dt-max", a.dt_max, "time step cap, used when the fluid is at rest");
    app->add_option("--blowup", a.blowup, "blow-up threshold on max |phi|");
    app->add_option("--record-every", a.record_every, "write a metrics row every k steps");
}

inline DoubleButcherTableau resolve_tableau(const CommonArgs& a, const std::string& name) {
    if (!a.tableau_file.empty()) {
        std::ifstream in(a.tableau_file);
        if (!in) throw ConfigError("cannot open tableau file " + a.tableau_file);
        try {
            return parse_tableau(in);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    try {
        return builtin(name);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

inline SchemeConfig resolve_scheme(const CommonArgs& a, const std::string& tableau_name) {
    SchemeConfig s;
    try {
        s.kind = parse_scheme(a.scheme);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    s.tableau = resolve_tableau(a, tableau_name);
    if (s.kind != SchemeKind::FirstOrder) {
        try {
            if (s.kind == SchemeKind::Classical) {
                if (!is_gsa(s.tableau)) throw std::invalid_argument("classical scheme needs a GSA tableau");
            } else {
                require_stepper_tableau(s.tableau);
            }
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (!(a.gamma >= 1.0)) throw ConfigError("gamma must be >= 1");
    s.eos.gamma = a.gamma;
    if (a.laplacian == "centered")
        s.options.laplacian = Laplacian::Centered;
    else if (a.laplacian == "compact")
        s.options.laplacian = Laplacian::Compact;
    else
        throw ConfigError("unknown laplacian: " + a.laplacian);
    if (a.limiter == "minmod")
        s.options.limiter = Limiter::Minmod;
    else if (a.limiter == "central")
        s.options.limiter = Limiter::Central;
    else
        throw ConfigError("unknown limiter: " + a.limiter);
    return s;
}

inline int default_n(const std::string& scenario) {
    if (scenario == "aoc") return 320;
    if (scenario == "qn2d") return 64;
    return 100;
}

inline Scenario resolve_scenario(const CommonArgs& a, std::optional<double> lambda = {}, std::optional<int> n = {}) {
    const double lam = lambda ? *lambda : a.lambda.value_or(a.scenario == "qn2d" ? 1e-2 : 1e-4);
    const int cells = n ? *n : a.n.value_or(default_n(a.scenario));
    if (!(lam >= 0.0)) throw ConfigError("lambda must be >= 0");
    Scenario sc;
    try {
        sc = make_scenario(a.scenario, lam, cells);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    sc.eos.gamma = a.gamma;
    if (a.cfl) sc.cfl = *a.cfl;
    if (a.t_final) sc.t_final = *a.t_final;
    if (!(sc.cfl > 0.0 && sc.cfl < 1.0)) throw ConfigError("cfl must lie in (0, 1)");
    if (!(sc.t_final >= 0.0)) throw ConfigError("t-final must be >= 0");
    if (a.bc_phi == "dirichlet0") {
        for (int m = 0; m < sc.mesh.dim; ++m) sc.mesh.bc[m] = PhiBc::DirichletZero;
    } else if (a.bc_phi != "periodic") {
        throw ConfigError("unknown bc-phi: " + a.bc_phi);
    }
    return sc;
}

inline RunOptions resolve_run_options(const CommonArgs& a, const Scenario& sc) {
    RunOptions ro;
    ro.t_final = sc.t_final;
    ro.cfl = sc.cfl;
    ro.dt_fixed = a.dt;
    ro.dt_max = a.dt_max;
    ro.blowup_threshold = a.blowup;
    ro.record_every = a.record_every;
    if (a.dt < 0.0) throw ConfigError("dt must be >= 0");
    if (a.record_every < 1) throw ConfigError("record-every must be >= 1");
    return ro;
}

// Starting state for a scheme: the limit scheme runs on rho = 1 with q = u0.
inline PlasmaState start_state(const Scenario& sc, const SchemeConfig& s) {
    if (s.kind == SchemeKind::Limit) {
        auto wp = sc;
        wp.rho0 = [](double, double) { return 1.0; };
        auto st = initial_state(wp, s.options);
        st.phi = ScalarField(sc.mesh);
        return st;
    }
    if (s.kind == SchemeKind::Classical && !(sc.lambda > 0.0)) throw ConfigError("classical scheme needs lambda > 0");
    return initial_state(sc, s.options);
}

inline std::string describe(const CommonArgs& a, const Scenario& sc, const SchemeConfig& s) {
    std::ostringstream o;
    o << "scenario=" << sc.name << " scheme=" << to_string(s.kind) << " tableau=" << s.tableau.name
      << " n=" << sc.mesh.n[0] << " dim=" << sc.mesh.dim << " lambda=" << fmt17(sc.lambda)
      << " cfl=" << fmt17(sc.cfl) << " t_final=" << fmt17(sc.t_final) << " dt=" << fmt17(a.dt)
      << " bc_phi=" << a.bc_phi << " laplacian=" << a.laplacian << " limiter=" << a.limiter
      << " gamma=" << fmt17(a.gamma) << " dt_max=" << fmt17(a.dt_max) << " blowup=" << fmt17(a.blowup)
      << " record_every=" << a.record_every;
    return o.str();
}

inline std::ofstream open_csv(const std::string& dir, const std::string& name) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    auto path = std::filesystem::path(dir) / name;
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path.string());
    return f;
}

inline void write_metrics(std::ostream& f, const std::string& config, const std::vector<ApMetrics>& series) {
    f << "# " << config << "\n";
    f << "t,dev_rho_l2,dev_rho_linf,div_u_l2,div_u_linf,phi_l2,phi_linf,mass,dt\n";
    for (const auto& m : series)
        f << fmt17(m.t) << ',' << fmt17(m.dev_rho_l2) << ',' << fmt17(m.dev_rho_linf) << ',' << fmt17(m.div_u_l2)
          << ',' << fmt17(m.div_u_linf) << ',' << fmt17(m.phi_l2) << ',' << fmt17(m.phi_linf) << ','
          << fmt17(m.mass) << ',' << fmt17(m.dt) << '\n';
}

inline void write_fields(std::ostream& f, const std::string& config, const PlasmaState& s) {
    const Mesh& g = s.mesh();
    f << "# " << config << "\n";
    if (g.dim == 1)
        f << "x,rho,q,u,phi\n";
    else
        f << "x,y,rho,q1,q2,u1,u2,phi\n";
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j) {
            const std::size_t k = g.index(i, j);
            f << fmt17(g.coord(0, i)) << ',';
            if (g.dim == 2) f << fmt17(g.coord(1, j)) << ',';
            f << fmt17(s.rho[k]) << ',';
            for (int m = 0; m < g.dim; ++m) f << fmt17(s.q[m][k]) << ',';
            for (int m = 0; m < g.dim; ++m) f << fmt17(s.q[m][k] / s.rho[k]) << ',';
            f << fmt17(s.phi[k]) << '\n';
        }
}

inline int exit_for(RunStatus st) {
    switch (st) {
        case RunStatus::Completed: return kOk;
        case RunStatus::Instability: return kInstability;
        default: return kSolverFailure;
    }
}

inline int cmd_run(const CommonArgs& a, std::ostream& log) {
    auto sc = resolve_scenario(a);
    auto scheme = resolve_scheme(a, a.tableau);
    auto ro = resolve_run_options(a, sc);
    PlasmaState st;
    try {
        st = start_state(sc, scheme);
    } catch (const StepError& e) {
        log << "initial Poisson solve failed: " << e.what() << "\n";
        return kSolverFailure;
    }
    auto rep = run(std::move(st), scheme, ro);
    const auto config = describe(a, sc, scheme);
    auto fm = open_csv(a.out, "metrics.csv");
    write_metrics(fm, config, rep.series);
    auto ff = open_csv(a.out, "fields.csv");
    write_fields(ff, config, rep.final_state);
    log << "steps=" << rep.steps << " t=" << fmt17(rep.final_state.time);
    if (rep.status != RunStatus::Completed)
        log << " status=" << (rep.status == RunStatus::Instability ? "instability" : "solver-failure")
            << " stage=" << rep.failed_stage << " (" << rep.message << ")";
    log << "\n";
    return exit_for(rep.status);
}

struct ConvergenceResult {
    double lambda;
    std::vector<ConvergenceRow> rows;
};

// EP run and limit-scheme reference on the same mesh; L2 error in phi at T.
inline double phi_error_vs_limit(const CommonArgs& a, double lambda, int n, RunStatus& status) {
    auto sc = resolve_scenario(a, lambda, n);
    auto ep = resolve_scheme(a, a.tableau);
    auto lim = ep;
    lim.kind = SchemeKind::Limit;
    auto ro = resolve_run_options(a, sc);
    auto r_ep = run(start_state(sc, ep), ep, ro);
    auto r_lim = run(start_state(sc, lim), lim, ro);
    status = r_ep.status != RunStatus::Completed ? r_ep.status : r_lim.status;
    return l2_error(r_ep.final_state.phi, r_lim.final_state.phi);
}

inline std::vector<ConvergenceResult> convergence_study(const ConvergenceArgs& a, RunStatus& worst) {
    if (a.ns.size() < 2) throw ConfigError("convergence needs at least two resolutions");
    for (std::size_t i = 1; i < a.ns.size(); ++i)
        if (a.ns[i] != 2 * a.ns[i - 1]) throw ConfigError("resolutions must double");
    if (a.lambdas.empty()) throw ConfigError("convergence needs at least one lambda");
    resolve_scheme(a.c, a.c.tableau);
    std::vector<std::vector<std::future<std::pair<double, RunStatus>>>> jobs(a.lambdas.size());
    for (std::size_t l = 0; l < a.lambdas.size(); ++l)
        for (int n : a.ns)
            jobs[l].push_back(std::async(std::launch::async, [&a, l, n] {
                RunStatus st;
                double e = phi_error_vs_limit(a.c, a.lambdas[l], n, st);
                return std::make_pair(e, st);
            }));
    std::vector<ConvergenceResult> out;
    worst = RunStatus::Completed;
    for (std::size_t l = 0; l < a.lambdas.size(); ++l) {
        std::vector<std::pair<int, double>> rows;
        for (std::size_t i = 0; i < a.ns.size(); ++i) {
            auto [e, st] = jobs[l][i].get();
            if (st != RunStatus::Completed && worst == RunStatus::Completed) worst = st;
            rows.emplace_back(a.ns[i], e);
        }
        out.push_back({a.lambdas[l], observed_orders(rows)});
    }
    return out;
}

inline int cmd_convergence(const ConvergenceArgs& a, std::ostream& log) {
    RunStatus worst;
    auto sc = resolve_scenario(a.c, a.lambdas.empty() ? 0.0 : a.lambdas.front(), a.ns.empty() ? 4 : a.ns.front());
    auto res = convergence_study(a, worst);
    auto f = open_csv(a.c.out, "convergence.csv");
    f << "# " << describe(a.c, sc, resolve_scheme(a.c, a.c.tableau)) << " reference=limit\n";
    f << "n";
    for (const auto& r : res) f << ",error_lambda_" << label(r.lambda) << ",aoc_lambda_" << label(r.lambda);
    f << '\n';
    for (std::size_t i = 0; i < a.ns.size(); ++i) {
        f << a.ns[i];
        for (const auto& r : res) f << ',' << fmt17(r.rows[i].error) << ',' << fmt17(r.rows[i].order);
        f << '\n';
    }
    for (const auto& r : res) {
        log << "lambda=" << r.lambda << ":";
        for (const auto& row : r.rows) log << " N=" << row.n_cells << " e=" << row.error << " aoc=" << row.order;
        log << "\n";
    }
    return exit_for(worst);
}

struct ApSample {
    std::string tableau;
    double lambda = 0.0;
    double rho_dev[2] = {NAN, NAN};
    double div_u[2] = {NAN, NAN};
    double phi1 = NAN;  // max |phi^(1)| in the first step
    bool blown_up = false;
};

inline ApSample ap_sample(const CommonArgs& c, const std::string& tableau, double lambda, bool well_prepared) {
    auto sc = resolve_scenario(c, lambda);
    if (well_prepared) {
        auto wp = case1(lambda, sc.mesh.n[0]);
        wp.cfl = sc.cfl;
        wp.mesh = sc.mesh;
        sc = wp;
    }
    auto scheme = resolve_scheme(c, tableau);
    auto ro = resolve_run_options(c, sc);
    ApSample out;
    out.tableau = scheme.tableau.name;
    out.lambda = lambda;
    auto st = start_state(sc, scheme);
    StageWorkspace ws;
    for (int k = 0; k < 2; ++k) {
        try {
            const double dt = ro.dt_fixed > 0.0 ? ro.dt_fixed : cfl_dt(st, ro.cfl, ro.dt_max);
            st = step(st, scheme, dt, &ws);
        } catch (const std::exception&) {
            out.blown_up = true;
            break;
        }
        if (k == 0) out.phi1 = max_abs(ws.phi.front());
        auto m = ap_metrics(st, ro.blowup_threshold);
        out.rho_dev[k] = m.dev_rho_linf;
        out.div_u[k] = m.div_u_linf;
        if (m.blown_up) {
            out.blown_up = true;
            break;
        }
    }
    return out;
}

inline std::vector<ApSample> ap_study(const ApStudyArgs& a) {
    if (a.lambdas.size() < 2) throw ConfigError("ap-study needs at least two lambda values");
    for (const auto& t : a.tableaux) resolve_scheme(a.c, t);
    std::vector<std::future<ApSample>> jobs;
    for (const auto& t : a.tableaux)
        for (double l : a.lambdas)
            jobs.push_back(std::async(std::launch::async, [&a, t, l] { return ap_sample(a.c, t, l, a.well_prepared); }));
    std::vector<ApSample> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

inline int cmd_ap_study(const ApStudyArgs& a, std::ostream& log) {
    auto samples = ap_study(a);
    auto sc = resolve_scenario(a.c, a.lambdas.front());
    const auto config = describe(a.c, sc, resolve_scheme(a.c, a.tableaux.front())) +
                        " well_prepared=" + (a.well_prepared ? "1" : "0");
    auto f = open_csv(a.c.out, "ap_study.csv");
    f << "# " << config << "\n";
    f << "tableau,lambda,rho_dev_step1,rho_dev_step2,div_u_step1,div_u_step2,phi1_step1,blown_up\n";
    for (const auto& s : samples)
        f << s.tableau << ',' << fmt17(s.lambda) << ',' << fmt17(s.rho_dev[0]) << ',' << fmt17(s.rho_dev[1]) << ','
          << fmt17(s.div_u[0]) << ',' << fmt17(s.div_u[1]) << ',' << fmt17(s.phi1) << ',' << (s.blown_up ? 1 : 0)
          << '\n';
    // Ratios between consecutive lambda values: deviations as larger/smaller
    // lambda, phi^(1) inverted so that 1/lambda^2 growth also reads as ~100.
    auto g = open_csv(a.c.out, "ap_ratios.csv");
    g << "# " << config << "\n";
    g << "tableau,lambda_large,lambda_small,rho_ratio_step1,rho_ratio_step2,div_ratio_step1,div_ratio_step2,phi1_"
         "inverse_ratio\n";
    const std::size_t nl = a.lambdas.size();
    for (std::size_t t = 0; t < a.tableaux.size(); ++t)
        for (std::size_t l = 0; l + 1 < nl; ++l) {
            const auto& hi = samples[t * nl + l];
            const auto& lo = samples[t * nl + l + 1];
            g << hi.tableau << ',' << fmt17(hi.lambda) << ',' << fmt17(lo.lambda) << ','
              << fmt17(hi.rho_dev[0] / lo.rho_dev[0]) << ',' << fmt17(hi.rho_dev[1] / lo.rho_dev[1]) << ','
              << fmt17(hi.div_u[0] / lo.div_u[0]) << ',' << fmt17(hi.div_u[1] / lo.div_u[1]) << ','
              << fmt17(lo.phi1 / hi.phi1) << '\n';
            log << hi.tableau << " lambda " << hi.lambda << "/" << lo.lambda
                << ": rho ratio after 2 steps " << hi.rho_dev[1] / lo.rho_dev[1] << ", div ratio "
                << hi.div_u[1] / lo.div_u[1] << ", phi1 inverse ratio " << lo.phi1 / hi.phi1 << "\n";
        }
    return kOk;
}

struct App {
    CLI::App app{"Euler-Poisson solver with penalized IMEX Runge-Kutta time stepping", "epap"};
    CommonArgs run_args;
    ConvergenceArgs conv_args;
    ApStudyArgs ap_args;
    CLI::App* run_cmd = nullptr;
    CLI::App* conv_cmd = nullptr;
    CLI::App* ap_cmd = nullptr;

    App() {
        app.set_config("--config", "", "key = value config file with [run], [convergence], [ap-study] sections");
        app.require_subcommand(1);
        app.fallthrough();  // lets --config follow the subcommand
        app.allow_config_extras(CLI::config_extras_mode::error);
        run_cmd = app.add_subcommand("run", "run one scenario and write fields.csv and metrics.csv");
        add_common(run_cmd, run_args);
        conv_cmd = app.add_subcommand("convergence", "error in phi against the quasi-neutral limit scheme");
        conv_args.c.scenario = "aoc";
        add_common(conv_cmd, conv_args.c);
        conv_cmd->add_option("--lambdas", conv_args.lambdas, "lambda values")->delimiter(',');
        conv_cmd->add_option("--ns", conv_args.ns, "doubling sequence of cell counts")->delimiter(',');
        ap_cmd = app.add_subcommand("ap-study", "scaling of the asymptotic constraints with lambda");
        ap_args.c.scenario = "case2";
        add_common(ap_cmd, ap_args.c);
        ap_cmd->add_option("--lambdas", ap_args.lambdas, "lambda values, decreasing")->delimiter(',');
        ap_cmd->add_option("--tableaux", ap_args.tableaux, "tableau names")->delimiter(',');
        ap_cmd->add_flag("--well-prepared", ap_args.well_prepared, "use well-prepared data");
    }

    int dispatch(std::ostream& log, std::ostream& err) {
        try {
            if (run_cmd->parsed()) return cmd_run(run_args, log);
            if (conv_cmd->parsed()) return cmd_convergence(conv_args, log);
            if (ap_cmd->parsed()) return cmd_ap_study(ap_args, log);
        } catch (const ConfigError& e) {
            err << "config error: " << e.what() << "\n";
            return kConfigError;
        } catch (const StepError& e) {
            err << "solver failure: " << e.what() << "\n";
            return kSolverFailure;
        }
        return kConfigError;
    }
};

inline int main_entry(int argc, const char* const* argv, std::ostream& log, std::ostream& err) {
    App a;
    try {
        a.app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return a.app.exit(e, log, err) == 0 ? kOk : kConfigError;
    }
    return a.dispatch(log, err);
}

}  // namespace epap::cli
