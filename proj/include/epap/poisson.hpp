#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mesh.hpp"

namespace epap {

// Compact: (f[k+1] - 2 f[k] + f[k-1]) / h^2 per direction.
// Centered: (f[k+2] - 2 f[k] + f[k-2]) / (4 h^2), i.e. central_diff applied
// twice. The steppers need the second one so that the discrete divergence of
// the corrected momentum sees exactly the Laplacian that was inverted.
enum class Laplacian { Compact, Centered };

class SolvabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PoissonProblem {
    Mesh mesh;
    double lambda2 = 1.0;
    ScalarField rhs;
    Laplacian stencil = Laplacian::Compact;
    double tol = 1e-12;
    int max_iter = 0;  // 0 picks a size-based cap
};

inline ScalarField apply_laplacian(const ScalarField& f, Laplacian stencil) {
    const Mesh& g = f.mesh;
    const int reach = stencil == Laplacian::Compact ? 1 : 2;
    ScalarField out(g);
    for (int m = 0; m < g.dim; ++m) {
        const double h2 = stencil == Laplacian::Compact ? g.dx[m] * g.dx[m] : 4.0 * g.dx[m] * g.dx[m];
        const int n = g.n[m];
        const bool periodic = g.bc[m] == PhiBc::Periodic;
        for (int i = 0; i < g.n[0]; ++i)
            for (int j = 0; j < g.n[1]; ++j) {
                const int k = m == 0 ? i : j;
                auto val = [&](int kk) {
                    if (kk < 0 || kk >= n) {
                        if (!periodic) return 0.0;
                        kk = detail::wrap(kk, n);
                    }
                    return m == 0 ? f.at(kk, j) : f.at(i, kk);
                };
                out.at(i, j) += (val(k + reach) - 2.0 * f.at(i, j) + val(k - reach)) / h2;
            }
    }
    return out;
}

namespace detail {

// A compact-stencil problem on a contiguous nx-by-ny block (ny = 1 in 1D).
struct Block {
    int dim = 1;
    int n[2] = {1, 1};
    double h[2] = {1.0, 1.0};
    PhiBc bc[2] = {PhiBc::Periodic, PhiBc::Periodic};
    std::size_t size() const { return static_cast<std::size_t>(n[0]) * n[1]; }
    bool singular() const {
        for (int m = 0; m < dim; ++m)
            if (bc[m] != PhiBc::Periodic) return false;
        return true;
    }
};

inline void block_apply(const Block& b, const std::vector<double>& x, std::vector<double>& y) {
    std::fill(y.begin(), y.end(), 0.0);
    for (int m = 0; m < b.dim; ++m) {
        const double ih2 = 1.0 / (b.h[m] * b.h[m]);
        const int n = b.n[m];
        const bool periodic = b.bc[m] == PhiBc::Periodic;
        for (int i = 0; i < b.n[0]; ++i)
            for (int j = 0; j < b.n[1]; ++j) {
                const int k = m == 0 ? i : j;
                auto val = [&](int kk) {
                    if (kk < 0 || kk >= n) {
                        if (!periodic) return 0.0;
                        kk = wrap(kk, n);
                    }
                    return m == 0 ? x[static_cast<std::size_t>(kk) * b.n[1] + j]
                                  : x[static_cast<std::size_t>(i) * b.n[1] + kk];
                };
                const std::size_t idx = static_cast<std::size_t>(i) * b.n[1] + j;
                y[idx] += (val(k + 1) - 2.0 * x[idx] + val(k - 1)) * ih2;
            }
    }
}

inline void remove_mean(std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    s /= static_cast<double>(v.size());
    for (double& x : v) x -= s;
}

// Thomas algorithm for a constant-coefficient tridiagonal system
// off*x[k-1] + diag*x[k] + off*x[k+1] = r[k], zero outside.
inline std::vector<double> thomas_constant(double diag, double off, const std::vector<double>& r) {
    const std::size_t n = r.size();
    std::vector<double> c(n), d(n), x(n);
    if (n == 0) return x;
    c[0] = off / diag;
    d[0] = r[0] / diag;
    for (std::size_t k = 1; k < n; ++k) {
        const double den = diag - off * c[k - 1];
        c[k] = off / den;
        d[k] = (r[k] - off * d[k - 1]) / den;
    }
    x[n - 1] = d[n - 1];
    for (std::size_t k = n - 1; k-- > 0;) x[k] = d[k] - c[k] * x[k + 1];
    return x;
}

inline std::vector<double> solve_1d(const Block& b, const std::vector<double>& rhs) {
    const double h2 = b.h[0] * b.h[0];
    const int n = b.n[0];
    if (b.bc[0] == PhiBc::DirichletZero) {
        std::vector<double> r(rhs);
        for (double& x : r) x *= h2;
        return thomas_constant(-2.0, 1.0, r);
    }
    // Periodic: pin x[0] = 0 and drop equation 0, which is redundant for a
    // mean-free right-hand side. What remains is the Dirichlet chain on 1..n-1.
    std::vector<double> r(rhs.begin() + 1, rhs.end());
    for (double& x : r) x *= h2;
    auto inner = thomas_constant(-2.0, 1.0, r);
    std::vector<double> x(n, 0.0);
    std::copy(inner.begin(), inner.end(), x.begin() + 1);
    remove_mean(x);
    return x;
}

// Banded Cholesky of -L for the all-Dirichlet 2D block (bandwidth n[1]).
inline std::vector<double> solve_2d_banded(const Block& b, const std::vector<double>& rhs) {
    const int nx = b.n[0], ny = b.n[1];
    const int N = nx * ny, bw = ny;
    const double ax = 1.0 / (b.h[0] * b.h[0]), ay = 1.0 / (b.h[1] * b.h[1]);
    // band[i][d] holds entry (i, i-d) of the factor, d = 0..bw.
    std::vector<double> band(static_cast<std::size_t>(N) * (bw + 1), 0.0);
    auto B = [&](int i, int d) -> double& { return band[static_cast<std::size_t>(i) * (bw + 1) + d]; };
    auto A = [&](int i, int j) {
        // entries of -L, j <= i
        if (i == j) return 2.0 * ax + 2.0 * ay;
        const int ii = i / ny, ij = i % ny, ji = j / ny, jj = j % ny;
        if (ii == ji && ij - jj == 1) return -ay;
        if (jj == ij && ii - ji == 1) return -ax;
        return 0.0;
    };
    for (int i = 0; i < N; ++i) {
        const int j0 = std::max(0, i - bw);
        for (int j = j0; j <= i; ++j) {
            double s = A(i, j);
            const int k0 = std::max(j0, std::max(0, j - bw));
            for (int k = k0; k < j; ++k) s -= B(i, i - k) * B(j, j - k);
            if (j == i) {
                if (s <= 0.0) throw ConvergenceError("banded Cholesky lost positive definiteness");
                B(i, 0) = std::sqrt(s);
            } else {
                B(i, i - j) = s / B(j, 0);
            }
        }
    }
    std::vector<double> y(N), x(N);
    for (int i = 0; i < N; ++i) {
        double s = -rhs[i];
        for (int k = std::max(0, i - bw); k < i; ++k) s -= B(i, i - k) * y[k];
        y[i] = s / B(i, 0);
    }
    for (int i = N - 1; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k <= std::min(N - 1, i + bw); ++k) s -= B(k, k - i) * x[k];
        x[i] = s / B(i, 0);
    }
    return x;
}

// Jacobi-preconditioned CG on -L. For the singular periodic block the
// iterates are kept in the mean-free subspace.
inline std::vector<double> solve_2d_pcg(const Block& b, const std::vector<double>& rhs, double tol,
                                        int max_iter) {
    const std::size_t N = b.size();
    const bool sing = b.singular();
    double diag = 0.0;
    for (int m = 0; m < b.dim; ++m) diag += 2.0 / (b.h[m] * b.h[m]);
    std::vector<double> x(N, 0.0), r(N), z(N), p(N), Ap(N);
    for (std::size_t k = 0; k < N; ++k) r[k] = -rhs[k];
    if (sing) remove_mean(r);
    auto dot = [](const std::vector<double>& u, const std::vector<double>& v) {
        double s = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k) s += u[k] * v[k];
        return s;
    };
    const double bnorm = std::sqrt(dot(r, r));
    if (bnorm == 0.0) return x;
    for (std::size_t k = 0; k < N; ++k) z[k] = r[k] / diag;
    p = z;
    double rz = dot(r, z);
    if (max_iter <= 0) max_iter = static_cast<int>(std::max<std::size_t>(1000, 20 * N));
    for (int it = 0; it < max_iter; ++it) {
        block_apply(b, p, Ap);
        for (double& v : Ap) v = -v;
        const double alpha = rz / dot(p, Ap);
        for (std::size_t k = 0; k < N; ++k) {
            x[k] += alpha * p[k];
            r[k] -= alpha * Ap[k];
        }
        if (sing) remove_mean(r);
        if (std::sqrt(dot(r, r)) <= tol * bnorm) {
            if (sing) remove_mean(x);
            return x;
        }
        for (std::size_t k = 0; k < N; ++k) z[k] = r[k] / diag;
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t k = 0; k < N; ++k) p[k] = z[k] + beta * p[k];
    }
    throw ConvergenceError("Poisson CG did not converge in " + std::to_string(max_iter) + " iterations");
}

inline std::vector<double> solve_block(const Block& b, std::vector<double> rhs, double tol, int max_iter) {
    if (b.singular()) remove_mean(rhs);
    if (b.dim == 1) return solve_1d(b, rhs);
    if (b.bc[0] == PhiBc::DirichletZero && b.bc[1] == PhiBc::DirichletZero) return solve_2d_banded(b, rhs);
    return solve_2d_pcg(b, rhs, tol, max_iter);
}

// Index chains along which the centered operator acts as a compact one.
inline std::vector<std::vector<int>> centered_chains(int n, PhiBc bc) {
    std::vector<std::vector<int>> chains;
    if (bc == PhiBc::DirichletZero) {
        for (int start = 0; start < 2 && start < n; ++start) {
            chains.emplace_back();
            for (int k = start; k < n; k += 2) chains.back().push_back(k);
        }
        return chains;
    }
    std::vector<bool> seen(n, false);
    for (int start = 0; start < n; ++start) {
        if (seen[start]) continue;
        chains.emplace_back();
        for (int k = start; !seen[k]; k = (k + 2) % n) {
            seen[k] = true;
            chains.back().push_back(k);
        }
    }
    return chains;
}

}  // namespace detail

// Backward error of a candidate solution, ||lambda2 L phi - rhs|| measured
// against ||rhs|| + lambda2 ||L|| ||phi||.
inline double poisson_backward_error(const PoissonProblem& p, const ScalarField& phi, const ScalarField& rhs) {
    auto lphi = apply_laplacian(phi, p.stencil);
    double r2 = 0.0, b2 = 0.0, f2 = 0.0, lnorm = 0.0;
    for (int m = 0; m < p.mesh.dim; ++m) lnorm += 4.0 / (p.mesh.dx[m] * p.mesh.dx[m]);
    for (std::size_t k = 0; k < rhs.size(); ++k) {
        const double r = p.lambda2 * lphi[k] - rhs[k];
        r2 += r * r;
        b2 += rhs[k] * rhs[k];
        f2 += phi[k] * phi[k];
    }
    const double den = std::sqrt(b2) + p.lambda2 * lnorm * std::sqrt(f2);
    return den == 0.0 ? 0.0 : std::sqrt(r2) / den;
}

inline ScalarField solve(const PoissonProblem& p) {
    const Mesh& g = p.mesh;
    if (!(p.lambda2 > 0.0)) throw std::invalid_argument("Poisson solve needs lambda2 > 0");
    if (!p.rhs.mesh.same_shape(g)) throw std::invalid_argument("Poisson rhs mesh mismatch");
    require_finite(p.rhs, "Poisson rhs");

    bool all_periodic = true;
    for (int m = 0; m < g.dim; ++m) all_periodic = all_periodic && g.bc[m] == PhiBc::Periodic;
    if (all_periodic) {
        const double mu = mean(p.rhs);
        if (std::fabs(mu) > 1e-10 * max_abs(p.rhs) + 1e-14)
            throw SolvabilityError("periodic Poisson rhs has non-zero mean " + std::to_string(mu));
    }

    ScalarField phi(g);
    ScalarField seen_rhs(g);  // rhs after the projections the solver applies
    const double tol = p.tol;

    std::vector<std::vector<int>> chains[2];
    for (int m = 0; m < 2; ++m) {
        if (m >= g.dim) {
            chains[m] = {{0}};
        } else if (p.stencil == Laplacian::Compact) {
            chains[m].emplace_back();
            for (int k = 0; k < g.n[m]; ++k) chains[m].back().push_back(k);
        } else {
            chains[m] = detail::centered_chains(g.n[m], g.bc[m]);
        }
    }
    const double widen = p.stencil == Laplacian::Compact ? 1.0 : 2.0;
    for (const auto& cx : chains[0])
        for (const auto& cy : chains[1]) {
            detail::Block b;
            b.dim = g.dim;
            b.n[0] = static_cast<int>(cx.size());
            b.n[1] = static_cast<int>(cy.size());
            for (int m = 0; m < g.dim; ++m) {
                b.h[m] = widen * g.dx[m];
                b.bc[m] = g.bc[m];
            }
            std::vector<double> r(b.size());
            for (std::size_t a = 0; a < cx.size(); ++a)
                for (std::size_t c = 0; c < cy.size(); ++c)
                    r[a * cy.size() + c] = p.rhs.at(cx[a], cy[c]) / p.lambda2;
            if (b.singular()) detail::remove_mean(r);
            auto x = detail::solve_block(b, r, tol, p.max_iter);
            for (std::size_t a = 0; a < cx.size(); ++a)
                for (std::size_t c = 0; c < cy.size(); ++c) {
                    phi.at(cx[a], cy[c]) = x[a * cy.size() + c];
                    seen_rhs.at(cx[a], cy[c]) = r[a * cy.size() + c] * p.lambda2;
                }
        }

    require_finite(phi, "Poisson solution");
    const double err = poisson_backward_error(p, phi, seen_rhs);
    if (err > tol) throw ConvergenceError("Poisson residual check failed: backward error " + std::to_string(err));
    return phi;
}

inline ScalarField solve_limit(const ScalarField& rhs, Laplacian stencil = Laplacian::Compact,
                               double tol = 1e-12) {
    PoissonProblem p;
    p.mesh = rhs.mesh;
    p.lambda2 = 1.0;
    p.rhs = rhs;
    p.stencil = stencil;
    p.tol = tol;
    return solve(p);
}

}  // namespace epap
