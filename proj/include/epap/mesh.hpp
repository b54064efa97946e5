#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace epap {

enum class PhiBc { Periodic, DirichletZero };

class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Mesh {
    int dim = 1;
    std::array<int, 2> n{1, 1};
    std::array<double, 2> length{1.0, 1.0};
    std::array<double, 2> dx{1.0, 1.0};
    // Only the Poisson solve looks at this; hydro fields are always periodic.
    std::array<PhiBc, 2> bc{PhiBc::Periodic, PhiBc::Periodic};

    static Mesh make_1d(int n, double length, PhiBc bc = PhiBc::Periodic) {
        return make(1, {n, 1}, {length, 1.0}, {bc, PhiBc::Periodic});
    }
    static Mesh make_2d(int nx, int ny, double lx, double ly,
                        PhiBc bc = PhiBc::Periodic) {
        return make(2, {nx, ny}, {lx, ly}, {bc, bc});
    }
    static Mesh make(int dim, std::array<int, 2> n, std::array<double, 2> length,
                     std::array<PhiBc, 2> bc) {
        if (dim != 1 && dim != 2) throw std::invalid_argument("mesh dimension must be 1 or 2");
        Mesh m;
        m.dim = dim;
        for (int d = 0; d < 2; ++d) {
            if (d >= dim) {
                n[d] = 1;
                length[d] = 1.0;
                bc[d] = PhiBc::Periodic;
            } else {
                if (n[d] < 4) throw std::invalid_argument("mesh needs at least 4 cells per direction");
                if (!(length[d] > 0.0)) throw std::invalid_argument("mesh length must be positive");
            }
            m.n[d] = n[d];
            m.length[d] = length[d];
            m.dx[d] = length[d] / n[d];
            m.bc[d] = bc[d];
        }
        return m;
    }

    std::size_t size() const { return static_cast<std::size_t>(n[0]) * n[1]; }
    double cell_volume() const { return dim == 1 ? dx[0] : dx[0] * dx[1]; }
    // Row-major: the last direction is contiguous.
    std::size_t stride(int m) const { return (dim == 2 && m == 0) ? static_cast<std::size_t>(n[1]) : 1; }
    std::size_t index(int i, int j = 0) const { return static_cast<std::size_t>(i) * n[1] + j; }
    double coord(int m, int i) const { return i * dx[m]; }

    bool same_shape(const Mesh& o) const {
        return dim == o.dim && n == o.n && length == o.length;
    }
    void check_direction(int m) const {
        if (m < 0 || m >= dim) throw std::invalid_argument("direction out of range: " + std::to_string(m));
    }
};

struct ScalarField {
    Mesh mesh;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const Mesh& m, double value = 0.0) : mesh(m), v(m.size(), value) {}

    std::size_t size() const { return v.size(); }
    double& operator[](std::size_t k) { return v[k]; }
    double operator[](std::size_t k) const { return v[k]; }
    double& at(int i, int j = 0) { return v[mesh.index(i, j)]; }
    double at(int i, int j = 0) const { return v[mesh.index(i, j)]; }

    template <class F>
    static ScalarField from_function(const Mesh& m, F&& f) {
        ScalarField out(m);
        for (int i = 0; i < m.n[0]; ++i)
            for (int j = 0; j < m.n[1]; ++j) {
                const double x = m.coord(0, i), y = m.dim > 1 ? m.coord(1, j) : 0.0;
                if constexpr (std::is_invocable_v<F, double, double>) {
                    out.at(i, j) = f(x, y);
                } else {
                    if (m.dim != 1) throw std::invalid_argument("one-argument initializer on a 2D mesh");
                    out.at(i, j) = f(x);
                }
            }
        return out;
    }
};

struct VectorField {
    std::vector<ScalarField> c;

    VectorField() = default;
    explicit VectorField(const Mesh& m, double value = 0.0) : c(m.dim, ScalarField(m, value)) {}

    int dim() const { return static_cast<int>(c.size()); }
    const Mesh& mesh() const { return c.at(0).mesh; }
    ScalarField& operator[](int m) { return c[m]; }
    const ScalarField& operator[](int m) const { return c[m]; }
};

inline bool all_finite(const ScalarField& f) {
    for (double x : f.v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const VectorField& f) {
    for (const auto& c : f.c)
        if (!all_finite(c)) return false;
    return true;
}

inline const ScalarField& require_finite(const ScalarField& f, const char* what) {
    if (!all_finite(f)) throw NonFiniteError(std::string("non-finite value in ") + what);
    return f;
}

namespace detail {

inline int wrap(int i, int n) {
    i %= n;
    return i < 0 ? i + n : i;
}

// out_k = sum_o w_o f_{k + o e_m}, periodic in direction m.
template <std::size_t K>
ScalarField periodic_stencil(const ScalarField& f, int m, const std::array<int, K>& off,
                             const std::array<double, K>& w) {
    const Mesh& g = f.mesh;
    ScalarField out(g);
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j) {
            double s = 0.0;
            for (std::size_t o = 0; o < K; ++o) {
                int ii = i, jj = j;
                if (m == 0)
                    ii = wrap(i + off[o], g.n[0]);
                else
                    jj = wrap(j + off[o], g.n[1]);
                s += w[o] * f.at(ii, jj);
            }
            out.at(i, j) = s;
        }
    return out;
}

}  // namespace detail

inline ScalarField central_diff(const ScalarField& f, int m) {
    f.mesh.check_direction(m);
    const double h = f.mesh.dx[m];
    auto out = detail::periodic_stencil<2>(f, m, {1, -1}, {1.0 / (2 * h), -1.0 / (2 * h)});
    return require_finite(out, "central_diff");
}

inline ScalarField second_diff(const ScalarField& f, int m) {
    f.mesh.check_direction(m);
    const double h2 = f.mesh.dx[m] * f.mesh.dx[m];
    auto out = detail::periodic_stencil<3>(f, m, {1, 0, -1}, {1.0 / h2, -2.0 / h2, 1.0 / h2});
    return require_finite(out, "second_diff");
}

inline ScalarField central_divergence(const VectorField& v) {
    const Mesh& g = v.mesh();
    if (v.dim() != g.dim) throw std::invalid_argument("vector field has wrong number of components");
    ScalarField out(g);
    for (int m = 0; m < g.dim; ++m) {
        if (!v[m].mesh.same_shape(g)) throw std::invalid_argument("component mesh mismatch");
        auto d = central_diff(v[m], m);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += d[k];
    }
    return out;
}

inline VectorField central_gradient(const ScalarField& f) {
    VectorField g;
    for (int m = 0; m < f.mesh.dim; ++m) g.c.push_back(central_diff(f, m));
    return g;
}

inline double mean(const ScalarField& f) {
    double s = 0.0;
    for (double x : f.v) s += x;
    return s / static_cast<double>(f.size());
}

// Small pointwise helpers used throughout.
inline ScalarField& axpy(double a, const ScalarField& x, ScalarField& y) {
    for (std::size_t k = 0; k < y.size(); ++k) y[k] += a * x[k];
    return y;
}

inline double max_abs(const ScalarField& f) {
    double m = 0.0;
    for (double x : f.v) m = std::fmax(m, std::fabs(x));
    return m;
}

}  // namespace epap
