#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace wavemodel {

using cplx = std::complex<double>;

/// Uniform grid x_j = j*l/n, j = 0..n, on [0, l].
class Grid {
public:
    Grid() = default;

    double length() const { return l_; }
    int intervals() const { return n_; }
    std::size_t size() const { return static_cast<std::size_t>(n_) + 1; }
    double spacing() const { return l_ / n_; }
    double node(std::size_t j) const { return j == static_cast<std::size_t>(n_) ? l_ : l_ * static_cast<double>(j) / n_; }

    /// Index of the node mirrored through l/2.
    std::size_t mirror(std::size_t j) const { return static_cast<std::size_t>(n_) - j; }

    /// Index of the midpoint node (n is even).
    std::size_t midpoint() const { return static_cast<std::size_t>(n_ / 2); }

    std::vector<double> nodes() const
    {
        std::vector<double> x(size());
        for (std::size_t j = 0; j < x.size(); ++j) x[j] = node(j);
        return x;
    }

    bool operator==(const Grid& other) const { return l_ == other.l_ && n_ == other.n_; }

    friend Grid build_grid(double l, int n);

private:
    Grid(double l, int n) : l_(l), n_(n) {}
    double l_ = 1.0;
    int n_ = 8;
};

/// Builds a uniform grid. n must be even (composite Simpson) and at least 8.
inline Grid build_grid(double l, int n)
{
    if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("grid length must be positive, got " + std::to_string(l));
    if (n < 8) throw ConfigError("grid needs at least 8 intervals, got " + std::to_string(n));
    if (n % 2 != 0) throw ConfigError("grid interval count must be even for Simpson quadrature, got " + std::to_string(n));
    return Grid(l, n);
}

/// Complex samples of a function at every node of a grid.
struct GridFunction {
    Grid grid;
    std::vector<cplx> values;

    GridFunction() = default;
    explicit GridFunction(const Grid& g) : grid(g), values(g.size(), cplx{}) {}
    GridFunction(const Grid& g, std::vector<cplx> v) : grid(g), values(std::move(v))
    {
        if (values.size() != grid.size()) throw ContractError("grid function value count does not match grid");
    }

    template <class F>
    static GridFunction sample(const Grid& g, F&& f)
    {
        GridFunction out(g);
        for (std::size_t j = 0; j < out.values.size(); ++j) out.values[j] = cplx(f(g.node(j)));
        return out;
    }

    std::size_t size() const { return values.size(); }
    cplx& operator[](std::size_t j) { return values[j]; }
    const cplx& operator[](std::size_t j) const { return values[j]; }

    GridFunction& operator+=(const GridFunction& o)
    {
        check_same(o);
        for (std::size_t j = 0; j < values.size(); ++j) values[j] += o.values[j];
        return *this;
    }
    GridFunction& operator-=(const GridFunction& o)
    {
        check_same(o);
        for (std::size_t j = 0; j < values.size(); ++j) values[j] -= o.values[j];
        return *this;
    }
    GridFunction& operator*=(cplx s)
    {
        for (auto& v : values) v *= s;
        return *this;
    }
    friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
    friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
    friend GridFunction operator*(cplx s, GridFunction a) { return a *= s; }

    /// Adds s*o in place.
    void axpy(cplx s, const GridFunction& o)
    {
        check_same(o);
        for (std::size_t j = 0; j < values.size(); ++j) values[j] += s * o.values[j];
    }

    double sup_norm() const
    {
        double m = 0.0;
        for (const auto& v : values) m = std::max(m, std::abs(v));
        return m;
    }

private:
    void check_same(const GridFunction& o) const
    {
        if (!(grid == o.grid)) throw ContractError("grid functions live on different grids");
    }
};

// ---------------------------------------------------------------------------
// Quadrature

/// Composite Simpson over samples [i0, i1] with spacing h. An odd number of
/// intervals is closed with Simpson's 3/8 rule on the last three.
template <class T>
T simpson(std::span<const T> f, double h, std::size_t i0, std::size_t i1)
{
    if (i1 <= i0) return T{};
    const std::size_t m = i1 - i0;
    if (m == 1) return T(0.5 * h) * (f[i0] + f[i1]);
    if (m == 2) return T(h / 3.0) * (f[i0] + T(4.0) * f[i0 + 1] + f[i1]);
    std::size_t end = i1;
    T tail{};
    if (m % 2 == 1) {
        end = i1 - 3;
        tail = T(3.0 * h / 8.0) * (f[end] + T(3.0) * f[end + 1] + T(3.0) * f[end + 2] + f[i1]);
    }
    T odd{}, even{};
    for (std::size_t j = i0 + 1; j < end; j += 2) odd += f[j];
    for (std::size_t j = i0 + 2; j < end; j += 2) even += f[j];
    return T(h / 3.0) * (f[i0] + f[end] + T(4.0) * odd + T(2.0) * even) + tail;
}

/// Composite Simpson approximation of the integral of f over [0, l].
inline cplx quad(const GridFunction& f)
{
    return simpson<cplx>(f.values, f.grid.spacing(), 0, f.grid.size() - 1);
}

/// (u, v) = integral of u * conj(v).
inline cplx inner(const GridFunction& u, const GridFunction& v)
{
    if (!(u.grid == v.grid)) throw ContractError("inner product of functions on different grids");
    GridFunction w(u.grid);
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = u[j] * std::conj(v[j]);
    return quad(w);
}

inline double norm2(const GridFunction& u) { return inner(u, u).real(); }
inline double l2_norm(const GridFunction& u) { return std::sqrt(std::max(0.0, norm2(u))); }

// ---------------------------------------------------------------------------
// Finite differences

/// Fornberg's weights for the derivatives 0..max_order at x0 from nodes xs.
/// Returns weights[k][i] for derivative k at node i.
inline std::vector<std::vector<double>> fd_weights(double x0, std::span<const double> xs, int max_order)
{
    const std::size_t n = xs.size();
    std::vector<std::vector<double>> c(static_cast<std::size_t>(max_order) + 1, std::vector<double>(n, 0.0));
    double c1 = 1.0;
    double c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const int mn = std::min(static_cast<int>(i), max_order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = xs[i] - x0;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

/// Derivative of the given order from uniform samples with formal accuracy
/// O(h^accuracy). Interior nodes use symmetric stencils, the ends shift the
/// stencil inward.
template <class T>
std::vector<T> differentiate(std::span<const T> f, double h, int order, int accuracy)
{
    const std::size_t n = f.size();
    std::size_t width = static_cast<std::size_t>(order + accuracy);
    if (width % 2 == 0) ++width;
    if (n < width) throw ContractError("too few samples for the requested difference stencil");
    std::vector<T> out(n);
    std::vector<double> xs(width);
    for (std::size_t i = 0; i < width; ++i) xs[i] = static_cast<double>(i);
    const std::size_t half = width / 2;
    // Stencil weights depend only on the position of the target inside the window.
    std::vector<std::vector<double>> weights(width);
    for (std::size_t p = 0; p < width; ++p) weights[p] = fd_weights(static_cast<double>(p), xs, order)[order];
    const double scale = std::pow(h, -order);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t start = std::min(j > half ? j - half : 0, n - width);
        const auto& w = weights[j - start];
        T acc{};
        for (std::size_t i = 0; i < width; ++i) acc += T(w[i]) * f[start + i];
        out[j] = T(scale) * acc;
    }
    return out;
}

/// Second-order central differences (order 1 or 2) with second-order
/// one-sided stencils at the end nodes.
inline GridFunction central_diff(const GridFunction& f, int order)
{
    const std::size_t n = f.size();
    if (n < 5) throw ContractError("central_diff needs at least 4 intervals");
    const double h = f.grid.spacing();
    GridFunction d(f.grid);
    const auto& v = f.values;
    if (order == 1) {
        for (std::size_t j = 1; j + 1 < n; ++j) d[j] = (v[j + 1] - v[j - 1]) / (2.0 * h);
        d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
        d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    } else if (order == 2) {
        const double h2 = h * h;
        for (std::size_t j = 1; j + 1 < n; ++j) d[j] = (v[j + 1] - 2.0 * v[j] + v[j - 1]) / h2;
        d[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2;
        d[n - 1] = (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) / h2;
    } else {
        throw ContractError("central_diff supports order 1 or 2");
    }
    return d;
}

/// Fourth-order accurate derivative of a grid function.
inline GridFunction diff4(const GridFunction& f, int order)
{
    return GridFunction(f.grid, differentiate<cplx>(f.values, f.grid.spacing(), order, 4));
}

// ---------------------------------------------------------------------------
// Off-node evaluation

/// Four-point Lagrange interpolation; O(h^4) for smooth data.
inline cplx interpolate_cubic(const GridFunction& f, double x)
{
    const double h = f.grid.spacing();
    const std::size_t n = f.grid.size();
    const double s = std::clamp(x / h, 0.0, static_cast<double>(n - 1));
    std::size_t cell = std::min(static_cast<std::size_t>(s), n - 2);
    const std::size_t start = std::min(cell > 0 ? cell - 1 : 0, n - 4);
    cplx acc{};
    for (std::size_t i = 0; i < 4; ++i) {
        double w = 1.0;
        for (std::size_t k = 0; k < 4; ++k)
            if (k != i) w *= (s - static_cast<double>(start + k)) / static_cast<double>(static_cast<long>(i) - static_cast<long>(k));
        acc += w * f[start + i];
    }
    return acc;
}

/// Integral over [a, b] of the piecewise-cubic interpolant of g, where g is
/// given pointwise (e.g. |u|^2). Two-point Gauss-Legendre per cell is exact
/// for the cubic pieces.
inline cplx integrate_interval(const GridFunction& g, double a, double b)
{
    const double l = g.grid.length();
    a = std::clamp(a, 0.0, l);
    b = std::clamp(b, 0.0, l);
    if (b <= a) return {};
    const double h = g.grid.spacing();
    const double gl = 0.5 / std::sqrt(3.0);
    cplx total{};
    double lo = a;
    while (lo < b) {
        const double cell_end = std::min(b, (std::floor(lo / h + 1e-12) + 1.0) * h);
        const double hi = cell_end > lo ? cell_end : b;
        const double mid = 0.5 * (lo + hi), half = hi - lo;
        total += 0.5 * half * (interpolate_cubic(g, mid - gl * half) + interpolate_cubic(g, mid + gl * half));
        lo = hi;
    }
    return total;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v + 0.0);  // -0 prints as 0
    return buf;
}

/// CSV with header x,re,im and one row per node.
inline void write_csv(std::ostream& os, const GridFunction& f)
{
    os << "x,re,im\n";
    for (std::size_t j = 0; j < f.size(); ++j)
        os << format_double(f.grid.node(j)) << ',' << format_double(f[j].real()) << ',' << format_double(f[j].imag()) << '\n';
}

inline GridFunction read_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line.rfind("x,re,im", 0) != 0) throw ConfigError("grid function CSV must start with header x,re,im");
    std::vector<double> xs;
    std::vector<cplx> vals;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double x, re, im;
        if (!(row >> x >> re >> im)) throw ConfigError("malformed grid function CSV row: " + line);
        xs.push_back(x);
        vals.emplace_back(re, im);
    }
    if (xs.size() < 9) throw ConfigError("grid function CSV has too few rows");
    Grid g = build_grid(xs.back(), static_cast<int>(xs.size()) - 1);
    return GridFunction(g, std::move(vals));
}

}  // namespace wavemodel
