#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"

namespace wavemodel {

struct Interval {
    double a = 0.0;
    double b = 0.0;

    bool operator==(const Interval&) const = default;
};

/// Finite union of open intervals in (0, l) plus isolated point pairs
/// {x, l - x}, invariant under x -> l - x. Points are stored by their
/// representative in [0, l/2].
class SymmetricSet {
public:
    SymmetricSet() = default;

    /// Validates disjointness, containment and reflection symmetry (within tol, at least 1e-12 l).
    SymmetricSet(double l, std::vector<Interval> intervals, std::vector<double> points = {}, double tol = 0.0)
        : l_(l), intervals_(std::move(intervals)), points_(std::move(points))
    {
        if (!(l > 0.0)) throw ConfigError("set length must be positive");
        tol = std::max(tol, 1e-12 * l);
        std::sort(intervals_.begin(), intervals_.end(), [](const Interval& x, const Interval& y) { return x.a < y.a; });
        for (std::size_t i = 0; i < intervals_.size(); ++i) {
            const auto& iv = intervals_[i];
            if (!(iv.a < iv.b) || iv.a < -tol || iv.b > l + tol)
                throw ConfigError("interval (" + format_double(iv.a) + ", " + format_double(iv.b) + ") is empty or leaves (0, l)");
            if (i > 0 && iv.a < intervals_[i - 1].b) throw ConfigError("intervals overlap");
        }
        for (double& x : points_) {
            if (x < -tol || x > l + tol) throw ConfigError("point outside [0, l]");
            x = std::min(x, l - x);
        }
        std::sort(points_.begin(), points_.end());
        points_.erase(std::unique(points_.begin(), points_.end()), points_.end());
        const std::size_t m = intervals_.size();
        for (std::size_t i = 0; i < m; ++i) {
            const auto& iv = intervals_[i];
            const auto& mirror = intervals_[m - 1 - i];
            if (std::abs(iv.a - (l - mirror.b)) > tol || std::abs(iv.b - (l - mirror.a)) > tol)
                throw ConfigError("set is not symmetric about l/2");
        }
    }

    static SymmetricSet whole(double l) { return {l, {{0.0, l}}}; }
    static SymmetricSet empty(double l) { return {l, {}}; }

    double length() const { return l_; }
    const std::vector<Interval>& intervals() const { return intervals_; }
    const std::vector<double>& points() const { return points_; }
    bool is_empty() const { return intervals_.empty() && points_.empty(); }

    /// Membership in the closure, up to tol.
    bool closure_contains(double y, double tol = 0.0) const
    {
        for (const auto& iv : intervals_)
            if (y >= iv.a - tol && y <= iv.b + tol) return true;
        for (double x : points_)
            if (std::abs(y - x) <= tol || std::abs(y - (l_ - x)) <= tol) return true;
        return false;
    }

    /// Set inclusion (open intervals inside open intervals, points inside the closure).
    bool subset_of(const SymmetricSet& other, double tol = 0.0) const
    {
        for (const auto& iv : intervals_) {
            const bool inside = std::any_of(other.intervals_.begin(), other.intervals_.end(),
                                            [&](const Interval& o) { return o.a <= iv.a + tol && iv.b <= o.b + tol; });
            if (!inside) return false;
        }
        for (double x : points_) {
            const bool inside = std::any_of(other.intervals_.begin(), other.intervals_.end(),
                                            [&](const Interval& o) { return o.a < x && x < o.b; }) ||
                                std::any_of(other.points_.begin(), other.points_.end(), [&](double p) { return std::abs(p - x) <= tol; });
            if (!inside) return false;
        }
        return true;
    }

    bool approx_equal(const SymmetricSet& other, double tol) const
    {
        if (intervals_.size() != other.intervals_.size() || points_.size() != other.points_.size()) return false;
        for (std::size_t i = 0; i < intervals_.size(); ++i)
            if (std::abs(intervals_[i].a - other.intervals_[i].a) > tol || std::abs(intervals_[i].b - other.intervals_[i].b) > tol)
                return false;
        for (std::size_t i = 0; i < points_.size(); ++i)
            if (std::abs(points_[i] - other.points_[i]) > tol) return false;
        return true;
    }

    bool operator==(const SymmetricSet& other) const
    {
        return l_ == other.l_ && intervals_ == other.intervals_ && points_ == other.points_;
    }

private:
    double l_ = 1.0;
    std::vector<Interval> intervals_;
    std::vector<double> points_;
};

namespace detail {

inline std::vector<Interval> merge_intervals(std::vector<Interval> v)
{
    std::sort(v.begin(), v.end(), [](const Interval& x, const Interval& y) { return x.a < y.a; });
    std::vector<Interval> out;
    for (const auto& iv : v) {
        if (!(iv.a < iv.b)) continue;
        if (!out.empty() && iv.a < out.back().b)
            out.back().b = std::max(out.back().b, iv.b);
        else
            out.push_back(iv);
    }
    return out;
}

}  // namespace detail

/// Metric t-neighborhood inside (0, l): (a, b) -> (a - t, b + t), point pairs
/// -> intervals of radius t around x and l - x, overlaps merged.
inline SymmetricSet neighborhood(const SymmetricSet& s, double t)
{
    if (t < 0.0) throw ContractError("neighborhood radius must be non-negative");
    if (t == 0.0) return s;
    const double l = s.length();
    std::vector<Interval> grown;
    auto add = [&](double a, double b) { grown.push_back({std::max(0.0, a), std::min(l, b)}); };
    for (const auto& iv : s.intervals()) add(iv.a - t, iv.b + t);
    for (double x : s.points()) {
        add(x - t, x + t);
        add(l - x - t, l - x + t);
    }
    // Rebuild the right half by reflecting the left half.
    auto merged = detail::merge_intervals(std::move(grown));
    std::vector<Interval> sym;
    for (const auto& iv : merged)
        if (iv.a < 0.5 * l) sym.push_back(iv.b <= 0.5 * l ? iv : Interval{iv.a, l - iv.a});
    const std::size_t left = sym.size();
    for (std::size_t i = left; i-- > 0;)
        if (sym[i].b < l - sym[i].a) sym.push_back({l - sym[i].b, l - sym[i].a});
    return {l, detail::merge_intervals(std::move(sym))};
}

/// The isotony acts on L2(E) as E -> E^t.
inline SymmetricSet isotony_apply(const SymmetricSet& s, double t) { return neighborhood(s, t); }

/// Point {x} u {l - x} of the wave spectrum, x in [0, l/2].
struct Atom {
    double x = 0.0;
};

inline Atom make_atom(double x, double l)
{
    if (x < 0.0 || x > 0.5 * l) throw ContractError("atom parameter must lie in [0, l/2]");
    return {x};
}

inline Atom boundary_atom() { return {0.0}; }

inline SymmetricSet atom_snapshot(const Atom& a, double t, double l)
{
    return neighborhood(SymmetricSet(l, {}, {a.x}), t);
}

/// Multiplication by the indicator of the closure of s.
inline GridFunction project_onto(const SymmetricSet& s, const GridFunction& u)
{
    const double tol = 1e-12 * s.length();
    GridFunction out(u.grid);
    for (std::size_t j = 0; j < u.size(); ++j)
        if (s.closure_contains(u.grid.node(j), tol)) out[j] = u[j];
    return out;
}

inline GridFunction project_onto_complement(const SymmetricSet& s, const GridFunction& u) { return u - project_onto(s, u); }

inline double atom_distance(const Atom& a, double y, double l) { return std::min(std::abs(y - a.x), std::abs(y - (l - a.x))); }

/// Multiplication by the distance to {x, l - x}.
inline GridFunction eikonal_apply(const Atom& a, const GridFunction& u)
{
    GridFunction out(u.grid);
    const double l = u.grid.length();
    for (std::size_t j = 0; j < u.size(); ++j) out[j] = atom_distance(a, u.grid.node(j), l) * u[j];
    return out;
}

/// x rounded to the lattice q Z, q = ulp(2l). Differences of lattice points
/// in [0, l] and sums of two such differences are exact doubles.
inline double metric_coordinate(double x, double l)
{
    const double q = std::ldexp(1.0, std::ilogb(2.0 * l) - 52);
    return std::nearbyint(x / q) * q;
}

/// |x1 - x2| on the metric lattice, after checking it against the grid sup of |d_1 - d_2|.
inline double eikonal_metric(const Atom& a1, const Atom& a2, const Grid& g)
{
    double sup = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double y = g.node(j);
        sup = std::max(sup, std::abs(atom_distance(a1, y, g.length()) - atom_distance(a2, y, g.length())));
    }
    const double exact = std::abs(metric_coordinate(a1.x, g.length()) - metric_coordinate(a2.x, g.length()));
    if (std::abs(sup - exact) > g.spacing())
        throw InternalError("eikonal sup " + format_double(sup) + " disagrees with |x1 - x2| = " + format_double(exact));
    return exact;
}

}  // namespace wavemodel
