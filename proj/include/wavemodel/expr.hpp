#pragma once

// Closed-form scalar functions of one real variable with derivatives of any
// order. Used for potentials q(x), boundary controls f(t) and analytic test
// functions. The vocabulary is deliberately small:
//
//   const(c)                  c
//   cos(a, w[, p])            a*cos(w*x + p)
//   sin(a, w[, p])            a*sin(w*x + p)
//   poly(c0, c1, ...)         c0 + c1*x + ...
//   bump(center, width, a)    a*(1 - s^2)^8, s = 2*(x - center)/width, zero for |s| >= 1
//   ramp(t0, t1)              0 before t0, 1 after t1, C^8 smoothstep in between
//
// combined by sums, differences and scalar factors, e.g. "2 + cos(1,3)" or
// "0.5*bump(0.1,0.1,1) - bump(0.3,0.1,2)".

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace wavemodel {

namespace detail {

struct ExprNode {
    virtual ~ExprNode() = default;
    /// k-th derivative at x.
    virtual double eval(double x, int k) const = 0;
};

inline double poly_derivative(const std::vector<double>& c, double x, int k)
{
    // Horner on the k-th derivative coefficients.
    double acc = 0.0;
    for (std::size_t i = c.size(); i-- > static_cast<std::size_t>(k);) {
        double f = 1.0;
        for (int r = 0; r < k; ++r) f *= static_cast<double>(i - static_cast<std::size_t>(r));
        acc = acc * x + f * c[i];
    }
    return acc;
}

struct ConstNode final : ExprNode {
    double c;
    explicit ConstNode(double v) : c(v) {}
    double eval(double, int k) const override { return k == 0 ? c : 0.0; }
};

struct TrigNode final : ExprNode {
    double amp, freq, phase;
    TrigNode(double a, double w, double p) : amp(a), freq(w), phase(p) {}
    // sin is stored as cos with phase shifted by -pi/2.
    double eval(double x, int k) const override
    {
        return amp * std::pow(freq, k) * std::cos(freq * x + phase + k * std::numbers::pi / 2.0);
    }
};

struct PolyNode final : ExprNode {
    std::vector<double> coeffs;
    explicit PolyNode(std::vector<double> c) : coeffs(std::move(c)) {}
    double eval(double x, int k) const override { return poly_derivative(coeffs, x, k); }
};

inline double falling(int m, int i)
{
    double r = 1.0;
    for (int r_ = 0; r_ < i; ++r_) r *= m - r_;
    return r;
}

inline double binomial(int n, int k)
{
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

/// k-th derivative of c * (1 - s)^a (1 + s)^b (Leibniz), accurate near s = +-1.
inline double factored_derivative(double s, int a, int b, int k)
{
    double acc = 0.0;
    for (int i = 0; i <= k; ++i) {
        const int j = k - i;
        if (i > a || j > b) continue;
        const double left = (i % 2 == 0 ? 1.0 : -1.0) * falling(a, i) * std::pow(1.0 - s, a - i);
        const double right = falling(b, j) * std::pow(1.0 + s, b - j);
        acc += binomial(k, i) * left * right;
    }
    return acc;
}

/// amplitude * (1 - s^2)^m on |s| < 1, s = (x - center) * scale.
struct BumpNode final : ExprNode {
    double center, scale, amplitude;
    int m;
    BumpNode(double c, double sc, double a, int m_) : center(c), scale(sc), amplitude(a), m(m_) {}
    double eval(double x, int k) const override
    {
        const double s = (x - center) * scale;
        if (s <= -1.0 || s >= 1.0) return 0.0;
        return amplitude * std::pow(scale, k) * factored_derivative(s, m, m, k);
    }
};

/// Smoothstep of order m on s = (x - t0) * scale in [0, 1]:
/// S'(s) = c s^m (1 - s)^m, S(0) = 0, S(1) = 1.
struct RampNode final : ExprNode {
    double t0, scale;
    int m;
    double c;
    RampNode(double t0_, double sc, int m_) : t0(t0_), scale(sc), m(m_), c(1.0 / beta(m_)) {}
    static double beta(int m)
    {
        // B(m+1, m+1) = (m!)^2 / (2m+1)!
        double r = 1.0;
        for (int i = 1; i <= m; ++i) r *= static_cast<double>(i) / (m + i);
        return r / (2 * m + 1);
    }
    /// S(s) for s in [0, 1/2] by the incomplete beta series; symmetry covers the rest.
    double value(double s) const
    {
        if (s > 0.5) return 1.0 - value(1.0 - s);
        double acc = 0.0;
        for (int i = 0; i <= m; ++i)
            acc += binomial(m, i) * (i % 2 == 0 ? 1.0 : -1.0) * std::pow(s, m + i + 1) / (m + i + 1);
        return c * acc;
    }
    double eval(double x, int k) const override
    {
        const double s = (x - t0) * scale;
        if (s <= 0.0) return 0.0;
        if (s >= 1.0) return k == 0 ? 1.0 : 0.0;
        if (k == 0) return value(s);
        // s^m (1-s)^m = (1 - u)^m (1 + u)^m / 4^m with u = 2s - 1.
        const double u = 2.0 * s - 1.0;
        return c * std::pow(scale, k) * std::pow(2.0, k - 1) / std::pow(4.0, m) * factored_derivative(u, m, m, k - 1);
    }
};

struct SumNode final : ExprNode {
    std::vector<std::shared_ptr<const ExprNode>> terms;
    std::vector<int> offsets;
    double eval(double x, int k) const override
    {
        double acc = 0.0;
        for (std::size_t i = 0; i < terms.size(); ++i) acc += terms[i]->eval(x, k + offsets[i]);
        return acc;
    }
};

struct ScaleNode final : ExprNode {
    double factor;
    std::shared_ptr<const ExprNode> inner;
    int offset;
    ScaleNode(double f, std::shared_ptr<const ExprNode> e, int o) : factor(f), inner(std::move(e)), offset(o) {}
    double eval(double x, int k) const override { return factor * inner->eval(x, k + offset); }
};

struct ReflectNode final : ExprNode {
    double length;
    std::shared_ptr<const ExprNode> inner;
    int offset;
    ReflectNode(double l, std::shared_ptr<const ExprNode> e, int o) : length(l), inner(std::move(e)), offset(o) {}
    double eval(double x, int k) const override
    {
        return (k % 2 == 0 ? 1.0 : -1.0) * inner->eval(length - x, k + offset);
    }
};

/// Values only, from uniform samples on [0, l]; cubic interpolation off-node.
struct SampledNode final : ExprNode {
    std::vector<double> values;
    double length;
    SampledNode(std::vector<double> v, double l) : values(std::move(v)), length(l) {}
    double eval(double x, int k) const override
    {
        if (k != 0) throw ContractError("sampled functions carry no derivatives");
        const std::size_t n = values.size();
        const double h = length / static_cast<double>(n - 1);
        const double s = std::clamp(x / h, 0.0, static_cast<double>(n - 1));
        const std::size_t cell = std::min(static_cast<std::size_t>(s), n - 2);
        const std::size_t start = std::min(cell > 0 ? cell - 1 : 0, n - 4);
        double acc = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            double w = 1.0;
            for (std::size_t j = 0; j < 4; ++j)
                if (j != i) w *= (s - static_cast<double>(start + j)) / (static_cast<double>(i) - static_cast<double>(j));
            acc += w * values[start + i];
        }
        return acc;
    }
};

}  // namespace detail

/// Exponent of the bump profile (1 - s^2)^m; the bump is C^(m-1).
inline constexpr int kBumpExponent = 8;
/// Smoothstep order for ramps; the ramp is C^m at both ends.
inline constexpr int kRampOrder = 8;

/// Immutable handle to a closed-form function. Cheap to copy.
class Expr {
public:
    Expr() : Expr(0.0) {}
    Expr(double c) : node_(std::make_shared<detail::ConstNode>(c)) {}  // NOLINT: implicit by intent

    double operator()(double x) const { return node_->eval(x, offset_); }
    /// k-th derivative at x.
    double derivative(double x, int k) const { return node_->eval(x, offset_ + k); }
    /// The derivative as a function.
    Expr differentiated(int k = 1) const { return Expr(node_, offset_ + k); }
    /// x -> f(l - x).
    Expr reflected(double l) const { return Expr(std::make_shared<detail::ReflectNode>(l, node_, offset_), 0); }

    static Expr constant(double c) { return Expr(c); }
    static Expr cosine(double amp, double freq, double phase = 0.0)
    {
        return Expr(std::make_shared<detail::TrigNode>(amp, freq, phase), 0);
    }
    static Expr sine(double amp, double freq, double phase = 0.0)
    {
        return Expr(std::make_shared<detail::TrigNode>(amp, freq, phase - std::numbers::pi / 2.0), 0);
    }
    static Expr poly(std::vector<double> coeffs)
    {
        if (coeffs.empty()) coeffs.push_back(0.0);
        return Expr(std::make_shared<detail::PolyNode>(std::move(coeffs)), 0);
    }
    /// amplitude * (1 - s^2)^8 supported on (center - width/2, center + width/2).
    static Expr bump(double center, double width, double amplitude)
    {
        if (!(width > 0.0)) throw ConfigError("bump width must be positive");
        return Expr(std::make_shared<detail::BumpNode>(center, 2.0 / width, amplitude, kBumpExponent), 0);
    }
    /// Smooth step from 0 at t0 to 1 at t1.
    static Expr ramp(double t0, double t1)
    {
        if (!(t1 > t0)) throw ConfigError("ramp needs t0 < t1");
        return Expr(std::make_shared<detail::RampNode>(t0, 1.0 / (t1 - t0), kRampOrder), 0);
    }
    /// Values at the n+1 uniform nodes of [0, l]; no derivatives available.
    static Expr sampled(std::vector<double> values, double l)
    {
        if (values.size() < 4) throw ConfigError("sampled function needs at least 4 values");
        return Expr(std::make_shared<detail::SampledNode>(std::move(values), l), 0);
    }

    friend Expr operator+(const Expr& a, const Expr& b)
    {
        auto s = std::make_shared<detail::SumNode>();
        s->terms = {a.node_, b.node_};
        s->offsets = {a.offset_, b.offset_};
        return Expr(s, 0);
    }
    friend Expr operator*(double f, const Expr& e) { return Expr(std::make_shared<detail::ScaleNode>(f, e.node_, e.offset_), 0); }
    friend Expr operator-(const Expr& e) { return -1.0 * e; }
    friend Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

private:
    Expr(std::shared_ptr<const detail::ExprNode> n, int offset) : node_(std::move(n)), offset_(offset) {}
    std::shared_ptr<const detail::ExprNode> node_;
    int offset_ = 0;
};

namespace detail {

class ExprParser {
public:
    explicit ExprParser(std::string_view s) : src_(s) {}

    Expr parse()
    {
        Expr e = term();
        for (;;) {
            skip();
            if (peek('+')) {
                ++pos_;
                e = e + term();
            } else if (peek('-')) {
                ++pos_;
                e = e - term();
            } else {
                break;
            }
        }
        skip();
        if (pos_ != src_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    Expr term()
    {
        skip();
        double sign = 1.0;
        while (peek('-') || peek('+')) {
            if (src_[pos_] == '-') sign = -sign;
            ++pos_;
            skip();
        }
        if (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
            const double v = number();
            skip();
            if (peek('*')) {
                ++pos_;
                return (sign * v) * call();
            }
            return Expr::constant(sign * v);
        }
        Expr c = call();
        return sign == 1.0 ? c : -c;
    }

    Expr call()
    {
        skip();
        const std::size_t start = pos_;
        while (pos_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        const std::string name(src_.substr(start, pos_ - start));
        if (name.empty()) fail("expected a function name");
        skip();
        if (!peek('(')) fail("expected '(' after " + name);
        ++pos_;
        std::vector<double> args;
        skip();
        if (!peek(')')) {
            for (;;) {
                skip();
                args.push_back(signed_number());
                skip();
                if (peek(',')) {
                    ++pos_;
                    continue;
                }
                break;
            }
        }
        skip();
        if (!peek(')')) fail("expected ')' closing " + name);
        ++pos_;
        auto need = [&](std::size_t lo, std::size_t hi) {
            if (args.size() < lo || args.size() > hi) fail(name + " takes " + std::to_string(lo) + ".." + std::to_string(hi) + " arguments");
        };
        if (name == "const") {
            need(1, 1);
            return Expr::constant(args[0]);
        }
        if (name == "cos") {
            need(2, 3);
            return Expr::cosine(args[0], args[1], args.size() > 2 ? args[2] : 0.0);
        }
        if (name == "sin") {
            need(2, 3);
            return Expr::sine(args[0], args[1], args.size() > 2 ? args[2] : 0.0);
        }
        if (name == "poly") {
            need(1, 64);
            return Expr::poly(args);
        }
        if (name == "bump") {
            need(3, 3);
            return Expr::bump(args[0], args[1], args[2]);
        }
        if (name == "ramp") {
            need(2, 2);
            return Expr::ramp(args[0], args[1]);
        }
        fail("unknown function '" + name + "'");
        return {};
    }

    double signed_number()
    {
        double sign = 1.0;
        if (peek('-')) {
            sign = -1.0;
            ++pos_;
        } else if (peek('+')) {
            ++pos_;
        }
        return sign * number();
    }

    double number()
    {
        const std::string rest(src_.substr(pos_));
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(rest, &used);
        } catch (const std::exception&) {
            fail("expected a number");
        }
        pos_ += used;
        return v;
    }

    void skip()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    bool peek(char c) const { return pos_ < src_.size() && src_[pos_] == c; }
    [[noreturn]] void fail(const std::string& what) const
    {
        throw ConfigError("expression '" + std::string(src_) + "' at " + std::to_string(pos_) + ": " + what);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses the closed expression vocabulary described at the top of this file.
inline Expr parse_expr(std::string_view text) { return detail::ExprParser(text).parse(); }

}  // namespace wavemodel
