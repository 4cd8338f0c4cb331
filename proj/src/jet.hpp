// Truncated multivariate Taylor jets.
//
// A Jet holds the Taylor coefficients c_alpha = d^alpha f / alpha! of a
// scalar function in `nvars` variables around a base point, truncated at a
// per-jet order. Arithmetic propagates the minimum order; differentiation
// lowers it by one. A jet of negative order carries no data and throws when
// its value is read.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace tl {

struct JetShortfall : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr int kJetMaxOrder = 6;

class JetSpace {
public:
    static const JetSpace& get(int nvars);

    int nvars;
    int kmax;
    std::vector<std::vector<int>> mono;  // graded order; degree 0 first
    std::vector<int> degree;
    std::vector<int> upto;               // upto[k] = #monomials of degree <= k
    struct Triple { int a, b, c; };
    std::vector<Triple> triples;         // sorted by degree of c
    std::vector<int> tri_upto;
    struct DTerm { int src, dst; double f; };
    std::vector<std::vector<DTerm>> dtab;  // per variable, sorted by src
    std::vector<std::vector<int>> next;    // next[i][v] = index of mono[i]+e_v (or -1)
    std::vector<int> prev_idx, prev_var;   // mono[i] = mono[prev_idx[i]] + e_{prev_var[i]}

    int size(int order) const { return order < 0 ? 0 : upto[std::min(order, kmax)]; }
    int index(const std::vector<int>& e) const;

private:
    explicit JetSpace(int nvars);
};

class Jet {
public:
    Jet() = default;
    Jet(const JetSpace* sp, int order, double value = 0.0);
    static Jet variable(const JetSpace* sp, int order, int var, double x0);

    const JetSpace* space() const { return sp_; }
    // an untyped (default) jet is an exact zero of unbounded order
    int order() const { return sp_ ? ord_ : 1 << 20; }
    int nvars() const { return sp_ ? sp_->nvars : 0; }
    bool valid() const { return !sp_ || ord_ >= 0; }
    bool typed() const { return sp_ != nullptr; }

    double value() const;
    double coeff(int i) const { return i < (int)c_.size() ? c_[i] : 0.0; }
    double& coeff_ref(int i) { return c_[i]; }
    const std::vector<double>& coeffs() const { return c_; }
    std::vector<double>& coeffs() { return c_; }

    // partial derivative d^alpha f at the base point
    double deriv(const std::vector<int>& alpha) const;
    Jet d(int var) const;
    Jet truncated(int order) const;
    Jet zero_like() const { return Jet(sp_, ord_, 0.0); }

    Jet& operator+=(const Jet& o);
    Jet& operator-=(const Jet& o);
    Jet& operator*=(const Jet& o);
    Jet& operator/=(const Jet& o);
    Jet& operator+=(double s);
    Jet& operator-=(double s);
    Jet& operator*=(double s);
    Jet& operator/=(double s);
    Jet operator-() const;

    Jet reciprocal() const;
    // f(a0 + delta) = sum_k taylor[k] delta^k, taylor[k] = f^(k)(a0)/k!
    Jet compose_series(const std::vector<double>& taylor) const;

private:
    const JetSpace* sp_ = nullptr;
    int ord_ = -1;
    std::vector<double> c_;
    friend Jet mul(const Jet&, const Jet&);
};

Jet mul(const Jet& a, const Jet& b);

inline Jet operator+(Jet a, const Jet& b) { return a += b; }
inline Jet operator-(Jet a, const Jet& b) { return a -= b; }
inline Jet operator*(const Jet& a, const Jet& b) { return mul(a, b); }
inline Jet operator/(const Jet& a, const Jet& b) { return mul(a, b.reciprocal()); }
inline Jet operator+(Jet a, double s) { return a += s; }
inline Jet operator+(double s, Jet a) { return a += s; }
inline Jet operator-(Jet a, double s) { return a -= s; }
inline Jet operator-(double s, const Jet& a) { return (-a) += s; }
inline Jet operator*(Jet a, double s) { return a *= s; }
inline Jet operator*(double s, Jet a) { return a *= s; }
inline Jet operator/(Jet a, double s) { return a /= s; }
inline Jet operator/(double s, const Jet& a) { return a.reciprocal() *= s; }

// double overloads visible next to the jet ones for generic callbacks
using std::atan;
using std::cos;
using std::cosh;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sinh;
using std::sqrt;
using std::tanh;

Jet exp(const Jet& a);
Jet log(const Jet& a);
Jet sin(const Jet& a);
Jet cos(const Jet& a);
Jet sqrt(const Jet& a);
Jet pow(const Jet& a, double r);
Jet pow(const Jet& a, int k);
Jet sinh(const Jet& a);
Jet cosh(const Jet& a);
Jet tanh(const Jet& a);
Jet atan(const Jet& a);

inline double const_like(double, double v) { return v; }
inline Jet const_like(const Jet& x, double v) {
    if (!x.typed()) {
        if (v != 0.0) throw std::logic_error("const_like: untyped template jet");
        return Jet{};
    }
    return Jet(x.space(), x.order(), v);
}

inline double value_of(double x) { return x; }
inline double value_of(const Jet& j) { return j.value(); }

// Substitutes m-variable jets dx (zero constant term) into n-variable jets:
// f(p + dx(s)). The monomial table of dx is built once and reused.
class Composer {
public:
    Composer(const std::vector<Jet>& dx, int src_nvars);
    Jet operator()(const Jet& f) const;
    int order() const { return ord_; }
    const JetSpace* target() const { return tsp_; }

private:
    const JetSpace* ssp_;
    const JetSpace* tsp_;
    int ord_;
    std::vector<Jet> table_;  // dx^alpha for each source monomial
};

// seeds x_i = p_i + e_i as jets of the given order
std::vector<Jet> seed(const std::vector<double>& p, int order);

}  // namespace tl
