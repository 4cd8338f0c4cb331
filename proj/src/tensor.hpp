// Dense multi-index arrays with per-index kind/variance/dim and a weight tag.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "jet.hpp"

namespace tl {

enum class IndexKind { tangent, tractor };
enum class Variance { up, down };

struct IndexSpec {
    IndexKind kind = IndexKind::tangent;
    Variance var = Variance::down;
    int dim = 0;
    bool operator==(const IndexSpec& o) const { return kind == o.kind && var == o.var && dim == o.dim; }
};

inline IndexSpec up(int n) { return {IndexKind::tangent, Variance::up, n}; }
inline IndexSpec down(int n) { return {IndexKind::tangent, Variance::down, n}; }
inline IndexSpec tup(int n) { return {IndexKind::tractor, Variance::up, n}; }
inline IndexSpec tdown(int n) { return {IndexKind::tractor, Variance::down, n}; }

struct TensorError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

template <class S>
class BasicTensor {
public:
    std::vector<IndexSpec> idx;
    std::vector<S> data;
    int weight = 0;

    BasicTensor() = default;
    explicit BasicTensor(std::vector<IndexSpec> ix, S fill = S{}, int w = 0) : idx(std::move(ix)), weight(w) {
        data.assign(count(), fill);
    }

    int rank() const { return (int)idx.size(); }
    size_t size() const { return data.size(); }
    int dim(int k) const { return idx[k].dim; }

    size_t count() const {
        size_t c = 1;
        for (auto& s : idx) c *= (size_t)s.dim;
        return c;
    }

    size_t offset(const int* m) const {
        size_t o = 0;
        for (size_t k = 0; k < idx.size(); ++k) o = o * (size_t)idx[k].dim + (size_t)m[k];
        return o;
    }
    size_t offset(std::initializer_list<int> m) const { return offset(m.begin()); }

    template <class... I>
    S& operator()(I... is) {
        const int m[] = {static_cast<int>(is)..., 0};
        return data[offset(m)];
    }
    template <class... I>
    const S& operator()(I... is) const {
        const int m[] = {static_cast<int>(is)..., 0};
        return data[offset(m)];
    }
    S& at(const std::vector<int>& m) { return data[offset(m.data())]; }
    const S& at(const std::vector<int>& m) const { return data[offset(m.data())]; }

    // advance a multi-index in row-major order; false after the last one
    bool next(std::vector<int>& m) const {
        for (int k = (int)idx.size() - 1; k >= 0; --k) {
            if (++m[k] < idx[k].dim) return true;
            m[k] = 0;
        }
        return false;
    }

    BasicTensor& operator+=(const BasicTensor& o) {
        check_same(o);
        for (size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
        return *this;
    }
    BasicTensor& operator-=(const BasicTensor& o) {
        check_same(o);
        for (size_t i = 0; i < data.size(); ++i) data[i] -= o.data[i];
        return *this;
    }
    BasicTensor& operator*=(double s) {
        for (auto& x : data) x *= s;
        return *this;
    }

    void check_same(const BasicTensor& o) const {
        if (idx.size() != o.idx.size()) throw TensorError("tensor rank mismatch");
        for (size_t k = 0; k < idx.size(); ++k)
            if (!(idx[k] == o.idx[k])) throw TensorError("tensor index mismatch");
    }
};

using TensorValue = BasicTensor<double>;
using JetTensor = BasicTensor<Jet>;

template <class S>
BasicTensor<S> operator+(BasicTensor<S> a, const BasicTensor<S>& b) { return a += b; }
template <class S>
BasicTensor<S> operator-(BasicTensor<S> a, const BasicTensor<S>& b) { return a -= b; }
template <class S>
BasicTensor<S> operator*(double s, BasicTensor<S> a) { return a *= s; }

// Einstein contraction: result carries a's free indices then b's free indices.
template <class S>
BasicTensor<S> contract(const BasicTensor<S>& a, const BasicTensor<S>& b, const std::vector<std::pair<int, int>>& pairs) {
    std::vector<int> amap(a.rank(), -1), bmap(b.rank(), -1);
    for (size_t p = 0; p < pairs.size(); ++p) {
        int i = pairs[p].first, j = pairs[p].second;
        if (i < 0 || i >= a.rank() || j < 0 || j >= b.rank()) throw TensorError("contraction index out of range");
        const auto &x = a.idx[i], &y = b.idx[j];
        if (x.kind != y.kind) throw TensorError("contraction kind mismatch");
        if (x.dim != y.dim) throw TensorError("contraction dim mismatch");
        if (x.var == y.var) throw TensorError("contraction variance mismatch");
        if (amap[i] >= 0 || bmap[j] >= 0) throw TensorError("index contracted twice");
        amap[i] = (int)p;
        bmap[j] = (int)p;
    }
    std::vector<IndexSpec> ri;
    std::vector<int> afree, bfree;
    for (int k = 0; k < a.rank(); ++k)
        if (amap[k] < 0) {
            ri.push_back(a.idx[k]);
            afree.push_back(k);
        }
    for (int k = 0; k < b.rank(); ++k)
        if (bmap[k] < 0) {
            ri.push_back(b.idx[k]);
            bfree.push_back(k);
        }
    BasicTensor<S> r(ri, S{}, a.weight + b.weight);
    std::vector<IndexSpec> si;
    for (auto& p : pairs) si.push_back(a.idx[p.first]);
    BasicTensor<S> sumshape(si);
    std::vector<int> rm(ri.size(), 0), am(a.rank(), 0), bm(b.rank(), 0), sm(si.size(), 0);
    do {
        for (size_t k = 0; k < afree.size(); ++k) am[afree[k]] = rm[k];
        for (size_t k = 0; k < bfree.size(); ++k) bm[bfree[k]] = rm[afree.size() + k];
        S acc{};
        std::fill(sm.begin(), sm.end(), 0);
        do {
            for (size_t p = 0; p < pairs.size(); ++p) {
                am[pairs[p].first] = sm[p];
                bm[pairs[p].second] = sm[p];
            }
            acc += a.at(am) * b.at(bm);
        } while (!si.empty() && sumshape.next(sm));
        r.at(rm) = acc;
    } while (!ri.empty() && r.next(rm));
    return r;
}

template <class S>
BasicTensor<S> outer(const BasicTensor<S>& a, const BasicTensor<S>& b) { return contract(a, b, {}); }

// r(m) = a(m[perm[0]], m[perm[1]], ...): index k of the result is index perm[k] of a
template <class S>
BasicTensor<S> permute(const BasicTensor<S>& a, const std::vector<int>& perm) {
    std::vector<IndexSpec> ri;
    for (int p : perm) ri.push_back(a.idx[p]);
    BasicTensor<S> r(ri, S{}, a.weight);
    std::vector<int> rm(ri.size(), 0), am(a.rank(), 0);
    do {
        for (size_t k = 0; k < perm.size(); ++k) am[perm[k]] = rm[k];
        r.at(rm) = a.at(am);
    } while (!ri.empty() && r.next(rm));
    return r;
}

// all permutations of 0..k-1 with their signs
std::vector<std::pair<std::vector<int>, int>> signed_permutations(int k);

namespace detail {
template <class S>
BasicTensor<S> project(const BasicTensor<S>& a, const std::vector<int>& subset, bool skew) {
    if (subset.empty()) return a;
    const IndexSpec& s0 = a.idx[subset[0]];
    for (int k : subset)
        if (!(a.idx[k] == s0)) throw TensorError("alt/sym over mixed index subset");
    auto perms = signed_permutations((int)subset.size());
    double inv = 1.0 / (double)perms.size();
    BasicTensor<S> r(a.idx, S{}, a.weight);
    std::vector<int> m(a.rank(), 0), src(a.rank(), 0);
    do {
        S acc{};
        for (auto& [p, sg] : perms) {
            src = m;
            for (size_t k = 0; k < subset.size(); ++k) src[subset[k]] = m[subset[p[k]]];
            double f = skew ? sg * inv : inv;
            acc += a.at(src) * f;
        }
        r.at(m) = acc;
    } while (a.next(m));
    return r;
}
}  // namespace detail

template <class S>
BasicTensor<S> alt(const BasicTensor<S>& a, const std::vector<int>& subset) { return detail::project(a, subset, true); }
template <class S>
BasicTensor<S> sym(const BasicTensor<S>& a, const std::vector<int>& subset) { return detail::project(a, subset, false); }

template <class S>
BasicTensor<S> trace(const BasicTensor<S>& a, int i, int j) {
    if (a.idx[i].dim != a.idx[j].dim || a.idx[i].kind != a.idx[j].kind || a.idx[i].var == a.idx[j].var)
        throw TensorError("trace over incompatible indices");
    std::vector<IndexSpec> ri;
    std::vector<int> keep;
    for (int k = 0; k < a.rank(); ++k)
        if (k != i && k != j) {
            ri.push_back(a.idx[k]);
            keep.push_back(k);
        }
    BasicTensor<S> r(ri, S{}, a.weight);
    std::vector<int> rm(ri.size(), 0), am(a.rank(), 0);
    do {
        for (size_t k = 0; k < keep.size(); ++k) am[keep[k]] = rm[k];
        S acc{};
        for (int t = 0; t < a.idx[i].dim; ++t) {
            am[i] = t;
            am[j] = t;
            acc += a.at(am);
        }
        r.at(rm) = acc;
    } while (!ri.empty() && r.next(rm));
    return r;
}

// (F ^ G) = (k+l)!/(k! l!) alt(F (x) G) for fully skew F, G of one index type
template <class S>
BasicTensor<S> wedge(const BasicTensor<S>& f, const BasicTensor<S>& g) {
    int k = f.rank(), l = g.rank();
    auto o = outer(f, g);
    if (k + l == 0) return o;
    std::vector<int> all(k + l);
    std::iota(all.begin(), all.end(), 0);
    double c = 1.0;
    for (int i = 1; i <= k + l; ++i) c *= i;
    for (int i = 1; i <= k; ++i) c /= i;
    for (int i = 1; i <= l; ++i) c /= i;
    auto r = alt(o, all);
    r *= c;
    return r;
}

// (v -| F)_{b..} = v^a F_{a b..}
template <class S>
BasicTensor<S> interior(const BasicTensor<S>& v, const BasicTensor<S>& f) { return contract(v, f, {{0, 0}}); }

inline TensorValue values(const JetTensor& t) {
    TensorValue r(t.idx, 0.0, t.weight);
    for (size_t i = 0; i < t.size(); ++i) r.data[i] = value_of(t.data[i]);
    return r;
}

// partial derivative of every component in jet variable `var`
inline JetTensor partial(const JetTensor& t, int var) {
    JetTensor r(t.idx, Jet{}, t.weight);
    for (size_t i = 0; i < t.size(); ++i) r.data[i] = t.data[i].d(var);
    return r;
}

double max_abs(const TensorValue& t);
double frob(const TensorValue& t);
TensorValue identity(int n, IndexKind kind = IndexKind::tangent);
// weighted Frobenius norm with one positive-definite metric per index kind/variance
double metric_norm(const TensorValue& t, const TensorValue& gdown, const TensorValue& gup);
// same, with the positive-definite metric chosen per index by `metric`
double metric_norm(const TensorValue& t, const std::function<TensorValue(const IndexSpec&)>& metric);
// flat Levi-Civita symbol sign for a permutation of 0..n-1 (0 if repeated)
int perm_sign(const std::vector<int>& p);

}  // namespace tl
