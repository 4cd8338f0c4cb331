// Standard tractor bundle in a chosen scale.
//
// Frame E = (Y, Z_1..Z_n, X). Contravariant tractors are stored as frame
// coefficients (sigma, mu^a, rho); covariant ones as values on the frame, so a
// covector sigma Y_A + mu_a Z^a_A + rho X_A is stored as (rho, mu_a, sigma).
#pragma once

#include <functional>
#include <vector>

#include "riemann.hpp"

namespace tl {

inline int tdim(int n) { return n + 2; }

template <class S>
BasicTensor<S> tractor_metric_t(const BasicTensor<S>& g) {
    int n = g.dim(0), D = n + 2;
    BasicTensor<S> h({tdown(D), tdown(D)});
    h(0, D - 1) = const_like(g(0, 0), 1.0);
    h(D - 1, 0) = const_like(g(0, 0), 1.0);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) h(1 + a, 1 + b) = g(a, b);
    return h;
}

template <class S>
BasicTensor<S> tractor_metric_inverse_t(const BasicTensor<S>& gi) {
    int n = gi.dim(0), D = n + 2;
    BasicTensor<S> h({tup(D), tup(D)});
    h(0, D - 1) = const_like(gi(0, 0), 1.0);
    h(D - 1, 0) = const_like(gi(0, 0), 1.0);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) h(1 + a, 1 + b) = gi(a, b);
    return h;
}

inline TensorValue tractor_metric(const TensorValue& g) { return tractor_metric_t(g); }
inline TensorValue tractor_metric_inverse(const TensorValue& gi) { return tractor_metric_inverse_t(gi); }

// lower / raise every tractor index of t
template <class S>
BasicTensor<S> lower_all(const BasicTensor<S>& t, const BasicTensor<S>& h) {
    BasicTensor<S> r = t;
    for (int k = 0; k < t.rank(); ++k) {
        if (r.idx[k].kind != IndexKind::tractor || r.idx[k].var != Variance::up) continue;
        auto c = contract(h, r, {{1, k}});
        std::vector<int> perm;
        for (int j = 1; j <= k; ++j) perm.push_back(j);
        perm.push_back(0);
        for (int j = k + 1; j < r.rank(); ++j) perm.push_back(j);
        r = permute(c, perm);
    }
    return r;
}

template <class S>
BasicTensor<S> raise_all(const BasicTensor<S>& t, const BasicTensor<S>& hinv) {
    BasicTensor<S> r = t;
    for (int k = 0; k < t.rank(); ++k) {
        if (r.idx[k].kind != IndexKind::tractor || r.idx[k].var != Variance::down) continue;
        auto c = contract(hinv, r, {{1, k}});
        std::vector<int> perm;
        for (int j = 1; j <= k; ++j) perm.push_back(j);
        perm.push_back(0);
        for (int j = k + 1; j < r.rank(); ++j) perm.push_back(j);
        r = permute(c, perm);
    }
    return r;
}

// full contraction of two tensors of the same shape with h (all tractor indices)
template <class S>
S tractor_dot(const BasicTensor<S>& a, const BasicTensor<S>& b, const BasicTensor<S>& h,
              const BasicTensor<S>& hinv) {
    auto bl = lower_all(b, h);
    auto al = raise_all(lower_all(a, h), hinv);
    S s{};
    for (size_t i = 0; i < al.size(); ++i) s += al.data[i] * bl.data[i];
    return s;
}

// tractor connection A_a (dim n+2) from curvature jets; needs P
Connection tractor_connection(const CurvatureJets& cj);
std::vector<TensorValue> tractor_connection_values(const CurvaturePack& pk);

TensorValue tractor_vector(double sigma, const std::vector<double>& mu, double rho);

struct TractorField {
    std::vector<IndexSpec> idx;  // tractor indices of dim n+2
    Field f;                     // components row-major
    int weight = 0;
};

// nabla_a T, trailing down tangent index
TensorValue tractor_connection_apply(const Geometry& geo, const TractorField& t, const Point& p);

// Omega_ab^X_Y (down, down, up, down)
TensorValue tractor_curvature(const Geometry& geo, const Point& p);

// D_A V with a leading covariant tractor index
TensorValue thomas_D(const Geometry& geo, const TractorField& v, const Point& p);

// I^A = (sigma, grad sigma, -(Lap sigma + J sigma)/n), contravariant
JetTensor scale_tractor_jet(const CurvatureJets& cj, const Jet& sigma);
TensorValue scale_tractor(const Geometry& geo, const Field& sigma, const Point& p);

// ---- tractor forms (covariant storage) ----

// F = Y y + Z z + W w + X x with the alternating projectors of degree k.
// y, x: (k-1)-forms; z: k-form; w: (k-2)-form; absent parts are zero.
template <class S>
BasicTensor<S> form_from_slots(int n, int k, const BasicTensor<S>* y, const BasicTensor<S>* z,
                               const BasicTensor<S>* w, const BasicTensor<S>* x) {
    int D = n + 2;
    std::vector<IndexSpec> ix(k, tdown(D));
    BasicTensor<S> raw(ix);
    if (k == 0) {
        if (z) raw.data[0] = z->data[0];
        return raw;
    }
    std::vector<int> m(k, 0), tm;
    auto tangent_tail = [&](int from, const BasicTensor<S>& t, S& out) {
        tm.assign(k - from, 0);
        for (int j = from; j < k; ++j) {
            if (m[j] < 1 || m[j] > n) return false;
            tm[j - from] = m[j] - 1;
        }
        out = t.rank() == 0 ? t.data[0] : t.at(tm);
        return true;
    };
    do {
        S acc{}, v{};
        // Y_A pairs with X: covariant slot D-1; X_A sits at slot 0
        if (y && m[0] == D - 1 && tangent_tail(1, *y, v)) acc += v;
        if (x && m[0] == 0 && tangent_tail(1, *x, v)) acc += v;
        if (z && tangent_tail(0, *z, v)) acc += v;
        if (w && k >= 2 && m[0] == 0 && m[1] == D - 1 && tangent_tail(2, *w, v)) acc += v;
        raw.at(m) = acc;
    } while (raw.next(m));
    std::vector<int> all(k);
    std::iota(all.begin(), all.end(), 0);
    return alt(raw, all);
}

template <class S>
struct FormSlots {
    BasicTensor<S> y, z, w, x;
};

template <class S>
FormSlots<S> form_slots(const BasicTensor<S>& f, int n) {
    int k = f.rank(), D = n + 2;
    FormSlots<S> r;
    auto pull = [&](std::vector<int> head, int tail, double factor) {
        BasicTensor<S> t(std::vector<IndexSpec>(tail, down(n)));
        std::vector<int> tm(tail, 0), fm(k);
        do {
            for (size_t j = 0; j < head.size(); ++j) fm[j] = head[j];
            for (int j = 0; j < tail; ++j) fm[head.size() + j] = 1 + tm[j];
            t.at(tm) = f.at(fm) * factor;
        } while (tail > 0 && t.next(tm));
        return t;
    };
    r.z = pull({}, k, 1.0);
    if (k >= 1) {
        r.y = pull({D - 1}, k - 1, k);
        r.x = pull({0}, k - 1, k);
    }
    if (k >= 2) r.w = pull({0, D - 1}, k - 2, k * (k - 1.0));
    return r;
}

// eps_{0 1 .. n+1} = (-1)^n orientation sqrt(det g)
template <class S>
S tractor_volume_component(const BasicTensor<S>& g, int orientation) {
    int n = g.dim(0);
    S d = mat_det(g.data, n);
    S v = sqrt(d);
    return (n % 2 ? -1.0 : 1.0) * orientation * v;
}

TensorValue tractor_volume_form(const TensorValue& g, int orientation);

// star Psi_B = (1/k!) eps^A_B Psi_A on a covariant k-form
template <class S>
BasicTensor<S> hodge_star(const BasicTensor<S>& psi, const BasicTensor<S>& hinv, const S& vol) {
    int k = psi.rank();
    int D = k > 0 ? psi.dim(0) : hinv.dim(0);
    auto pu = raise_all(psi, hinv);
    int l = D - k;
    BasicTensor<S> r(std::vector<IndexSpec>(l, tdown(D)));
    std::vector<int> b(l, 0), a, perm(D);
    do {
        std::vector<char> used(D, 0);
        bool ok = true;
        for (int x : b) {
            if (used[x]) {
                ok = false;
                break;
            }
            used[x] = 1;
        }
        if (!ok) continue;
        a.clear();
        for (int x = 0; x < D; ++x)
            if (!used[x]) a.push_back(x);
        for (int j = 0; j < k; ++j) perm[j] = a[j];
        for (int j = 0; j < l; ++j) perm[k + j] = b[j];
        S v = k == 0 ? pu.data[0] : pu.at(a);
        r.at(b) = vol * v * (double)perm_sign(perm);
    } while (l > 0 && r.next(b));
    return r;
}

// V(t1) = M V(t0) for the tractor connection along x(t), classical RK4
TensorValue parallel_transport(const Geometry& geo, const Field& curve, double t0, double t1, int steps);

// g-trivialized contravariant slots -> (Omega^2 g)-trivialized slots
TensorValue tractor_rescale_matrix(const TensorValue& gup, const TensorValue& ups, double omega);

}  // namespace tl
