#include "riemann.hpp"

#include <cmath>
#include <numeric>

namespace tl {

namespace {
double absval(double x) { return std::fabs(x); }
double absval(const Jet& x) { return std::fabs(x.value()); }
}  // namespace

template <class S>
std::vector<S> mat_inverse(std::vector<S> a, int n) {
    std::vector<S> inv(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) inv[i * n + j] = const_like(a[0], i == j ? 1.0 : 0.0);
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (absval(a[r * n + c]) > absval(a[piv * n + c])) piv = r;
        if (absval(a[piv * n + c]) < 1e-300) throw NumericError("singular matrix");
        if (piv != c)
            for (int k = 0; k < n; ++k) {
                std::swap(a[c * n + k], a[piv * n + k]);
                std::swap(inv[c * n + k], inv[piv * n + k]);
            }
        S r = 1.0 / a[c * n + c];
        for (int k = 0; k < n; ++k) {
            a[c * n + k] = a[c * n + k] * r;
            inv[c * n + k] = inv[c * n + k] * r;
        }
        for (int rr = 0; rr < n; ++rr) {
            if (rr == c) continue;
            S f = a[rr * n + c];
            for (int k = 0; k < n; ++k) {
                a[rr * n + k] -= f * a[c * n + k];
                inv[rr * n + k] -= f * inv[c * n + k];
            }
        }
    }
    return inv;
}

template <class S>
S mat_det(std::vector<S> a, int n) {
    S d = const_like(a[0], 1.0);
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (absval(a[r * n + c]) > absval(a[piv * n + c])) piv = r;
        if (absval(a[piv * n + c]) == 0.0) return const_like(a[0], 0.0) * 0.0;
        if (piv != c) {
            for (int k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
            d = -d;
        }
        d = d * a[c * n + c];
        S r = 1.0 / a[c * n + c];
        for (int rr = c + 1; rr < n; ++rr) {
            S f = a[rr * n + c] * r;
            for (int k = c; k < n; ++k) a[rr * n + k] -= f * a[c * n + k];
        }
    }
    return d;
}

template double mat_det<double>(std::vector<double>, int);
template Jet mat_det<Jet>(std::vector<Jet>, int);
template std::vector<double> mat_inverse<double>(std::vector<double>, int);
template std::vector<Jet> mat_inverse<Jet>(std::vector<Jet>, int);

double det(std::vector<double> a, int n) { return mat_det(std::move(a), n); }

JetTensor metric_jet(const Geometry& geo, const Point& p, int order) {
    if ((int)p.size() != geo.n) throw std::invalid_argument("metric_jet: point dimension mismatch");
    auto comps = field_jet(geo.metric, p, order, geo.backend);
    JetTensor g({down(geo.n), down(geo.n)});
    for (int a = 0; a < geo.n; ++a)
        for (int b = 0; b < geo.n; ++b) g(a, b) = 0.5 * (comps[a * geo.n + b] + comps[b * geo.n + a]);
    return g;
}

CurvatureJets curvature_jets(const JetTensor& g, const JetTensor* P_override) {
    CurvatureJets cj;
    const int n = g.dim(0);
    cj.n = n;
    cj.g = g;
    auto gi = mat_inverse(g.data, n);
    cj.ginv = JetTensor({up(n), up(n)});
    cj.ginv.data = gi;

    // dg[d](a,b) = d_d g_ab
    std::vector<JetTensor> dg;
    for (int d = 0; d < n; ++d) dg.push_back(partial(g, d));
    JetTensor low({down(n), down(n), down(n)});  // Gamma_{d ab}
    for (int d = 0; d < n; ++d)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) low(d, a, b) = 0.5 * (dg[a](b, d) + dg[b](a, d) - dg[d](a, b));
    cj.Gamma = JetTensor({up(n), down(n), down(n)});
    for (int c = 0; c < n; ++c)
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b) {
                Jet s;
                for (int d = 0; d < n; ++d) s += cj.ginv(c, d) * low(d, a, b);
                cj.Gamma(c, a, b) = s;
                cj.Gamma(c, b, a) = s;
            }
    std::vector<JetTensor> dG;
    for (int a = 0; a < n; ++a) dG.push_back(partial(cj.Gamma, a));

    cj.R = JetTensor({down(n), down(n), up(n), down(n)});
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            for (int c = 0; c < n; ++c)
                for (int d = 0; d < n; ++d) {
                    Jet s = dG[a](c, b, d) - dG[b](c, a, d);
                    for (int e = 0; e < n; ++e)
                        s += cj.Gamma(c, a, e) * cj.Gamma(e, b, d) - cj.Gamma(c, b, e) * cj.Gamma(e, a, d);
                    cj.R(a, b, c, d) = s;
                    cj.R(b, a, c, d) = -s;
                }
    cj.Rdown = JetTensor({down(n), down(n), down(n), down(n)});
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                for (int d = 0; d < n; ++d) {
                    Jet s;
                    for (int e = 0; e < n; ++e) s += g(c, e) * cj.R(a, b, e, d);
                    cj.Rdown(a, b, c, d) = s;
                }
    cj.Ric = JetTensor({down(n), down(n)});
    for (int b = 0; b < n; ++b)
        for (int d = 0; d < n; ++d) {
            Jet s;
            for (int a = 0; a < n; ++a) s += cj.R(a, b, a, d);
            cj.Ric(b, d) = s;
        }
    Jet scal;
    for (int b = 0; b < n; ++b)
        for (int d = 0; d < n; ++d) scal += cj.ginv(b, d) * cj.Ric(b, d);
    cj.Scal = scal;
    cj.K = 0.5 * scal;

    if (n >= 3 || P_override) {
        cj.conformal = true;
        cj.P = JetTensor({down(n), down(n)});
        if (P_override) {
            cj.P = *P_override;
        } else {
            cj.J = scal * (1.0 / (2.0 * (n - 1)));
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) cj.P(a, b) = (cj.Ric(a, b) - cj.J * g(a, b)) * (1.0 / (n - 2));
        }
        Jet J;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) J += cj.ginv(a, b) * cj.P(a, b);
        cj.J = J;
        cj.W = JetTensor({down(n), down(n), down(n), down(n)});
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c)
                    for (int d = 0; d < n; ++d)
                        cj.W(a, b, c, d) = cj.Rdown(a, b, c, d) - (g(a, c) * cj.P(b, d) - g(b, c) * cj.P(a, d) +
                                                                   cj.P(a, c) * g(b, d) - cj.P(b, c) * g(a, d));
        cj.Wup = JetTensor({down(n), down(n), up(n), down(n)});
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c)
                    for (int d = 0; d < n; ++d) {
                        Jet s;
                        for (int e = 0; e < n; ++e) s += cj.ginv(c, e) * cj.W(a, b, e, d);
                        cj.Wup(a, b, c, d) = s;
                    }
        // C_abc = D_a P_bc - D_b P_ac
        JetTensor dP({down(n), down(n), down(n)});  // (a, b, c) = D_a P_bc
        for (int a = 0; a < n; ++a) {
            JetTensor pa = partial(cj.P, a);
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c) {
                    Jet s = pa(b, c);
                    for (int e = 0; e < n; ++e)
                        s -= cj.Gamma(e, a, b) * cj.P(e, c) + cj.Gamma(e, a, c) * cj.P(b, e);
                    dP(a, b, c) = s;
                }
        }
        cj.C = JetTensor({down(n), down(n), down(n)});
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c) cj.C(a, b, c) = dP(a, b, c) - dP(b, a, c);
    }
    return cj;
}

namespace {
TensorValue safe_values(const JetTensor& t) {
    TensorValue r(t.idx, 0.0, t.weight);
    for (size_t i = 0; i < t.size(); ++i) {
        const Jet& j = t.data[i];
        r.data[i] = j.valid() ? j.value() : std::nan("");
    }
    return r;
}
double safe_value(const Jet& j) { return j.valid() ? j.value() : std::nan(""); }
}  // namespace

TensorValue volume_form(const TensorValue& g, int orientation) {
    int n = g.dim(0);
    if (n > 7) throw TensorError("dense volume form limited to n <= 7");
    double vol = orientation * std::sqrt(std::fabs(det(g.data, n)));
    std::vector<IndexSpec> ix(n, down(n));
    TensorValue e(ix);
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    do {
        e.at(p) = vol * perm_sign(p);
    } while (std::next_permutation(p.begin(), p.end()));
    return e;
}

CurvaturePack pack_values(const CurvatureJets& cj, int orientation) {
    CurvaturePack pk;
    pk.n = cj.n;
    pk.conformal = cj.conformal;
    pk.g = values(cj.g);
    pk.ginv = values(cj.ginv);
    pk.Gamma = safe_values(cj.Gamma);
    pk.R = safe_values(cj.R);
    pk.Rdown = safe_values(cj.Rdown);
    pk.Ric = safe_values(cj.Ric);
    pk.Scal = safe_value(cj.Scal);
    pk.K = safe_value(cj.K);
    if (cj.conformal) {
        pk.P = safe_values(cj.P);
        pk.J = safe_value(cj.J);
        pk.W = safe_values(cj.W);
        pk.C = safe_values(cj.C);
    }
    if (cj.n <= 7) pk.eps = volume_form(pk.g, orientation);
    return pk;
}

CurvatureJets curvature_at(const Geometry& geo, const Point& p, int order) {
    JetTensor g = metric_jet(geo, p, order);
    if (geo.n == 2 && geo.mobius_schouten.nin == geo.n) {
        auto comps = field_jet(geo.mobius_schouten, p, order - 2, geo.backend);
        JetTensor P({down(2), down(2)});
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) P(a, b) = comps[a * 2 + b];
        return curvature_jets(g, &P);
    }
    return curvature_jets(g);
}

CurvaturePack curvature_pack(const Geometry& geo, const Point& p) {
    int order = std::min(geo.backend.max_order, 3);
    return pack_values(curvature_at(geo, p, order), geo.orientation);
}

Connection lc_connection(const CurvatureJets& cj) {
    Connection c;
    c.dim = cj.n;
    for (int a = 0; a < cj.n; ++a) {
        JetTensor m({up(cj.n), down(cj.n)});
        for (int x = 0; x < cj.n; ++x)
            for (int y = 0; y < cj.n; ++y) m(x, y) = cj.Gamma(x, a, y);
        c.mats.push_back(m);
    }
    return c;
}

JetTensor covd(const JetTensor& T, const std::vector<const Connection*>& conns, int ndir) {
    if ((int)conns.size() != T.rank()) throw TensorError("covd: one connection slot per index required");
    auto ix = T.idx;
    ix.push_back(down(ndir));
    JetTensor r(ix, Jet{}, T.weight);
    std::vector<int> m(T.rank(), 0), s(T.rank(), 0);
    for (int i = 0; i < ndir; ++i) {
        m.assign(T.rank(), 0);
        do {
            Jet acc = T.at(m).d(i);
            for (int k = 0; k < T.rank(); ++k) {
                const Connection* c = conns[k];
                if (!c) continue;
                if (c->dim != T.idx[k].dim) throw TensorError("covd: connection dimension mismatch");
                const JetTensor& C = c->mats[i];
                s = m;
                for (int y = 0; y < c->dim; ++y) {
                    s[k] = y;
                    const Jet& ty = T.at(s);
                    if (!ty.typed()) continue;
                    if (T.idx[k].var == Variance::up) {
                        const Jet& cxy = C(m[k], y);
                        if (cxy.typed()) acc += cxy * ty;
                    } else {
                        const Jet& cyx = C(y, m[k]);
                        if (cyx.typed()) acc -= cyx * ty;
                    }
                }
            }
            auto mm = m;
            mm.push_back(i);
            r.at(mm) = acc;
        } while (T.rank() > 0 && T.next(m));
    }
    return r;
}

JetTensor connection_curvature(const Connection& c) {
    int nd = (int)c.mats.size(), k = c.dim;
    JetTensor O({down(nd), down(nd), up(k), down(k)});
    for (int i = 0; i < nd; ++i)
        for (int j = i + 1; j < nd; ++j) {
            JetTensor di = partial(c.mats[j], i), dj = partial(c.mats[i], j);
            for (int x = 0; x < k; ++x)
                for (int y = 0; y < k; ++y) {
                    Jet s = di(x, y) - dj(x, y);
                    for (int z = 0; z < k; ++z) {
                        const Jet &a = c.mats[i](x, z), &b = c.mats[j](z, y);
                        const Jet &a2 = c.mats[j](x, z), &b2 = c.mats[i](z, y);
                        if (a.typed() && b.typed()) s += a * b;
                        if (a2.typed() && b2.typed()) s -= a2 * b2;
                    }
                    O(i, j, x, y) = s;
                    O(j, i, x, y) = -s;
                }
        }
    return O;
}

TensorValue levi_civita_derivative(const Geometry& geo, const TensorField& field, const Point& p) {
    for (auto& s : field.idx)
        if (s.kind != IndexKind::tangent || s.dim != geo.n) throw TensorError("levi_civita_derivative: tangent indices only");
    auto cj = curvature_at(geo, p, 1);
    auto comps = field_jet(field.f, p, 1, geo.backend);
    JetTensor T(field.idx, Jet{}, field.weight);
    if (comps.size() != T.size()) throw TensorError("levi_civita_derivative: component count mismatch");
    T.data = comps;
    Connection lc = lc_connection(cj);
    std::vector<const Connection*> conns(T.rank(), &lc);
    return values(covd(T, conns, geo.n));
}

Geometry rescale(const Geometry& geo, const Field& omega) {
    if (omega.nin != geo.n || omega.nout != 1) throw std::invalid_argument("rescale: Omega must be a scalar field on M");
    Geometry r = geo;
    r.name = geo.name + "*Omega^2";
    // a supplied n = 2 Moebius Schouten tensor is not carried over
    r.mobius_schouten = Field{};
    Field gm = geo.metric;
    r.metric.nin = geo.n;
    r.metric.nout = geo.n * geo.n;
    r.metric.jetfn = [gm, omega](const std::vector<Jet>& x) {
        auto g = gm.jetfn(x);
        Jet w = omega.jetfn(x)[0];
        if (w.value() <= 0) throw NumericError("rescale: nonpositive Omega");
        Jet w2 = w * w;
        for (auto& c : g) c = c * w2;
        return g;
    };
    r.metric.valfn = [gm, omega](const std::vector<double>& x) {
        auto g = gm.valfn(x);
        double w = omega.valfn(x)[0];
        if (w <= 0) throw NumericError("rescale: nonpositive Omega");
        for (auto& c : g) c *= w * w;
        return g;
    };
    return r;
}

TensorValue upsilon(const Field& omega, const Point& p, const DiffBackend& be) {
    auto j = field_jet(omega, p, 1, be)[0];
    int n = (int)p.size();
    TensorValue u({down(n)}, 0.0, 0);
    double w = j.value();
    if (w <= 0) throw NumericError("upsilon: nonpositive Omega");
    for (int a = 0; a < n; ++a) u(a) = j.d(a).value() / w;
    return u;
}

}  // namespace tl
