#include "tractor.hpp"

#include <cmath>
#include <numeric>

namespace tl {

namespace {

void require_conformal(const CurvatureJets& cj) {
    if (!cj.conformal) throw std::invalid_argument("tractor connection needs n >= 3 or a supplied Moebius Schouten tensor");
}

Jet one_like(const JetTensor& t) {
    for (auto& x : t.data)
        if (x.typed()) return const_like(x, 1.0);
    return Jet{};
}

}  // namespace

Connection tractor_connection(const CurvatureJets& cj) {
    require_conformal(cj);
    int n = cj.n, D = n + 2;
    Connection c;
    c.dim = D;
    JetTensor Pu({up(n), down(n)});  // P^b_a stored as (b, a)
    for (int b = 0; b < n; ++b)
        for (int a = 0; a < n; ++a) {
            Jet s;
            for (int e = 0; e < n; ++e) s += cj.ginv(b, e) * cj.P(e, a);
            Pu(b, a) = s;
        }
    Jet one = one_like(cj.g);
    for (int a = 0; a < n; ++a) {
        JetTensor m({tup(D), tdown(D)});
        for (int b = 0; b < n; ++b) {
            m(0, 1 + b) = -cj.g(a, b);
            m(1 + b, 0) = Pu(b, a);
            for (int e = 0; e < n; ++e) m(1 + b, 1 + e) = cj.Gamma(b, a, e);
            m(D - 1, 1 + b) = -cj.P(a, b);
        }
        m(1 + a, D - 1) = one;
        c.mats.push_back(m);
    }
    return c;
}

std::vector<TensorValue> tractor_connection_values(const CurvaturePack& pk) {
    if (!pk.conformal) throw std::invalid_argument("tractor connection needs n >= 3 or a supplied Moebius Schouten tensor");
    int n = pk.n, D = n + 2;
    auto Pu = contract(pk.ginv, pk.P, {{1, 0}});  // (b, a)
    std::vector<TensorValue> out;
    for (int a = 0; a < n; ++a) {
        TensorValue m({tup(D), tdown(D)});
        for (int b = 0; b < n; ++b) {
            m(0, 1 + b) = -pk.g(a, b);
            m(1 + b, 0) = Pu(b, a);
            for (int e = 0; e < n; ++e) m(1 + b, 1 + e) = pk.Gamma(b, a, e);
            m(D - 1, 1 + b) = -pk.P(a, b);
        }
        m(1 + a, D - 1) = 1.0;
        out.push_back(m);
    }
    return out;
}

TensorValue tractor_vector(double sigma, const std::vector<double>& mu, double rho) {
    int n = (int)mu.size(), D = n + 2;
    TensorValue v({tup(D)});
    v(0) = sigma;
    for (int a = 0; a < n; ++a) v(1 + a) = mu[a];
    v(D - 1) = rho;
    return v;
}

namespace {

JetTensor field_tensor(const Geometry& geo, const TractorField& t, const Point& p, int order) {
    for (auto& s : t.idx)
        if (s.kind != IndexKind::tractor || s.dim != geo.n + 2)
            throw TensorError("tractor field: tractor indices of dimension n+2 expected");
    JetTensor T(t.idx, Jet{}, t.weight);
    auto comps = field_jet(t.f, p, order, geo.backend);
    if (comps.size() != T.size()) throw TensorError("tractor field: component count mismatch");
    T.data = comps;
    return T;
}

}  // namespace

TensorValue tractor_connection_apply(const Geometry& geo, const TractorField& t, const Point& p) {
    auto cj = curvature_at(geo, p, 2);
    Connection A = tractor_connection(cj);
    JetTensor T = field_tensor(geo, t, p, 1);
    std::vector<const Connection*> conns(T.rank(), &A);
    return values(covd(T, conns, geo.n));
}

TensorValue tractor_curvature(const Geometry& geo, const Point& p) {
    auto cj = curvature_at(geo, p, 3);
    return values(connection_curvature(tractor_connection(cj)));
}

TensorValue thomas_D(const Geometry& geo, const TractorField& v, const Point& p) {
    int n = geo.n, D = n + 2, w = v.weight;
    auto cj = curvature_at(geo, p, 3);
    Connection A = tractor_connection(cj), lc = lc_connection(cj);
    JetTensor T = field_tensor(geo, v, p, 2);
    std::vector<const Connection*> c1(T.rank(), &A);
    JetTensor dT = covd(T, c1, n);
    auto c2 = c1;
    c2.push_back(&lc);
    JetTensor ddT = covd(dT, c2, n);
    TensorValue Tv = values(T), dTv = values(dT), ddTv = values(ddT);
    TensorValue gi = values(cj.ginv);
    double J = cj.J.value();
    std::vector<IndexSpec> ix{tdown(D)};
    for (auto& s : T.idx) ix.push_back(s);
    TensorValue r(ix, 0.0, w - 1);
    int r0 = T.rank();
    std::vector<int> m(r0, 0);
    double c = n + 2.0 * w - 2.0;
    do {
        std::vector<int> rm{D - 1};
        rm.insert(rm.end(), m.begin(), m.end());
        r.at(rm) = c * w * Tv.at(m);
        std::vector<int> dm = m;
        dm.push_back(0);
        for (int a = 0; a < n; ++a) {
            dm.back() = a;
            rm[0] = 1 + a;
            r.at(rm) = c * dTv.at(dm);
        }
        double lap = 0;
        std::vector<int> em = m;
        em.push_back(0);
        em.push_back(0);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                em[r0] = a;
                em[r0 + 1] = b;
                lap += gi(a, b) * ddTv.at(em);
            }
        rm[0] = 0;
        r.at(rm) = -(lap + w * J * Tv.at(m));
    } while (r0 > 0 && T.next(m));
    return r;
}

JetTensor scale_tractor_jet(const CurvatureJets& cj, const Jet& sigma) {
    int n = cj.n, D = n + 2;
    require_conformal(cj);
    JetTensor I({tup(D)}, Jet{}, 1);
    I(0) = sigma;
    std::vector<Jet> ds(n);
    for (int a = 0; a < n; ++a) ds[a] = sigma.d(a);
    for (int b = 0; b < n; ++b) {
        Jet s;
        for (int a = 0; a < n; ++a) s += cj.ginv(b, a) * ds[a];
        I(1 + b) = s;
    }
    Jet lap;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            Jet h = ds[a].d(b);
            for (int c = 0; c < n; ++c) h -= cj.Gamma(c, a, b) * ds[c];
            lap += cj.ginv(a, b) * h;
        }
    I(D - 1) = -(lap + cj.J * sigma) * (1.0 / n);
    return I;
}

TensorValue scale_tractor(const Geometry& geo, const Field& sigma, const Point& p) {
    auto cj = curvature_at(geo, p, 2);
    Jet s = field_jet(sigma, p, 2, geo.backend)[0];
    return values(scale_tractor_jet(cj, s));
}

TensorValue tractor_volume_form(const TensorValue& g, int orientation) {
    int n = g.dim(0), D = n + 2;
    if (D > 8) throw TensorError("dense tractor volume form limited to n <= 6");
    double v = tractor_volume_component(g, orientation);
    TensorValue e(std::vector<IndexSpec>(D, tdown(D)));
    std::vector<int> p(D);
    std::iota(p.begin(), p.end(), 0);
    do {
        e.at(p) = v * perm_sign(p);
    } while (std::next_permutation(p.begin(), p.end()));
    return e;
}

TensorValue parallel_transport(const Geometry& geo, const Field& curve, double t0, double t1, int steps) {
    if (steps < 1) throw std::invalid_argument("parallel_transport: steps >= 1");
    int n = geo.n, D = n + 2;
    DiffBackend cb = geo.backend.mode == DiffMode::fd ? DiffBackend::fd() : DiffBackend::analytic(1);
    auto rhs = [&](double t, const std::vector<double>& M) {
        auto xj = field_jet(curve, {t}, 1, cb);
        Point x(n);
        std::vector<double> xd(n);
        for (int a = 0; a < n; ++a) {
            x[a] = xj[a].value();
            xd[a] = xj[a].deriv({1});
        }
        auto pk = pack_values(curvature_at(geo, x, 2), geo.orientation);
        auto A = tractor_connection_values(pk);
        std::vector<double> B(D * D, 0.0), out(D * D, 0.0);
        for (int a = 0; a < n; ++a)
            for (int i = 0; i < D * D; ++i) B[i] -= xd[a] * A[a].data[i];
        for (int i = 0; i < D; ++i)
            for (int k = 0; k < D; ++k) {
                double b = B[i * D + k];
                if (b == 0.0) continue;
                for (int j = 0; j < D; ++j) out[i * D + j] += b * M[k * D + j];
            }
        check_finite(out, "parallel transport");
        return out;
    };
    std::vector<double> M(D * D, 0.0);
    for (int i = 0; i < D; ++i) M[i * D + i] = 1.0;
    double h = (t1 - t0) / steps;
    auto axpy = [](std::vector<double> a, const std::vector<double>& b, double s) {
        for (size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
        return a;
    };
    for (int s = 0; s < steps; ++s) {
        double t = t0 + s * h;
        auto k1 = rhs(t, M);
        auto k2 = rhs(t + h / 2, axpy(M, k1, h / 2));
        auto k3 = rhs(t + h / 2, axpy(M, k2, h / 2));
        auto k4 = rhs(t + h, axpy(M, k3, h));
        for (int i = 0; i < D * D; ++i) M[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    TensorValue r({tup(D), tdown(D)});
    r.data = M;
    return r;
}

TensorValue tractor_rescale_matrix(const TensorValue& gup, const TensorValue& ups, double omega) {
    int n = gup.dim(0), D = n + 2;
    std::vector<double> uu(n, 0.0);
    double u2 = 0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) uu[a] += gup(a, b) * ups(b);
    for (int a = 0; a < n; ++a) u2 += uu[a] * ups(a);
    TensorValue M({tup(D), tdown(D)});
    M(0, 0) = omega;
    for (int a = 0; a < n; ++a) {
        M(1 + a, 1 + a) = 1.0 / omega;
        M(1 + a, 0) = uu[a] / omega;
        M(D - 1, 1 + a) = -ups(a) / omega;
    }
    M(D - 1, 0) = -0.5 * u2 / omega;
    M(D - 1, D - 1) = 1.0 / omega;
    return M;
}

}  // namespace tl
