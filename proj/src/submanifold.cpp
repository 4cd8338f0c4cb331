#include "submanifold.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tl {

JetTensor matmul(const JetTensor& a, const JetTensor& b) { return contract(a, b, {{1, 0}}); }
TensorValue matmul(const TensorValue& a, const TensorValue& b) { return contract(a, b, {{1, 0}}); }

JetTensor transpose2(const JetTensor& a) { return permute(a, {1, 0}); }

JetTensor compose_tensor(const JetTensor& t, const Composer& c) {
    JetTensor r(t.idx, Jet{}, t.weight);
    for (size_t i = 0; i < t.size(); ++i) r.data[i] = c(t.data[i]);
    return r;
}

namespace {

CurvatureJets compose_curvature(const CurvatureJets& a, const Composer& c) {
    CurvatureJets r;
    r.n = a.n;
    r.conformal = a.conformal;
    r.g = compose_tensor(a.g, c);
    r.ginv = compose_tensor(a.ginv, c);
    r.Gamma = compose_tensor(a.Gamma, c);
    r.R = compose_tensor(a.R, c);
    r.Rdown = compose_tensor(a.Rdown, c);
    r.Ric = compose_tensor(a.Ric, c);
    r.Scal = c(a.Scal);
    r.K = c(a.K);
    if (a.conformal) {
        r.P = compose_tensor(a.P, c);
        r.J = c(a.J);
        r.W = compose_tensor(a.W, c);
        r.Wup = compose_tensor(a.Wup, c);
        r.C = compose_tensor(a.C, c);
    }
    return r;
}

JetTensor normal_form_jets(const JetTensor& Pi, const Jet& vol, const Jet& sqrt_det_sigma, int orientation) {
    int n = Pi.dim(0), m = Pi.dim(1), d = n - m;
    JetTensor nf(std::vector<IndexSpec>(d, down(n)));
    if (d == 0) return nf;
    Jet scale = vol * orientation / sqrt_det_sigma;
    std::vector<int> a(d, 0), c, perm(n);
    do {
        std::vector<char> used(n, 0);
        bool ok = true;
        for (int x : a) {
            if (used[x]) ok = false;
            used[x] = 1;
        }
        if (!ok) continue;
        c.clear();
        for (int x = 0; x < n; ++x)
            if (!used[x]) c.push_back(x);
        for (int j = 0; j < m; ++j) perm[j] = c[j];
        for (int j = 0; j < d; ++j) perm[m + j] = a[j];
        std::vector<Jet> minor(m * m);
        for (int r = 0; r < m; ++r)
            for (int s = 0; s < m; ++s) minor[r * m + s] = Pi(c[r], s);
        nf.at(a) = scale * mat_det(minor, m) * (double)perm_sign(perm);
    } while (nf.next(a));
    return nf;
}

}  // namespace

SigmaJets sigma_jets(const Geometry& geo, const Embedding& emb, const Point& q, int order) {
    if (emb.n != geo.n) throw std::invalid_argument("embedding target dimension differs from geometry");
    if (emb.m < 1 || emb.m >= geo.n) throw std::invalid_argument("embedding dimension must satisfy 1 <= m <= n-1");
    if ((int)q.size() != emb.m) throw std::invalid_argument("Sigma point dimension mismatch");
    SigmaJets s;
    int m = emb.m, n = geo.n;
    s.m = m;
    s.n = n;
    s.order = order;
    s.q = q;
    s.phi = field_jet(emb.map, q, order, geo.backend);
    s.p.resize(n);
    for (int a = 0; a < n; ++a) s.p[a] = s.phi[a].value();
    check_finite(s.p, "embedding");

    CurvatureJets ambn = curvature_at(geo, s.p, order);
    std::vector<Jet> dx = s.phi;
    Composer comp(dx, n);
    s.amb = compose_curvature(ambn, comp);
    s.amb_vol = comp(sqrt(mat_det(ambn.g.data, n))) * (double)geo.orientation;

    s.Pi = JetTensor({up(n), down(m)});
    for (int a = 0; a < n; ++a)
        for (int i = 0; i < m; ++i) s.Pi(a, i) = s.phi[a].d(i);

    JetTensor gs({down(m), down(m)});
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) {
            Jet v;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) v += s.Pi(a, i) * s.amb.g(a, b) * s.Pi(b, j);
            gs(i, j) = v;
            gs(j, i) = v;
        }
    Jet detg = mat_det(gs.data, m);
    if (std::fabs(detg.value()) < 1e-24) throw NumericError("embedding differential is rank deficient");
    s.intr = curvature_jets(gs);
    const JetTensor& gi = s.intr.ginv;

    JetTensor Pig = contract(s.Pi, s.amb.g, {{0, 0}});  // (i, b) = Pi^a_i g_ab
    s.Pidual = contract(gi, Pig, {{1, 0}});              // (i, b)
    s.N = JetTensor({up(n), down(n)});
    Jet one = const_like(gs(0, 0), 1.0);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            Jet v = a == b ? one : Jet{};
            for (int i = 0; i < m; ++i) v -= s.Pi(a, i) * s.Pidual(i, b);
            s.N(a, b) = v;
        }

    // raw second derivatives corrected by ambient Christoffels, then projected
    JetTensor hess({down(m), down(m), up(n)});
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j)
            for (int d = 0; d < n; ++d) {
                Jet v = s.Pi(d, i).d(j);
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b) v += s.amb.Gamma(d, a, b) * s.Pi(a, i) * s.Pi(b, j);
                hess(i, j, d) = v;
                hess(j, i, d) = v;
            }
    s.II = JetTensor({down(m), down(m), up(n)});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int c = 0; c < n; ++c) {
                Jet v;
                for (int d = 0; d < n; ++d) v += s.N(c, d) * hess(i, j, d);
                s.II(i, j, c) = v;
            }
    s.H = JetTensor({up(n)});
    for (int c = 0; c < n; ++c) {
        Jet v;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) v += gi(i, j) * s.II(i, j, c);
        s.H(c) = v * (1.0 / m);
    }
    s.IIo = s.II;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int c = 0; c < n; ++c) s.IIo(i, j, c) -= gs(i, j) * s.H(c);
    if (m == 1)
        for (auto& x : s.IIo.data) x = Jet{};

    s.lc_pull.dim = n;
    for (int i = 0; i < m; ++i) {
        JetTensor c({up(n), down(n)});
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) {
                Jet v;
                for (int a = 0; a < n; ++a) v += s.amb.Gamma(x, a, y) * s.Pi(a, i);
                c(x, y) = v;
            }
        s.lc_pull.mats.push_back(c);
    }
    s.lc_sigma = lc_connection(s.intr);
    s.nform = normal_form_jets(s.Pi, s.amb_vol, sqrt(detg), emb.orientation);
    return s;
}

SubmanifoldPack pack_from_jets(const SigmaJets& s) {
    SubmanifoldPack pk;
    pk.m = s.m;
    pk.n = s.n;
    pk.d = s.n - s.m;
    pk.g = values(s.intr.g);
    pk.ginv = values(s.intr.ginv);
    pk.Pi = values(s.Pi);
    pk.Pidual = values(s.Pidual);
    pk.N = values(s.N);
    pk.II = values(s.II);
    pk.IIo = values(s.IIo);
    pk.H = values(s.H);
    pk.GammaSigma = values(s.intr.Gamma);
    pk.nablaH = values(covd(s.H, {&s.lc_pull}, s.m));
    pk.nablaperpH = matmul(pk.N, pk.nablaH);
    pk.nform = values(s.nform);
    return pk;
}

SubmanifoldPack submanifold_pack(const Geometry& geo, const Embedding& emb, const Point& q) {
    return pack_from_jets(sigma_jets(geo, emb, q, std::min(geo.working_order(), 3)));
}

GcrResiduals gauss_codazzi_ricci_residuals(const Geometry& geo, const Embedding& emb, const Point& q) {
    auto s = sigma_jets(geo, emb, q, 3);
    int m = s.m, n = s.n;
    TensorValue Pi = values(s.Pi), N = values(s.N), II = values(s.II), g = values(s.amb.g);
    TensorValue gs = values(s.intr.g), gsi = values(s.intr.ginv);
    TensorValue R = values(s.amb.R), Rd = values(s.amb.Rdown), Rs = values(s.intr.Rdown);
    GcrResiduals out;

    auto IIdot = [&](int i, int j, int k, int l) {
        double v = 0;
        for (int c = 0; c < n; ++c)
            for (int e = 0; e < n; ++e) v += g(c, e) * II(i, j, c) * II(k, l, e);
        return v;
    };
    auto pull4 = [&](const TensorValue& T, int i, int j, int k, int l) {
        double v = 0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c)
                    for (int d = 0; d < n; ++d) v += T(a, b, c, d) * Pi(a, i) * Pi(b, j) * Pi(c, k) * Pi(d, l);
        return v;
    };
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k)
                for (int l = 0; l < m; ++l) {
                    double rhs = pull4(Rd, i, j, k, l) - IIdot(i, l, j, k) + IIdot(j, l, i, k);
                    out.gauss = std::max(out.gauss, std::fabs(Rs(i, j, k, l) - rhs));
                }

    // (Dbar_i II)_jk^c stored as (j, k, c, i)
    TensorValue DII = values(covd(s.II, {&s.lc_sigma, &s.lc_sigma, &s.lc_pull}, m));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k)
                for (int c = 0; c < n; ++c) {
                    double lhs = 0, rhs = 0;
                    for (int e = 0; e < n; ++e) {
                        double re = 0;
                        for (int a = 0; a < n; ++a)
                            for (int b = 0; b < n; ++b)
                                for (int d = 0; d < n; ++d) re += R(a, b, e, d) * Pi(a, i) * Pi(b, j) * Pi(d, k);
                        lhs += N(c, e) * re;
                        rhs += N(c, e) * (DII(j, k, e, i) - DII(i, k, e, j));
                    }
                    out.codazzi = std::max(out.codazzi, std::fabs(lhs - rhs));
                }

    // normal connection: N C N + (2N - 1) dN
    Connection nc;
    nc.dim = n;
    for (int i = 0; i < m; ++i) {
        JetTensor dN = partial(s.N, i);
        JetTensor a = matmul(matmul(s.N, s.lc_pull.mats[i]), s.N);
        JetTensor t = matmul(s.N, dN);
        for (size_t x = 0; x < a.size(); ++x) a.data[x] += 2.0 * t.data[x] - dN.data[x];
        nc.mats.push_back(a);
    }
    TensorValue Rperp = values(connection_curvature(nc));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            TensorValue lhs({up(n), down(n)}), rhs({up(n), down(n)});
            for (int x = 0; x < n; ++x)
                for (int y = 0; y < n; ++y) {
                    double v = 0;
                    for (int a = 0; a < n; ++a)
                        for (int b = 0; b < n; ++b) v += R(a, b, x, y) * Pi(a, i) * Pi(b, j);
                    lhs(x, y) = v;
                    double w = Rperp(i, j, x, y);
                    for (int k = 0; k < m; ++k)
                        for (int l = 0; l < m; ++l) {
                            double jk = 0, ik = 0;
                            for (int z = 0; z < n; ++z) {
                                jk += g(y, z) * II(j, k, z);
                                ik += g(y, z) * II(i, k, z);
                            }
                            w -= gsi(k, l) * (II(i, l, x) * jk - II(j, l, x) * ik);
                        }
                    rhs(x, y) = w;
                }
            auto d = matmul(matmul(N, lhs - rhs), N);
            out.ricci = std::max(out.ricci, max_abs(d));
        }
    (void)gs;
    return out;
}

ConformalCheck conformal_transform_check(const Geometry& geo, const Embedding& emb, const Field& omega,
                                         const Point& q) {
    auto a = submanifold_pack(geo, emb, q);
    Geometry h = rescale(geo, omega);
    auto b = submanifold_pack(h, emb, q);
    Point p = emb.map.valfn(q);
    auto ups = upsilon(omega, p, geo.backend);
    double w = omega.valfn(p)[0];
    int m = a.m, n = a.n;
    TensorValue ginv({up(n), up(n)});
    ginv.data = mat_inverse(geo.metric.valfn(p), n);
    std::vector<double> nu(n, 0.0);  // N^c_d Upsilon^d
    for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d)
            for (int e = 0; e < n; ++e) nu[c] += a.N(c, d) * ginv(d, e) * ups(e);
    ConformalCheck r;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int c = 0; c < n; ++c) {
                r.II = std::max(r.II, std::fabs(b.II(i, j, c) - (a.II(i, j, c) - a.g(i, j) * nu[c])));
                r.IIo = std::max(r.IIo, std::fabs(b.IIo(i, j, c) - a.IIo(i, j, c)));
            }
    for (int c = 0; c < n; ++c) r.H = std::max(r.H, std::fabs(w * w * b.H(c) - (a.H(c) - nu[c])));
    return r;
}

}  // namespace tl
