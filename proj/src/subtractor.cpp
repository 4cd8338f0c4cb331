#include "subtractor.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace tl {

namespace {

template <class S>
BasicTensor<S> mm(const BasicTensor<S>& a, const BasicTensor<S>& b) {
    return contract(a, b, {{1, 0}});
}

// h_out^-1 M^T h_in for M : (up D, down E) -> (up E, down D)
template <class S>
BasicTensor<S> adjoint(const BasicTensor<S>& M, const BasicTensor<S>& hEinv, const BasicTensor<S>& hD) {
    int D = M.dim(0), E = M.dim(1);
    BasicTensor<S> t({tup(E), tdown(D)});
    for (int J = 0; J < E; ++J)
        for (int A = 0; A < D; ++A) {
            S acc{};
            for (int K = 0; K < E; ++K) {
                if (value_of(hEinv(J, K)) == 0.0 && !std::is_same_v<S, Jet>) continue;
                for (int C = 0; C < D; ++C) acc += hEinv(J, K) * M(C, K) * hD(C, A);
            }
            t(J, A) = acc;
        }
    return t;
}

template <class S>
BasicTensor<S> commutator(const BasicTensor<S>& a, const BasicTensor<S>& b) {
    return mm(a, b) - mm(b, a);
}

double factorial(int k) {
    double f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}


// S_i as (Ds x Ds) matrices from F
std::vector<JetTensor> difference_from_F(const JetTensor& F, const JetTensor& ginv) {
    int m = F.dim(0), Ds = m + 2;
    std::vector<JetTensor> out;
    for (int i = 0; i < m; ++i) {
        JetTensor S({tup(Ds), tdown(Ds)});
        for (int k = 0; k < m; ++k) {
            Jet v;
            for (int j = 0; j < m; ++j) v += ginv(k, j) * F(i, j);
            S(1 + k, 0) = v;
            S(m + 1, 1 + k) = -F(i, k);
        }
        out.push_back(S);
    }
    return out;
}

JetTensor tractor_nform_jets(const SubJets& sj) { return tractor_normal_form_jets(sj.s); }

JetTensor star_jets(const SubJets& sj, const JetTensor& nform) {
    Jet vol = tractor_volume_component(sj.s.amb.g, sj.orientation);
    return hodge_star(nform, sj.hinv, vol);
}

TensorValue stack(const std::vector<TensorValue>& v, int m) {
    std::vector<IndexSpec> ix{down(m)};
    for (auto& s : v[0].idx) ix.push_back(s);
    TensorValue r(ix);
    size_t blk = v[0].size();
    for (int i = 0; i < m; ++i)
        std::copy(v[i].data.begin(), v[i].data.end(), r.data.begin() + i * blk);
    return r;
}

// move the trailing derivative index to the front
TensorValue derivative_first(const TensorValue& t) {
    std::vector<int> perm{t.rank() - 1};
    for (int k = 0; k + 1 < t.rank(); ++k) perm.push_back(k);
    return permute(t, perm);
}

}  // namespace

JetTensor tractor_normal_form_jets(const SigmaJets& s) {
    int n = s.n, m = s.m, d = n - m;
    const JetTensor& nf = s.nform;
    JetTensor x(std::vector<IndexSpec>(d - 1, down(n)));
    std::vector<int> a(d - 1, 0), full(d, 0);
    do {
        Jet v;
        for (int b = 0; b < n; ++b) {
            full[0] = b;
            for (int k = 1; k < d; ++k) full[k] = a[k - 1];
            v += s.H(b) * nf.at(full);
        }
        x.at(a) = v * (double)d;
    } while (d > 1 && x.next(a));
    return form_from_slots<Jet>(n, d, nullptr, &nf, nullptr, &x);
}

SubJets sub_jets(const Geometry& geo, const Embedding& emb, const Point& q, int order) {
    SubJets sj;
    sj.s = sigma_jets(geo, emb, q, order);
    const SigmaJets& s = sj.s;
    int m = s.m, n = s.n, D = n + 2, Ds = m + 2;
    sj.m = m;
    sj.n = n;
    sj.D = D;
    sj.Ds = Ds;
    sj.orientation = geo.orientation;
    if (!s.amb.conformal)
        throw std::invalid_argument("tractor calculus needs n >= 3 or a supplied Moebius Schouten tensor");

    Connection Aamb = tractor_connection(s.amb);
    sj.A.dim = D;
    for (int i = 0; i < m; ++i) {
        JetTensor Ai({tup(D), tdown(D)});
        for (int a = 0; a < n; ++a)
            for (size_t x = 0; x < Ai.size(); ++x)
                if (Aamb.mats[a].data[x].typed()) Ai.data[x] += Aamb.mats[a].data[x] * s.Pi(a, i);
        sj.A.mats.push_back(Ai);
    }
    sj.h = tractor_metric_t(s.amb.g);
    sj.hinv = tractor_metric_inverse_t(s.amb.ginv);
    const JetTensor& gs = s.intr.g;
    const JetTensor& gsi = s.intr.ginv;
    sj.hs = tractor_metric_t(gs);
    sj.hsinv = tractor_metric_inverse_t(gsi);

    sj.Pij = JetTensor({down(m), down(m)});
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) {
            Jet v;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) v += s.Pi(a, i) * s.amb.P(a, b) * s.Pi(b, j);
            sj.Pij(i, j) = v;
            sj.Pij(j, i) = v;
        }
    std::vector<Jet> Hl(n);
    Jet H2;
    for (int c = 0; c < n; ++c) {
        for (int e = 0; e < n; ++e) Hl[c] += s.amb.g(c, e) * s.H(e);
        H2 += Hl[c] * s.H(c);
    }
    JetTensor base = sj.Pij;  // P + H.IIo + |H|^2 g / 2
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            Jet v = 0.5 * H2 * gs(i, j);
            for (int c = 0; c < n; ++c) v += Hl[c] * s.IIo(i, j, c);
            base(i, j) += v;
        }
    sj.F = JetTensor({down(m), down(m)});
    if (m >= 3) {
        sj.p = s.intr.P;
        sj.F = base - sj.p;
        sj.sigma = s.intr;
    } else {
        if (m == 2) {
            Jet io2, trw;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    for (int k = 0; k < m; ++k)
                        for (int l = 0; l < m; ++l) {
                            Jet gg = gsi(i, k) * gsi(j, l);
                            Jet dot, w;
                            for (int c = 0; c < n; ++c)
                                for (int e = 0; e < n; ++e) dot += s.amb.g(c, e) * s.IIo(i, j, c) * s.IIo(k, l, e);
                            for (int a = 0; a < n; ++a)
                                for (int b = 0; b < n; ++b)
                                    for (int c = 0; c < n; ++c)
                                        for (int e = 0; e < n; ++e)
                                            w += s.amb.W(a, b, c, e) * s.Pi(a, i) * s.Pi(b, j) * s.Pi(c, k) * s.Pi(e, l);
                            io2 += gg * dot;
                            trw += gg * w;
                        }
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) sj.F(i, j) = 0.25 * (io2 - trw) * gs(i, j);
        }
        sj.p = base - sj.F;
        sj.sigma = curvature_jets(gs, &sj.p);
    }
    sj.Dint = tractor_connection(sj.sigma);

    sj.Nt = JetTensor({tup(D), tdown(D)});
    for (int a = 0; a < n; ++a) {
        sj.Nt(1 + a, 0) = s.H(a);
        sj.Nt(D - 1, 1 + a) = Hl[a];
        for (int b = 0; b < n; ++b) sj.Nt(1 + a, 1 + b) = s.N(a, b);
    }
    sj.Nt(D - 1, 0) = H2;

    Jet one = const_like(gs(0, 0), 1.0);
    sj.Pit = JetTensor({tup(D), tdown(Ds)});
    sj.Pit(0, 0) = one;
    for (int a = 0; a < n; ++a) {
        sj.Pit(1 + a, 0) = -s.H(a);
        for (int i = 0; i < m; ++i) sj.Pit(1 + a, 1 + i) = s.Pi(a, i);
    }
    sj.Pit(D - 1, 0) = -0.5 * H2;
    sj.Pit(D - 1, Ds - 1) = one;
    sj.Piinv = adjoint(sj.Pit, sj.hsinv, sj.h);

    sj.nablaH = covd(s.H, {&s.lc_pull}, m);
    JetTensor DIIo = covd(s.IIo, {&s.lc_sigma, &s.lc_sigma, &s.lc_pull}, m);  // (i, j, c, k)
    sj.divIIo = JetTensor({down(m), up(n)});
    for (int i = 0; i < m; ++i)
        for (int c = 0; c < n; ++c) {
            Jet v;
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k)
                    for (int e = 0; e < n; ++e) v += gsi(j, k) * s.N(c, e) * DIIo(i, j, e, k);
            sj.divIIo(i, c) = v;
        }

    // P_a^b
    JetTensor Pmix({down(n), up(n)});
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            Jet v;
            for (int e = 0; e < n; ++e) v += s.amb.P(a, e) * s.amb.ginv(e, b);
            Pmix(a, b) = v;
        }
    for (int i = 0; i < m; ++i) {
        JetTensor L({tup(D), tdown(Ds)});
        std::vector<Jet> w(n);
        for (int b = 0; b < n; ++b) {
            Jet v = -sj.nablaH(b, i);
            for (int a = 0; a < n; ++a) v += s.Pi(a, i) * Pmix(a, b);
            w[b] = v;
        }
        for (int c = 0; c < n; ++c) {
            Jet v;
            for (int b = 0; b < n; ++b) v += s.N(c, b) * w[b];
            L(1 + c, 0) = v;
            L(D - 1, 0) += Hl[c] * v;
            for (int j = 0; j < m; ++j) {
                L(1 + c, 1 + j) = s.IIo(i, j, c);
                L(D - 1, 1 + j) += Hl[c] * s.IIo(i, j, c);
            }
        }
        sj.L.push_back(L);
    }
    return sj;
}

TractorSubPack pack_from_sub_jets(const SubJets& sj) {
    const SigmaJets& s = sj.s;
    int m = sj.m, n = sj.n;
    TractorSubPack pk;
    pk.m = m;
    pk.n = n;
    pk.d = n - m;
    pk.rp = pack_from_jets(s);
    pk.Nt = values(sj.Nt);
    pk.Pit = values(sj.Pit);
    pk.Piinv = values(sj.Piinv);
    pk.h = values(sj.h);
    pk.hs = values(sj.hs);
    for (int i = 0; i < m; ++i) {
        pk.L.push_back(values(sj.L[i]));
        JetTensor dN = partial(sj.Nt, i) + commutator(sj.A.mats[i], sj.Nt);
        TensorValue Ld = values(mm(mm(sj.Nt, dN), sj.Pit));
        Ld *= -1.0;
        pk.L_deriv.push_back(Ld);
    }
    pk.F = values(sj.F);
    pk.p = values(sj.p);
    pk.Pij = values(sj.Pij);
    TensorValue gsi = values(s.intr.ginv), gs = values(s.intr.g);
    pk.jbar = 0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) pk.jbar += gsi(i, j) * pk.p(i, j);

    TensorValue N = values(s.N), Pi = values(s.Pi), g = values(s.amb.g), gi = values(s.amb.ginv);
    // mu from the slot formula (plus the divergence term for m >= 2)
    pk.mu = TensorValue({down(m), up(n)});
    for (int i = 0; i < m; ++i)
        for (int c = 0; c < n; ++c) {
            pk.mu(i, c) = pk.L[i](1 + c, 0);
            if (m >= 2) pk.mu(i, c) += values(sj.divIIo)(i, c) / (m - 1.0);
        }
    if (m >= 2) {
        TensorValue W = values(s.amb.W);
        pk.mu_weyl = TensorValue({down(m), up(n)});
        for (int i = 0; i < m; ++i)
            for (int c = 0; c < n; ++c) {
                double v = 0;
                for (int j = 0; j < m; ++j)
                    for (int k = 0; k < m; ++k) {
                        if (gsi(j, k) == 0.0) continue;
                        for (int a = 0; a < n; ++a)
                            for (int b = 0; b < n; ++b)
                                for (int e = 0; e < n; ++e)
                                    for (int f = 0; f < n; ++f) {
                                        double Nce = 0;
                                        for (int x = 0; x < n; ++x) Nce += N(c, x) * gi(x, e);
                                        v += gsi(j, k) * W(a, b, e, f) * Pi(a, i) * Pi(b, j) * Nce * Pi(f, k);
                                    }
                    }
                pk.mu_weyl(i, c) = -v / (m - 1.0);
            }
    }
    if (m >= 3) {
        TensorValue W = values(s.amb.W), IIo = values(s.IIo);
        TensorValue Nup({up(n), up(n)});
        for (int c = 0; c < n; ++c)
            for (int d = 0; d < n; ++d)
                for (int e = 0; e < n; ++e) Nup(c, d) += N(c, e) * gi(e, d);
        double WNN = 0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c)
                    for (int d = 0; d < n; ++d) WNN += W(a, b, c, d) * Nup(a, c) * Nup(b, d);
        double io2 = 0;
        TensorValue IIoIIo({down(m), down(m)});
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double v = 0;
                for (int k = 0; k < m; ++k)
                    for (int l = 0; l < m; ++l)
                        for (int c = 0; c < n; ++c)
                            for (int e = 0; e < n; ++e) v += gsi(k, l) * g(c, e) * IIo(i, k, c) * IIo(j, l, e);
                IIoIIo(i, j) = v;
            }
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) io2 += gsi(i, j) * IIoIIo(i, j);
        pk.F_weyl = TensorValue({down(m), down(m)});
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double wn = 0;
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b)
                        for (int c = 0; c < n; ++c)
                            for (int d = 0; d < n; ++d) wn += W(a, c, b, d) * Pi(a, i) * Pi(b, j) * Nup(c, d);
                pk.F_weyl(i, j) = (wn + WNN / (2.0 * (m - 1)) * gs(i, j) + IIoIIo(i, j) -
                                   io2 / (2.0 * (m - 1)) * gs(i, j)) /
                                  (m - 2.0);
            }
    }
    for (auto& S : difference_from_F(sj.F, s.intr.ginv)) pk.S.push_back(values(S));
    for (int i = 0; i < m; ++i) {
        JetTensor Dc = mm(sj.Piinv, partial(sj.Pit, i) + mm(sj.A.mats[i], sj.Pit));
        pk.S_checked.push_back(values(Dc - sj.Dint.mats[i]));
    }
    int D = sj.D;
    pk.Hmean = TensorValue({tup(D)});
    for (int a = 0; a < n; ++a) pk.Hmean(1 + a) = pk.rp.H(a);
    pk.Hmean(D - 1) = pk.Nt(D - 1, 0);
    JetTensor nf = tractor_nform_jets(sj);
    pk.nform = values(nf);
    pk.star = values(star_jets(sj, nf));
    if (m == 2) {
        try {
            pk.cotton = values(sj.sigma.C);
        } catch (const std::exception&) {
            pk.cotton = TensorValue();
        }
    }
    return pk;
}

TractorSubPack tractor_sub_pack(const Geometry& geo, const Embedding& emb, const Point& q) {
    return pack_from_sub_jets(sub_jets(geo, emb, q, 3));
}

TensorValue normal_tractor_projector(const Geometry& geo, const Embedding& emb, const Point& q) {
    return values(sub_jets(geo, emb, q, 2).Nt);
}

std::vector<TensorValue> tractor_second_fundamental_form(const Geometry& geo, const Embedding& emb, const Point& q) {
    return tractor_sub_pack(geo, emb, q).L;
}

TensorValue mu_invariant(const Geometry& geo, const Embedding& emb, const Point& q) {
    return tractor_sub_pack(geo, emb, q).mu;
}

TensorValue fialkow(const Geometry& geo, const Embedding& emb, const Point& q) {
    return tractor_sub_pack(geo, emb, q).F;
}

std::vector<TensorValue> reconstruct_L(const TensorValue& IIo, const TensorValue& mu, const TensorValue& H,
                                       const TensorValue& divIIo, const TensorValue& g) {
    int m = IIo.dim(0), n = IIo.dim(2), D = n + 2, Ds = m + 2;
    if (m < 2) throw std::invalid_argument("reconstruct_L: m >= 2 required");
    if (g.rank() != 2 || g.dim(0) != n) throw TensorError("reconstruct_L: g must be the ambient metric");
    std::vector<double> Hl(n, 0.0);
    for (int c = 0; c < n; ++c)
        for (int e = 0; e < n; ++e) Hl[c] += g(c, e) * H(e);
    std::vector<TensorValue> out;
    for (int i = 0; i < m; ++i) {
        TensorValue L({tup(D), tdown(Ds)});
        for (int c = 0; c < n; ++c) {
            double x = mu(i, c) - divIIo(i, c) / (m - 1.0);
            L(1 + c, 0) = x;
            L(D - 1, 0) += Hl[c] * x;
            for (int j = 0; j < m; ++j) {
                L(1 + c, 1 + j) = IIo(i, j, c);
                L(D - 1, 1 + j) += Hl[c] * IIo(i, j, c);
            }
        }
        out.push_back(L);
    }
    return out;
}

std::vector<TensorValue> M_operator(const SubJets& sj, const JetTensor& omega) {
    const SigmaJets& s = sj.s;
    int m = sj.m, n = sj.n, D = sj.D, Ds = sj.Ds;
    if (m < 2) throw std::invalid_argument("M_operator: m >= 2 required");
    TensorValue om = values(omega), N = values(s.N), gsi = values(s.intr.ginv), g = values(s.amb.g);
    TensorValue Dom = values(covd(omega, {&s.lc_sigma, &s.lc_sigma, &s.lc_pull}, m));
    TensorValue H = values(s.H);
    std::vector<double> Hl(n, 0.0);
    for (int c = 0; c < n; ++c)
        for (int e = 0; e < n; ++e) Hl[c] += g(c, e) * H(e);
    std::vector<TensorValue> out;
    for (int i = 0; i < m; ++i) {
        TensorValue M({tup(D), tdown(Ds)});
        for (int c = 0; c < n; ++c) {
            double div = 0;
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k)
                    for (int e = 0; e < n; ++e) div += gsi(j, k) * N(c, e) * Dom(i, j, e, k);
            M(1 + c, 0) = -div / (m - 1.0);
            M(D - 1, 0) += -Hl[c] * div / (m - 1.0);
            for (int j = 0; j < m; ++j) {
                M(1 + c, 1 + j) = om(i, j, c);
                M(D - 1, 1 + j) += Hl[c] * om(i, j, c);
            }
        }
        out.push_back(M);
    }
    return out;
}

namespace {

TensorValue pos_tractor_metric(const TensorValue& g, bool inverse_needed) {
    int n = g.dim(0), D = n + 2;
    TensorValue M({tdown(D), tdown(D)});
    M(0, 0) = 1.0;
    M(D - 1, D - 1) = 1.0;
    TensorValue gg = g;
    if (inverse_needed) gg.data = mat_inverse(g.data, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) M(1 + a, 1 + b) = gg(a, b);
    return M;
}

double norm_with(const TensorValue& t, const TensorValue& g, const TensorValue& gs) {
    int n = g.dim(0), m = gs.dim(0);
    TensorValue gi = g, gsi = gs;
    gi.data = mat_inverse(g.data, n);
    gsi.data = mat_inverse(gs.data, m);
    TensorValue tu = pos_tractor_metric(g, false), td = pos_tractor_metric(g, true);
    TensorValue su = pos_tractor_metric(gs, false), sd = pos_tractor_metric(gs, true);
    return metric_norm(t, [&](const IndexSpec& s) -> TensorValue {
        bool upv = s.var == Variance::up;
        if (s.kind == IndexKind::tangent) {
            if (s.dim == n) return upv ? g : gi;
            if (s.dim == m) return upv ? gs : gsi;
        } else {
            if (s.dim == n + 2) return upv ? tu : td;
            if (s.dim == m + 2) return upv ? su : sd;
        }
        throw TensorError("sub_norm: unexpected index");
    });
}

}  // namespace

double sub_norm(const TensorValue& t, const TractorSubPack& pk) {
    TensorValue g({down(pk.n), down(pk.n)});
    for (int a = 0; a < pk.n; ++a)
        for (int b = 0; b < pk.n; ++b) g(a, b) = pk.h(1 + a, 1 + b);
    return norm_with(t, g, pk.rp.g);
}

TheoremResiduals theorem_residuals(const Geometry& geo, const Embedding& emb, const Point& q) {
    SubJets sj = sub_jets(geo, emb, q, 3);
    TractorSubPack pk = pack_from_sub_jets(sj);
    int m = sj.m, d = sj.n - sj.m;
    TheoremResiduals r;
    r.L = sub_norm(stack(pk.L, m), pk);
    r.nablaNproj = sub_norm(derivative_first(values(covd(sj.Nt, {&sj.A, &sj.A}, m))), pk);
    JetTensor nf = tractor_nform_jets(sj);
    std::vector<const Connection*> cn(d, &sj.A);
    r.nablaNform = sub_norm(derivative_first(values(covd(nf, cn, m))), pk) / std::sqrt(factorial(d));
    JetTensor st = star_jets(sj, nf);
    std::vector<const Connection*> cs(m + 2, &sj.A);
    r.nablaStar = sub_norm(derivative_first(values(covd(st, cs, m))), pk) / std::sqrt(factorial(m + 2));
    return r;
}

TractorGcr tractor_gcr_residuals(const Geometry& geo, const Embedding& emb, const Point& q) {
    TractorGcr out;
    if (geo.backend.mode == DiffMode::fd) return out;
    SubJets sj = sub_jets(geo, emb, q, 4);
    const SigmaJets& s = sj.s;
    int m = sj.m, n = sj.n, D = sj.D;
    TensorValue Om = tractor_curvature(geo, s.p);  // (a, b, X, Y)
    TensorValue Pi = values(s.Pi);
    auto Sj = difference_from_F(sj.F, s.intr.ginv);
    std::vector<JetTensor> Dc;
    for (int i = 0; i < m; ++i) Dc.push_back(sj.Dint.mats[i] + Sj[i]);
    TensorValue RD = values(connection_curvature(sj.Dint));
    TensorValue Nt = values(sj.Nt), Pit = values(sj.Pit), Piinv = values(sj.Piinv);
    TensorValue h = values(sj.h), hsinv = values(sj.hsinv);
    // normal tractor connection N A N + (2N - 1) dN
    Connection An;
    An.dim = D;
    for (int i = 0; i < m; ++i) {
        JetTensor dN = partial(sj.Nt, i);
        JetTensor a = mm(mm(sj.Nt, sj.A.mats[i]), sj.Nt);
        JetTensor t = mm(sj.Nt, dN);
        for (size_t x = 0; x < a.size(); ++x) a.data[x] += 2.0 * t.data[x] - dN.data[x];
        An.mats.push_back(a);
    }
    TensorValue RN = values(connection_curvature(An));
    std::vector<TensorValue> Lv, Ldag;
    for (int i = 0; i < m; ++i) {
        Lv.push_back(values(sj.L[i]));
        Ldag.push_back(adjoint(Lv[i], hsinv, h));
    }
    auto block = [](const TensorValue& T, int i, int j, int dim) {
        TensorValue r({tup(dim), tdown(dim)});
        for (int x = 0; x < dim; ++x)
            for (int y = 0; y < dim; ++y) r(x, y) = T(i, j, x, y);
        return r;
    };
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            if (i == j) continue;
            TensorValue Oij({tup(D), tdown(D)});
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    double w = Pi(a, i) * Pi(b, j);
                    if (w == 0.0) continue;
                    for (int x = 0; x < D; ++x)
                        for (int y = 0; y < D; ++y) Oij(x, y) += w * Om(a, b, x, y);
                }
            // Gauss
            TensorValue lhs = mm(mm(Piinv, Oij), Pit);
            TensorValue rhs = block(RD, i, j, sj.Ds);
            rhs += values(partial(Sj[j], i) - partial(Sj[i], j) + commutator(sj.Dint.mats[i], Sj[j]) -
                          commutator(sj.Dint.mats[j], Sj[i]) + commutator(Sj[i], Sj[j]));
            rhs -= mm(Ldag[i], Lv[j]) - mm(Ldag[j], Lv[i]);
            out.gauss = std::max(out.gauss, max_abs(lhs - rhs));
            // Codazzi
            auto tilde = [&](int a, int b) {  // N (d_a L_b + A_a L_b) - L_b Dcheck_a
                return values(mm(sj.Nt, partial(sj.L[b], a) + mm(sj.A.mats[a], sj.L[b])) - mm(sj.L[b], Dc[a]));
            };
            TensorValue cl = mm(mm(Nt, Oij), Pit);
            TensorValue cr = tilde(i, j) - tilde(j, i);
            out.codazzi = std::max(out.codazzi, max_abs(cl - cr));
            // Ricci
            TensorValue rl = mm(mm(Nt, Oij), Nt);
            TensorValue rr = mm(mm(Nt, block(RN, i, j, D)), Nt) - (mm(Lv[i], Ldag[j]) - mm(Lv[j], Ldag[i]));
            out.ricci = std::max(out.ricci, max_abs(rl - rr));
        }
    out.available = true;
    return out;
}

double checked_connection_residual(const Geometry& geo, const Embedding& emb, const Point& q, unsigned seed) {
    SubJets sj = sub_jets(geo, emb, q, 3);
    int m = sj.m, Ds = sj.Ds;
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-1, 1);
    const JetSpace* sp = sj.s.phi[0].space();
    int ord = sj.s.phi[0].order();
    JetTensor V({tup(Ds)});
    for (int J = 0; J < Ds; ++J) {
        Jet v(sp, ord, U(rng));
        for (int i = 0; i < m; ++i) v += U(rng) * Jet::variable(sp, ord, i, 0.0);
        V(J) = v;
    }
    auto Sj = difference_from_F(sj.F, sj.s.intr.ginv);
    double r = 0;
    for (int i = 0; i < m; ++i) {
        JetTensor W = mm(sj.Pit, V);
        JetTensor dW = partial(W, i) + mm(sj.A.mats[i], W);
        JetTensor lhs = mm(sj.Piinv, dW) - (partial(V, i) + mm(sj.Dint.mats[i], V));
        r = std::max(r, max_abs(values(lhs - mm(Sj[i], V))));
    }
    return r;
}

ClassificationReport classify(const Geometry& geo, const Embedding& emb, const std::vector<Point>& qs,
                              std::optional<double> tol) {
    ClassificationReport rep;
    rep.tol = tol ? *tol : (geo.backend.mode == DiffMode::fd ? 1e-3 : 1e-6);
    double scale = 1;
    for (auto& q : qs) {
        TractorSubPack pk = tractor_sub_pack(geo, emb, q);
        int m = pk.m;
        SampleInvariants si;
        si.q = q;
        si.IIo = sub_norm(pk.rp.IIo, pk);
        si.II = sub_norm(pk.rp.II, pk);
        si.H = sub_norm(pk.rp.H, pk);
        si.mu = sub_norm(pk.mu, pk);
        si.F = sub_norm(pk.F, pk);
        double tr = 0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) tr += pk.rp.ginv(i, j) * pk.F(i, j);
        si.fialkow_coefficient = tr / m;
        TensorValue tf = pk.F;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) tf(i, j) -= tr / m * pk.rp.g(i, j);
        si.F_tracefree = sub_norm(tf, pk);
        si.L = sub_norm(stack(pk.L, m), pk);
        si.S = sub_norm(stack(pk.S, m), pk);
        rep.samples.push_back(si);
    }
    // ambient Schouten norm at the image points
    for (size_t k = 0; k < qs.size(); ++k) {
        Point p = emb.map.valfn(qs[k]);
        auto cp = curvature_pack(geo, p);
        if (cp.conformal) {
            TensorValue gi = cp.ginv;
            rep.samples[k].P = metric_norm(cp.P, cp.g, gi);
        }
        scale = std::max({scale, rep.samples[k].P, rep.samples[k].II});
    }
    rep.scale = scale;
    for (auto& si : rep.samples) {
        rep.max_IIo = std::max(rep.max_IIo, si.IIo);
        rep.max_mu = std::max(rep.max_mu, si.mu);
        rep.max_F = std::max(rep.max_F, si.F);
        rep.max_F_tracefree = std::max(rep.max_F_tracefree, si.F_tracefree);
        rep.max_L = std::max(rep.max_L, si.L);
        rep.max_S = std::max(rep.max_S, si.S);
    }
    double thr = rep.tol * scale;
    rep.umbilic = rep.max_IIo < thr;
    rep.distinguished = rep.max_L < thr;
    rep.cc = rep.distinguished && rep.max_F_tracefree < thr;
    rep.scc = rep.distinguished && rep.max_F < thr;
    return rep;
}

MeanCurvatureReport mean_curvature_tractor(const Geometry& geo, const Embedding& emb, const Field& sigma,
                                           const std::vector<Point>& qs, double tol) {
    MeanCurvatureReport rep;
    for (auto& q : qs) {
        SubJets sj = sub_jets(geo, emb, q, 3);
        const SigmaJets& s = sj.s;
        int n = sj.n, D = sj.D, m = sj.m;
        JetTensor I({tup(D)}, Jet{}, 1);
        if (!sigma.valfn) {
            I(0) = const_like(s.amb.g(0, 0), 1.0);
            I(D - 1) = -s.amb.J * (1.0 / n);
        } else {
            auto cj = curvature_at(geo, s.p, 3);
            Jet sg = field_jet(sigma, s.p, 3, geo.backend)[0];
            JetTensor In = scale_tractor_jet(cj, sg);
            Composer comp(s.phi, n);
            I = compose_tensor(In, comp);
        }
        TensorValue Iv = values(I);
        if (max_abs(Iv) == 0.0) throw std::invalid_argument("scale tractor vanishes");
        JetTensor HA = mm(sj.Nt, I);
        TensorValue HAv = values(HA), h = values(sj.h);
        double nii = 0;
        for (int A = 0; A < D; ++A)
            for (int B = 0; B < D; ++B) nii += h(A, B) * Iv(A) * HAv(B);
        TractorSubPack pk;
        pk.m = m;
        pk.n = n;
        pk.h = h;
        pk.rp.g = values(s.intr.g);
        double in = sub_norm(HAv, pk);
        TensorValue dH = values(covd(HA, {&sj.A}, m));  // (A, i)
        TensorValue Nt = values(sj.Nt);
        TensorValue nd = contract(Nt, dH, {{1, 0}});
        rep.HA.push_back(HAv);
        rep.NII.push_back(nii);
        rep.IN.push_back(in);
        rep.parallel.push_back(sub_norm(nd, pk));
    }
    double lo = 1e300, hi = -1e300, inmax = 0, parmax = 0;
    for (size_t k = 0; k < qs.size(); ++k) {
        lo = std::min(lo, rep.NII[k]);
        hi = std::max(hi, rep.NII[k]);
        inmax = std::max(inmax, rep.IN[k]);
        parmax = std::max(parmax, rep.parallel[k]);
    }
    rep.minimal = inmax < tol;
    rep.cmc = qs.empty() || hi - lo < tol;
    rep.parallel_mean_curvature = parmax < tol;
    return rep;
}

}  // namespace tl
