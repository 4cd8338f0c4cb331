#include "firstint.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>

namespace tl {

namespace {

double factorial(int k) {
    double f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

std::vector<int> iota_vec(int from, int to) {
    std::vector<int> v;
    for (int i = from; i < to; ++i) v.push_back(i);
    return v;
}

// k as a jet tensor with `deg` down tangent indices
JetTensor form_jets(const KYForm& k, const Point& p, int order, const DiffBackend& be) {
    auto c = field_jet(k.comps, p, order, be);
    JetTensor t(std::vector<IndexSpec>(k.degree, down(k.n)));
    if ((int)c.size() != (int)t.size()) throw std::invalid_argument("KY form component count mismatch");
    t.data = c;
    return t;
}

void require_schouten(const CurvatureJets& cj) {
    if (!cj.conformal) throw std::invalid_argument("n = 2 geometry without a Moebius structure has no Schouten tensor");
}

void check_ky(const Geometry& geo, const KYForm& k, const Point& p) {
    if (k.n != geo.n) throw std::invalid_argument("KY form dimension differs from geometry");
    if (k.degree < 0 || k.degree >= geo.n) throw std::invalid_argument("KY form degree out of range");
    if ((int)p.size() != geo.n) throw std::invalid_argument("point dimension mismatch");
}

struct Decomp {
    JetTensor T;     // nabla_{a1} k_{a2..}
    JetTensor div;   // nabla^c k_{c a3..}
    JetTensor nu;    // (deg / (n - deg + 1)) div
    JetTensor middle;
};

Decomp decompose(const CurvatureJets& cj, const Connection& lc, const JetTensor& kt) {
    int n = cj.n, p = kt.rank();
    std::vector<const Connection*> conns(p, &lc);
    JetTensor dk = covd(kt, conns, n);
    std::vector<int> perm{p};
    for (int i = 0; i < p; ++i) perm.push_back(i);
    Decomp d;
    d.T = permute(dk, perm);
    d.div = contract(cj.ginv, d.T, {{0, 0}, {1, 1}});
    d.nu = d.div;
    d.nu *= (double)p / (n - p + 1.0);
    JetTensor gnu = alt(outer(cj.g, d.nu), iota_vec(1, p + 1));
    d.middle = d.T - alt(d.T, iota_vec(0, p + 1)) - gnu;
    return d;
}

// trace-free part of nabla nabla sigma + P sigma
JetTensor almost_einstein_defect(const CurvatureJets& cj, const Connection& lc, const Jet& sigma) {
    int n = cj.n;
    JetTensor s({}, Jet{});
    s.data[0] = sigma;
    JetTensor ds = covd(s, {}, n);
    JetTensor dds = covd(ds, {&lc}, n);
    JetTensor E = dds;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) E(a, b) = dds(a, b) + cj.P(a, b) * sigma;
    Jet tr = contract(cj.ginv, E, {{0, 0}, {1, 1}}).data[0];
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) E(a, b) -= cj.g(a, b) * tr * (1.0 / n);
    return E;
}

double pos_norm(const TensorValue& t, const TensorValue& g, const TensorValue& gi) {
    return metric_norm(t, g, gi);
}

}  // namespace

double ky_residual(const Geometry& geo, const KYForm& k, const Point& p) {
    check_ky(geo, k, p);
    int order = k.degree == 0 ? 2 : 1;
    CurvatureJets cj = curvature_at(geo, p, order + 1);
    Connection lc = lc_connection(cj);
    TensorValue g = values(cj.g), gi = values(cj.ginv);
    if (k.degree == 0) {
        require_schouten(cj);
        auto s = field_jet(k.comps, p, 2, geo.backend);
        return pos_norm(values(almost_einstein_defect(cj, lc, s[0])), g, gi);
    }
    auto d = decompose(cj, lc, form_jets(k, p, 1, geo.backend));
    return pos_norm(values(d.middle), g, gi);
}

JetTensor bgg_split_jets(const Geometry& geo, const KYForm& k, const Point& p, int order) {
    check_ky(geo, k, p);
    int n = geo.n, deg = k.degree, d = deg + 1;
    CurvatureJets cj = curvature_at(geo, p, order + 2);
    require_schouten(cj);
    Connection lc = lc_connection(cj);
    if (deg == 0) {
        auto s = field_jet(k.comps, p, order + 2, geo.backend);
        JetTensor I = scale_tractor_jet(cj, s[0]);
        JetTensor h = tractor_metric_t(cj.g);
        return lower_all(I, h);
    }
    JetTensor kt = form_jets(k, p, order + 2, geo.backend);
    Decomp dc = decompose(cj, lc, kt);
    JetTensor z = dc.T;
    z *= 1.0 / d;
    // x slot
    std::vector<const Connection*> mconn(deg + 1, &lc);
    JetTensor dM = covd(dc.middle, mconn, n);
    JetTensor divM = contract(cj.ginv, dM, {{0, 0}, {1, deg + 1}});  // (a2..ad)
    JetTensor x = divM;
    x *= -1.0 / (n * (double)deg);
    JetTensor grad;
    if (deg == 1) {
        grad = covd(dc.div, {}, n);
    } else {
        std::vector<const Connection*> dconn(deg - 1, &lc);
        JetTensor dd = covd(dc.div, dconn, n);
        std::vector<int> perm{deg - 1};
        for (int i = 0; i < deg - 1; ++i) perm.push_back(i);
        grad = alt(permute(dd, perm), iota_vec(0, deg));
    }
    grad *= 1.0 / (n - deg + 1.0);
    x += grad;
    JetTensor Pup = contract(cj.P, cj.ginv, {{1, 0}});  // P_a^b
    JetTensor Pk = contract(Pup, kt, {{1, 0}});
    x += alt(Pk, iota_vec(0, deg));
    const JetTensor* w = deg >= 1 ? &dc.nu : nullptr;
    return form_from_slots<Jet>(n, d, &kt, &z, d >= 2 ? w : nullptr, &x);
}

SplitTractor bgg_split(const Geometry& geo, const KYForm& k, const Point& p) {
    int n = geo.n, d = k.degree + 1, D = n + 2;
    JetTensor Kj = bgg_split_jets(geo, k, p, 1);
    CurvatureJets cj = curvature_at(geo, p, 3);
    Connection A = tractor_connection(cj);
    std::vector<const Connection*> conns(d, &A);
    TensorValue dK = values(covd(Kj, conns, n));
    SplitTractor r;
    r.K = values(Kj);
    TensorValue g = values(cj.g), gi = values(cj.ginv);
    TensorValue h = tractor_metric(g), hi = tractor_metric_inverse(gi);
    // positive-definite comparison metrics diag(1, g, 1)
    auto pos = [&](const IndexSpec& s) {
        if (s.kind == IndexKind::tangent) return s.var == Variance::down ? gi : g;
        TensorValue m({s.var == Variance::down ? tup(D) : tdown(D), s.var == Variance::down ? tup(D) : tdown(D)});
        m(0, 0) = m(D - 1, D - 1) = 1.0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) m(1 + a, 1 + b) = s.var == Variance::down ? gi(a, b) : g(a, b);
        return m;
    };
    double df = factorial(d);
    r.normality = metric_norm(dK, pos) / std::sqrt(df);
    r.KK = tractor_dot(r.K, r.K, h, hi) / df;
    double Kn2 = std::pow(metric_norm(r.K, pos), 2) / df;
    double tol = 1e-10 * std::max(1.0, Kn2);
    r.causal = r.KK < -tol ? "timelike" : (r.KK > tol ? "spacelike" : "null");
    r.simplicity = 0;
    if (d >= 2 && 2 * d - 1 <= D && Kn2 > 0) {
        for (int A0 = 0; A0 < D; ++A0) {
            TensorValue v(std::vector<IndexSpec>(d - 1, tdown(D)));
            std::vector<int> m(d - 1, 0), full(d);
            do {
                full[0] = A0;
                for (int j = 1; j < d; ++j) full[j] = m[j - 1];
                v.at(m) = r.K.at(full);
            } while (d > 1 && v.next(m));
            r.simplicity = std::max(r.simplicity, frob(wedge(v, r.K)));
        }
        r.simplicity /= frob(r.K) * frob(r.K);
    }
    double sthr = geo.backend.mode == DiffMode::fd ? 1e-4 : 1e-8;
    r.simple = r.simplicity < sthr;
    return r;
}

ConservedReport conserved_quantity(const Geometry& geo, const Embedding& emb, const KYForm& k, const Point& q) {
    int n = geo.n, m = emb.m, d = n - m;
    if (k.degree + 1 != d) throw std::invalid_argument("KY tractor degree must equal the codimension");
    SigmaJets s = sigma_jets(geo, emb, q, 3);
    JetTensor Kn = bgg_split_jets(geo, k, s.p, 1);
    Composer comp(s.phi, n);
    JetTensor K = compose_tensor(Kn, comp);
    JetTensor N = tractor_normal_form_jets(s);
    JetTensor h = tractor_metric_t(s.amb.g), hi = tractor_metric_inverse_t(s.amb.ginv);
    Jet Q = tractor_dot(K, N, h, hi);
    ConservedReport r;
    r.value = Q.value();
    for (int i = 0; i < m; ++i) r.derivative.push_back(Q.d(i).value());

    // explicit slots: H_c k_{a2..} N^{c a2..} + (1/d) nabla_{a1} k_{a2..} N^{a1..}
    TensorValue g = values(s.amb.g), gi = values(s.amb.ginv), H = values(s.H), Pi = values(s.Pi);
    TensorValue nf = values(s.nform);
    TensorValue Nup = nf;
    for (int j = 0; j < d; ++j) {
        auto c = contract(gi, Nup, {{1, j}});
        std::vector<int> perm;
        for (int t = 1; t <= j; ++t) perm.push_back(t);
        perm.push_back(0);
        for (int t = j + 1; t < d; ++t) perm.push_back(t);
        Nup = permute(c, perm);
    }
    CurvatureJets cj = curvature_at(geo, s.p, 2);
    Connection lc = lc_connection(cj);
    JetTensor kt = form_jets(k, s.p, 1, geo.backend);
    TensorValue kv = values(kt);
    TensorValue T = values(decompose(cj, lc, kt).T);
    TensorValue Hl = contract(g, H, {{1, 0}});
    double ev = 0;
    {
        TensorValue HN = contract(Hl, Nup, {{0, 0}});  // H_c N^{c a2..}
        for (size_t i = 0; i < kv.size(); ++i) ev += kv.data[i] * HN.data[i];
        for (size_t i = 0; i < T.size(); ++i) ev += T.data[i] * Nup.data[i] / d;
    }
    r.explicit_value = ev;

    // -1/2 W_{a1 a2 i}^e k_{e a3..} N^{a1 a2 a3..}
    r.obstruction.assign(m, 0.0);
    if (d >= 2) {
        TensorValue W = values(s.amb.W);
        TensorValue Wup = contract(W, gi, {{3, 0}});       // (a1 a2 c e)
        TensorValue Wk = contract(Wup, kv, {{3, 0}});      // (a1 a2 c a3..)
        TensorValue WkPi = contract(Wk, Pi, {{2, 0}});     // (a1 a2 a3.. i)
        for (int i = 0; i < m; ++i) {
            double v = 0;
            std::vector<int> idx(d, 0), full(d + 1);
            do {
                for (int j = 0; j < d; ++j) full[j] = idx[j];
                full[d] = i;
                v += WkPi.at(full) * Nup.at(idx);
            } while (Nup.next(idx));
            r.obstruction[i] = -0.5 * v;
        }
    }
    for (int i = 0; i < m; ++i) {
        r.residual = std::max(r.residual, std::fabs(r.derivative[i]));
        r.obstruction_residual = std::max(r.obstruction_residual, std::fabs(r.derivative[i] - r.obstruction[i]));
    }
    return r;
}

// ---------------- zero-locus scan ----------------

namespace {

struct LocusEval {
    std::vector<double> F;  // X -| K components: (k, nu) or sigma
    Eigen::MatrixXd J;      // dF/dx
    Eigen::MatrixXd Jk;     // dk/dx
};

LocusEval locus_eval(const Geometry& geo, const KYForm& k, const Point& x) {
    int n = geo.n;
    LocusEval e;
    if (k.degree == 0) {
        auto s = field_jet(k.comps, x, 1, geo.backend);
        e.F = {s[0].value()};
        e.J.resize(1, n);
        for (int a = 0; a < n; ++a) e.J(0, a) = s[0].d(a).value();
        e.Jk = e.J;
        return e;
    }
    CurvatureJets cj = curvature_at(geo, x, 2);
    Connection lc = lc_connection(cj);
    JetTensor kt = form_jets(k, x, 2, geo.backend);
    Decomp dc = decompose(cj, lc, kt);
    int nk = (int)kt.size(), nn = (int)dc.nu.size();
    e.F.resize(nk + nn);
    e.J.resize(nk + nn, n);
    for (int i = 0; i < nk; ++i) {
        e.F[i] = kt.data[i].value();
        for (int a = 0; a < n; ++a) e.J(i, a) = kt.data[i].d(a).value();
    }
    for (int i = 0; i < nn; ++i) {
        e.F[nk + i] = dc.nu.data[i].value();
        for (int a = 0; a < n; ++a) e.J(nk + i, a) = dc.nu.data[i].d(a).value();
    }
    e.Jk = e.J.topRows(nk);
    return e;
}

double norm2(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return s;
}

// rank from singular values with a 1e3 gap between the zero and nonzero groups
int gap_rank(const Eigen::VectorXd& sv) {
    int r = (int)sv.size();
    if (r == 0 || sv(0) <= 1e-300) return 0;
    for (int i = 0; i + 1 < r; ++i)
        if (sv(i + 1) * 1e3 < sv(i)) return i + 1;
    return sv(r - 1) < 1e-12 * sv(0) ? r - 1 : r;
}

struct Refined {
    bool ok = false;
    Point x;
};

Refined newton(const Geometry& geo, const KYForm& k, Point x, const ScanRegion& reg, double tol) {
    int n = geo.n;
    Refined r;
    for (int it = 0; it < 60; ++it) {
        LocusEval e = locus_eval(geo, k, x);
        double f2 = norm2(e.F);
        if (std::sqrt(f2) < tol) {
            r.ok = true;
            r.x = x;
            return r;
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(e.J, Eigen::ComputeThinU | Eigen::ComputeThinV);
        int rk = std::max(1, gap_rank(svd.singularValues()));
        Eigen::VectorXd Fv = Eigen::Map<Eigen::VectorXd>(e.F.data(), (Eigen::Index)e.F.size());
        Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < rk; ++i) {
            double s = svd.singularValues()(i);
            if (s <= 0) continue;
            step -= svd.matrixV().col(i) * (svd.matrixU().col(i).dot(Fv) / s);
        }
        double alpha = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 30; ++bt, alpha *= 0.5) {
            Point y = x;
            for (int a = 0; a < n; ++a) y[a] += alpha * step(a);
            std::vector<double> Fy;
            try {
                Fy = locus_eval(geo, k, y).F;
            } catch (const std::exception&) {
                continue;
            }
            if (norm2(Fy) < f2) {
                x = y;
                moved = true;
                break;
            }
        }
        if (!moved) return r;
        for (int a = 0; a < n; ++a) {
            double span = reg.hi[a] - reg.lo[a];
            if (x[a] < reg.lo[a] - 0.1 * span || x[a] > reg.hi[a] + 0.1 * span) return r;
        }
    }
    return r;
}

// local graph parametrization of {k = 0} through x0 over the kernel of dk
Embedding locus_graph(const KYForm& k, const Point& x0, const Eigen::MatrixXd& Jk, int codim) {
    int n = k.n, m = n - codim;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Jk, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::MatrixXd V = svd.matrixV();
    Eigen::MatrixXd U = svd.matrixU().leftCols(codim);
    Eigen::MatrixXd Tn = V.rightCols(m), Nn = V.leftCols(codim);
    Eigen::MatrixXd B = U.transpose() * Jk * Nn;
    Eigen::MatrixXd Binv = B.inverse();
    Field comps = k.comps;
    int nk = (int)Jk.rows();
    auto solve = [=](const auto& s) {
        using T = std::decay_t<decltype(s[0])>;
        std::vector<T> y(codim, const_like(s[0], 0.0)), x(n);
        auto build = [&]() {
            for (int a = 0; a < n; ++a) {
                T v = const_like(s[0], x0[a]);
                for (int i = 0; i < m; ++i) v += Tn(a, i) * s[i];
                for (int r = 0; r < codim; ++r) v += Nn(a, r) * y[r];
                x[a] = v;
            }
        };
        for (int it = 0; it < 40; ++it) {
            build();
            std::vector<T> kv;
            if constexpr (std::is_same_v<T, double>) kv = comps.valfn(x);
            else kv = comps.jetfn(x);
            std::vector<T> G(codim, const_like(s[0], 0.0));
            for (int r = 0; r < codim; ++r)
                for (int i = 0; i < nk; ++i) G[r] += U(i, r) * kv[i];
            double gmax = 0;
            for (int r = 0; r < codim; ++r) gmax = std::max(gmax, std::fabs(value_of(G[r])));
            for (int r = 0; r < codim; ++r)
                for (int c = 0; c < codim; ++c) y[r] -= Binv(r, c) * G[c];
            if constexpr (std::is_same_v<T, double>)
                if (gmax < 1e-15) break;
        }
        build();
        return x;
    };
    Embedding e;
    e.m = m;
    e.n = n;
    e.name = "zero_locus";
    e.map = make_field(m, n, solve);
    return e;
}

template <class F>
void parallel_for(size_t count, int threads, F f) {
    threads = std::max(1, threads);
    if (threads == 1 || count < 2) {
        for (size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t]() {
            for (size_t i = t; i < count; i += threads) f(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace

LocusReport zero_locus_scan(const Geometry& geo, const KYForm& k, const ScanRegion& region, double refine_tol,
                            int threads, size_t max_points) {
    int n = geo.n;
    if ((int)region.lo.size() != n || (int)region.hi.size() != n) throw std::invalid_argument("scan region dimension");
    if (region.grid < 2) throw std::invalid_argument("scan grid must have at least 2 vertices per axis");
    for (int a = 0; a < n; ++a)
        if (!(region.hi[a] > region.lo[a])) throw std::invalid_argument("scan region bounds");
    double total = std::pow((double)region.grid, n);
    if (total > 5e7) throw std::invalid_argument("scan grid too large");
    LocusReport rep;

    Point center(n);
    for (int a = 0; a < n; ++a) center[a] = 0.5 * (region.lo[a] + region.hi[a]);
    SplitTractor sc = bgg_split(geo, k, center);
    rep.causal = sc.causal;
    double ntol = geo.backend.mode == DiffMode::fd ? 1e-4 : 1e-8;
    if (sc.causal == "timelike" && sc.normality < ntol * std::max(1.0, frob(sc.K))) {
        rep.short_circuit = true;
        rep.certificate = sc.KK;
        return rep;
    }

    // |k| on the grid
    size_t G = (size_t)region.grid, NV = (size_t)total;
    std::vector<double> h(n);
    for (int a = 0; a < n; ++a) h[a] = (region.hi[a] - region.lo[a]) / (G - 1);
    std::vector<size_t> stride(n);
    stride[n - 1] = 1;
    for (int a = n - 2; a >= 0; --a) stride[a] = stride[a + 1] * G;
    auto vertex = [&](size_t idx) {
        Point x(n);
        for (int a = 0; a < n; ++a) x[a] = region.lo[a] + h[a] * (double)((idx / stride[a]) % G);
        return x;
    };
    std::vector<double> val(NV);
    parallel_for(NV, threads, [&](size_t i) {
        auto v = k.comps.valfn(vertex(i));
        double s = 0;
        for (double c : v) s += c * c;
        val[i] = std::sqrt(s);
    });
    double L = 0, hmax = *std::max_element(h.begin(), h.end());
    for (size_t i = 0; i < NV; ++i)
        for (int a = 0; a < n; ++a)
            if ((i / stride[a]) % G + 1 < G) L = std::max(L, std::fabs(val[i + stride[a]] - val[i]) / h[a]);
    double thr = std::max(L * hmax * std::sqrt((double)n) * 0.5, refine_tol);
    std::vector<size_t> cand;
    for (size_t i = 0; i < NV; ++i) {
        if (val[i] > thr) continue;
        bool minimum = true;
        for (int a = 0; a < n && minimum; ++a) {
            size_t c = (i / stride[a]) % G;
            if (c > 0 && val[i - stride[a]] < val[i]) minimum = false;
            if (c + 1 < G && val[i + stride[a]] < val[i]) minimum = false;
        }
        if (minimum) cand.push_back(i);
    }
    rep.candidates = cand.size();

    std::vector<Refined> refined(cand.size());
    parallel_for(cand.size(), threads, [&](size_t i) {
        try {
            refined[i] = newton(geo, k, vertex(cand[i]), region, refine_tol);
        } catch (const std::exception&) {
            refined[i] = Refined{};
        }
    });
    std::vector<Point> pts;
    std::set<std::vector<long long>> seen;
    for (auto& r : refined) {
        if (!r.ok) {
            ++rep.diverged;
            continue;
        }
        ++rep.converged;
        bool inside = true;
        for (int a = 0; a < n; ++a)
            if (r.x[a] < region.lo[a] - 1e-9 || r.x[a] > region.hi[a] + 1e-9) inside = false;
        if (!inside) continue;
        std::vector<long long> key(n);
        for (int a = 0; a < n; ++a) key[a] = std::llround(r.x[a] / (0.5 * h[a]));
        if (seen.insert(key).second) pts.push_back(r.x);
    }
    rep.empty = pts.empty();
    if (pts.size() > max_points) {
        // evenly spaced deterministic subsample
        std::vector<Point> sub;
        for (size_t i = 0; i < max_points; ++i) sub.push_back(pts[i * pts.size() / max_points]);
        pts.swap(sub);
    }
    rep.points.resize(pts.size());
    parallel_for(pts.size(), threads, [&](size_t i) {
        LocusPoint lp;
        lp.x = pts[i];
        LocusEval e = locus_eval(geo, k, lp.x);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(e.J);
        auto sv = svd.singularValues();
        for (int j = 0; j < sv.size(); ++j) lp.singular_values.push_back(sv(j));
        lp.codim = gap_rank(sv);
        Eigen::JacobiSVD<Eigen::MatrixXd> svk(e.Jk);
        int rk = gap_rank(svk.singularValues());
        if (rk == lp.codim && rk >= 1 && rk < n) {
            try {
                Embedding emb = locus_graph(k, lp.x, e.Jk, rk);
                auto pk = tractor_sub_pack(geo, emb, Point(n - rk, 0.0));
                double s = 0;
                for (auto& Li : pk.L) s += std::pow(sub_norm(Li, pk), 2);
                lp.L = std::sqrt(s);
            } catch (const std::exception&) {
                lp.L = -1;
            }
        }
        SplitTractor st = bgg_split(geo, k, lp.x);
        lp.causal = st.causal;
        lp.simple = st.simple;
        rep.points[i] = lp;
    });
    if (!rep.points.empty()) {
        rep.codim = rep.points[0].codim;
        for (auto& p : rep.points) rep.codim = std::max(rep.codim, p.codim);
    }
    return rep;
}

}  // namespace tl
