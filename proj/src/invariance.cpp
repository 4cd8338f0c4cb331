#include "invariance.hpp"

#include <cmath>
#include <random>

namespace tl {

namespace {

// Schouten law at p; returns the max component residual
double schouten_residual(const Geometry& geo, const Geometry& hat, const Field& omega, const Point& p) {
    int n = geo.n;
    auto a = curvature_pack(geo, p), b = curvature_pack(hat, p);
    if (!a.conformal || !b.conformal) return 0;
    auto oj = field_jet(omega, p, 2, geo.backend)[0];
    double w = oj.value();
    std::vector<double> Y(n), dY(n * n), Yu(n, 0.0);
    for (int i = 0; i < n; ++i) Y[i] = oj.d(i).value() / w;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double d2 = oj.d(i).d(j).value() / w - Y[i] * Y[j];
            for (int c = 0; c < n; ++c) d2 -= a.Gamma(c, i, j) * Y[c];
            dY[i * n + j] = d2;
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) Yu[i] += a.ginv(i, j) * Y[j];
    double y2 = 0;
    for (int i = 0; i < n; ++i) y2 += Yu[i] * Y[i];
    double r = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            r = std::max(r, std::fabs(b.P(i, j) - (a.P(i, j) - dY[i * n + j] + Y[i] * Y[j] - 0.5 * y2 * a.g(i, j))));
    return r;
}

double weyl_residual(const Geometry& geo, const Geometry& hat, const Point& p) {
    auto a = curvature_pack(geo, p), b = curvature_pack(hat, p);
    if (!a.conformal || a.W.size() == 0) return 0;
    // W_ab^c_d has weight 0 with one index raised
    auto wa = contract(a.W, a.ginv, {{2, 0}}), wb = contract(b.W, b.ginv, {{2, 0}});
    return max_abs(wa - wb);
}

// scale tractors of sigma = 1 and a non-constant density, recomputed in the new scale
void tractor_residuals(const Geometry& geo, const Geometry& hat, const Field& omega, const Point& p, double& res,
                       double& metric_res) {
    int n = geo.n, D = n + 2;
    auto pk = curvature_pack(geo, p);
    if (!pk.conformal) return;
    auto ups = upsilon(omega, p, geo.backend);
    double w = omega.valfn(p)[0];
    TensorValue M = tractor_rescale_matrix(pk.ginv, ups, w);
    std::vector<Field> sigmas{make_field(n, 1, [](const auto& x) { return std::vector{const_like(x[0], 1.0)}; }),
                              make_field(n, 1, [n](const auto& x) {
                                  auto s = const_like(x[0], 1.2);
                                  for (int a = 0; a < n; ++a) s += 0.3 * (a + 1) * x[a] * x[a] - 0.1 * x[a];
                                  return std::vector{s};
                              })};
    for (const Field& sg : sigmas) {
        // the same weight-1 density trivialized in Omega^2 g
        Field sh = make_field(n, 1, [sg, omega](const auto& x) {
            using T = std::decay_t<decltype(x[0])>;
            if constexpr (std::is_same_v<T, double>) return std::vector<T>{sg.valfn(x)[0] * omega.valfn(x)[0]};
            else return std::vector<T>{sg.jetfn(x)[0] * omega.jetfn(x)[0]};
        });
        auto I0 = scale_tractor(geo, sg, p), I1 = scale_tractor(hat, sh, p);
        for (int A = 0; A < D; ++A) {
            double s = 0;
            for (int B = 0; B < D; ++B) s += M(A, B) * I0(B);
            res = std::max(res, std::fabs(I1(A) - s));
        }
    }
    // M preserves the tractor metric
    auto h0 = tractor_metric(pk.g), h1 = tractor_metric(curvature_pack(hat, p).g);
    for (int A = 0; A < D; ++A)
        for (int B = 0; B < D; ++B) {
            double s = 0;
            for (int C = 0; C < D; ++C)
                for (int E = 0; E < D; ++E) s += M(C, A) * h1(C, E) * M(E, B);
            metric_res = std::max(metric_res, std::fabs(s - h0(A, B)));
        }
}

}  // namespace

InvarianceResiduals invariance_check(const Geometry& geo, const Embedding* emb, const Field& omega,
                                     const std::vector<Point>& qs, std::optional<double> tol) {
    Geometry hat = rescale(geo, omega);
    InvarianceResiduals r;
    for (const Point& q : qs) {
        Point p = emb ? emb->map.valfn(q) : q;
        r.schouten = std::max(r.schouten, schouten_residual(geo, hat, omega, p));
        r.weyl = std::max(r.weyl, weyl_residual(geo, hat, p));
        tractor_residuals(geo, hat, omega, p, r.tractor, r.tractor_metric);
        if (emb) {
            auto c = conformal_transform_check(geo, *emb, omega, q);
            r.second_ff = std::max({r.second_ff, c.II, c.H});
            r.tracefree_2ff = std::max(r.tracefree_2ff, c.IIo);
        }
    }
    if (emb) {
        r.before = classify(geo, *emb, qs, tol);
        r.after = classify(hat, *emb, qs, tol);
        r.verdicts_equal = r.before.umbilic == r.after.umbilic && r.before.distinguished == r.after.distinguished &&
                           r.before.cc == r.after.cc && r.before.scc == r.after.scc;
    }
    return r;
}

geolib::ExpQuadratic random_omega(int n, unsigned seed, double amp) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-amp, amp);
    geolib::ExpQuadratic w;
    w.b = u(rng);
    w.c.resize(n);
    for (auto& c : w.c) c = u(rng);
    w.Q.assign(n * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) w.Q[i * n + j] = w.Q[j * n + i] = u(rng);
    return w;
}

}  // namespace tl
