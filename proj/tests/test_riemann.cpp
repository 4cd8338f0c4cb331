#include <cmath>
#include <random>

#include "doctest.h"
#include "riemann.hpp"

using namespace tl;

namespace {

Geometry conformally_flat(int n, double kappa) {
    Geometry g;
    g.n = n;
    g.name = "space_form";
    g.backend = DiffBackend::analytic();
    g.metric = make_field(n, n * n, [n, kappa](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        T r2 = x[0] * x[0];
        for (int i = 1; i < n; ++i) r2 += x[i] * x[i];
        T s = 1.0 + kappa * r2;
        T f = 4.0 / (s * s);
        std::vector<T> out(n * n, const_like(x[0], 0.0));
        for (int i = 0; i < n; ++i) out[i * n + i] = f;
        return out;
    });
    return g;
}

Geometry diag4(std::function<std::vector<Jet>(const std::vector<Jet>&)> jf,
               std::function<std::vector<double>(const std::vector<double>&)> vf) {
    Geometry g;
    g.n = 4;
    g.backend = DiffBackend::analytic();
    g.metric.nin = 4;
    g.metric.nout = 16;
    g.metric.jetfn = jf;
    g.metric.valfn = vf;
    return g;
}

template <class F>
Geometry diag_metric(int n, F f) {
    Geometry g;
    g.n = n;
    g.backend = DiffBackend::analytic();
    g.metric = make_field(n, n * n, [n, f](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        auto d = f(x);
        std::vector<T> out(n * n, const_like(x[0], 0.0));
        for (int i = 0; i < n; ++i) out[i * n + i] = d[i];
        return out;
    });
    return g;
}

// random positive-definite metric, polynomial/exponential entries
Geometry random_metric(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-0.3, 0.3);
    std::vector<double> c(n * n * n);
    for (auto& v : c) v = U(rng);
    Geometry g;
    g.n = n;
    g.backend = DiffBackend::analytic();
    g.metric = make_field(n, n * n, [n, c](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        std::vector<T> out(n * n, const_like(x[0], 0.0));
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                T s = const_like(x[0], i == j ? 1.0 : 0.0);
                for (int k = 0; k < n; ++k) s += 0.5 * c[(i * n + j) * n + k] * sin(x[k] + 0.3 * k + i - j);
                if (i == j) s = exp(s);
                out[i * n + j] = s;
                out[j * n + i] = s;
            }
        return out;
    });
    return g;
}

}  // namespace

TEST_CASE("curvature_pack: flat space") {
    Geometry g = conformally_flat(3, 0.0);
    g.metric = make_field(3, 9, [](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        std::vector<T> o(9, const_like(x[0], 0.0));
        o[0] = o[4] = o[8] = const_like(x[0], 1.0);
        return o;
    });
    auto pk = curvature_pack(g, {0.2, -0.1, 0.4});
    CHECK(max_abs(pk.R) < 1e-14);
    CHECK(max_abs(pk.P) < 1e-14);
    CHECK(max_abs(pk.C) < 1e-14);
}

TEST_CASE("curvature_pack: constant curvature oracle and Schouten identity") {
    for (int n : {2, 3, 4}) {
        Geometry g = conformally_flat(n, 1.0);
        Point p(n);
        for (int i = 0; i < n; ++i) p[i] = 0.1 * (i + 1);
        auto pk = curvature_pack(g, p);
        double err = 0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c)
                    for (int d = 0; d < n; ++d)
                        err = std::max(err, std::fabs(pk.Rdown(a, b, c, d) -
                                                      (pk.g(a, c) * pk.g(b, d) - pk.g(a, d) * pk.g(b, c))));
        CHECK(err < 1e-10);
        if (n == 2) {
            CHECK(pk.K == doctest::Approx(1.0).epsilon(1e-12));
            CHECK_FALSE(pk.conformal);
        } else {
            CHECK(pk.J == doctest::Approx(n / 2.0).epsilon(1e-12));
            CHECK(max_abs(pk.W) < 1e-10);
            CHECK(max_abs(pk.C) < 1e-9);
        }
    }
}

TEST_CASE("curvature_pack: doubly warped mixed Ricci") {
    auto g = diag_metric(4, [](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        T a = exp(2.0 * x[2]), b = exp(2.0 * x[0]);
        return std::vector<T>{a, a, b, b};
    });
    for (Point p : {Point{0, 0, 0, 0}, Point{0.3, -0.2, 0.5, 1.1}}) {
        auto pk = curvature_pack(g, p);
        CHECK(std::fabs(pk.Ric(0, 2) - 2.0) < 1e-8);
    }
}

TEST_CASE("curvature_pack: twisted product mixed Ricci") {
    auto g = diag_metric(4, [](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        T e = exp(2.0 * x[0] * x[2]);
        return std::vector<T>{const_like(x[0], 1.0), const_like(x[0], 1.0), e, e};
    });
    for (Point p : {Point{0, 0, 0, 0}, Point{0.3, -0.2, 0.5, 1.1}}) {
        auto pk = curvature_pack(g, p);
        CHECK(std::fabs(pk.Ric(0, 2) + 1.0) < 1e-8);
    }
}

TEST_CASE("curvature pack invariants on random metrics") {
    for (unsigned s = 1; s <= 5; ++s) {
        int n = 3 + s % 2;
        Geometry g = random_metric(n, s);
        Point p(n, 0.1 * s);
        auto pk = curvature_pack(g, p);
        double scale = std::max(1.0, max_abs(pk.Rdown));
        double e1 = 0, e2 = 0, e3 = 0, e4 = 0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c)
                    for (int d = 0; d < n; ++d) {
                        e1 = std::max(e1, std::fabs(pk.Rdown(a, b, c, d) + pk.Rdown(b, a, c, d)));
                        e2 = std::max(e2, std::fabs(pk.Rdown(a, b, c, d) + pk.Rdown(a, b, d, c)));
                        e3 = std::max(e3, std::fabs(pk.Rdown(a, b, c, d) + pk.Rdown(b, c, a, d) + pk.Rdown(c, a, b, d)));
                    }
        auto trW = contract(pk.ginv, pk.W, {{0, 0}, {1, 2}});
        e4 = max_abs(trW);
        CHECK(e1 < 1e-10 * scale);
        CHECK(e2 < 1e-10 * scale);
        CHECK(e3 < 1e-10 * scale);
        CHECK(e4 < 1e-8 * scale);
        // Ric = (n-2) P + J g
        double e5 = 0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                e5 = std::max(e5, std::fabs(pk.Ric(a, b) - ((n - 2) * pk.P(a, b) + pk.J * pk.g(a, b))));
        CHECK(e5 < 1e-10 * scale);
        if (n == 3) CHECK(max_abs(pk.W) < 1e-9 * scale);
    }
}

TEST_CASE("curvature pack: finite-difference backend agrees") {
    Geometry g = random_metric(3, 11);
    Point p{0.2, 0.1, -0.3};
    auto pa = curvature_pack(g, p);
    g.backend = DiffBackend::fd();
    auto pf = curvature_pack(g, p);
    CHECK(max_abs(pa.R - pf.R) < 1e-4);
    CHECK(max_abs(pa.C - pf.C) < 1e-2);
}

TEST_CASE("levi_civita_derivative") {
    Geometry g = random_metric(3, 4);
    Point p{0.3, -0.1, 0.2};
    TensorField gf{{down(3), down(3)}, g.metric, 0};
    CHECK(max_abs(levi_civita_derivative(g, gf, p)) < 1e-12);

    Field flat = make_field(3, 9, [](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        std::vector<T> o(9, const_like(x[0], 0.0));
        o[0] = o[4] = o[8] = const_like(x[0], 1.0);
        return o;
    });
    Geometry e{3, "flat", flat, DiffBackend::analytic(), 1, {}};
    TensorField v{{up(3)}, make_field(3, 3, [](const auto& x) {
                      using T = std::decay_t<decltype(x[0])>;
                      return std::vector<T>{const_like(x[0], 0.0), x[0], const_like(x[0], 0.0)};
                  }),
                  0};
    auto dv = levi_civita_derivative(e, v, p);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) CHECK(dv(a, b) == doctest::Approx(a == 1 && b == 0 ? 1.0 : 0.0));
}

TEST_CASE("rescale: identity, Schouten law and Weyl invariance") {
    for (unsigned s = 1; s <= 3; ++s) {
        Geometry g = random_metric(4, 20 + s);
        Point p{0.1, 0.2, -0.1, 0.05 * s};
        Field one = make_field(4, 1, [](const auto& x) { return std::vector{const_like(x[0], 1.0)}; });
        auto p0 = curvature_pack(g, p), p1 = curvature_pack(rescale(g, one), p);
        CHECK(max_abs(p0.R - p1.R) < 1e-14);
        double c0 = 0.2 * s;
        Field om = make_field(4, 1, [c0](const auto& x) {
            return std::vector{exp(c0 * x[0] - 0.3 * x[1] * x[2] + 0.2 * sin(x[3]))};
        });
        Geometry h = rescale(g, om);
        auto ph = curvature_pack(h, p);
        auto Y = upsilon(om, p, g.backend);
        TensorField yf{{down(4)}, make_field(4, 4, [c0](const auto& x) {
                           using T = std::decay_t<decltype(x[0])>;
                           return std::vector<T>{const_like(x[0], c0), -0.3 * x[2], -0.3 * x[1], 0.2 * cos(x[3])};
                       }),
                       0};
        auto dY = levi_civita_derivative(g, yf, p);
        double y2 = contract(contract(p0.ginv, Y, {{1, 0}}), Y, {{0, 0}}).data[0];
        double err = 0;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                err = std::max(err, std::fabs(ph.P(a, b) - (p0.P(a, b) - dY(b, a) + Y(a) * Y(b) - 0.5 * y2 * p0.g(a, b))));
        CHECK(err < 1e-8);
        auto wup = [](const CurvaturePack& pk) { return contract(pk.W, pk.ginv, {{2, 0}}); };
        CHECK(max_abs(wup(p0) - wup(ph)) < 1e-8);
    }
}

TEST_CASE("volume form is parallel") {
    Geometry g = random_metric(3, 9);
    Point p{0.1, 0.4, -0.2};
    TensorField ef{{down(3), down(3), down(3)}, make_field(3, 27, [g](const auto& x) {
                       using T = std::decay_t<decltype(x[0])>;
                       std::vector<T> gm;
                       if constexpr (std::is_same_v<T, double>) gm = g.metric.valfn(x);
                       else gm = g.metric.jetfn(x);
                       T v = sqrt(mat_det(gm, 3));
                       std::vector<T> o(27, const_like(x[0], 0.0));
                       std::vector<int> m(3);
                       for (int i = 0; i < 27; ++i) {
                           m = {i / 9, (i / 3) % 3, i % 3};
                           int sg = perm_sign(m);
                           if (sg) o[i] = v * (double)sg;
                       }
                       return o;
                   }),
                   0};
    CHECK(max_abs(levi_civita_derivative(g, ef, p)) < 1e-12);
}
