#include <cmath>
#include <random>

#include "doctest.h"
#include "geolib.hpp"
#include "subtractor.hpp"

using namespace tl;
namespace gl = tl::geolib;

namespace {

double tracefree_ratio(const TensorValue& F, const TensorValue& g, double c) {
    double e = 0;
    for (int i = 0; i < g.dim(0); ++i)
        for (int j = 0; j < g.dim(0); ++j) e = std::max(e, std::fabs(F(i, j) - c * g(i, j)));
    return e;
}

std::vector<double> random_coeffs(int n, int m, unsigned seed, double amp) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-amp, amp);
    int per = m * (m + 1) / 2 + m * (m + 1) * (m + 2) / 6;
    std::vector<double> c((n - m) * per);
    for (auto& v : c) v = U(rng);
    return c;
}

}  // namespace

TEST_CASE("Fialkow tensor of the CP^2 examples") {
    Geometry cp2 = gl::fubini_study(2);
    for (Point q : {Point{0, 0}, Point{0.2, -0.3}}) {
        auto pk = tractor_sub_pack(cp2, gl::cp1_slice(), q);
        CHECK(tracefree_ratio(pk.F, pk.rp.g, -1.0) < 1e-9);
        CHECK(max_abs(pk.L[0]) + max_abs(pk.L[1]) < 1e-9);
        auto pr = tractor_sub_pack(cp2, gl::rp2_slice(), q);
        CHECK(tracefree_ratio(pr.F, pr.rp.g, 0.5) < 1e-9);
    }
    auto rep = classify(cp2, gl::cp1_slice(), {{0.1, 0.2}, {-0.3, 0.1}});
    CHECK(rep.distinguished);
    CHECK(rep.cc);
    CHECK_FALSE(rep.scc);
    CHECK(rep.samples[0].fialkow_coefficient == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("S2 x {p} in S2 x S2") {
    Geometry g = gl::s2s2();
    auto pk = tractor_sub_pack(g, gl::s2s2_first_factor({0.3, -0.2}), {0.1, 0.4});
    CHECK(max_abs(pk.rp.II) < 1e-10);
    CHECK(tracefree_ratio(pk.F, pk.rp.g, -1.0 / 3.0) < 1e-9);
    for (auto& L : pk.L) CHECK(max_abs(L) < 1e-9);
}

TEST_CASE("doubly warped and twisted examples") {
    Geometry dw = gl::doubly_warped_example();
    Embedding slice = gl::coordinate_slice(4, {0, 1}, {0.0, 0.0});
    auto pk = tractor_sub_pack(dw, slice, {0.3, -0.4});
    CHECK(max_abs(pk.mu) < 1e-10);
    CHECK(max_abs(pk.mu_weyl) < 1e-10);
    // nabla_1 H = e^{-2 x1} (d_3 - d_1) on the slice
    CHECK(pk.rp.nablaH(2, 0) == doctest::Approx(std::exp(-0.6)).epsilon(1e-10));
    CHECK(pk.rp.nablaH(0, 0) == doctest::Approx(-std::exp(-0.6)).epsilon(1e-10));
    auto rep = classify(dw, slice, {{0.3, -0.4}, {0.0, 0.2}});
    CHECK(rep.distinguished);

    Geometry tw = gl::twisted_example();
    auto pt = tractor_sub_pack(tw, slice, {0.3, -0.4});
    CHECK(pt.mu(0, 2) == doctest::Approx(-0.5).epsilon(1e-10));
    CHECK(pt.mu_weyl(0, 2) == doctest::Approx(-0.5).epsilon(1e-9));
    auto rt = classify(tw, slice, {{0.3, -0.4}});
    CHECK(rt.umbilic);
    CHECK_FALSE(rt.distinguished);
    CHECK(rt.max_L > 0.1);
}

TEST_CASE("twisted product slices are distinguished iff the twist splits") {
    // leaves of the twisted factor (x1, x2 fixed)
    Embedding leaf = gl::coordinate_slice(4, {2, 3}, {0.2, 0.1});
    Embedding base = gl::coordinate_slice(4, {0, 1}, {0.2, 0.1});
    auto split = gl::geometry_by_name("twisted_split_example", {}, DiffBackend::analytic());
    auto twist = gl::twisted_example();
    std::vector<Point> qs{{0.1, -0.2}, {-0.3, 0.4}};
    CHECK(classify(split, leaf, qs).distinguished);
    CHECK(classify(split, base, qs).distinguished);
    CHECK_FALSE(classify(twist, base, qs).distinguished);
}

TEST_CASE("product S2 x S1 slice: intrinsic and ambient Schouten") {
    Geometry g = gl::s2s1r();
    Embedding e = gl::coordinate_slice(4, {0, 1, 2}, {0.0});
    auto pk = tractor_sub_pack(g, e, {0.2, -0.1, 0.5});
    const auto& gs = pk.rp.g;
    // h is the round block, d theta^2 the last
    CHECK(pk.p(0, 0) / gs(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(pk.p(2, 2) == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(pk.Pij(0, 0) / gs(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(pk.Pij(2, 2) == doctest::Approx(-1.0 / 6.0).epsilon(1e-9));
    auto rep = classify(g, e, {{0.2, -0.1, 0.5}});
    CHECK(rep.distinguished);
    CHECK_FALSE(rep.cc);
    CHECK(rep.max_F_tracefree > 0.05);
}

TEST_CASE("L two evaluations, mu and F cross-checks on random graphs") {
    for (unsigned s = 1; s <= 8; ++s) {
        int n = s % 2 ? 4 : 5, m = s % 2 ? 2 : 3;
        if (s == 7) m = 3;
        Geometry g = s <= 2 ? gl::euclidean(n) : gl::sphere(n);
        if (s >= 5) g = n == 4 ? gl::s2s2() : gl::product(gl::s2h2(1.0), gl::euclidean(1));
        if (s == 8) g = gl::product(gl::fubini_study(2), gl::sphere(1));
        Embedding e = gl::graph(n, m, random_coeffs(n, m, s, 0.6));
        Point q(m, 0.1 * s);
        auto pk = tractor_sub_pack(g, e, q);
        double scale = 1;
        for (int i = 0; i < m; ++i) scale = std::max(scale, max_abs(pk.L[i]));
        for (int i = 0; i < m; ++i) CHECK(max_abs(pk.L[i] - pk.L_deriv[i]) < 1e-9 * scale);
        CHECK(max_abs(pk.mu - pk.mu_weyl) < 1e-8 * scale);
        if (m >= 3) CHECK(max_abs(pk.F - pk.F_weyl) < 1e-8 * scale);
        CHECK(checked_connection_residual(g, e, q, s) < 1e-8);
    }
}

TEST_CASE("reconstructing L from IIo, mu, H") {
    Geometry g = gl::sphere(4);
    Embedding e = gl::graph(4, 2, random_coeffs(4, 2, 7, 0.5));
    Point q{0.1, -0.2};
    auto sj = sub_jets(g, e, q, 3);
    auto pk = pack_from_sub_jets(sj);
    auto L = reconstruct_L(pk.rp.IIo, pk.mu, pk.rp.H, values(sj.divIIo), values(sj.s.amb.g));
    for (int i = 0; i < 2; ++i) CHECK(max_abs(L[i] - pk.L[i]) < 1e-9);
}

TEST_CASE("tractor projector and normal form invariants") {
    Geometry g = gl::sphere(4);
    Embedding e = gl::graph(4, 2, random_coeffs(4, 2, 3, 0.5));
    auto pk = tractor_sub_pack(g, e, {0.2, 0.1});
    int D = 6;
    auto NN = matmul(pk.Nt, pk.Nt);
    CHECK(max_abs(NN - pk.Nt) < 1e-10);
    double tr = 0;
    for (int a = 0; a < D; ++a) tr += pk.Nt(a, a);
    CHECK(tr == doctest::Approx(2.0));
    // N X = 0, X at the bottom contravariant slot
    for (int a = 0; a < D; ++a) CHECK(std::fabs(pk.Nt(a, D - 1)) < 1e-12);
    auto hi = tractor_metric_inverse(values(sub_jets(g, e, {0.2, 0.1}, 3).s.amb.ginv));
    CHECK(tractor_dot(pk.nform, pk.nform, pk.h, hi) == doctest::Approx(2.0));
    // N^A_B = N^{A C} N_{B C} / (d-1)!
    auto up = raise_all(pk.nform, hi);
    for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b) {
            double v = 0;
            for (int c = 0; c < D; ++c) v += up(a, c) * pk.nform(b, c);
            CHECK(std::fabs(v - pk.Nt(a, b)) < 1e-10);
        }
    // Pi preserves the tractor metric
    auto hPi = contract(contract(pk.h, pk.Pit, {{0, 0}}), pk.Pit, {{0, 0}});
    CHECK(max_abs(hPi - pk.hs) < 1e-10);
}

TEST_CASE("Theorem residuals co-vanish") {
    Geometry s4 = gl::sphere(4);
    auto t0 = theorem_residuals(s4, gl::great_subsphere(4, 2), {0.2, -0.1});
    CHECK(t0.L < 1e-10);
    CHECK(t0.nablaNproj < 1e-10);
    CHECK(t0.nablaNform < 1e-10);
    CHECK(t0.nablaStar < 1e-10);
    auto t1 = theorem_residuals(s4, gl::graph(4, 2, random_coeffs(4, 2, 5, 0.5)), {0.1, 0.1});
    CHECK(t1.L > 1e-3);
    for (double r : {t1.nablaNproj, t1.nablaNform, t1.nablaStar}) {
        CHECK(r / t1.L < 20);
        CHECK(r / t1.L > 1.0 / 20);
    }
}

TEST_CASE("tractor Gauss-Codazzi-Ricci") {
    Geometry g = gl::sphere(5);
    Embedding e = gl::graph(5, 3, random_coeffs(5, 3, 2, 0.4));
    auto r = tractor_gcr_residuals(g, e, {0.1, -0.1, 0.05});
    CHECK(r.available);
    CHECK(r.gauss < 1e-8);
    CHECK(r.codazzi < 1e-8);
    CHECK(r.ricci < 1e-8);
    Geometry f = g;
    f.backend = DiffBackend::fd();
    CHECK_FALSE(tractor_gcr_residuals(f, e, {0.1, -0.1, 0.05}).available);
}

TEST_CASE("great S2 in S4 and round circles") {
    auto rep = classify(gl::sphere(4), gl::great_subsphere(4, 2), {{0.1, 0.2}, {-0.4, 0.3}});
    CHECK(rep.scc);
    auto pc = tractor_sub_pack(gl::euclidean(3), gl::round_circle(3, 0.7, {0.1, 0, 0}), {0.3});
    CHECK(max_abs(pc.L[0]) < 1e-10);
    // a helix is not a conformal circle
    auto ph = tractor_sub_pack(gl::euclidean(3), gl::helix(1.0, 0.5), {0.3});
    CHECK(max_abs(ph.L[0]) > 0.1);
}

TEST_CASE("mean curvature tractor predicates") {
    std::vector<Point> qs{{0.1, 0.2}, {-0.5, 0.3}, {0.7, -0.2}};
    auto rs = mean_curvature_tractor(gl::euclidean(3), gl::round_sphere(3, 2.0, {0, 0, 0}), Field{}, qs, 1e-8);
    CHECK(rs.cmc);
    CHECK(rs.parallel_mean_curvature);
    CHECK_FALSE(rs.minimal);
    CHECK(rs.NII[0] == doctest::Approx(0.25));
    std::vector<Point> ts{{0.1}, {0.9}, {2.0}};
    auto rh = mean_curvature_tractor(gl::euclidean(3), gl::helix(1.0, 0.5), Field{}, ts, 1e-8);
    CHECK(rh.cmc);
    CHECK_FALSE(rh.parallel_mean_curvature);
    Field sigma = make_field(4, 1, [](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        T r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
        return std::vector<T>{0.5 * (1.0 + r2)};
    });
    // round scale of S^4 written on the flat chart of the sphere metric: sigma = 1 there
    auto rg = mean_curvature_tractor(gl::sphere(4), gl::great_subsphere(4, 2), Field{}, {{0.1, 0.2}}, 1e-8);
    CHECK(rg.minimal);
    CHECK(max_abs(rg.HA[0]) < 1e-10);
    (void)sigma;
}

TEST_CASE("submanifold pack basics") {
    auto sp = submanifold_pack(gl::euclidean(3), gl::round_sphere(3, 2.0, {0.1, 0, 0}), {0.3, -0.2});
    CHECK(max_abs(sp.IIo) < 1e-10);
    double h2 = 0;
    for (int c = 0; c < 3; ++c) h2 += sp.H(c) * sp.H(c);
    CHECK(std::sqrt(h2) == doctest::Approx(0.5));
    auto gcr = gauss_codazzi_ricci_residuals(gl::euclidean(3), gl::round_sphere(3, 1.0, {0, 0, 0}), {0.2, 0.4});
    CHECK(gcr.gauss < 1e-8);
    for (unsigned s = 1; s <= 3; ++s) {
        Geometry g = gl::sphere(4);
        if (s == 3) g.backend = DiffBackend::fd();
        auto r = gauss_codazzi_ricci_residuals(g, gl::graph(4, 2, random_coeffs(4, 2, s, 0.5)), {0.1, 0.2});
        double tol = s == 3 ? 1e-4 : 1e-9;
        CHECK(r.gauss < tol);
        CHECK(r.codazzi < tol);
        CHECK(r.ricci < tol);
    }
    Field om = make_field(3, 1, [](const auto& x) { return std::vector{exp(0.3 * x[0] - 0.2 * x[1] * x[2])}; });
    auto cc = conformal_transform_check(gl::euclidean(3), gl::round_sphere(3, 1.0, {0, 0, 0}), om, {0.2, 0.1});
    CHECK(cc.II < 1e-9);
    CHECK(cc.H < 1e-9);
    CHECK(cc.IIo < 1e-9);
}
