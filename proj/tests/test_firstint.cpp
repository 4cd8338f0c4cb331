#include <chrono>
#include <cmath>

#include "doctest.h"
#include "firstint.hpp"
#include "geolib.hpp"

using namespace tl;
namespace gl = tl::geolib;

namespace {

// rotation vector field x_i d_j - x_j d_i lowered with the metric of geo
KYForm lowered_rotation(const Geometry& geo, int i, int j) {
    int n = geo.n;
    Field g = geo.metric;
    KYForm k;
    k.n = n;
    k.degree = 1;
    k.name = "rotation_lowered";
    k.comps = make_field(n, n, [n, g, i, j](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        std::vector<T> gm;
        if constexpr (std::is_same_v<T, double>) gm = g.valfn(x);
        else gm = g.jetfn(x);
        std::vector<T> o(n, const_like(x[0], 0.0));
        for (int a = 0; a < n; ++a) o[a] = gm[a * n + j] * x[i] - gm[a * n + i] * x[j];
        return o;
    });
    return k;
}

// k = x ^ c in flat space: nabla_a k_bc = 2 delta_a[b c_c]
KYForm radial_two_form(int n, std::vector<double> c) {
    KYForm k;
    k.n = n;
    k.degree = 2;
    k.name = "radial_two_form";
    k.comps = make_field(n, n * n, [n, c](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        std::vector<T> o(n * n, const_like(x[0], 0.0));
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) o[a * n + b] = x[a] * c[b] - x[b] * c[a];
        return o;
    });
    return k;
}

}  // namespace

TEST_CASE("ky_residual") {
    Geometry e3 = gl::euclidean(3), e4 = gl::euclidean(4);
    Point p{0.3, -0.7, 1.1};
    CHECK(ky_residual(e3, gl::ky_constant(3, {1, 2, 3}), p) < 1e-12);
    CHECK(ky_residual(e3, gl::ky_rotation(3, 0, 1), p) < 1e-12);
    CHECK(ky_residual(e3, gl::ky_dilation(3), p) < 1e-12);
    CHECK(ky_residual(e3, gl::ky_special_conformal(3, {0.2, -1, 0.5}), p) < 1e-12);
    CHECK(ky_residual(e4, radial_two_form(4, {1, 0.5, 0, -1}), {0.1, 0.2, 0.3, 0.4}) < 1e-12);
    CHECK(ky_residual(gl::euclidean(2), gl::ky_hyperbolic_scale(2), {0.2, 0.1}) < 1e-12);
    KYForm bad;
    bad.n = 3;
    bad.degree = 1;
    bad.comps = make_field(3, 3, [](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        return std::vector<T>{const_like(x[0], 0.0), x[0] * x[0], const_like(x[0], 0.0)};
    });
    CHECK(ky_residual(e3, bad, {1.0, 0.0, 0.0}) > 0.1);
    // Killing fields of the round metric in the stereographic chart
    Geometry s3 = gl::sphere(3);
    CHECK(ky_residual(s3, lowered_rotation(s3, 0, 2), p) < 1e-10);
    CHECK(ky_residual(gl::s2s2(), gl::ky_s2_killing(1, 0.4, 0.3, -0.8), {0.1, 0.2, -0.3, 0.5}) < 1e-10);
}

TEST_CASE("BGG splitting: flat rotation, zero field, slots") {
    Geometry e4 = gl::euclidean(4);
    Point p{0.3, -0.2, 0.5, 0.1};
    auto st = bgg_split(e4, gl::ky_rotation(4, 0, 1), p);
    CHECK(st.normality < 1e-8);
    CHECK(st.causal == "spacelike");
    CHECK(st.simple);
    auto sl = form_slots(st.K, 4);
    auto k = gl::ky_rotation(4, 0, 1).comps.valfn(p);
    for (int a = 0; a < 4; ++a) CHECK(sl.y(a) == doctest::Approx(k[a]));
    KYForm zero = gl::ky_constant(4, {0, 0, 0, 0});
    auto sz = bgg_split(e4, zero, p);
    CHECK(max_abs(sz.K) == 0.0);
    CHECK(sz.normality == 0.0);
}

TEST_CASE("BGG splitting: normality on conformally flat geometries") {
    Geometry e3 = gl::euclidean(3);
    Point p{0.3, -0.7, 0.4};
    for (const KYForm& k : {gl::ky_special_conformal(3, {0.2, -1, 0.5}), gl::ky_dilation(3), gl::ky_constant(3, {1, 0, 2})})
        CHECK(bgg_split(e3, k, p).normality < 1e-9);
    CHECK(bgg_split(e3, gl::ky_dilation(3), p).causal == "timelike");
    auto r2 = bgg_split(gl::euclidean(4), radial_two_form(4, {1, 0.5, 0, -1}), {0.1, 0.2, 0.3, 0.4});
    CHECK(r2.normality < 1e-9);
    Geometry s3 = gl::sphere(3);
    CHECK(bgg_split(s3, lowered_rotation(s3, 0, 2), p).normality < 1e-8);
    Geometry h3 = gl::hyperbolic(3);
    CHECK(bgg_split(h3, lowered_rotation(h3, 1, 2), {0.1, 0.2, -0.3}).normality < 1e-8);
    auto is = bgg_split(gl::euclidean(3), gl::ky_hyperbolic_scale(3), p);
    CHECK(is.normality < 1e-10);
    CHECK(is.KK == doctest::Approx(1.0));
    Geometry fd = gl::euclidean(3, DiffBackend::fd());
    CHECK(bgg_split(fd, gl::ky_special_conformal(3, {0.2, -1, 0.5}), p).normality < 1e-4);
}

TEST_CASE("BGG splitting: lifted Killing fields on S2 x S2 are not normal") {
    auto st = bgg_split(gl::s2s2(), gl::ky_s2_killing(0, 1.0, 0.3, -0.2), {0.1, 0.2, -0.3, 0.4});
    CHECK(st.normality > 0.01);
}

TEST_CASE("conserved quantities") {
    // vertical line at distance r from the rotation axis
    for (double r : {0.5, 1.0, 2.0}) {
        auto c = conserved_quantity(gl::euclidean(3), gl::coordinate_slice(3, {2}, {r, 0.0}),
                                    gl::ky_rotation(3, 0, 1), {0.3});
        CHECK(std::fabs(c.value) == doctest::Approx(1.0));
        CHECK(c.explicit_value == doctest::Approx(c.value));
        CHECK(c.residual < 1e-12);
    }
    // distinguished planes in flat R^4 with the (x1, x2) rotation
    Embedding plane = gl::coordinate_slice(4, {2, 3}, {0.3, -0.2});
    auto c1 = conserved_quantity(gl::euclidean(4), plane, gl::ky_rotation(4, 0, 1), {0.1, 0.5});
    CHECK(c1.residual < 1e-8);
    CHECK(c1.explicit_value == doctest::Approx(c1.value));
    Embedding tilted = gl::graph(4, 2, {0.0, 0.0, 0.0, 0, 0, 0, 0, 0.0, 0.0, 0.0, 0, 0, 0, 0});
    auto c2 = conserved_quantity(gl::euclidean(4), tilted, gl::ky_rotation(4, 0, 2), {0.4, -0.3});
    CHECK(c2.residual < 1e-8);
    // round circle has H != 0: explicit formula still matches
    auto c3 = conserved_quantity(gl::euclidean(3), gl::round_circle(3, 0.7, {0.1, 0.2, 0.0}),
                                 gl::ky_rotation(3, 1, 2), {0.4});
    CHECK(c3.explicit_value == doctest::Approx(c3.value));
}

TEST_CASE("conserved quantity obstruction on the S2 x S2 diagonal") {
    Geometry g = gl::s2s2();
    Embedding diag = gl::s2s2_diagonal();
    KYForm k = gl::ky_sum(gl::ky_s2_killing(0, 0.7, 0.4, -0.3), gl::ky_s2_killing(1, -0.2, 0.1, 0.5));
    for (Point q : {Point{0.2, -0.1}, Point{-0.4, 0.3}}) {
        auto c = conserved_quantity(g, diag, k, q);
        CHECK(c.residual > 1e-2);
        CHECK(c.obstruction_residual < 1e-4);
    }
}

TEST_CASE("zero-locus scan") {
    Geometry e4 = gl::euclidean(4);
    ScanRegion reg{{-1, -1, -1, -1}, {1, 1, 1, 1}, 41};
    auto t0 = std::chrono::steady_clock::now();
    auto rep = zero_locus_scan(e4, gl::ky_rotation(4, 0, 1), reg, 1e-12);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 20);
    CHECK_FALSE(rep.empty);
    CHECK(rep.codim == 2);
    for (auto& p : rep.points) {
        CHECK(std::hypot(p.x[0], p.x[1]) < 1e-10);
        CHECK(p.codim == 2);
        CHECK(p.L >= 0);
        CHECK(p.L < 1e-5);
    }
    auto tr = zero_locus_scan(e4, gl::ky_constant(4, {1, 0, 0, 0}), reg, 1e-12);
    CHECK(tr.empty);
    auto dl = zero_locus_scan(e4, gl::ky_dilation(4), reg, 1e-12);
    CHECK(dl.empty);
    CHECK(dl.short_circuit);
    CHECK(dl.certificate < 0);
    auto hs = zero_locus_scan(gl::euclidean(2), gl::ky_hyperbolic_scale(2), {{-1.5, -1.5}, {1.5, 1.5}, 31}, 1e-12);
    CHECK(hs.codim == 1);
    for (auto& p : hs.points) {
        CHECK(std::hypot(p.x[0], p.x[1]) == doctest::Approx(1.0));
        CHECK(p.L < 1e-6);
    }
}

TEST_CASE("almost-Einstein scale of the hyperbolic ball along its zero locus") {
    KYForm s = gl::ky_hyperbolic_scale(3);
    Embedding bdry = gl::round_sphere(3, 1.0, {0, 0, 0});
    auto mc = mean_curvature_tractor(gl::euclidean(3), bdry, s.comps, {{0.3, 0.2}, {1.1, -0.7}}, 1e-8);
    // I = (0, -x, 1) is entirely normal there: |I^A N_A^B| equals its positive norm sqrt 2
    for (double v : mc.IN) CHECK(v == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
    CHECK_FALSE(mc.minimal);
    auto rep = classify(gl::euclidean(3), bdry, {{0.3, 0.2}});
    CHECK(rep.max_L < 1e-10);
}
