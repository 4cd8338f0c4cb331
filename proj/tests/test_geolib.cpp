#include "doctest.h"
#include "geolib.hpp"
#include "riemann.hpp"

using namespace tl;
namespace gl = tl::geolib;

TEST_CASE("catalog jets agree with finite differences") {
    auto res = gl::self_test(2024);
    CHECK(res.size() == gl::geometry_names().size() + gl::embedding_names().size() + gl::ky_names().size());
    for (auto& r : res) CHECK_MESSAGE(r.ok, r.kind << " " << r.name << " error " << r.max_error);
}

TEST_CASE("catalog factories reproduce the worked metrics") {
    Point p{0.3, -0.2, 0.5, 0.1};
    auto tw = metric_jet(gl::twisted_example(), p, 0);
    auto dw = metric_jet(gl::doubly_warped_example(), p, 0);
    double e13 = std::exp(2 * p[0] * p[2]);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            double t = a != b ? 0.0 : (a < 2 ? 1.0 : e13);
            double d = a != b ? 0.0 : (a < 2 ? std::exp(2 * p[2]) : std::exp(2 * p[0]));
            CHECK(tw(a, b).value() == doctest::Approx(t).epsilon(1e-14));
            CHECK(dw(a, b).value() == doctest::Approx(d).epsilon(1e-14));
        }
    // stereographic S2 has Gaussian curvature 1
    for (Point q : {Point{0, 0}, Point{0.4, -0.7}, Point{1.5, 2.0}}) CHECK(curvature_pack(gl::sphere(2), q).K == doctest::Approx(1.0));
}

TEST_CASE("catalog parameter validation") {
    CHECK_THROWS_AS(gl::geometry_by_name("sphere", {{"radius", -1.0}}, DiffBackend::analytic()), std::invalid_argument);
    CHECK_THROWS_AS(gl::geometry_by_name("sphere", {{"radius", 1.0}, {"curvature", 2}}, DiffBackend::analytic()),
                    gl::SchemaError);
    CHECK_THROWS_AS(gl::geometry_by_name("torus", {}, DiffBackend::analytic()), gl::UnknownName);
    CHECK_THROWS_AS(gl::geometry_by_name("product", {{"a", {{"name", "sphere"}}}}, DiffBackend::analytic()),
                    std::invalid_argument);
}
