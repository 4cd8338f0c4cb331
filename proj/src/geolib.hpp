// Catalog of geometries, embeddings and conformal Killing-Yano forms.
#pragma once

#include <string>
#include <vector>

#include "firstint.hpp"
#include "riemann.hpp"
#include "submanifold.hpp"

#include "json.hpp"

namespace tl::geolib {

using Params = nlohmann::json;

struct UnknownName : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// unknown or ill-typed parameter keys
struct SchemaError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// f(x) = exp(b + c.x + x^T Q x / 2)
struct ExpQuadratic {
    double b = 0;
    std::vector<double> c;
    std::vector<double> Q;  // row-major, may be empty
};
Field exp_quadratic(int n, const ExpQuadratic& w);

Geometry euclidean(int n, DiffBackend be = DiffBackend::analytic());
// stereographic chart, g = 4 R^2 (1 + |x|^2)^-2 delta
Geometry sphere(int n, double radius = 1.0, DiffBackend be = DiffBackend::analytic());
// Poincare ball, g = 4 (1 - |x|^2)^-2 delta
Geometry hyperbolic(int n, DiffBackend be = DiffBackend::analytic());
// constant curvature kappa (either sign) in the conformally flat chart 4 (1 + kappa |x|^2)^-2 delta
Geometry space_form(int n, double kappa, DiffBackend be = DiffBackend::analytic());
Geometry product(const Geometry& a, const Geometry& b);
// g = f1^2 g1 + f2^2 g2, f1 and f2 functions on the whole product (empty Field: 1)
Geometry twisted_product(const Geometry& a, const Geometry& b, const Field& f1, const Field& f2);
Geometry warped_product(const Geometry& base, const Geometry& fiber, const ExpQuadratic& f_base);
Geometry doubly_warped_product(const Geometry& a, const Geometry& b, const ExpQuadratic& f1_on_b,
                               const ExpQuadratic& f2_on_a);
Geometry doubly_warped_example(DiffBackend be = DiffBackend::analytic());
Geometry twisted_example(DiffBackend be = DiffBackend::analytic());
// S^2(kappa) x H^2(-kappa)
Geometry s2h2(double kappa = 1.0, DiffBackend be = DiffBackend::analytic());
// affine chart (x_1..x_N, y_1..y_N), Ric = (2N + 2) g
Geometry fubini_study(int N, DiffBackend be = DiffBackend::analytic());
Geometry s2s2(DiffBackend be = DiffBackend::analytic());
// S^2 x S^1 x R with coordinates (stereographic x, y, theta, t)
Geometry s2s1r(DiffBackend be = DiffBackend::analytic());

// ---- embeddings ----
Embedding coordinate_slice(int n, const std::vector<int>& free_coords, const std::vector<double>& fixed);
// {x_{m}..x_{n-1} = 0} in the stereographic chart is a great S^m
Embedding great_subsphere(int n, int m);
// graph x_{m..n-1} = h(x_0..x_{m-1}), h from quadratic + cubic coefficients
Embedding graph(int n, int m, const std::vector<double>& coeffs);
Embedding round_sphere(int n, double radius, const std::vector<double>& center);
Embedding round_circle(int n, double radius, const std::vector<double>& center);
Embedding helix(double radius, double pitch);
Embedding cp1_slice();
Embedding rp2_slice();
Embedding s2s2_diagonal();
Embedding s2s2_first_factor(const std::vector<double>& q);
Embedding parabola(int n, double curvature);

// ---- conformal Killing-Yano forms ----
KYForm ky_constant(int n, const std::vector<double>& covector);
KYForm ky_rotation(int n, int i, int j);
KYForm ky_dilation(int n);
KYForm ky_special_conformal(int n, const std::vector<double>& b);
// lifted Killing field of one S^2 factor of s2s2 (factor 0 or 1), v = b + 2 i a z + conj(b) z^2
KYForm ky_s2_killing(int factor, double a, double bre, double bim);
// sum of factor Killing fields
KYForm ky_sum(const KYForm& a, const KYForm& b);
// almost-Einstein scale sigma = (1 - |x|^2)/2 of the Poincare ball in the flat chart
KYForm ky_hyperbolic_scale(int n);

// ---- name lookup ----
Geometry geometry_by_name(const std::string& name, const Params& params, DiffBackend be);
Embedding embedding_by_name(const std::string& name, const Params& params, int n);
KYForm ky_by_name(const std::string& name, const Params& params, int n);
std::vector<std::string> geometry_names();
std::vector<std::string> embedding_names();
std::vector<std::string> ky_names();

// analytic jets (orders 1, 2) against central differences for every catalog
// entry at `points` random chart points; error relative to max(1, |value|)
struct SelfTestResult {
    std::string kind, name;
    double max_error = 0;
    bool ok = true;
};
std::vector<SelfTestResult> self_test(unsigned seed, int points = 5, double tol = 1e-6);

}  // namespace tl::geolib
