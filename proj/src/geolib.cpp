#include "geolib.hpp"

#include <cmath>
#include <map>
#include <random>

namespace tl::geolib {

namespace {

template <class T>
std::vector<T> call(const Field& f, const std::vector<T>& x) {
    if constexpr (std::is_same_v<T, double>) return f.valfn(x);
    else return f.jetfn(x);
}

bool empty_field(const Field& f) { return !f.valfn; }

template <class T>
T one_like(const std::vector<T>& x) { return const_like(x[0], 1.0); }

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

// conformally flat chart metric f(|x|^2) delta
template <class G>
Geometry radial(int n, const std::string& name, DiffBackend be, G factor) {
    require(n >= 1, name + ": n >= 1");
    Geometry g;
    g.n = n;
    g.name = name;
    g.backend = be;
    g.metric = make_field(n, n * n, [n, factor](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        T r2 = x[0] * x[0];
        for (int i = 1; i < n; ++i) r2 += x[i] * x[i];
        T f = factor(r2);
        std::vector<T> out(n * n, const_like(x[0], 0.0));
        for (int i = 0; i < n; ++i) out[i * n + i] = f;
        return out;
    });
    return g;
}

template <class T>
std::vector<T> slice(const std::vector<T>& x, int from, int count) {
    return std::vector<T>(x.begin() + from, x.begin() + from + count);
}

void allow_keys(const Params& p, const std::vector<std::string>& keys, const std::string& where) {
    if (p.is_null()) return;
    if (!p.is_object()) throw SchemaError(where + ": params must be an object");
    for (auto& [k, v] : p.items()) {
        bool ok = false;
        for (auto& a : keys) ok = ok || k == a;
        if (!ok) throw SchemaError(where + ": unknown parameter '" + k + "'");
    }
}

ExpQuadratic eq_from_json(const Params& p, int n) {
    allow_keys(p, {"b", "c", "Q"}, "warp");
    ExpQuadratic w;
    w.b = p.value("b", 0.0);
    w.c = p.value("c", std::vector<double>(n, 0.0));
    w.Q = p.value("Q", std::vector<double>{});
    require((int)w.c.size() == n, "warp: c must have length n");
    require(w.Q.empty() || (int)w.Q.size() == n * n, "warp: Q must have n*n entries");
    return w;
}

// lowered components of a tangent vector field v^a with the given metric
template <class VF>
KYForm lowered(int n, const Field& metric, const std::string& name, VF v) {
    KYForm k;
    k.n = n;
    k.degree = 1;
    k.name = name;
    k.comps = make_field(n, n, [n, metric, v](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        auto g = call(metric, x);
        std::vector<T> vv = v(x);
        std::vector<T> out(n, const_like(x[0], 0.0));
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) out[a] += g[a * n + b] * vv[b];
        return out;
    });
    return k;
}

// canonical Moebius structure of a constant-curvature surface: P = kappa/2 g
Field mobius_constant(const Field& metric, double kappa) {
    return make_field(2, 4, [metric, kappa](const auto& x) {
        auto g = call(metric, x);
        for (auto& v : g) v = v * (0.5 * kappa);
        return g;
    });
}

Field identity_metric(int n) {
    return make_field(n, n * n, [n](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        std::vector<T> o(n * n, const_like(x[0], 0.0));
        for (int i = 0; i < n; ++i) o[i * n + i] = const_like(x[0], 1.0);
        return o;
    });
}

}  // namespace

Field exp_quadratic(int n, const ExpQuadratic& w) {
    return make_field(n, 1, [n, w](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        T s = const_like(x[0], w.b);
        for (int i = 0; i < n && i < (int)w.c.size(); ++i) s += w.c[i] * x[i];
        if (!w.Q.empty())
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) s += 0.5 * w.Q[i * n + j] * x[i] * x[j];
        return std::vector<T>{exp(s)};
    });
}

Geometry euclidean(int n, DiffBackend be) {
    Geometry g;
    g.n = n;
    g.name = "euclidean";
    g.backend = be;
    g.metric = identity_metric(n);
    if (n == 2) g.mobius_schouten = mobius_constant(g.metric, 0.0);
    return g;
}

Geometry sphere(int n, double radius, DiffBackend be) {
    require(radius > 0, "sphere: radius must be positive");
    double r2 = radius * radius;
    Geometry g = radial(n, "sphere", be, [r2](const auto& s) { return 4.0 * r2 / ((1.0 + s) * (1.0 + s)); });
    if (n == 2) g.mobius_schouten = mobius_constant(g.metric, 1.0 / r2);
    return g;
}

Geometry hyperbolic(int n, DiffBackend be) {
    Geometry g = radial(n, "hyperbolic", be, [](const auto& s) { return 4.0 / ((1.0 - s) * (1.0 - s)); });
    if (n == 2) g.mobius_schouten = mobius_constant(g.metric, -1.0);
    return g;
}

Geometry space_form(int n, double kappa, DiffBackend be) {
    Geometry g = radial(n, "space_form", be,
                        [kappa](const auto& s) { return 4.0 / ((1.0 + kappa * s) * (1.0 + kappa * s)); });
    if (n == 2) g.mobius_schouten = mobius_constant(g.metric, kappa);
    return g;
}

Geometry twisted_product(const Geometry& a, const Geometry& b, const Field& f1, const Field& f2) {
    int na = a.n, nb = b.n, n = na + nb;
    Field ga = a.metric, gb = b.metric;
    bool e1 = empty_field(f1), e2 = empty_field(f2);
    Geometry g;
    g.n = n;
    g.name = a.name + "x" + b.name;
    g.backend = a.backend;
    g.metric = make_field(n, n * n, [=](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        auto A = call(ga, slice(x, 0, na));
        auto B = call(gb, slice(x, na, nb));
        T s1 = e1 ? one_like(x) : call(f1, x)[0];
        T s2 = e2 ? one_like(x) : call(f2, x)[0];
        s1 = s1 * s1;
        s2 = s2 * s2;
        std::vector<T> o(n * n, const_like(x[0], 0.0));
        for (int i = 0; i < na; ++i)
            for (int j = 0; j < na; ++j) o[i * n + j] = s1 * A[i * na + j];
        for (int i = 0; i < nb; ++i)
            for (int j = 0; j < nb; ++j) o[(na + i) * n + na + j] = s2 * B[i * nb + j];
        return o;
    });
    return g;
}

Geometry product(const Geometry& a, const Geometry& b) { return twisted_product(a, b, Field{}, Field{}); }

Geometry warped_product(const Geometry& base, const Geometry& fiber, const ExpQuadratic& f_base) {
    int na = base.n, n = base.n + fiber.n;
    Field f = exp_quadratic(na, f_base);
    Field F = make_field(n, 1, [f, na](const auto& x) { return call(f, slice(x, 0, na)); });
    Geometry g = twisted_product(base, fiber, Field{}, F);
    g.name = "warped_product";
    return g;
}

Geometry doubly_warped_product(const Geometry& a, const Geometry& b, const ExpQuadratic& f1_on_b,
                               const ExpQuadratic& f2_on_a) {
    int na = a.n, nb = b.n, n = na + nb;
    Field f1 = exp_quadratic(nb, f1_on_b), f2 = exp_quadratic(na, f2_on_a);
    Field F1 = make_field(n, 1, [f1, na, nb](const auto& x) { return call(f1, slice(x, na, nb)); });
    Field F2 = make_field(n, 1, [f2, na](const auto& x) { return call(f2, slice(x, 0, na)); });
    Geometry g = twisted_product(a, b, F1, F2);
    g.name = "doubly_warped_product";
    return g;
}

Geometry doubly_warped_example(DiffBackend be) {
    ExpQuadratic f1{0.0, {1.0, 0.0}, {}}, f2{0.0, {1.0, 0.0}, {}};
    Geometry g = doubly_warped_product(euclidean(2, be), euclidean(2, be), f1, f2);
    g.name = "doubly_warped_example";
    return g;
}

Geometry twisted_example(DiffBackend be) {
    Field f2 = make_field(4, 1, [](const auto& x) { return std::vector{exp(x[0] * x[2])}; });
    Geometry g = twisted_product(euclidean(2, be), euclidean(2, be), Field{}, f2);
    g.name = "twisted_example";
    return g;
}

namespace {
// f2 = e^{x1 + x3} splits as a product of factor functions
Geometry twisted_split_example(DiffBackend be) {
    Field f2 = make_field(4, 1, [](const auto& x) { return std::vector{exp(x[0] + x[2])}; });
    Geometry g = twisted_product(euclidean(2, be), euclidean(2, be), Field{}, f2);
    g.name = "twisted_split_example";
    return g;
}
}  // namespace

Geometry s2h2(double kappa, DiffBackend be) {
    require(kappa > 0, "s2h2: kappa must be positive");
    Geometry g = product(space_form(2, kappa, be), space_form(2, -kappa, be));
    g.name = "s2h2";
    return g;
}

Geometry fubini_study(int N, DiffBackend be) {
    require(N == 1 || N == 2, "fubini_study: N must be 1 or 2");
    int n = 2 * N;
    Geometry g;
    g.n = n;
    g.name = "fubini_study";
    g.backend = be;
    g.metric = make_field(n, n * n, [N, n](const auto& v) {
        using T = std::decay_t<decltype(v[0])>;
        T r2 = v[0] * v[0];
        for (int i = 1; i < n; ++i) r2 += v[i] * v[i];
        T w = 1.0 + r2;
        T i1 = 1.0 / w, i2 = i1 * i1;
        std::vector<T> o(n * n, const_like(v[0], 0.0));
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k) {
                const T &xj = v[j], &xk = v[k], &yj = v[N + j], &yk = v[N + k];
                T S = -(xj * xk + yj * yk) * i2;
                if (j == k) S += i1;
                T A = -(xj * yk - yj * xk) * i2;
                o[j * n + k] = S;
                o[(N + j) * n + N + k] = S;
                o[j * n + N + k] = A;
                o[(N + j) * n + k] = -A;
            }
        return o;
    });
    return g;
}

Geometry s2s2(DiffBackend be) {
    Geometry g = product(sphere(2, 1.0, be), sphere(2, 1.0, be));
    g.name = "s2s2";
    return g;
}

Geometry s2s1r(DiffBackend be) {
    Geometry g = product(sphere(2, 1.0, be), euclidean(2, be));
    g.name = "s2s1r";
    return g;
}

// ---- embeddings ----

namespace {
template <class FN>
Embedding embedding(int m, int n, const std::string& name, FN f) {
    Embedding e;
    e.m = m;
    e.n = n;
    e.name = name;
    e.map = make_field(m, n, f);
    return e;
}
}  // namespace

Embedding coordinate_slice(int n, const std::vector<int>& free_coords, const std::vector<double>& fixed) {
    int m = (int)free_coords.size();
    require(m >= 1 && m < n, "coordinate_slice: need 1 <= m < n");
    require((int)fixed.size() == n - m, "coordinate_slice: fixed must have n - m values");
    std::vector<int> role(n, -1);
    for (int i = 0; i < m; ++i) {
        require(free_coords[i] >= 0 && free_coords[i] < n && role[free_coords[i]] < 0,
                "coordinate_slice: bad free coordinate");
        role[free_coords[i]] = i;
    }
    return embedding(m, n, "coordinate_slice", [n, role, fixed](const auto& s) {
        using T = std::decay_t<decltype(s[0])>;
        std::vector<T> x(n);
        size_t f = 0;
        for (int a = 0; a < n; ++a) x[a] = role[a] >= 0 ? s[role[a]] : const_like(s[0], fixed[f++]);
        return x;
    });
}

Embedding great_subsphere(int n, int m) {
    std::vector<int> fr(m);
    std::iota(fr.begin(), fr.end(), 0);
    Embedding e = coordinate_slice(n, fr, std::vector<double>(n - m, 0.0));
    e.name = "great_subsphere";
    return e;
}

Embedding graph(int n, int m, const std::vector<double>& coeffs) {
    require(m >= 1 && m < n, "graph: need 1 <= m < n");
    int nq = m * (m + 1) / 2, nc = m * (m + 1) * (m + 2) / 6;
    require((int)coeffs.size() <= (n - m) * (nq + nc), "graph: too many coefficients");
    std::vector<double> c(coeffs);
    c.resize((size_t)(n - m) * (nq + nc), 0.0);
    return embedding(m, n, "graph", [n, m, nq, nc, c](const auto& s) {
        using T = std::decay_t<decltype(s[0])>;
        std::vector<T> x(n);
        for (int i = 0; i < m; ++i) x[i] = s[i];
        for (int r = 0; r < n - m; ++r) {
            const double* q = c.data() + r * (nq + nc);
            T h = const_like(s[0], 0.0);
            int t = 0;
            for (int i = 0; i < m; ++i)
                for (int j = i; j < m; ++j) h += q[t++] * s[i] * s[j];
            for (int i = 0; i < m; ++i)
                for (int j = i; j < m; ++j)
                    for (int l = j; l < m; ++l) h += q[t++] * s[i] * s[j] * s[l];
            x[m + r] = h;
        }
        return x;
    });
}

Embedding round_sphere(int n, double radius, const std::vector<double>& center) {
    require(radius > 0, "round_sphere: radius must be positive");
    require((int)center.size() == n, "round_sphere: center must have n entries");
    int m = n - 1;
    return embedding(m, n, "round_sphere", [n, m, radius, center](const auto& y) {
        using T = std::decay_t<decltype(y[0])>;
        T s = y[0] * y[0];
        for (int i = 1; i < m; ++i) s += y[i] * y[i];
        T inv = radius / (1.0 + s);
        std::vector<T> x(n);
        for (int i = 0; i < m; ++i) x[i] = center[i] + 2.0 * y[i] * inv;
        x[m] = center[m] + (s - 1.0) * inv;
        return x;
    });
}

Embedding round_circle(int n, double radius, const std::vector<double>& center) {
    require(radius > 0, "round_circle: radius must be positive");
    require(n >= 2 && (int)center.size() == n, "round_circle: center must have n entries");
    return embedding(1, n, "round_circle", [n, radius, center](const auto& s) {
        using T = std::decay_t<decltype(s[0])>;
        std::vector<T> x(n);
        for (int a = 0; a < n; ++a) x[a] = const_like(s[0], center[a]);
        x[0] += radius * cos(s[0]);
        x[1] += radius * sin(s[0]);
        return x;
    });
}

Embedding helix(double radius, double pitch) {
    require(radius > 0, "helix: radius must be positive");
    return embedding(1, 3, "helix", [radius, pitch](const auto& s) {
        using T = std::decay_t<decltype(s[0])>;
        return std::vector<T>{radius * cos(s[0]), radius * sin(s[0]), pitch * s[0]};
    });
}

Embedding cp1_slice() {
    Embedding e = coordinate_slice(4, {0, 2}, {0.0, 0.0});
    e.name = "cp1_slice";
    return e;
}

Embedding rp2_slice() {
    Embedding e = coordinate_slice(4, {0, 1}, {0.0, 0.0});
    e.name = "rp2_slice";
    return e;
}

Embedding s2s2_diagonal() {
    return embedding(2, 4, "s2s2_diagonal", [](const auto& s) {
        using T = std::decay_t<decltype(s[0])>;
        return std::vector<T>{s[0], s[1], s[0], s[1]};
    });
}

Embedding s2s2_first_factor(const std::vector<double>& q) {
    require(q.size() == 2, "s2s2_first_factor: q must have 2 entries");
    Embedding e = coordinate_slice(4, {0, 1}, q);
    e.name = "s2s2_first_factor";
    return e;
}

Embedding parabola(int n, double curvature) {
    require(n >= 2, "parabola: n >= 2");
    return embedding(1, n, "parabola", [n, curvature](const auto& s) {
        using T = std::decay_t<decltype(s[0])>;
        std::vector<T> x(n, const_like(s[0], 0.0));
        x[0] = s[0];
        x[1] = curvature * s[0] * s[0];
        return x;
    });
}

// ---- KY forms ----

KYForm ky_constant(int n, const std::vector<double>& covector) {
    require((int)covector.size() == n, "ky_constant: covector must have n entries");
    KYForm k;
    k.n = n;
    k.degree = 1;
    k.name = "constant";
    k.comps = make_field(n, n, [n, covector](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        std::vector<T> o(n);
        for (int a = 0; a < n; ++a) o[a] = const_like(x[0], covector[a]);
        return o;
    });
    return k;
}

KYForm ky_rotation(int n, int i, int j) {
    require(i >= 0 && j >= 0 && i < n && j < n && i != j, "ky_rotation: bad plane");
    KYForm k;
    k.n = n;
    k.degree = 1;
    k.name = "rotation";
    k.comps = make_field(n, n, [n, i, j](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        std::vector<T> o(n, const_like(x[0], 0.0));
        o[j] = x[i];
        o[i] = -x[j];
        return o;
    });
    return k;
}

KYForm ky_dilation(int n) {
    KYForm k;
    k.n = n;
    k.degree = 1;
    k.name = "dilation";
    k.comps = make_field(n, n, [](const auto& x) { return x; });
    return k;
}

KYForm ky_special_conformal(int n, const std::vector<double>& b) {
    require((int)b.size() == n, "ky_special_conformal: b must have n entries");
    KYForm k;
    k.n = n;
    k.degree = 1;
    k.name = "special_conformal";
    k.comps = make_field(n, n, [n, b](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        T bx = const_like(x[0], 0.0), r2 = const_like(x[0], 0.0);
        for (int a = 0; a < n; ++a) {
            bx += b[a] * x[a];
            r2 += x[a] * x[a];
        }
        std::vector<T> o(n);
        for (int a = 0; a < n; ++a) o[a] = 2.0 * bx * x[a] - b[a] * r2;
        return o;
    });
    return k;
}

KYForm ky_s2_killing(int factor, double a, double bre, double bim) {
    require(factor == 0 || factor == 1, "ky_s2_killing: factor must be 0 or 1");
    int off = 2 * factor;
    // v = b + 2 i a z + conj(b) z^2 in z = x + i y
    auto v = [off, a, bre, bim](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        const T &X = x[off], &Y = x[off + 1];
        T zr2 = X * X - Y * Y, zi2 = 2.0 * X * Y;
        T vx = bre - 2.0 * a * Y + bre * zr2 + bim * zi2;
        T vy = bim + 2.0 * a * X + bre * zi2 - bim * zr2;
        std::vector<T> o(4, const_like(x[0], 0.0));
        o[off] = vx;
        o[off + 1] = vy;
        return o;
    };
    return lowered(4, s2s2().metric, "s2_killing", v);
}

KYForm ky_sum(const KYForm& a, const KYForm& b) {
    require(a.n == b.n && a.degree == b.degree, "ky_sum: shape mismatch");
    KYForm k = a;
    k.name = a.name + "+" + b.name;
    Field fa = a.comps, fb = b.comps;
    int nout = fa.nout;
    k.comps = make_field(a.n, nout, [fa, fb, nout](const auto& x) {
        auto u = call(fa, x), v = call(fb, x);
        for (int i = 0; i < nout; ++i) u[i] += v[i];
        return u;
    });
    return k;
}

KYForm ky_hyperbolic_scale(int n) {
    KYForm k;
    k.n = n;
    k.degree = 0;
    k.name = "hyperbolic_scale";
    k.comps = make_field(n, 1, [n](const auto& x) {
        using T = std::decay_t<decltype(x[0])>;
        T r2 = const_like(x[0], 0.0);
        for (int a = 0; a < n; ++a) r2 += x[a] * x[a];
        return std::vector<T>{0.5 * (1.0 - r2)};
    });
    return k;
}

// ---- name lookup ----

namespace {

int pint(const Params& p, const char* key, int def) { return p.contains(key) ? p.at(key).get<int>() : def; }
double pnum(const Params& p, const char* key, double def) { return p.contains(key) ? p.at(key).get<double>() : def; }

Geometry sub_geometry(const Params& p, const char* key, DiffBackend be) {
    require(p.contains(key), std::string("missing factor '") + key + "'");
    const Params& f = p.at(key);
    require(f.is_object() && f.contains("name"), std::string("factor '") + key + "' needs a name");
    allow_keys(f, {"name", "params"}, std::string("factor '") + key + "'");
    return geometry_by_name(f.at("name").get<std::string>(), f.value("params", Params::object()), be);
}

using GeoMaker = std::function<Geometry(const Params&, DiffBackend)>;

const std::map<std::string, GeoMaker>& geo_table() {
    static const std::map<std::string, GeoMaker> t = {
        {"euclidean", [](const Params& p, DiffBackend be) { return euclidean(pint(p, "n", 3), be); }},
        {"sphere",
         [](const Params& p, DiffBackend be) { return sphere(pint(p, "n", 2), pnum(p, "radius", 1.0), be); }},
        {"hyperbolic", [](const Params& p, DiffBackend be) { return hyperbolic(pint(p, "n", 2), be); }},
        {"space_form",
         [](const Params& p, DiffBackend be) { return space_form(pint(p, "n", 2), pnum(p, "kappa", 1.0), be); }},
        {"product",
         [](const Params& p, DiffBackend be) { return product(sub_geometry(p, "a", be), sub_geometry(p, "b", be)); }},
        {"warped_product",
         [](const Params& p, DiffBackend be) {
             Geometry a = sub_geometry(p, "base", be), b = sub_geometry(p, "fiber", be);
             return warped_product(a, b, eq_from_json(p.value("f", Params::object()), a.n));
         }},
        {"twisted_product",
         [](const Params& p, DiffBackend be) {
             Geometry a = sub_geometry(p, "a", be), b = sub_geometry(p, "b", be);
             Field f2 = exp_quadratic(a.n + b.n, eq_from_json(p.value("f", Params::object()), a.n + b.n));
             Geometry g = twisted_product(a, b, Field{}, f2);
             g.name = "twisted_product";
             return g;
         }},
        {"doubly_twisted_product",
         [](const Params& p, DiffBackend be) {
             Geometry a = sub_geometry(p, "a", be), b = sub_geometry(p, "b", be);
             int n = a.n + b.n;
             Geometry g = twisted_product(a, b, exp_quadratic(n, eq_from_json(p.value("f1", Params::object()), n)),
                                          exp_quadratic(n, eq_from_json(p.value("f2", Params::object()), n)));
             g.name = "doubly_twisted_product";
             return g;
         }},
        {"doubly_warped_product",
         [](const Params& p, DiffBackend be) {
             Geometry a = sub_geometry(p, "a", be), b = sub_geometry(p, "b", be);
             return doubly_warped_product(a, b, eq_from_json(p.value("f1", Params::object()), b.n),
                                          eq_from_json(p.value("f2", Params::object()), a.n));
         }},
        {"doubly_warped_example", [](const Params&, DiffBackend be) { return doubly_warped_example(be); }},
        {"twisted_example", [](const Params&, DiffBackend be) { return twisted_example(be); }},
        {"twisted_split_example", [](const Params&, DiffBackend be) { return twisted_split_example(be); }},
        {"s2h2", [](const Params& p, DiffBackend be) { return s2h2(pnum(p, "kappa", 1.0), be); }},
        {"fubini_study", [](const Params& p, DiffBackend be) { return fubini_study(pint(p, "N", 2), be); }},
        {"s2s2", [](const Params&, DiffBackend be) { return s2s2(be); }},
        {"s2s1r", [](const Params&, DiffBackend be) { return s2s1r(be); }},
    };
    return t;
}

using EmbMaker = std::function<Embedding(const Params&, int)>;

std::vector<double> pvec(const Params& p, const char* key, std::vector<double> def) {
    return p.contains(key) ? p.at(key).get<std::vector<double>>() : def;
}

const std::map<std::string, EmbMaker>& emb_table() {
    static const std::map<std::string, EmbMaker> t = {
        {"coordinate_slice",
         [](const Params& p, int n) {
             require(p.contains("free"), "coordinate_slice: 'free' required");
             auto fr = p.at("free").get<std::vector<int>>();
             return coordinate_slice(n, fr, pvec(p, "fixed", std::vector<double>(n - fr.size(), 0.0)));
         }},
        {"hyperplane",
         [](const Params& p, int n) {
             std::vector<int> fr(n - 1);
             std::iota(fr.begin(), fr.end(), 0);
             Embedding e = coordinate_slice(n, fr, {pnum(p, "offset", 0.0)});
             e.name = "hyperplane";
             return e;
         }},
        {"great_subsphere", [](const Params& p, int n) { return great_subsphere(n, pint(p, "m", n - 1)); }},
        {"graph",
         [](const Params& p, int n) { return graph(n, pint(p, "m", n - 1), pvec(p, "coeffs", {})); }},
        {"round_sphere",
         [](const Params& p, int n) {
             return round_sphere(n, pnum(p, "radius", 1.0), pvec(p, "center", std::vector<double>(n, 0.0)));
         }},
        {"round_circle",
         [](const Params& p, int n) {
             return round_circle(n, pnum(p, "radius", 1.0), pvec(p, "center", std::vector<double>(n, 0.0)));
         }},
        {"helix", [](const Params& p, int) { return helix(pnum(p, "radius", 1.0), pnum(p, "pitch", 0.5)); }},
        {"cp1_slice", [](const Params&, int) { return cp1_slice(); }},
        {"rp2_slice", [](const Params&, int) { return rp2_slice(); }},
        {"s2s2_diagonal", [](const Params&, int) { return s2s2_diagonal(); }},
        {"s2s2_first_factor",
         [](const Params& p, int) { return s2s2_first_factor(pvec(p, "q", {0.0, 0.0})); }},
        {"parabola", [](const Params& p, int n) { return parabola(n, pnum(p, "curvature", 1.0)); }},
    };
    return t;
}

using KyMaker = std::function<KYForm(const Params&, int)>;

const std::map<std::string, KyMaker>& ky_table() {
    static const std::map<std::string, KyMaker> t = {
        {"constant",
         [](const Params& p, int n) {
             std::vector<double> c(n, 0.0);
             c[0] = 1.0;
             return ky_constant(n, pvec(p, "covector", c));
         }},
        {"rotation", [](const Params& p, int n) { return ky_rotation(n, pint(p, "i", 0), pint(p, "j", 1)); }},
        {"dilation", [](const Params&, int n) { return ky_dilation(n); }},
        {"special_conformal",
         [](const Params& p, int n) {
             std::vector<double> b(n, 0.0);
             b[0] = 1.0;
             return ky_special_conformal(n, pvec(p, "b", b));
         }},
        {"s2_killing",
         [](const Params& p, int) {
             return ky_s2_killing(pint(p, "factor", 0), pnum(p, "a", 1.0), pnum(p, "bre", 0.0), pnum(p, "bim", 0.0));
         }},
        {"s2s2_killing_sum",
         [](const Params& p, int) {
             auto f = [&](const char* key, int factor) {
                 Params q = p.value(key, Params::object());
                 allow_keys(q, {"a", "bre", "bim"}, key);
                 return ky_s2_killing(factor, pnum(q, "a", 1.0), pnum(q, "bre", 0.3), pnum(q, "bim", -0.2));
             };
             return ky_sum(f("first", 0), f("second", 1));
         }},
        {"hyperbolic_scale", [](const Params&, int n) { return ky_hyperbolic_scale(n); }},
    };
    return t;
}

using KeyList = std::vector<std::string>;

const std::map<std::string, KeyList>& geo_keys() {
    static const std::map<std::string, KeyList> t = {
        {"euclidean", {"n"}}, {"sphere", {"n", "radius"}}, {"hyperbolic", {"n"}}, {"space_form", {"n", "kappa"}},
        {"product", {"a", "b"}}, {"warped_product", {"base", "fiber", "f"}}, {"twisted_product", {"a", "b", "f"}},
        {"doubly_twisted_product", {"a", "b", "f1", "f2"}}, {"doubly_warped_product", {"a", "b", "f1", "f2"}},
        {"doubly_warped_example", {}}, {"twisted_example", {}}, {"twisted_split_example", {}}, {"s2h2", {"kappa"}},
        {"fubini_study", {"N"}}, {"s2s2", {}}, {"s2s1r", {}},
    };
    return t;
}

const std::map<std::string, KeyList>& emb_keys() {
    static const std::map<std::string, KeyList> t = {
        {"coordinate_slice", {"free", "fixed"}}, {"hyperplane", {"offset"}}, {"great_subsphere", {"m"}},
        {"graph", {"m", "coeffs"}}, {"round_sphere", {"radius", "center"}}, {"round_circle", {"radius", "center"}},
        {"helix", {"radius", "pitch"}}, {"cp1_slice", {}}, {"rp2_slice", {}}, {"s2s2_diagonal", {}},
        {"s2s2_first_factor", {"q"}}, {"parabola", {"curvature"}},
    };
    return t;
}

const std::map<std::string, KeyList>& ky_keys() {
    static const std::map<std::string, KeyList> t = {
        {"constant", {"covector"}}, {"rotation", {"i", "j"}}, {"dilation", {}}, {"special_conformal", {"b"}},
        {"s2_killing", {"factor", "a", "bre", "bim"}}, {"s2s2_killing_sum", {"first", "second"}},
        {"hyperbolic_scale", {}},
    };
    return t;
}

// nlohmann type errors surface as schema errors
template <class F>
auto guarded(const std::string& where, F f) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(where + ": " + e.what());
    }
}

template <class M>
std::vector<std::string> keys(const M& m) {
    std::vector<std::string> r;
    for (auto& [k, v] : m) r.push_back(k);
    return r;
}

}  // namespace

Geometry geometry_by_name(const std::string& name, const Params& params, DiffBackend be) {
    auto& t = geo_table();
    auto it = t.find(name);
    if (it == t.end()) throw UnknownName("unknown geometry: " + name);
    allow_keys(params, geo_keys().at(name), name);
    return guarded(name, [&] { return it->second(params.is_null() ? Params::object() : params, be); });
}

Embedding embedding_by_name(const std::string& name, const Params& params, int n) {
    auto& t = emb_table();
    auto it = t.find(name);
    if (it == t.end()) throw UnknownName("unknown embedding: " + name);
    allow_keys(params, emb_keys().at(name), name);
    Embedding e = guarded(name, [&] { return it->second(params.is_null() ? Params::object() : params, n); });
    require(e.n == n, "embedding " + name + " targets dimension " + std::to_string(e.n));
    return e;
}

KYForm ky_by_name(const std::string& name, const Params& params, int n) {
    auto& t = ky_table();
    auto it = t.find(name);
    if (it == t.end()) throw UnknownName("unknown KY form: " + name);
    allow_keys(params, ky_keys().at(name), name);
    KYForm k = guarded(name, [&] { return it->second(params.is_null() ? Params::object() : params, n); });
    require(k.n == n, "KY form " + name + " lives in dimension " + std::to_string(k.n));
    return k;
}

std::vector<std::string> geometry_names() { return keys(geo_table()); }
std::vector<std::string> embedding_names() { return keys(emb_table()); }
std::vector<std::string> ky_names() { return keys(ky_table()); }

namespace {

// parameters for entries whose defaults are not enough to build them
const std::map<std::string, Params>& sample_params() {
    static const std::map<std::string, Params> t = {
        {"product", {{"a", {{"name", "sphere"}}}, {"b", {{"name", "hyperbolic"}}}}},
        {"warped_product",
         {{"base", {{"name", "sphere"}}},
          {"fiber", {{"name", "euclidean"}, {"params", {{"n", 1}}}}},
          {"f", {{"b", 0.1}, {"c", {0.2, -0.1}}, {"Q", {0.3, 0.1, 0.1, -0.2}}}}}},
        {"twisted_product",
         {{"a", {{"name", "euclidean"}, {"params", {{"n", 2}}}}},
          {"b", {{"name", "euclidean"}, {"params", {{"n", 2}}}}},
          {"f", {{"c", {0.3, 0.0, 0.2, 0.0}}}}}},
        {"doubly_twisted_product",
         {{"a", {{"name", "sphere"}}},
          {"b", {{"name", "euclidean"}, {"params", {{"n", 2}}}}},
          {"f1", {{"c", {0.0, 0.1, 0.3, 0.0}}}},
          {"f2", {{"c", {0.2, 0.0, 0.0, -0.1}}}}}},
        {"doubly_warped_product",
         {{"a", {{"name", "euclidean"}, {"params", {{"n", 2}}}}},
          {"b", {{"name", "sphere"}}},
          {"f1", {{"c", {0.4, 0.0}}}},
          {"f2", {{"c", {0.0, -0.3}}}}}},
        {"coordinate_slice", {{"free", {0, 1}}}},
    };
    return t;
}

Params params_for(const std::string& name) {
    auto it = sample_params().find(name);
    return it == sample_params().end() ? Params::object() : it->second;
}

// central differences Richardson-extrapolated over steps h and h/2
double jet_mismatch(const Field& f, const Point& p) {
    auto a = jet_tensors(f, p, 2, DiffBackend::analytic());
    auto d1 = jet_tensors(f, p, 2, DiffBackend::fd(1e-3)), d2 = jet_tensors(f, p, 2, DiffBackend::fd(5e-4));
    double scale = std::max(1.0, max_abs(a[0])), e = 0;
    for (int k = 1; k <= 2; ++k) e = std::max(e, max_abs(a[k] - ((4.0 / 3.0) * d2[k] - (1.0 / 3.0) * d1[k])) / scale);
    return e;
}

}  // namespace

std::vector<SelfTestResult> self_test(unsigned seed, int points, double tol) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-0.4, 0.4);
    auto run = [&](const std::string& kind, const std::string& name, const Field& f) {
        SelfTestResult r{kind, name};
        for (int i = 0; i < points; ++i) {
            Point p(f.nin);
            for (auto& x : p) x = U(rng);
            r.max_error = std::max(r.max_error, jet_mismatch(f, p));
        }
        r.ok = r.max_error < tol;
        return r;
    };
    std::vector<SelfTestResult> out;
    for (auto& name : geometry_names()) {
        Geometry g = geometry_by_name(name, params_for(name), DiffBackend::analytic());
        out.push_back(run("geometry", name, g.metric));
    }
    for (auto& name : embedding_names()) {
        int n = name == "helix" ? 3 : 4;
        out.push_back(run("embedding", name, embedding_by_name(name, params_for(name), n).map));
    }
    for (auto& name : ky_names()) out.push_back(run("ky", name, ky_by_name(name, params_for(name), 4).comps));
    return out;
}

}  // namespace tl::geolib
