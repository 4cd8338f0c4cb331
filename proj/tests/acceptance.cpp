// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "circles.hpp"
#include "firstint.hpp"
#include "geolib.hpp"
#include "invariance.hpp"
#include "subtractor.hpp"

using namespace tl;
namespace gl = tl::geolib;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    // records a measured quantity against its bound
    void expect(bool ok, const std::string& what) {
        if (!ok) pass = false;
        detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [fail]");
    }
};

std::string fmt(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3g", v);
    return b;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> random_coeffs(int n, int m, unsigned seed, double amp) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-amp, amp);
    int per = m * (m + 1) / 2 + m * (m + 1) * (m + 2) / 6;
    std::vector<double> c((n - m) * per);
    for (auto& v : c) v = U(rng);
    return c;
}

// max |F_ij - c g_ij|
double scalar_residual(const TensorValue& F, const TensorValue& g, double c) {
    double e = 0;
    for (int i = 0; i < g.dim(0); ++i)
        for (int j = 0; j < g.dim(0); ++j) e = std::max(e, std::fabs(F(i, j) - c * g(i, j)));
    return e;
}

void fialkow_case(Outcome& o, const Embedding& emb, double want, bool timed) {
    auto t0 = std::chrono::steady_clock::now();
    Geometry cp2 = gl::fubini_study(2);
    std::vector<Point> qs{{0.0, 0.0}, {0.2, -0.3}, {-0.25, 0.1}};
    auto rep = classify(cp2, emb, qs);
    double err = 0;
    for (auto& s : rep.samples) err = std::max(err, std::fabs(s.fialkow_coefficient - want));
    // F is pure trace: coefficient times g
    double tf = 0;
    for (auto& q : qs) {
        auto pk = tractor_sub_pack(cp2, emb, q);
        tf = std::max(tf, scalar_residual(pk.F, pk.rp.g, want));
    }
    double secs = seconds_since(t0);
    o.expect(err < 1e-5, "coefficient error " + fmt(err));
    o.expect(tf < 1e-5, "|F - c g| " + fmt(tf));
    if (timed) o.expect(secs < 5, "time " + fmt(secs) + " s");
}

Outcome criterion1() {
    Outcome o;
    fialkow_case(o, gl::cp1_slice(), -1.0, true);
    return o;
}

Outcome criterion2() {
    Outcome o;
    fialkow_case(o, gl::rp2_slice(), 0.5, false);
    return o;
}

Outcome criterion3() {
    Outcome o;
    Geometry g = gl::doubly_warped_example();
    Embedding slice = gl::coordinate_slice(4, {0, 1}, {0.0, 0.0});
    double ric = 0, mu = 0;
    std::vector<Point> qs{{0.3, -0.4}, {0.0, 0.2}, {-0.5, 0.7}};
    for (auto& q : qs) {
        ric = std::max(ric, std::fabs(curvature_pack(g, slice.map.valfn(q)).Ric(0, 2) - 2.0));
        auto pk = tractor_sub_pack(g, slice, q);
        mu = std::max(mu, sub_norm(pk.mu, pk));
    }
    // mixed Ricci is constant off the slice too
    ric = std::max(ric, std::fabs(curvature_pack(g, {0.3, -0.2, 0.5, 1.1}).Ric(0, 2) - 2.0));
    o.expect(ric < 1e-8, "|Ric13 - 2| " + fmt(ric));
    o.expect(mu < 1e-8, "|mu| " + fmt(mu));
    o.expect(classify(g, slice, qs).distinguished, "distinguished");
    return o;
}

Outcome criterion4() {
    Outcome o;
    Geometry g = gl::twisted_example();
    Embedding slice = gl::coordinate_slice(4, {0, 1}, {0.0, 0.0});
    double r = 0;
    for (Point p : {Point{0, 0, 0, 0}, Point{0.3, -0.2, 0.5, 1.1}, Point{-0.4, 0.1, -0.2, 0.3}})
        r = std::max(r, std::fabs(curvature_pack(g, p).Ric(0, 2) + 1.0));
    o.expect(r < 1e-8, "|R13 + 1| " + fmt(r));
    auto rep = classify(g, slice, {{0.3, -0.4}, {0.0, 0.2}});
    o.expect(rep.umbilic, "umbilic");
    o.expect(!rep.distinguished, "not distinguished (|L| " + fmt(rep.max_L) + ")");
    return o;
}

Outcome criterion5() {
    Outcome o;
    Geometry g = gl::s2s1r();
    Embedding e = gl::coordinate_slice(4, {0, 1, 2}, {0.0});
    double ep = 0, eP = 0;
    double p_h = 0, p_t = 0, P_h = 0, P_t = 0;
    std::vector<Point> qs{{0.2, -0.1, 0.5}, {-0.3, 0.4, 1.2}};
    for (auto& q : qs) {
        auto pk = tractor_sub_pack(g, e, q);
        const auto& gs = pk.rp.g;
        // h is the round block (coordinates 0, 1), d theta^2 the last
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double hc = (i < 2 && j < 2) ? gs(i, j) : 0.0, tc = (i == 2 && j == 2) ? gs(2, 2) : 0.0;
                ep = std::max(ep, std::fabs(pk.p(i, j) - (0.75 * hc - 0.25 * tc)));
                eP = std::max(eP, std::fabs(pk.Pij(i, j) - (5.0 / 12.0 * hc - 1.0 / 12.0 * tc)));
            }
        p_h = pk.p(0, 0) / gs(0, 0);
        p_t = pk.p(2, 2) / gs(2, 2);
        P_h = pk.Pij(0, 0) / gs(0, 0);
        P_t = pk.Pij(2, 2) / gs(2, 2);
    }
    o.expect(ep < 1e-6, "|p - (3/4 h - 1/4 dth^2)| " + fmt(ep) + " (measured p = " + fmt(p_h) + " h + " + fmt(p_t) +
                            " dth^2)");
    o.expect(eP < 1e-6, "|i*P - (5/12 h - 1/12 dth^2)| " + fmt(eP) + " (measured i*P = " + fmt(P_h) + " h + " +
                            fmt(P_t) + " dth^2)");
    auto rep = classify(g, e, qs);
    o.expect(rep.max_F_tracefree > 0.05, "F proportionality residual " + fmt(rep.max_F_tracefree));
    return o;
}

Outcome criterion6() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    struct Case {
        Geometry g;
        Embedding e;
        Point q;
        bool distinguished;
    };
    std::vector<Case> cases;
    // random graph-type embeddings over several ambients
    std::vector<std::pair<Geometry, int>> ambients{{gl::euclidean(4), 2}, {gl::sphere(4), 2}, {gl::s2s2(), 2},
                                                   {gl::fubini_study(2), 2}, {gl::euclidean(5), 3}};
    for (unsigned s = 0; s < 10; ++s) {
        auto& [g, m] = ambients[s % ambients.size()];
        Point q(m, 0.0);
        q[0] = 0.1;
        q[1] = -0.15;
        cases.push_back({g, gl::graph(g.n, m, random_coeffs(g.n, m, 100 + s, 0.5)), q, false});
    }
    cases.push_back({gl::fubini_study(2), gl::cp1_slice(), {0.2, -0.1}, true});
    cases.push_back({gl::sphere(4), gl::great_subsphere(4, 2), {0.2, -0.1}, true});
    cases.push_back({gl::doubly_warped_example(), gl::coordinate_slice(4, {0, 1}, {0.0, 0.0}), {0.3, -0.4}, true});
    cases.push_back({gl::s2s2(), gl::s2s2_first_factor({0.3, -0.2}), {0.1, 0.4}, true});
    cases.push_back({gl::s2s1r(), gl::coordinate_slice(4, {0, 1, 2}, {0.0}), {0.2, -0.1, 0.5}, true});

    int agree = 0, mixed = 0, wrong = 0;
    double worst_on = 0, least_off = INFINITY;
    for (auto& c : cases) {
        auto t = theorem_residuals(c.g, c.e, c.q);
        std::vector<double> r{t.L, t.nablaNproj, t.nablaNform, t.nablaStar};
        int small = 0;
        for (double v : r) small += v < 1e-5;
        if (small != 0 && small != 4) ++mixed;
        bool verdict = classify(c.g, c.e, {c.q}).distinguished;
        if (small == 4 && c.distinguished && verdict) ++agree;
        else if (small == 0 && !c.distinguished && !verdict) ++agree;
        else ++wrong;
        for (double v : r) {
            if (c.distinguished) worst_on = std::max(worst_on, v);
            else least_off = std::min(least_off, v);
        }
    }
    double secs = seconds_since(t0);
    o.expect(mixed == 0, "cases with mixed residuals " + std::to_string(mixed));
    o.expect(wrong == 0 && agree == (int)cases.size(),
             "co-vanishing matches the distinguished set on " + std::to_string(agree) + "/" +
                 std::to_string(cases.size()));
    o.detail << "; max on distinguished " << fmt(worst_on) << ", min off " << fmt(least_off);
    o.expect(secs < 30, "time " + fmt(secs) + " s");
    return o;
}

Outcome criterion7() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    Geometry e3 = gl::euclidean(3);
    std::vector<CurveMonitor> mons;
    for (auto [i, j] : {std::pair{0, 1}, std::pair{1, 2}, std::pair{0, 2}})
        mons.push_back(ky_monitor(e3, gl::ky_rotation(3, i, j)));

    // unit circle; x(t) = (cos th, sin th, 0) with th = 2 atan(t / 2)
    CurveState s{{1, 0, 0}, {0, 1, 0}, {-1, 0, 0}, 0};
    double T = 2 * M_PI;
    auto tr = integrate_circle(e3, s, T, {}, mons);
    double th = 2 * std::atan(T / 2);
    const auto& x = tr.samples.back().s.x;
    double err = std::hypot(x[0] - std::cos(th), x[1] - std::sin(th), x[2]);
    o.expect(tr.status == "ok", "status " + tr.status);
    o.expect(err < 1e-7, "endpoint error " + fmt(err));
    o.expect(tr.max_phi_drift < 1e-6, "Phi transport " + fmt(tr.max_phi_drift));

    // generic circle over parameter length 10
    CurveState s2{{0.3, -0.2, 0.5}, {0.0, 0.8, 0.6}, {-0.5, 0.0, 0.0}, 0};
    auto tr2 = integrate_circle(e3, s2, 10.0, {}, mons);
    double drift = 0;
    for (double d : tr2.conserved_drift) drift = std::max(drift, d);
    o.expect(tr2.status == "ok" && tr2.conserved_drift.size() == 3, "status " + tr2.status);
    o.expect(tr2.max_phi_drift < 1e-6, "Phi transport (length 10) " + fmt(tr2.max_phi_drift));
    o.expect(drift < 1e-7, "conserved drift " + fmt(drift));
    double secs = seconds_since(t0);
    o.expect(secs < 5, "time " + fmt(secs) + " s");
    return o;
}

Outcome criterion8() {
    Outcome o;
    Embedding plane = gl::coordinate_slice(4, {2, 3}, {0.3, -0.2});
    double flat = 0;
    for (Point q : {Point{0.1, 0.5}, Point{-0.4, 0.2}, Point{0.7, -0.6}})
        flat = std::max(flat, conserved_quantity(gl::euclidean(4), plane, gl::ky_rotation(4, 0, 1), q).residual);
    o.expect(flat < 1e-8, "flat plane residual " + fmt(flat));

    Geometry g = gl::s2s2();
    Embedding diag = gl::s2s2_diagonal();
    KYForm k = gl::ky_sum(gl::ky_s2_killing(0, 0.7, 0.4, -0.3), gl::ky_s2_killing(1, -0.2, 0.1, 0.5));
    double obs = 0, res = INFINITY;
    for (Point q : {Point{0.2, -0.1}, Point{-0.4, 0.3}, Point{0.1, 0.6}}) {
        auto c = conserved_quantity(g, diag, k, q);
        obs = std::max(obs, c.obstruction_residual);
        res = std::min(res, c.residual);
    }
    o.expect(obs < 1e-4, "diagonal |d(K.N) - obstruction| " + fmt(obs));
    o.expect(res > 1e-2, "diagonal |d(K.N)| " + fmt(res));
    return o;
}

Outcome criterion9() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    Geometry e4 = gl::euclidean(4);
    ScanRegion reg{{-1, -1, -1, -1}, {1, 1, 1, 1}, 41};
    auto rep = zero_locus_scan(e4, gl::ky_rotation(4, 0, 1), reg, 1e-12);
    double L = 0, off = 0;
    bool lcomputed = !rep.points.empty();
    for (auto& p : rep.points) {
        if (p.L < 0) lcomputed = false;
        L = std::max(L, p.L);
        off = std::max(off, std::hypot(p.x[0], p.x[1]));
    }
    o.expect(!rep.empty && rep.codim == 2, "codimension " + std::to_string(rep.codim));
    o.expect(off < 1e-8, "distance from the plane " + fmt(off));
    o.expect(lcomputed && L < 1e-5, "on-locus |L| " + fmt(L));
    auto dl = zero_locus_scan(e4, gl::ky_dilation(4), reg, 1e-12);
    o.expect(dl.empty && dl.short_circuit && dl.certificate < 0,
             "timelike input empty, certificate K.K = " + fmt(dl.certificate));
    double secs = seconds_since(t0);
    o.expect(secs < 20, "time " + fmt(secs) + " s");
    return o;
}

Outcome criterion10() {
    Outcome o;
    struct Case {
        std::string geo;
        gl::Params params;
        Embedding e;
        Point q;
    };
    std::vector<Case> cases{
        {"euclidean", {{"n", 3}}, gl::round_sphere(3, 1.3, {0.1, 0, 0}), {0.4, 0.3}},
        {"fubini_study", {}, gl::cp1_slice(), {0.2, -0.1}},
        {"twisted_example", {}, gl::coordinate_slice(4, {0, 1}, {0.0, 0.0}), {0.2, 0.1}},
        {"s2s2", {}, gl::s2s2_diagonal(), {0.1, 0.3}},
        {"doubly_warped_example", {}, gl::coordinate_slice(4, {0, 1}, {0.0, 0.0}), {0.3, -0.4}},
    };
    double an = 0, fd = 0;
    int unstable = 0;
    for (auto& c : cases) {
        Geometry ga = gl::geometry_by_name(c.geo, c.params, DiffBackend::analytic());
        Geometry gf = gl::geometry_by_name(c.geo, c.params, DiffBackend::fd());
        for (unsigned s = 1; s <= 5; ++s) {
            Field om = gl::exp_quadratic(ga.n, random_omega(ga.n, s, 0.3));
            auto r = invariance_check(ga, &c.e, om, {c.q});
            an = std::max({an, r.schouten, r.weyl, r.second_ff, r.tracefree_2ff, r.tractor});
            if (!r.verdicts_equal) ++unstable;
            auto f = invariance_check(gf, nullptr, om, {c.e.map.valfn(c.q)});
            auto cf = conformal_transform_check(gf, c.e, om, c.q);
            fd = std::max({fd, f.schouten, f.weyl, f.tractor, cf.II, cf.H, cf.IIo});
        }
    }
    o.expect(unstable == 0, "verdict changes " + std::to_string(unstable) + "/25");
    o.expect(an < 1e-5, "analytic law residual " + fmt(an));
    o.expect(fd < 1e-2, "finite-difference law residual " + fmt(fd));
    return o;
}

}  // namespace

int main() {
    std::vector<std::pair<std::string, std::function<Outcome()>>> suite{
        {"CP1 in CP2 Fialkow coefficient -1", criterion1},
        {"RP2 in CP2 Fialkow coefficient 1/2", criterion2},
        {"doubly warped R4: Ric13 = 2, mu = 0, distinguished", criterion3},
        {"twisted R4: R13 = -1, umbilic, not distinguished", criterion4},
        {"S2xS1 in S2xS1xR Schouten components, F not proportional", criterion5},
        {"equivalence: four residuals co-vanish on the distinguished set", criterion6},
        {"flat conformal circles: period, Phi transport, conserved drift", criterion7},
        {"conservation along distinguished submanifolds and its obstruction", criterion8},
        {"zero-locus scan of a rotation and a timelike field", criterion9},
        {"conformal invariance under random rescalings", criterion10},
    };
    int failed = 0;
    for (size_t i = 0; i < suite.size(); ++i) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = suite[i].second();
        } catch (const std::exception& e) {
            o.expect(false, std::string("exception: ") + e.what());
        }
        if (!o.pass) ++failed;
        std::printf("criterion %2zu %s  %s (%.2f s): %s\n", i + 1, o.pass ? "PASS" : "FAIL", suite[i].first.c_str(),
                    seconds_since(t0), o.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", (int)suite.size() - failed, suite.size());
    return failed == 0 ? 0 : 1;
}
