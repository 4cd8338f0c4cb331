#include "circles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace tl {

namespace {

struct Local {
    int n = 0;
    TensorValue g, ginv, Gamma, P;
    std::vector<TensorValue> C;  // tractor connection matrices per direction
};

Local local_at(const Geometry& geo, const Point& x, bool tractor) {
    auto cj = curvature_at(geo, x, 2);
    if (!cj.conformal) throw std::invalid_argument("conformal circles need n >= 3 or a Moebius Schouten tensor");
    auto pk = pack_values(cj, geo.orientation);
    Local l;
    l.n = geo.n;
    l.g = pk.g;
    l.ginv = pk.ginv;
    l.Gamma = pk.Gamma;
    l.P = pk.P;
    if (tractor) l.C = tractor_connection_values(pk);
    return l;
}

double dot(const TensorValue& g, const std::vector<double>& a, const std::vector<double>& b) {
    int n = (int)a.size();
    double s = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += g(i, j) * a[i] * b[j];
    return s;
}

// (P u)^b = g^bc P_cd u^d
std::vector<double> P_of(const Local& l, const std::vector<double>& u) {
    int n = l.n;
    std::vector<double> low(n, 0.0), r(n, 0.0);
    for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) low[c] += l.P(c, d) * u[d];
    for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) r[b] += l.ginv(b, c) * low[c];
    return r;
}

std::vector<double> gamma_of(const Local& l, const std::vector<double>& u, const std::vector<double>& v) {
    int n = l.n;
    std::vector<double> r(n, 0.0);
    for (int c = 0; c < n; ++c)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) r[c] += l.Gamma(c, a, b) * u[a] * v[b];
    return r;
}

double speed2(const Local& l, const std::vector<double>& u) {
    double u2 = dot(l.g, u, u);
    if (!(u2 > 0) || !std::isfinite(u2)) throw NumericError("conformal circle: zero velocity");
    return u2;
}

std::vector<double> rhs_local(const Local& l, const CurveState& s) {
    int n = l.n;
    double u2 = speed2(l, s.u);
    double ua = dot(l.g, s.u, s.a), aa = dot(l.g, s.a, s.a);
    auto Pu = P_of(l, s.u);
    double Puu = dot(l.g, Pu, s.u);
    std::vector<double> r(n);
    for (int b = 0; b < n; ++b)
        r[b] = u2 * Pu[b] + 3.0 / u2 * ua * s.a[b] - 1.5 / u2 * aa * s.u[b] - 2.0 * Puu * s.u[b];
    return r;
}

// bu.nabla ba - bu.P (weighted, raised)
std::vector<double> weighted_defect(const Local& l, const CurveState& s, const std::vector<double>& da) {
    int n = l.n;
    double u2 = speed2(l, s.u), u1 = std::sqrt(u2);
    double ua = dot(l.g, s.u, s.a), aa = dot(l.g, s.a, s.a), uda = dot(l.g, s.u, da);
    auto Pu = P_of(l, s.u);
    std::vector<double> v(n);
    for (int c = 0; c < n; ++c) {
        double nba = da[c] / u2 - 3.0 * ua * s.a[c] / (u2 * u2) +
                     (4.0 * ua * ua / (u2 * u2 * u2) - (aa + uda) / (u2 * u2)) * s.u[c];
        v[c] = (nba - Pu[c]) / u1;
    }
    return v;
}

// sum over permutations of sign * v0 (x) v1 (x) v2, contravariant
TensorValue wedge3(const TensorValue& v0, const TensorValue& v1, const TensorValue& v2, double scale) {
    int D = v0.dim(0);
    TensorValue r({tup(D), tup(D), tup(D)});
    const TensorValue* v[3] = {&v0, &v1, &v2};
    static const int perms[6][4] = {{0, 1, 2, 1}, {1, 2, 0, 1}, {2, 0, 1, 1}, {1, 0, 2, -1}, {0, 2, 1, -1}, {2, 1, 0, -1}};
    for (int A = 0; A < D; ++A)
        for (int B = 0; B < D; ++B)
            for (int C = 0; C < D; ++C) {
                double s = 0;
                for (auto& p : perms) s += p[3] * (*v[p[0]])(A) * (*v[p[1]])(B) * (*v[p[2]])(C);
                r(A, B, C) = scale * s;
            }
    return r;
}

TensorValue phi_local(const Local& l, const CurveState& s) {
    int n = l.n;
    double u1 = std::sqrt(speed2(l, s.u));
    double ua = dot(l.g, s.u, s.a);
    std::vector<double> mu_u(n), mu_a(n);
    for (int b = 0; b < n; ++b) {
        mu_u[b] = s.u[b] / u1;
        mu_a[b] = s.a[b] / u1 - 2.0 * ua * s.u[b] / (u1 * u1 * u1);
    }
    // X-slots of U and A drop out against X
    return wedge3(tractor_vector(0, std::vector<double>(n, 0.0), 1.0), tractor_vector(0, mu_u, 0),
                  tractor_vector(-u1, mu_a, 0), 1.0 / u1);
}

// contravariant tractor tensor, positive norm with diag(1, g, 1), divided by rank!
double tractor_pos_norm(const TensorValue& t, const TensorValue& g) {
    int D = t.dim(0), n = D - 2, k = t.rank();
    std::vector<double> G(D * D, 0.0);
    G[0] = G[(D - 1) * D + D - 1] = 1.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) G[(1 + a) * D + 1 + b] = g(a, b);
    TensorValue cur = t;
    for (int slot = 0; slot < k; ++slot) {
        TensorValue nx = cur;
        std::vector<int> m(k, 0);
        do {
            double s = 0;
            auto mm = m;
            for (int e = 0; e < D; ++e) {
                mm[slot] = e;
                s += G[m[slot] * D + e] * cur.at(mm);
            }
            nx.at(m) = s;
        } while (cur.next(m));
        cur = nx;
    }
    double s = 0;
    for (size_t i = 0; i < t.size(); ++i) s += t.data[i] * cur.data[i];
    double f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return std::sqrt(std::max(0.0, s / f));
}

// apply a D x D matrix (up, down) to every index of a contravariant tensor
TensorValue apply_all(const std::vector<double>& M, const TensorValue& t) {
    int D = t.dim(0), k = t.rank();
    TensorValue cur = t;
    for (int slot = 0; slot < k; ++slot) {
        TensorValue nx = cur;
        std::vector<int> m(k, 0);
        do {
            double s = 0;
            auto mm = m;
            for (int e = 0; e < D; ++e) {
                mm[slot] = e;
                s += M[m[slot] * D + e] * cur.at(mm);
            }
            nx.at(m) = s;
        } while (cur.next(m));
        cur = nx;
    }
    return cur;
}

// derivative of the contravariant tensor t along u: sum over slots of (u^a C_a) acting on that slot
TensorValue connection_term(const Local& l, const std::vector<double>& u, const TensorValue& t) {
    int D = t.dim(0), k = t.rank();
    std::vector<double> M(D * D, 0.0);
    for (int a = 0; a < l.n; ++a)
        for (int i = 0; i < D * D; ++i) M[i] += u[a] * l.C[a].data[i];
    TensorValue r = t;
    std::fill(r.data.begin(), r.data.end(), 0.0);
    for (int slot = 0; slot < k; ++slot) {
        std::vector<int> m(k, 0);
        do {
            double s = 0;
            auto mm = m;
            for (int e = 0; e < D; ++e) {
                mm[slot] = e;
                s += M[m[slot] * D + e] * t.at(mm);
            }
            r.at(m) += s;
        } while (t.next(m));
    }
    return r;
}

TensorValue metric_at(const Geometry& geo, const Point& x) {
    TensorValue g({down(geo.n), down(geo.n)});
    g.data = geo.metric.valfn(x);
    return g;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string r = "\"";
    for (char c : s) {
        if (c == '"') r += '"';
        r += c;
    }
    return r + "\"";
}

}  // namespace

std::vector<double> conformal_circle_rhs(const Geometry& geo, const CurveState& s) {
    if ((int)s.x.size() != geo.n || (int)s.u.size() != geo.n || (int)s.a.size() != geo.n)
        throw std::invalid_argument("curve state dimension mismatch");
    return rhs_local(local_at(geo, s.x, false), s);
}

double circle_equation_residual(const Geometry& geo, const CurveState& s, const std::vector<double>& da) {
    Local l = local_at(geo, s.x, false);
    auto r = rhs_local(l, s);
    for (int b = 0; b < geo.n; ++b) r[b] = da[b] - r[b];
    return std::sqrt(std::max(0.0, dot(l.g, r, r)));
}

CurveTractors curve_tractors(const Geometry& geo, const CurveState& s, const std::vector<double>& da) {
    Local l = local_at(geo, s.x, false);
    int n = l.n;
    double u2 = speed2(l, s.u), u1 = std::sqrt(u2), u3 = u1 * u2;
    double ua = dot(l.g, s.u, s.a), aa = dot(l.g, s.a, s.a), uda = dot(l.g, s.u, da);
    double Puu = dot(l.g, P_of(l, s.u), s.u);
    std::vector<double> mu_u(n), mu_a(n);
    for (int b = 0; b < n; ++b) {
        mu_u[b] = s.u[b] / u1;
        mu_a[b] = s.a[b] / u1 - 2.0 * ua * s.u[b] / u3;
    }
    double rhoA = -uda / u3 - aa / u3 + 3.0 * ua * ua / (u3 * u2) - Puu / u1;
    CurveTractors t;
    t.U = tractor_vector(0, mu_u, -ua / u3);
    t.A = tractor_vector(-u1, mu_a, rhoA);
    t.Phi = phi_local(l, s);
    t.h = tractor_metric(l.g);
    t.hinv = tractor_metric_inverse(l.ginv);
    t.UU = tractor_dot(t.U, t.U, t.h, t.hinv);
    t.UA = tractor_dot(t.U, t.A, t.h, t.hinv);
    t.AA = tractor_dot(t.A, t.A, t.h, t.hinv);
    t.PhiPhi = tractor_dot(t.Phi, t.Phi, t.h, t.hinv);
    return t;
}

PhiDerivative phi_derivative(const Geometry& geo, const CurveState& s, const std::vector<double>& da) {
    Local l = local_at(geo, s.x, true);
    int n = l.n;
    // state velocity of (x, u, a)
    auto gu = gamma_of(l, s.u, s.u), ga = gamma_of(l, s.u, s.a);
    std::vector<double> dx = s.u, du(n), dda(n);
    for (int c = 0; c < n; ++c) {
        du[c] = s.a[c] - gu[c];
        dda[c] = da[c] - ga[c];
    }
    double vmax = 1.0;
    for (int c = 0; c < n; ++c) vmax = std::max({vmax, std::fabs(dx[c]), std::fabs(du[c]), std::fabs(dda[c])});
    auto phi_at = [&](double e) {
        CurveState q = s;
        for (int c = 0; c < n; ++c) {
            q.x[c] += e * dx[c];
            q.u[c] += e * du[c];
            q.a[c] += e * dda[c];
        }
        return phi_local(local_at(geo, q.x, false), q);
    };
    auto central = [&](double e) {
        auto p = phi_at(e), m = phi_at(-e);
        for (size_t i = 0; i < p.size(); ++i) p.data[i] = (p.data[i] - m.data[i]) / (2 * e);
        return p;
    };
    double e = 1e-3 / vmax;
    auto d1 = central(e), d2 = central(e / 2);
    PhiDerivative r;
    r.direct = d2;
    for (size_t i = 0; i < d2.size(); ++i) r.direct.data[i] = (4 * d2.data[i] - d1.data[i]) / 3;
    auto ct = connection_term(l, s.u, phi_local(l, s));
    for (size_t i = 0; i < ct.size(); ++i) r.direct.data[i] += ct.data[i];

    double u1 = std::sqrt(speed2(l, s.u));
    auto v = weighted_defect(l, s, da);
    std::vector<double> bu(n);
    for (int c = 0; c < n; ++c) bu[c] = s.u[c] / u1;
    std::vector<double> zero(n, 0.0);
    r.formula = wedge3(tractor_vector(0, zero, 1.0), tractor_vector(0, bu, 0), tractor_vector(0, v, 0), 1.0);
    // the direct derivative is u^d nabla_d; the formula carries bu^d = u^d / |u|
    for (auto& x : r.formula.data) x *= u1;
    r.direct_norm = tractor_pos_norm(r.direct, l.g);
    r.formula_norm = tractor_pos_norm(r.formula, l.g);
    TensorValue diff = r.direct;
    for (size_t i = 0; i < diff.size(); ++i) diff.data[i] -= r.formula.data[i];
    r.mismatch = tractor_pos_norm(diff, l.g);
    return r;
}

double unparam_residual(const Geometry& geo, const CurveState& s, const std::vector<double>& da) {
    Local l = local_at(geo, s.x, false);
    auto v = weighted_defect(l, s, da);
    double u1 = std::sqrt(speed2(l, s.u));
    std::vector<double> bu(geo.n);
    for (int c = 0; c < geo.n; ++c) bu[c] = s.u[c] / u1;
    double vu = dot(l.g, v, bu);
    for (int c = 0; c < geo.n; ++c) v[c] -= vu * bu[c];
    return std::sqrt(std::max(0.0, dot(l.g, v, v)));
}

CurveJet curve_jet(const Geometry& geo, const Embedding& curve, double q) {
    if (curve.m != 1 || curve.n != geo.n) throw std::invalid_argument("curve_jet: need a 1-dimensional embedding");
    int n = geo.n;
    auto phi = field_jet(curve.map, {q}, 3, geo.backend);
    Point p(n);
    std::vector<Jet> dx(n);
    for (int a = 0; a < n; ++a) {
        p[a] = phi[a].value();
        dx[a] = phi[a] - p[a];
    }
    auto cj = curvature_at(geo, p, 2);
    Composer comp(dx, n);
    JetTensor G = compose_tensor(cj.Gamma, comp);
    std::vector<Jet> u(n), a(n);
    for (int c = 0; c < n; ++c) u[c] = phi[c].d(0);
    for (int c = 0; c < n; ++c) {
        a[c] = u[c].d(0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a[c] += G(c, i, j).truncated(1) * u[i].truncated(1) * u[j].truncated(1);
    }
    CurveJet r;
    r.s.x = p;
    r.s.t = q;
    r.s.u.resize(n);
    r.s.a.resize(n);
    r.da.assign(n, 0.0);
    for (int c = 0; c < n; ++c) {
        r.s.u[c] = u[c].value();
        r.s.a[c] = a[c].value();
        r.da[c] = a[c].d(0).value();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) r.da[c] += G(c, i, j).value() * u[i].value() * a[j].value();
    }
    return r;
}

CurveMonitor ky_monitor(const Geometry& geo, const KYForm& k) {
    if (k.n != geo.n || k.degree + 1 != geo.n - 1)
        throw std::invalid_argument("ky_monitor: KY degree + 1 must equal the curve codimension n - 1");
    Geometry g = geo;
    KYForm kk = k;
    return [g, kk](const CurveState& s, const CurveTractors& t) {
        TensorValue K = values(bgg_split_jets(g, kk, s.x, 0));
        TensorValue gm = metric_at(g, s.x);
        double vol = tractor_volume_component(gm, g.orientation);
        TensorValue N = hodge_star(lower_all(t.Phi, t.h), t.hinv, vol);
        return tractor_dot(K, N, t.h, t.hinv);
    };
}

namespace {

// Dormand-Prince 5(4)
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct System {
    const Geometry& geo;
    int n, D;
    bool transport;

    size_t size() const { return 3 * n + (transport ? D * D : 0); }

    CurveState state(const std::vector<double>& y, double t) const {
        CurveState s;
        s.x.assign(y.begin(), y.begin() + n);
        s.u.assign(y.begin() + n, y.begin() + 2 * n);
        s.a.assign(y.begin() + 2 * n, y.begin() + 3 * n);
        s.t = t;
        return s;
    }

    std::vector<double> f(const std::vector<double>& y) const {
        CurveState s = state(y, 0);
        check_finite(s.x, "circle state");
        Local l = local_at(geo, s.x, transport);
        auto r = rhs_local(l, s);
        auto gu = gamma_of(l, s.u, s.u), ga = gamma_of(l, s.u, s.a);
        std::vector<double> out(size(), 0.0);
        for (int c = 0; c < n; ++c) {
            out[c] = s.u[c];
            out[n + c] = s.a[c] - gu[c];
            out[2 * n + c] = r[c] - ga[c];
        }
        if (transport) {
            // M' = -u^a C_a M
            std::vector<double> B(D * D, 0.0);
            for (int a = 0; a < n; ++a)
                for (int i = 0; i < D * D; ++i) B[i] -= s.u[a] * l.C[a].data[i];
            const double* M = y.data() + 3 * n;
            double* o = out.data() + 3 * n;
            for (int i = 0; i < D; ++i)
                for (int k = 0; k < D; ++k) {
                    double b = B[i * D + k];
                    if (b == 0.0) continue;
                    for (int j = 0; j < D; ++j) o[i * D + j] += b * M[k * D + j];
                }
        }
        check_finite(out, "circle rhs");
        return out;
    }
};

std::vector<double> axpy(const std::vector<double>& y, double h, std::initializer_list<std::pair<double, const std::vector<double>*>> terms) {
    std::vector<double> r = y;
    for (auto& [c, k] : terms) {
        if (c == 0.0) continue;
        for (size_t i = 0; i < r.size(); ++i) r[i] += h * c * (*k)[i];
    }
    return r;
}

}  // namespace

CircleTrajectory integrate_circle(const Geometry& geo, const CurveState& init, double t_end, const CircleOptions& opt,
                                  const std::vector<CurveMonitor>& monitors) {
    int n = geo.n;
    if ((int)init.x.size() != n || (int)init.u.size() != n || (int)init.a.size() != n)
        throw std::invalid_argument("integrate_circle: state dimension mismatch");
    if (!(t_end > init.t)) throw std::invalid_argument("integrate_circle: t_end must exceed the initial parameter");
    if (!(opt.atol > 0) || !(opt.rtol >= 0) || !(opt.h0 > 0))
        throw std::invalid_argument("integrate_circle: tolerances and initial step must be positive");
    System sys{geo, n, n + 2, opt.transport};
    std::vector<double> y(sys.size(), 0.0);
    std::copy(init.x.begin(), init.x.end(), y.begin());
    std::copy(init.u.begin(), init.u.end(), y.begin() + n);
    std::copy(init.a.begin(), init.a.end(), y.begin() + 2 * n);
    if (opt.transport)
        for (int i = 0; i < sys.D; ++i) y[3 * n + i * sys.D + i] = 1.0;
    conformal_circle_rhs(geo, init);  // validates u != 0 and the Schouten tensor

    auto in_chart = [&](const std::vector<double>& v) {
        for (int c = 0; c < n; ++c)
            if (!std::isfinite(v[c]) || std::fabs(v[c]) > opt.chart_bound) return false;
        if (opt.in_chart) return opt.in_chart(Point(v.begin(), v.begin() + n));
        return true;
    };

    CircleTrajectory tr;
    TensorValue phi0;
    std::vector<double> q0;
    auto record = [&](double t) {
        CircleSample smp;
        smp.s = sys.state(y, t);
        auto da = conformal_circle_rhs(geo, smp.s);
        auto ct = curve_tractors(geo, smp.s, da);
        smp.AdotA = ct.AA;
        smp.unparam = unparam_residual(geo, smp.s, da);
        if (opt.transport) {
            if (tr.samples.empty()) phi0 = ct.Phi;
            std::vector<double> M(y.begin() + 3 * n, y.end());
            auto moved = apply_all(M, phi0);
            for (size_t i = 0; i < moved.size(); ++i) moved.data[i] -= ct.Phi.data[i];
            smp.phi_drift = tractor_pos_norm(moved, metric_at(geo, smp.s.x));
        }
        for (auto& mon : monitors) smp.conserved.push_back(mon(smp.s, ct));
        if (tr.samples.empty()) q0 = smp.conserved;
        const auto& first = tr.samples.empty() ? smp : tr.samples.front();
        tr.AdotA_drift = std::max(tr.AdotA_drift, std::fabs(smp.AdotA - first.AdotA));
        tr.max_unparam = std::max(tr.max_unparam, smp.unparam);
        tr.max_phi_drift = std::max(tr.max_phi_drift, smp.phi_drift);
        tr.conserved_drift.resize(monitors.size(), 0.0);
        for (size_t i = 0; i < monitors.size(); ++i)
            tr.conserved_drift[i] = std::max(tr.conserved_drift[i], std::fabs(smp.conserved[i] - q0[i]));
        tr.samples.push_back(std::move(smp));
    };

    double t = init.t, h = std::min(opt.h0, t_end - t);
    double next_sample = opt.sample_dt > 0 ? t + opt.sample_dt : t_end;
    record(t);
    std::vector<double> k1 = sys.f(y), k2, k3, k4, k5, k6, k7;
    while (t < t_end) {
        if (tr.accepted + tr.rejected >= opt.max_steps) {
            tr.status = "max_steps";
            tr.message = "step budget exhausted";
            break;
        }
        double target = std::min(next_sample, t_end);
        bool hit = false;
        if (t + h >= target - 1e-14 * std::max(1.0, std::fabs(target))) {
            h = target - t;
            hit = true;
        }
        std::vector<double> ynew;
        bool ok = true;
        double err = 0;
        try {
            if (opt.adaptive) {
                k2 = sys.f(axpy(y, h, {{a21, &k1}}));
                k3 = sys.f(axpy(y, h, {{a31, &k1}, {a32, &k2}}));
                k4 = sys.f(axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
                k5 = sys.f(axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
                k6 = sys.f(axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
                ynew = axpy(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
                if (!in_chart(ynew)) throw NumericError("chart");
                k7 = sys.f(ynew);
                for (size_t i = 0; i < y.size(); ++i) {
                    double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
                    double sc = opt.atol + opt.rtol * std::max(std::fabs(y[i]), std::fabs(ynew[i]));
                    err = std::max(err, std::fabs(ei) / sc);
                }
                ok = err <= 1.0;
            } else {
                k2 = sys.f(axpy(y, h / 2, {{1.0, &k1}}));
                k3 = sys.f(axpy(y, h / 2, {{1.0, &k2}}));
                k4 = sys.f(axpy(y, h, {{1.0, &k3}}));
                ynew = axpy(y, h / 6, {{1.0, &k1}, {2.0, &k2}, {2.0, &k3}, {1.0, &k4}});
                if (!in_chart(ynew)) throw NumericError("chart");
                k7 = sys.f(ynew);
            }
        } catch (const NumericError&) {
            ok = false;
            err = 1e6;
            hit = false;
            if (h * 0.25 < opt.hmin) {
                tr.status = "chart_exit";
                tr.message = "trajectory left the chart or the metric became singular";
                break;
            }
            h *= 0.25;
            ++tr.rejected;
            continue;
        }
        if (!ok) {
            ++tr.rejected;
            h *= std::max(0.1, 0.9 * std::pow(err, -0.2));
            if (h < opt.hmin) {
                tr.status = "step_underflow";
                tr.message = "step size fell below hmin";
                break;
            }
            continue;
        }
        ++tr.accepted;
        t = hit ? target : t + h;
        y = std::move(ynew);
        k1 = std::move(k7);
        if (hit) {
            record(t);
            if (opt.sample_dt > 0) next_sample += opt.sample_dt;
        } else if (opt.sample_dt <= 0) {
            record(t);
        }
        if (opt.adaptive) {
            double fac = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            h *= std::clamp(fac, 0.2, 5.0);
            h = std::min(h, opt.hmax);
        }
    }
    return tr;
}

std::string trajectory_csv(const CircleTrajectory& tr, const std::vector<std::string>& names) {
    std::ostringstream os;
    int n = tr.samples.empty() ? 0 : (int)tr.samples[0].s.x.size();
    std::vector<std::string> head{"t"};
    for (const char* p : {"x", "u", "a"})
        for (int i = 1; i <= n; ++i) head.push_back(p + std::to_string(i));
    head.push_back("AdotA");
    head.push_back("unparam_residual");
    for (auto& s : names) head.push_back(s);
    for (size_t i = 0; i < head.size(); ++i) os << (i ? "," : "") << csv_field(head[i]);
    os << "\r\n";
    for (auto& smp : tr.samples) {
        os << fmt(smp.s.t);
        for (auto* v : {&smp.s.x, &smp.s.u, &smp.s.a})
            for (double x : *v) os << ',' << fmt(x);
        os << ',' << fmt(smp.AdotA) << ',' << fmt(smp.unparam);
        for (double q : smp.conserved) os << ',' << fmt(q);
        os << "\r\n";
    }
    return os.str();
}

}  // namespace tl
