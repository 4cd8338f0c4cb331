#include "jet.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

namespace tl {

namespace {

void enumerate(int nvars, int deg, int var, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (var == nvars - 1) {
        cur[var] = deg;
        out.push_back(cur);
        cur[var] = 0;
        return;
    }
    for (int e = deg; e >= 0; --e) {
        cur[var] = e;
        enumerate(nvars, deg - e, var + 1, cur, out);
    }
    cur[var] = 0;
}

// univariate truncated series helpers (length K+1)
using Series = std::vector<double>;

Series s_mul(const Series& a, const Series& b) {
    Series r(a.size(), 0.0);
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; i + j < a.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}

Series s_recip(const Series& a) {
    Series r(a.size(), 0.0);
    r[0] = 1.0 / a[0];
    for (size_t k = 1; k < a.size(); ++k) {
        double s = 0;
        for (size_t j = 1; j <= k; ++j) s += a[j] * r[k - j];
        r[k] = -s / a[0];
    }
    return r;
}

}  // namespace

JetSpace::JetSpace(int n) : nvars(n), kmax(kJetMaxOrder) {
    std::vector<int> cur(n, 0);
    upto.assign(kmax + 1, 0);
    for (int d = 0; d <= kmax; ++d) {
        if (n == 0) {
            if (d == 0) mono.push_back({});
        } else {
            enumerate(n, d, 0, cur, mono);
        }
        upto[d] = (int)mono.size();
    }
    degree.resize(mono.size());
    std::map<std::vector<int>, int> idx;
    for (size_t i = 0; i < mono.size(); ++i) {
        int s = 0;
        for (int e : mono[i]) s += e;
        degree[i] = s;
        idx[mono[i]] = (int)i;
    }
    next.assign(mono.size(), std::vector<int>(n, -1));
    for (size_t i = 0; i < mono.size(); ++i)
        for (int v = 0; v < n; ++v) {
            auto e = mono[i];
            e[v] += 1;
            auto it = idx.find(e);
            if (it != idx.end()) next[i][v] = it->second;
        }
    prev_idx.assign(mono.size(), -1);
    prev_var.assign(mono.size(), -1);
    for (size_t i = 1; i < mono.size(); ++i) {
        int v = 0;
        while (mono[i][v] == 0) ++v;
        auto e = mono[i];
        e[v] -= 1;
        prev_idx[i] = idx[e];
        prev_var[i] = v;
    }
    for (size_t i = 0; i < mono.size(); ++i)
        for (size_t j = 0; j < mono.size(); ++j) {
            if (degree[i] + degree[j] > kmax) continue;
            std::vector<int> e(n);
            for (int v = 0; v < n; ++v) e[v] = mono[i][v] + mono[j][v];
            triples.push_back({(int)i, (int)j, idx[e]});
        }
    std::stable_sort(triples.begin(), triples.end(),
                     [&](const Triple& x, const Triple& y) { return degree[x.c] < degree[y.c]; });
    tri_upto.assign(kmax + 1, 0);
    for (int d = 0; d <= kmax; ++d) {
        int c = 0;
        for (auto& t : triples)
            if (degree[t.c] <= d) ++c;
        tri_upto[d] = c;
    }
    dtab.resize(n);
    for (int v = 0; v < n; ++v)
        for (size_t i = 0; i < mono.size(); ++i) {
            if (mono[i][v] == 0) continue;
            auto e = mono[i];
            e[v] -= 1;
            dtab[v].push_back({(int)i, idx[e], (double)mono[i][v]});
        }
}

const JetSpace& JetSpace::get(int nvars) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<JetSpace>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& p = cache[nvars];
    if (!p) p.reset(new JetSpace(nvars));
    return *p;
}

int JetSpace::index(const std::vector<int>& e) const {
    for (size_t i = 0; i < mono.size(); ++i)
        if (mono[i] == e) return (int)i;
    return -1;
}

Jet::Jet(const JetSpace* sp, int order, double value) : sp_(sp), ord_(std::min(order, sp->kmax)) {
    if (ord_ >= 0) {
        c_.assign(sp_->size(ord_), 0.0);
        c_[0] = value;
    } else {
        ord_ = -1;
    }
}

Jet Jet::variable(const JetSpace* sp, int order, int var, double x0) {
    Jet j(sp, order, x0);
    if (order >= 1) j.c_[1 + var] = 1.0;
    return j;
}

double Jet::value() const {
    if (!sp_) return 0.0;
    if (ord_ < 0) throw JetShortfall("jet order insufficient for requested derivative");
    return c_[0];
}

double Jet::deriv(const std::vector<int>& alpha) const {
    int deg = 0;
    double fact = 1.0;
    for (int a : alpha) {
        deg += a;
        for (int k = 2; k <= a; ++k) fact *= k;
    }
    if (deg > ord_) throw JetShortfall("jet order insufficient for requested derivative");
    return c_[sp_->index(alpha)] * fact;
}

Jet Jet::d(int var) const {
    if (!sp_) return Jet();
    Jet r;
    r.sp_ = sp_;
    r.ord_ = ord_ - 1;
    if (r.ord_ < 0) {
        r.ord_ = -1;
        return r;
    }
    r.c_.assign(sp_->size(r.ord_), 0.0);
    int lim = (int)c_.size();
    for (const auto& t : sp_->dtab[var]) {
        if (t.src >= lim) break;
        r.c_[t.dst] += t.f * c_[t.src];
    }
    return r;
}

Jet Jet::truncated(int order) const {
    if (!sp_) return *this;
    Jet r = *this;
    if (order < r.ord_) {
        r.ord_ = order < 0 ? -1 : order;
        r.c_.resize(sp_->size(r.ord_));
    }
    return r;
}

Jet& Jet::operator+=(const Jet& o) {
    if (!sp_) return *this = o;
    if (!o.sp_) return *this;
    if (o.ord_ < ord_) *this = truncated(o.ord_);
    for (size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
}

Jet& Jet::operator-=(const Jet& o) {
    if (!sp_) return *this = -o;
    if (!o.sp_) return *this;
    if (o.ord_ < ord_) *this = truncated(o.ord_);
    for (size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
}

Jet mul(const Jet& a, const Jet& b) {
    if (!a.sp_ || !b.sp_) return Jet();
    Jet r;
    r.sp_ = a.sp_ ? a.sp_ : b.sp_;
    r.ord_ = std::min(a.ord_, b.ord_);
    if (r.ord_ < 0) {
        r.ord_ = -1;
        return r;
    }
    const JetSpace& sp = *r.sp_;
    r.c_.assign(sp.size(r.ord_), 0.0);
    const int nt = sp.tri_upto[r.ord_];
    const double* pa = a.c_.data();
    const double* pb = b.c_.data();
    double* pr = r.c_.data();
    const JetSpace::Triple* t = sp.triples.data();
    for (int k = 0; k < nt; ++k) pr[t[k].c] += pa[t[k].a] * pb[t[k].b];
    return r;
}

Jet& Jet::operator*=(const Jet& o) { return *this = mul(*this, o); }
Jet& Jet::operator/=(const Jet& o) { return *this = mul(*this, o.reciprocal()); }

Jet& Jet::operator+=(double s) {
    if (!sp_ && s != 0.0) throw std::logic_error("scalar added to an untyped zero jet");
    if (ord_ >= 0) c_[0] += s;
    return *this;
}
Jet& Jet::operator-=(double s) {
    if (!sp_ && s != 0.0) throw std::logic_error("scalar added to an untyped zero jet");
    if (ord_ >= 0) c_[0] -= s;
    return *this;
}
Jet& Jet::operator*=(double s) {
    for (auto& x : c_) x *= s;
    return *this;
}
Jet& Jet::operator/=(double s) {
    for (auto& x : c_) x /= s;
    return *this;
}

Jet Jet::operator-() const {
    Jet r = *this;
    for (auto& x : r.c_) x = -x;
    return r;
}

Jet Jet::compose_series(const std::vector<double>& taylor) const {
    if (!sp_) throw std::domain_error("nonlinear function of an untyped zero jet");
    if (ord_ < 0) return *this;
    Jet delta = *this;
    delta.c_[0] = 0.0;
    // Horner: sum_k t_k delta^k
    int K = ord_;
    Jet r(sp_, ord_, taylor[K]);
    for (int k = K - 1; k >= 0; --k) {
        r = mul(r, delta);
        r.c_[0] += taylor[k];
    }
    return r;
}

Jet Jet::reciprocal() const {
    if (!sp_) throw std::domain_error("jet reciprocal of zero");
    if (ord_ < 0) return *this;
    double a0 = c_[0];
    if (a0 == 0.0) throw std::domain_error("jet reciprocal of zero");
    std::vector<double> t(ord_ + 1);
    double p = 1.0 / a0;
    for (int k = 0; k <= ord_; ++k) {
        t[k] = p;
        p *= -1.0 / a0;
    }
    return compose_series(t);
}

namespace {
int ordp1(const Jet& a) { return std::max(a.order(), 0) + 1; }
}  // namespace

Jet exp(const Jet& a) {
    if (!a.valid()) return a;
    std::vector<double> t(ordp1(a));
    double e = std::exp(a.value()), f = 1.0;
    for (size_t k = 0; k < t.size(); ++k) {
        if (k > 0) f *= (double)k;
        t[k] = e / f;
    }
    return a.compose_series(t);
}

Jet log(const Jet& a) {
    if (!a.valid()) return a;
    double a0 = a.value();
    if (a0 <= 0) throw std::domain_error("jet log of nonpositive value");
    std::vector<double> t(ordp1(a));
    t[0] = std::log(a0);
    for (size_t k = 1; k < t.size(); ++k) t[k] = ((k % 2) ? 1.0 : -1.0) / ((double)k * std::pow(a0, (double)k));
    return a.compose_series(t);
}

Jet sin(const Jet& a) {
    if (!a.valid()) return a;
    std::vector<double> t(ordp1(a));
    double s = std::sin(a.value()), c = std::cos(a.value()), f = 1.0;
    const double cyc[4] = {s, c, -s, -c};
    for (size_t k = 0; k < t.size(); ++k) {
        if (k > 0) f *= (double)k;
        t[k] = cyc[k % 4] / f;
    }
    return a.compose_series(t);
}

Jet cos(const Jet& a) {
    if (!a.valid()) return a;
    std::vector<double> t(ordp1(a));
    double s = std::sin(a.value()), c = std::cos(a.value()), f = 1.0;
    const double cyc[4] = {c, -s, -c, s};
    for (size_t k = 0; k < t.size(); ++k) {
        if (k > 0) f *= (double)k;
        t[k] = cyc[k % 4] / f;
    }
    return a.compose_series(t);
}

Jet pow(const Jet& a, double r) {
    if (!a.valid()) return a;
    double a0 = a.value();
    std::vector<double> t(ordp1(a));
    double binom = 1.0;
    for (size_t k = 0; k < t.size(); ++k) {
        if (k > 0) binom *= (r - (double)(k - 1)) / (double)k;
        t[k] = binom * std::pow(a0, r - (double)k);
    }
    return a.compose_series(t);
}

Jet pow(const Jet& a, int k) {
    if (k < 0) return pow(a, -k).reciprocal();
    Jet r(a.space(), a.order(), 1.0);
    Jet b = a;
    while (k) {
        if (k & 1) r = r * b;
        k >>= 1;
        if (k) b = b * b;
    }
    return r;
}

Jet sqrt(const Jet& a) { return pow(a, 0.5); }

Jet sinh(const Jet& a) { return 0.5 * (exp(a) - exp(-a)); }
Jet cosh(const Jet& a) { return 0.5 * (exp(a) + exp(-a)); }
Jet tanh(const Jet& a) {
    Jet e = exp(2.0 * a);
    return (e - 1.0) / (e + 1.0);
}

Jet atan(const Jet& a) {
    if (!a.valid()) return a;
    int K = a.order();
    double a0 = a.value();
    Series x(K + 1, 0.0);
    x[0] = a0;
    if (K >= 1) x[1] = 1.0;
    Series q = s_mul(x, x);
    q[0] += 1.0;
    Series dq = s_recip(q);  // derivative series of atan
    std::vector<double> t(K + 1, 0.0);
    t[0] = std::atan(a0);
    for (int k = 1; k <= K; ++k) t[k] = dq[k - 1] / (double)k;
    return a.compose_series(t);
}

Composer::Composer(const std::vector<Jet>& dx, int src_nvars) {
    ssp_ = &JetSpace::get(src_nvars);
    if (dx.empty()) throw std::invalid_argument("composer needs at least one target jet");
    tsp_ = dx[0].space();
    ord_ = tsp_->kmax;
    for (const auto& j : dx) ord_ = std::min(ord_, j.order());
    if ((int)dx.size() != src_nvars) throw std::invalid_argument("composer dimension mismatch");
    int nm = ssp_->size(std::max(ord_, 0));
    table_.resize(nm);
    if (ord_ < 0) return;
    table_[0] = Jet(tsp_, ord_, 1.0);
    std::vector<Jet> dxz = dx;
    for (auto& j : dxz) {
        j = j.truncated(ord_);
        j.coeff_ref(0) = 0.0;
    }
    for (int i = 1; i < nm; ++i) {
        table_[i] = table_[ssp_->prev_idx[i]] * dxz[ssp_->prev_var[i]];
    }
}

Jet Composer::operator()(const Jet& f) const {
    int ord = std::min(ord_, f.order());
    Jet r(tsp_, ord, 0.0);
    if (ord < 0) return r;
    int nm = ssp_->size(ord);
    auto& rc = r.coeffs();
    for (int i = 0; i < nm; ++i) {
        double c = f.coeff(i);
        if (c == 0.0) continue;
        const auto& tc = table_[i].coeffs();
        for (size_t k = 0; k < rc.size(); ++k) rc[k] += c * tc[k];
    }
    return r;
}

std::vector<Jet> seed(const std::vector<double>& p, int order) {
    const JetSpace* sp = &JetSpace::get((int)p.size());
    std::vector<Jet> x;
    x.reserve(p.size());
    for (size_t i = 0; i < p.size(); ++i) x.push_back(Jet::variable(sp, order, (int)i, p[i]));
    return x;
}

}  // namespace tl
