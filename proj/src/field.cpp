#include "field.hpp"

#include <cmath>
#include <map>

namespace tl {

void check_finite(const std::vector<double>& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw NumericError(std::string("non-finite evaluation in ") + what);
}

namespace {

struct Stencil {
    std::vector<int> off;
    std::vector<double> w;  // weights for unit step; divide by h^k
};

const Stencil& stencil(int k) {
    static const Stencil s[4] = {
        {{0}, {1.0}},
        {{-1, 1}, {-0.5, 0.5}},
        {{-1, 0, 1}, {1.0, -2.0, 1.0}},
        {{-2, -1, 1, 2}, {-0.5, 1.0, -1.0, 0.5}},
    };
    return s[k];
}

class FdEvaluator {
public:
    FdEvaluator(const Field& f, const Point& p) : f_(f), p_(p) {}

    const std::vector<double>& eval(const std::vector<int>& off, double h) {
        auto key = std::make_pair(h, off);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        Point x = p_;
        for (size_t i = 0; i < x.size(); ++i) x[i] += h * off[i];
        auto v = f_.valfn(x);
        check_finite(v, "finite-difference stencil");
        return cache_[key] = v;
    }

    // d^alpha f at p via tensor-product central stencils
    std::vector<double> deriv(const std::vector<int>& alpha, double h) {
        int n = (int)alpha.size(), deg = 0;
        for (int a : alpha) deg += a;
        std::vector<double> acc(f_.nout, 0.0);
        std::vector<int> pos(n, 0), off(n, 0);
        while (true) {
            double w = 1.0;
            for (int v = 0; v < n; ++v) {
                const auto& s = stencil(alpha[v]);
                off[v] = s.off[pos[v]];
                w *= s.w[pos[v]];
            }
            const auto& val = eval(off, h);
            for (int k = 0; k < f_.nout; ++k) acc[k] += w * val[k];
            int v = n - 1;
            for (; v >= 0; --v) {
                if (++pos[v] < (int)stencil(alpha[v]).off.size()) break;
                pos[v] = 0;
            }
            if (v < 0) break;
        }
        double hk = std::pow(h, deg);
        for (auto& x : acc) x /= hk;
        return acc;
    }

private:
    const Field& f_;
    Point p_;
    std::map<std::pair<double, std::vector<int>>, std::vector<double>> cache_;
};

}  // namespace

std::vector<Jet> field_jet(const Field& f, const Point& p, int order, const DiffBackend& be) {
    if ((int)p.size() != f.nin) throw std::invalid_argument("field_jet: point dimension mismatch");
    if (order > be.max_order) throw JetShortfall("requested jet order exceeds backend capability");
    if (be.mode == DiffMode::analytic) {
        if (!f.jetfn) throw JetShortfall("analytic backend needs a jet callback");
        auto out = f.jetfn(seed(p, order));
        for (auto& j : out) {
            if (!j.typed()) j = Jet(&JetSpace::get(f.nin), order, 0.0);
            for (double c : j.coeffs())
                if (!std::isfinite(c)) throw NumericError("non-finite evaluation in analytic jet");
        }
        return out;
    }
    const JetSpace* sp = &JetSpace::get(f.nin);
    FdEvaluator ev(f, p);
    std::vector<Jet> out(f.nout, Jet(sp, order, 0.0));
    int nm = sp->size(order);
    for (int i = 0; i < nm; ++i) {
        const auto& a = sp->mono[i];
        double fact = 1.0;
        for (int e : a)
            for (int k = 2; k <= e; ++k) fact *= k;
        double h = sp->degree[i] <= 2 ? be.step : be.step3;
        auto d = sp->degree[i] == 0 ? ev.eval(std::vector<int>(f.nin, 0), h) : ev.deriv(a, h);
        for (int k = 0; k < f.nout; ++k) out[k].coeff_ref(i) = d[k] / fact;
    }
    return out;
}

std::vector<TensorValue> jet_tensors(const Field& f, const Point& p, int order, const DiffBackend& be) {
    auto js = field_jet(f, p, order, be);
    int n = f.nin;
    std::vector<TensorValue> out;
    for (int k = 0; k <= order; ++k) {
        std::vector<IndexSpec> ix{up(f.nout)};
        for (int j = 0; j < k; ++j) ix.push_back(down(n));
        TensorValue t(ix);
        std::vector<int> m(ix.size(), 0);
        do {
            std::vector<int> alpha(n, 0);
            for (int j = 1; j <= k; ++j) alpha[m[j]] += 1;
            t.at(m) = js[m[0]].deriv(alpha);
        } while (t.next(m));
        out.push_back(t);
    }
    return out;
}

}  // namespace tl
