#include "tensor.hpp"

namespace tl {

std::vector<std::pair<std::vector<int>, int>> signed_permutations(int k) {
    std::vector<int> p(k);
    std::iota(p.begin(), p.end(), 0);
    std::vector<std::pair<std::vector<int>, int>> out;
    do {
        out.push_back({p, perm_sign(p)});
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
}

int perm_sign(const std::vector<int>& p) {
    int n = (int)p.size();
    std::vector<int> q = p;
    int s = 1;
    for (int i = 0; i < n; ++i) {
        while (q[i] != i) {
            int j = q[i];
            if (j < 0 || j >= n || q[j] == j) return 0;
            std::swap(q[i], q[j]);
            s = -s;
        }
    }
    return s;
}

double max_abs(const TensorValue& t) {
    double m = 0;
    for (double x : t.data) m = std::max(m, std::fabs(x));
    return m;
}

double frob(const TensorValue& t) {
    double s = 0;
    for (double x : t.data) s += x * x;
    return std::sqrt(s);
}

TensorValue identity(int n, IndexKind kind) {
    TensorValue r({{kind, Variance::up, n}, {kind, Variance::down, n}});
    for (int i = 0; i < n; ++i) r(i, i) = 1.0;
    return r;
}

namespace {
// apply symmetric matrix M along index k
TensorValue apply_along(const TensorValue& t, int k, const TensorValue& M) {
    TensorValue r(t.idx, 0.0, t.weight);
    std::vector<int> m(t.rank(), 0), s(t.rank(), 0);
    int n = t.idx[k].dim;
    do {
        double acc = 0;
        s = m;
        for (int i = 0; i < n; ++i) {
            s[k] = i;
            acc += M(m[k], i) * t.at(s);
        }
        r.at(m) = acc;
    } while (t.next(m));
    return r;
}
}  // namespace

double metric_norm(const TensorValue& t, const TensorValue& gdown, const TensorValue& gup) {
    TensorValue u = t;
    for (int k = 0; k < t.rank(); ++k) {
        const TensorValue& M = t.idx[k].var == Variance::up ? gdown : gup;
        if (M.dim(0) != t.idx[k].dim) throw TensorError("metric_norm: index dim mismatch");
        u = apply_along(u, k, M);
    }
    double s = 0;
    for (size_t i = 0; i < t.size(); ++i) s += t.data[i] * u.data[i];
    return std::sqrt(std::max(s, 0.0));
}

double metric_norm(const TensorValue& t, const std::function<TensorValue(const IndexSpec&)>& metric) {
    TensorValue u = t;
    for (int k = 0; k < t.rank(); ++k) {
        TensorValue M = metric(t.idx[k]);
        if (M.dim(0) != t.idx[k].dim) throw TensorError("metric_norm: index dim mismatch");
        u = apply_along(u, k, M);
    }
    double s = 0;
    for (size_t i = 0; i < t.size(); ++i) s += t.data[i] * u.data[i];
    return std::sqrt(std::max(s, 0.0));
}

}  // namespace tl
