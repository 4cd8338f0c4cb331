// Fields with derivative access: analytic (jet evaluation of a templated
// callback) or nested central finite differences of a plain callback.
#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "jet.hpp"
#include "tensor.hpp"

namespace tl {

using Point = std::vector<double>;

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class DiffMode { analytic, fd };

struct DiffBackend {
    DiffMode mode = DiffMode::analytic;
    double step = 1e-3;       // order 1-2 stencils
    double step3 = 1e-2;      // order 3 stencils
    int max_order = 5;

    static DiffBackend analytic(int max_order = 5) { return {DiffMode::analytic, 1e-3, 1e-2, max_order}; }
    static DiffBackend fd(double step = 1e-3, double step3 = 1e-2) { return {DiffMode::fd, step, step3, 3}; }
};

struct Field {
    int nin = 0;
    int nout = 0;
    std::function<std::vector<Jet>(const std::vector<Jet>&)> jetfn;
    std::function<std::vector<double>(const std::vector<double>&)> valfn;

    std::vector<double> operator()(const std::vector<double>& x) const { return valfn(x); }
};

// wraps a generic callable `f(const std::vector<T>&) -> std::vector<T>`
template <class F>
Field make_field(int nin, int nout, F f) {
    Field r;
    r.nin = nin;
    r.nout = nout;
    r.jetfn = [f](const std::vector<Jet>& x) { return std::vector<Jet>(f(x)); };
    r.valfn = [f](const std::vector<double>& x) { return std::vector<double>(f(x)); };
    return r;
}

// Taylor jets (in nin variables) of every output component at p.
std::vector<Jet> field_jet(const Field& f, const Point& p, int order, const DiffBackend& be);

// value, first, second, third derivatives as tensors with trailing down indices
std::vector<TensorValue> jet_tensors(const Field& f, const Point& p, int order, const DiffBackend& be);

void check_finite(const std::vector<double>& v, const char* what);

}  // namespace tl
