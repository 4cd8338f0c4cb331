// Metric fields, curvature packs, Levi-Civita derivative, conformal rescaling.
//
// Conventions: [D_a, D_b] v^c = R_ab^c_d v^d, Ric_bd = R_ab^a_d,
// R = W + P (Kulkarni-Nomizu) g, Ric = (n-2) P + J g, C_abc = D_a P_bc - D_b P_ac.
#pragma once

#include <string>
#include <vector>

#include "field.hpp"
#include "jet.hpp"
#include "tensor.hpp"

namespace tl {

struct Geometry {
    int n = 0;
    std::string name;
    Field metric;          // n*n row-major components g_ab
    DiffBackend backend;
    int orientation = 1;
    Field mobius_schouten;  // optional (n == 2): supplied P_ab, nout = 4

    // jet order used for submanifold and tractor work
    int working_order() const { return backend.mode == DiffMode::fd ? 3 : 5; }
};

// g_ab as n-variable jets at p
JetTensor metric_jet(const Geometry& geo, const Point& p, int order);

// square matrix inverse (Gauss-Jordan with partial pivoting on values)
template <class S>
std::vector<S> mat_inverse(std::vector<S> a, int n);
template <class S>
S mat_det(std::vector<S> a, int n);

struct CurvatureJets {
    int n = 0;
    bool conformal = false;  // P, J, W, C available
    JetTensor g, ginv;
    JetTensor Gamma;  // Gamma^c_ab : (up, down, down)
    JetTensor R;      // R_ab^c_d : (down, down, up, down)
    JetTensor Rdown;  // R_abcd
    JetTensor Ric, P, W, Wup, C;
    Jet Scal, J, K;
};

// Curvature of a metric given as a jet tensor (works for ambient and induced metrics).
// P_override supplies a Schouten tensor (n == 2 Moebius structure, or m <= 2 submanifolds).
CurvatureJets curvature_jets(const JetTensor& g, const JetTensor* P_override = nullptr);

struct CurvaturePack {
    int n = 0;
    bool conformal = false;
    TensorValue g, ginv, Gamma, R, Rdown, Ric, P, W, C, eps;
    double Scal = 0, J = 0, K = 0;
};

CurvaturePack pack_values(const CurvatureJets& cj, int orientation);
CurvaturePack curvature_pack(const Geometry& geo, const Point& p);
CurvatureJets curvature_at(const Geometry& geo, const Point& p, int order);

// One connection per index type: mats[dir] is the (up dim, down dim) matrix
// C_dir^x_y so that D_dir v^x = d_dir v^x + C_dir^x_y v^y.
struct Connection {
    int dim = 0;
    std::vector<JetTensor> mats;
};

Connection lc_connection(const CurvatureJets& cj);

// Coupled covariant derivative; conns[k] serves index k (nullptr: plain partials).
// Appends a trailing down tangent index of dimension ndir (= jet variable count).
JetTensor covd(const JetTensor& T, const std::vector<const Connection*>& conns, int ndir);

// Omega_ij^x_y = d_i C_j - d_j C_i + [C_i, C_j]; indices (down, down, up, down)
JetTensor connection_curvature(const Connection& c);

struct TensorField {
    std::vector<IndexSpec> idx;  // tangent indices only
    Field f;                     // components row-major
    int weight = 0;
};

// D of a tensor field at p; on densities this is the plain derivative of the stored component
TensorValue levi_civita_derivative(const Geometry& geo, const TensorField& field, const Point& p);

// hat g = Omega^2 g
Geometry rescale(const Geometry& geo, const Field& omega);
// Upsilon_a = Omega^{-1} d_a Omega
TensorValue upsilon(const Field& omega, const Point& p, const DiffBackend& be);

// volume form of g with the given orientation; requires n <= 7
TensorValue volume_form(const TensorValue& g, int orientation);

// small dense helpers on row-major double matrices
double det(std::vector<double> a, int n);

}  // namespace tl
