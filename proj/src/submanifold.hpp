// Riemannian submanifold calculus along an embedding phi: Sigma -> M.
#pragma once

#include <string>
#include <vector>

#include "riemann.hpp"

namespace tl {

struct Embedding {
    int m = 0, n = 0;
    std::string name;
    Field map;  // m -> n
    int orientation = 1;
};

// Everything as Taylor jets in the m Sigma-coordinates around q.
struct SigmaJets {
    int m = 0, n = 0, order = 0;
    Point q, p;
    std::vector<Jet> phi;
    CurvatureJets amb;    // ambient curvature composed along Sigma (indices ambient)
    CurvatureJets intr;   // curvature of the induced metric
    JetTensor Pi;         // Pi^a_i (up n, down m)
    JetTensor Pidual;     // Pi^i_a (up m, down n)
    JetTensor N;          // N^a_b
    JetTensor II, IIo;    // II_ij^c (down m, down m, up n)
    JetTensor H;          // H^c
    JetTensor nform;      // N_{a1..ad}
    Jet amb_vol;          // eps_{1..n} component (orientation included)
    Connection lc_pull;   // ambient Levi-Civita pulled back to Sigma (n x n, m directions)
    Connection lc_sigma;  // intrinsic Levi-Civita (m x m)
};

SigmaJets sigma_jets(const Geometry& geo, const Embedding& emb, const Point& q, int order);

// compose every component of an n-variable jet tensor along Sigma
JetTensor compose_tensor(const JetTensor& t, const Composer& c);

struct SubmanifoldPack {
    int m = 0, n = 0, d = 0;
    TensorValue g, ginv;        // induced g_ij
    TensorValue Pi, Pidual, N;  // Pi^a_i, Pi^i_a, N^a_b
    TensorValue II, IIo, H;
    TensorValue GammaSigma;     // intrinsic Christoffels
    TensorValue nablaperpH;     // (nabla^perp_i H)^c stored (up n, down m)
    TensorValue nablaH;         // full pullback nabla_i H^c (up n, down m)
    TensorValue nform;          // N_{a1..ad}
};

SubmanifoldPack pack_from_jets(const SigmaJets& sj);
SubmanifoldPack submanifold_pack(const Geometry& geo, const Embedding& emb, const Point& q);

struct GcrResiduals {
    double gauss = 0, codazzi = 0, ricci = 0;
};
GcrResiduals gauss_codazzi_ricci_residuals(const Geometry& geo, const Embedding& emb, const Point& q);

struct ConformalCheck {
    double II = 0, H = 0, IIo = 0;
};
ConformalCheck conformal_transform_check(const Geometry& geo, const Embedding& emb, const Field& omega,
                                         const Point& q);

// helpers shared with the tractor submanifold layer
JetTensor matmul(const JetTensor& a, const JetTensor& b);
TensorValue matmul(const TensorValue& a, const TensorValue& b);
JetTensor transpose2(const JetTensor& a);

}  // namespace tl
