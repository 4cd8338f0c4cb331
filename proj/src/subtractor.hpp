// Submanifold tractor calculus: normal tractor bundle, tractor second
// fundamental form, Fialkow tensor, mu, difference tractor, normal forms,
// classification and mean-curvature tractor predicates.
//
// Matrices acting on tractors are stored (up, down). Along Sigma the ambient
// tractor index has dim n+2 and the intrinsic one m+2; tractor L_i is the
// (n+2) x (m+2) matrix of L_iJ^C acting on intrinsic tractors V^J.
#pragma once

#include <optional>
#include <vector>

#include "submanifold.hpp"
#include "tractor.hpp"

namespace tl {

struct SubJets {
    SigmaJets s;
    int m = 0, n = 0, D = 0, Ds = 0, orientation = 1;
    Connection A;        // ambient tractor connection pulled back to Sigma (D x D, m directions)
    JetTensor h, hinv;   // ambient tractor metric along Sigma
    JetTensor hs, hsinv; // intrinsic tractor metric
    JetTensor Pij;       // pulled back ambient Schouten
    JetTensor F;         // Fialkow tensor
    JetTensor p;         // intrinsic Schouten (m >= 3 from g_Sigma, else from F)
    CurvatureJets sigma; // intrinsic curvature with p installed
    Connection Dint;     // intrinsic tractor connection (Ds x Ds)
    JetTensor Nt;        // N^A_B
    JetTensor Pit;       // Pi^A_J (D x Ds)
    JetTensor Piinv;     // left inverse h_Sigma^-1 Pi^T h (Ds x D)
    JetTensor nablaH;    // (nabla_i H)^c, stored (up n, down m)
    JetTensor divIIo;    // D^j IIo_ij^c, stored (down m, up n)
    std::vector<JetTensor> L;  // explicit slot formula
};

// order: jet order on Sigma (>= 3; 4 adds the tractor Gauss-Codazzi-Ricci checks)
SubJets sub_jets(const Geometry& geo, const Embedding& emb, const Point& q, int order);

// N_{A1..Ad} = Z N_{a..} + d X H^b N_{b a2..} as jets along Sigma
JetTensor tractor_normal_form_jets(const SigmaJets& s);

struct TractorSubPack {
    int m = 0, n = 0, d = 0;
    SubmanifoldPack rp;
    TensorValue Nt, Pit, Piinv;
    std::vector<TensorValue> L;        // explicit formula
    std::vector<TensorValue> L_deriv;  // -N (nabla_i N) Pi
    TensorValue F, F_weyl;             // F_weyl empty unless m >= 3
    TensorValue mu, mu_weyl;           // (down m, up n); mu_weyl empty for m = 1
    TensorValue p, Pij;
    double jbar = 0;                   // trace of p
    std::vector<TensorValue> S;        // difference tractor from F
    std::vector<TensorValue> S_checked;  // checked minus intrinsic connection
    TensorValue Hmean;                 // mean-curvature tractor for I = (1, 0, -J/n)
    TensorValue nform;                 // N_{A1..Ad}
    TensorValue star;                  // star N, degree m+2
    TensorValue cotton;                // m = 2 submanifold Cotton c_ijk (empty otherwise)
    TensorValue h, hs;
};

TractorSubPack tractor_sub_pack(const Geometry& geo, const Embedding& emb, const Point& q);
TractorSubPack pack_from_sub_jets(const SubJets& sj);

TensorValue normal_tractor_projector(const Geometry& geo, const Embedding& emb, const Point& q);
std::vector<TensorValue> tractor_second_fundamental_form(const Geometry& geo, const Embedding& emb, const Point& q);
TensorValue mu_invariant(const Geometry& geo, const Embedding& emb, const Point& q);
TensorValue fialkow(const Geometry& geo, const Embedding& emb, const Point& q);

// L reassembled from (IIo, mu, H, D^j IIo_ij); requires m >= 2
std::vector<TensorValue> reconstruct_L(const TensorValue& IIo, const TensorValue& mu, const TensorValue& H,
                                       const TensorValue& divIIo, const TensorValue& g);
// M(omega) for a trace-free normal-valued omega given as jets along Sigma (m >= 2)
std::vector<TensorValue> M_operator(const SubJets& sj, const JetTensor& omega);

// positive-definite norms in the working scale: tangent indices with g, tractor
// indices with diag(1, g, 1); tractor forms divided by k!
double sub_norm(const TensorValue& t, const TractorSubPack& pk);

struct TheoremResiduals {
    double L = 0, nablaNproj = 0, nablaNform = 0, nablaStar = 0;
};
TheoremResiduals theorem_residuals(const Geometry& geo, const Embedding& emb, const Point& q);

struct TractorGcr {
    double gauss = 0, codazzi = 0, ricci = 0;
    bool available = false;  // false when the backend cannot supply the 4-jet
};
TractorGcr tractor_gcr_residuals(const Geometry& geo, const Embedding& emb, const Point& q);

// intrinsic tractor V^J -> Pi^B_J D_i ... checked-connection oracle residual for a random field
double checked_connection_residual(const Geometry& geo, const Embedding& emb, const Point& q, unsigned seed);

struct SampleInvariants {
    Point q;
    double IIo = 0, mu = 0, F = 0, F_tracefree = 0, L = 0, S = 0, H = 0, P = 0, II = 0;
    double fialkow_coefficient = 0;  // tr F / m
};

struct ClassificationReport {
    std::vector<SampleInvariants> samples;
    double tol = 0, scale = 1;
    double max_IIo = 0, max_mu = 0, max_F = 0, max_F_tracefree = 0, max_L = 0, max_S = 0;
    bool umbilic = false, distinguished = false, cc = false, scc = false;
};

ClassificationReport classify(const Geometry& geo, const Embedding& emb, const std::vector<Point>& qs,
                              std::optional<double> tol = std::nullopt);

struct MeanCurvatureReport {
    std::vector<TensorValue> HA;   // H^A per sample
    std::vector<double> NII;       // N_AB I^A I^B per sample
    std::vector<double> IN;        // |I^A N_A^B| per sample
    std::vector<double> parallel;  // |N nabla_i H^B| per sample
    bool minimal = false, cmc = false, parallel_mean_curvature = false;
};

// I from the scale sigma (empty Field: the working scale sigma = 1)
MeanCurvatureReport mean_curvature_tractor(const Geometry& geo, const Embedding& emb, const Field& sigma,
                                           const std::vector<Point>& qs, double tol);

}  // namespace tl
