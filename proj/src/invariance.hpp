// Conformal rescaling checks: Schouten law, second fundamental form law,
// tractor change-of-splitting matrix and verdict stability.
#pragma once

#include <optional>
#include <vector>

#include "geolib.hpp"
#include "subtractor.hpp"

namespace tl {

struct InvarianceResiduals {
    double schouten = 0;     // |P^ - (P - D Ups + Ups Ups - |Ups|^2 g / 2)|
    double weyl = 0;         // |W^a_bcd - W^a_bcd|
    double second_ff = 0;    // II law (max of II and H parts)
    double tracefree_2ff = 0;
    double tractor = 0;      // |I^(Omega sigma) - M I(sigma)|
    double tractor_metric = 0;  // |M^T h^ M - h|
    bool verdicts_equal = true;
    ClassificationReport before, after;
};

// ambient checks at phi(q) for every sample; emb may be null (ambient-only checks)
InvarianceResiduals invariance_check(const Geometry& geo, const Embedding* emb, const Field& omega,
                                     const std::vector<Point>& qs, std::optional<double> tol = std::nullopt);

// Omega = exp(b + c.x + x^T Q x / 2) with coefficients drawn uniformly in [-amp, amp]
geolib::ExpQuadratic random_omega(int n, unsigned seed, double amp);

}  // namespace tl
