// Conformal Killing-Yano forms, BGG splitting, conserved quantities along
// distinguished submanifolds and zero-locus scanning.
#pragma once

#include <string>
#include <vector>

#include "subtractor.hpp"

namespace tl {

// k_{a1..a_deg} as n^deg row-major components (deg = 0: an almost-Einstein scale sigma)
struct KYForm {
    int n = 0;
    int degree = 0;
    Field comps;
    std::string name;
};

// |nabla k minus its skew part minus its g-wedge-divergence part|; for deg 0 the
// trace-free part of D D sigma + P sigma
double ky_residual(const Geometry& geo, const KYForm& k, const Point& p);

struct SplitTractor {
    TensorValue K;            // L(k), covariant tractor form of degree deg+1
    double normality = 0;     // |nabla K|
    double KK = 0;            // K.K / d!
    std::string causal;       // timelike | null | spacelike
    double simplicity = 0;    // Pluecker residual relative to |K|^2
    bool simple = false;
};

// L(k) as n-variable jets at p of the given order (>= 0)
JetTensor bgg_split_jets(const Geometry& geo, const KYForm& k, const Point& p, int order);
SplitTractor bgg_split(const Geometry& geo, const KYForm& k, const Point& p);

struct ConservedReport {
    double value = 0;                // K . N
    double explicit_value = 0;       // slot formula
    std::vector<double> derivative;  // d_i (K . N)
    std::vector<double> obstruction; // -1/2 W k N pairing (d >= 2)
    double residual = 0;             // max |d_i (K . N)|
    double obstruction_residual = 0; // max |d_i(K.N) - obstruction_i|
};

ConservedReport conserved_quantity(const Geometry& geo, const Embedding& emb, const KYForm& k, const Point& q);

struct ScanRegion {
    std::vector<double> lo, hi;
    int grid = 41;  // vertices per axis
};

struct LocusPoint {
    Point x;
    int codim = 0;
    std::vector<double> singular_values;
    double L = -1;            // |L| of the local graph parametrization (-1: not computed)
    std::string causal;
    bool simple = false;
};

struct LocusReport {
    bool empty = true;
    bool short_circuit = false;
    double certificate = 0;   // K.K when short-circuited
    std::string causal;
    int codim = -1;
    size_t candidates = 0, converged = 0, diverged = 0;
    std::vector<LocusPoint> points;  // deduplicated, capped
};

LocusReport zero_locus_scan(const Geometry& geo, const KYForm& k, const ScanRegion& region, double refine_tol,
                            int threads = 1, size_t max_points = 64);

}  // namespace tl
