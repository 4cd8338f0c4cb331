// Conformal circles: the projectively parametrised third-order ODE, the
// velocity / acceleration tractors and the 3-tractor Phi = 6 u^-1 X^U^A.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "firstint.hpp"

namespace tl {

struct CurveState {
    Point x;
    std::vector<double> u;  // velocity
    std::vector<double> a;  // u^c nabla_c u^b
    double t = 0;
};

// u^c nabla_c a^b from the circle equation; throws NumericError when u = 0
std::vector<double> conformal_circle_rhs(const Geometry& geo, const CurveState& s);

// |nabla_u a - rhs| for a curve with covariant third derivative da = u^c nabla_c a
double circle_equation_residual(const Geometry& geo, const CurveState& s, const std::vector<double>& da);

struct CurveTractors {
    TensorValue U, A;       // contravariant
    TensorValue Phi;        // contravariant 3-tractor
    TensorValue h, hinv;    // tractor metric at x
    double UU = 0, UA = 0, AA = 0, PhiPhi = 0;
};

// da = u^c nabla_c a enters only the bottom slot of A
CurveTractors curve_tractors(const Geometry& geo, const CurveState& s, const std::vector<double>& da);

struct PhiDerivative {
    TensorValue direct;   // u^d nabla_d Phi via the tractor connection
    TensorValue formula;  // 6 (bu.nabla ba - bu.P)^c bu^b X^[A Z^B_b Z^C]_c
    double direct_norm = 0, formula_norm = 0, mismatch = 0;
};
PhiDerivative phi_derivative(const Geometry& geo, const CurveState& s, const std::vector<double>& da);

// |(bu.nabla ba - bu.P) wedge bu| in the weighted unparametrised form
double unparam_residual(const Geometry& geo, const CurveState& s, const std::vector<double>& da);

struct CurveJet {
    CurveState s;
    std::vector<double> da;
};
// (x, u, a, nabla_u a) of a 1-dimensional embedding at parameter q
CurveJet curve_jet(const Geometry& geo, const Embedding& curve, double q);

// monitored scalar along a trajectory
using CurveMonitor = std::function<double(const CurveState&, const CurveTractors&)>;
// K . N with N = star Phi the tractor normal form of the curve; requires degree k = n - 2
CurveMonitor ky_monitor(const Geometry& geo, const KYForm& k);

struct CircleOptions {
    double atol = 1e-12, rtol = 1e-12;
    double h0 = 1e-3, hmin = 1e-14, hmax = 0.25;
    bool adaptive = true;   // Dormand-Prince 5(4); false: classical RK4 with step h0
    size_t max_steps = 2000000;
    double sample_dt = 0;   // 0: every accepted step
    bool transport = true;  // integrate the tractor transport matrix alongside
    double chart_bound = 1e6;
    std::function<bool(const Point&)> in_chart;  // optional extra chart test
};

struct CircleSample {
    CurveState s;
    double AdotA = 0, unparam = 0, phi_drift = 0;
    std::vector<double> conserved;
};

struct CircleTrajectory {
    std::vector<CircleSample> samples;
    std::string status = "ok";  // ok | chart_exit | step_underflow | max_steps
    std::string message;
    size_t accepted = 0, rejected = 0;
    double AdotA_drift = 0, max_unparam = 0, max_phi_drift = 0;
    std::vector<double> conserved_drift;  // max |Q(t) - Q(t0)| per monitor
};

CircleTrajectory integrate_circle(const Geometry& geo, const CurveState& init, double t_end,
                                  const CircleOptions& opt = {}, const std::vector<CurveMonitor>& monitors = {});

// RFC-4180 CSV: t, x.., u.., a.., AdotA, unparam_residual, monitor columns
std::string trajectory_csv(const CircleTrajectory& tr, const std::vector<std::string>& monitor_names);

}  // namespace tl
