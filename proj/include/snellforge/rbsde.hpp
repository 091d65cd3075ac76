#pragma once

#include "snellforge/laglad.hpp"
#include "snellforge/martrep.hpp"
#include "snellforge/probspace.hpp"
#include "snellforge/snell.hpp"
#include "snellforge/splitstop.hpp"

#include <array>
#include <functional>
#include <vector>

namespace snellforge {

// Solution of the lower-reflected backward equation
//   Y_t = xi_T-payoff + sum_{s>=t} g_s dt - sum (Z dW + dN) + (A_T - A_t) + (B_{T-} - B_{t-})
// with Y >= xi on both channels and the Skorokhod flat-off conditions.
struct RbsdeSolution {
    LadlagProcess y;
    // True right limits: yplus[n] = Y_{(t+1)-} + g_n * dt (equals the at
    // value at terminal nodes). Y_t = xi_t v yplus_t holds by construction.
    std::vector<double> yplus;
    std::vector<double> z;     // integrand, per non-terminal node
    std::vector<double> ortho; // orthogonal increments, per non-root node
    MertensDecomposition parts; // M, A, B of Y + I (the Snell side)
    std::vector<double> integral; // I_t per node; the pre channel shares it
    std::vector<double> g;        // driver values actually used, per node
    double residual = 0.0;        // max |backward equation| over (path, time)
};

RbsdeSolution solve_with_driver_process(const LadlagProcess& xi, const std::vector<double>& g,
                                        TerminalKind kind);

// Reflection operator: Y-component of the driverless solve. Identity on
// strong supermartingales, monotone in the obstacle.
LadlagProcess ref_operator(const LadlagProcess& xi, TerminalKind kind);

// Driver with declared Lipschitz bound; eval receives the node id and the
// frozen (y, z) values at that node.
struct LipschitzDriver {
    std::function<double(int node, double y, double z)> eval;
    double bound = 0.0;
};

LipschitzDriver affine_driver(double a, double b, double c);

struct PicardParams {
    double beta = -1.0; // < 0: report against the full schedule {10,100,1000}
    double tol = 1e-12;
    int max_iter = 200;
};

inline constexpr std::array<double, 3> kBetaSchedule = {10.0, 100.0, 1000.0};

// Per-iteration record: sup-norm step size (the stopping metric) and the
// squared K-distance at each schedule beta (the contraction diagnostic:
// S2 of the Y-step plus H2 of the Z-step).
struct PicardTrace {
    std::vector<double> sup_dist;
    std::vector<std::array<double, 3>> k2;
    double beta_used = kBetaSchedule[0];
    int iterations = 0;
};

// First schedule entry whose recorded distances decrease from the first
// sweep on; the last entry when none does.
double contracting_beta(const std::vector<std::array<double, 3>>& k2);

struct LipschitzSolveResult {
    RbsdeSolution sol;
    PicardTrace trace;
};

// Picard iteration with the driver frozen at the previous iterate,
// starting from (y0, z0) (zeros when empty). Throws
// SolverError("NoConvergence") when max_iter is reached with the last
// sup-norm step above tol.
LipschitzSolveResult solve_lipschitz(const LadlagProcess& xi, const LipschitzDriver& driver,
                                     TerminalKind kind, const PicardParams& params,
                                     const std::vector<double>& y0 = {},
                                     const std::vector<double>& z0 = {});

// A priori estimate ratios for two solutions of the same obstacle under
// different driver processes:
//   r1 = (H2_beta(dZ) + M2_beta(dN)) / H2_beta(dg)
//   r2 = S2_beta(dY) / H2_beta(dg)
// drivers_equal flags a zero denominator (then both ratios are 0).
struct AprioriReport {
    double r1 = 0.0, r2 = 0.0;
    double dz2 = 0.0, dn2 = 0.0, dy2 = 0.0, dg2 = 0.0;
    bool drivers_equal = false;
    bool r1_within_eps2 = true;
    double beta = 0.0, eps = 0.0;
};

AprioriReport apriori_diagnostic(const RbsdeSolution& a, const RbsdeSolution& b,
                                 const std::vector<double>& ga, const std::vector<double>& gb,
                                 double beta, double eps);

} // namespace snellforge
