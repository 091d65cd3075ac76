#pragma once

#include "snellforge/laglad.hpp"
#include "snellforge/probspace.hpp"
#include "snellforge/rbsde.hpp"
#include "snellforge/snell.hpp"
#include "snellforge/splitstop.hpp"

#include <string>
#include <vector>

namespace snellforge {

// Two obstacles with xi below zeta on both channels. At the horizon the
// channel the problem actually reads must carry equal values: the at
// channel for an Empty terminal, the pre channel for an Omega terminal
// (there the payoff is the left limit, so the band has to close one step
// earlier).
struct AdmissiblePair {
    LadlagProcess xi;
    LadlagProcess zeta;
};

// Throws ValidationError: "SpaceMismatch", "ObstacleOrderViolated",
// "TerminalMismatch". Order is checked nodewise on both channels;
// terminal equality is exact.
void validate_admissible(const AdmissiblePair& pair, TerminalKind kind);

// Shifted obstacles together with the shift itself:
//   r_t  = E[ payoff at the horizon + integral of g over (t, T] | F_t ]
//   xi~  = xi - r,  zeta~ = zeta - r
// Both shifted obstacles vanish identically at the horizon channel; the
// terminal values are assigned directly so the cancellation is exact.
// u holds the martingale r + I per node (closing at payoff + I_T).
struct TildeObstacles {
    LadlagProcess xi;
    LadlagProcess zeta;
    LadlagProcess r;
    std::vector<double> u;
};

TildeObstacles tilde_obstacles(const AdmissiblePair& pair, const std::vector<double>& g,
                               TerminalKind kind);

struct CoupledParams {
    double tol = 1e-12;
    int max_iter = 10000;
};

// sup_increments[k] and min_increments[k] are taken over both processes
// and both channels during sweep k. Monotone arithmetic makes every
// min_increment nonnegative; tests assert this without tolerance.
struct CoupledTrace {
    std::vector<double> sup_increments;
    std::vector<double> min_increments;
    int iterations = 0;
};

struct CoupledResult {
    ValueProcesses j;
    ValueProcesses jbar;
    CoupledTrace trace;
};

// Smallest nonnegative strong supermartingales solving
//   J    = Ref[(Jbar + xi~) restricted to [0,T)]
//   Jbar = Ref[(J - zeta~) restricted to [0,T)]
// where Ref is the driverless reflection and the restriction zeroes the
// at channel at the horizon (the pre channel reads T-, which is still
// inside [0,T), and is kept). Iterates from (0,0), both updated from the
// previous sweep; stops once the sup increment stays below tol for two
// consecutive sweeps. Throws SolverError("NoConvergence") otherwise.
CoupledResult coupled_iterate(const LadlagProcess& xi_tilde, const LadlagProcess& zeta_tilde,
                              const CoupledParams& params = {});

// Witness report for the two-supermartingale separation property. On a
// finite tree with bounded obstacles the property always holds, so a
// false verdict only ever means the iteration budget ran out; the note
// says so. The witness is (h, hbar) = (J + p, Jbar + q) where p and q
// are the nonnegative supermartingales generated by the positive and
// negative parts of the horizon payoff and the driver; their difference
// restores the shift r, so the sandwich is verified on the original
// obstacles.
struct MokobodzkiReport {
    bool holds_at_tolerance = false;
    bool truncated = false;
    LadlagProcess h;
    LadlagProcess hbar;
    double worst_nonnegativity = 0.0;
    double worst_supermartingale = 0.0;
    double worst_sandwich = 0.0;
    int iterations = 0;
    std::string note;
};

MokobodzkiReport mokobodzki_probe(const AdmissiblePair& pair, const std::vector<double>& g,
                                  TerminalKind kind, const CoupledParams& params = {});

struct DrbsdeSolution {
    LadlagProcess y;
    std::vector<double> yplus; // right limits; yplus[leaf] = y.at[leaf]
    std::vector<double> z;
    std::vector<double> ortho;
    // Reflection processes, cumulative along the tree and as increments.
    // da/daprime sit on the node whose time the predictable jump hits
    // (zero at the root); db/dbprime on the node whose right limit drops.
    // min(da, daprime) = 0 and min(db, dbprime) = 0 hold exactly.
    std::vector<double> a, b, aprime, bprime;
    std::vector<double> da, db, daprime, dbprime;
    std::vector<double> dm; // net martingale increments (z dW + ortho)
    LadlagProcess j;
    LadlagProcess jbar;
    LadlagProcess r;
    std::vector<double> g;
    std::vector<double> integral;
    int iterations = 0;
    double fixed_point_residual = 0.0;
    double residual = 0.0; // worst pathwise backward-equation defect
};

// Builds the solution Y = J - Jbar + r, decomposes both supermartingales,
// splits the reflection increments into mutually singular parts, and
// verifies every solution invariant before returning. Throws
// SolverError("CoupledResidualTooLarge") when (j, jbar) fail the
// fixed-point property beyond residual_tol, and
// SolverError("InvariantViolation") naming the failed invariant.
DrbsdeSolution assemble_solution(const CoupledResult& coupled, const AdmissiblePair& pair,
                                 const std::vector<double>& g, TerminalKind kind,
                                 double residual_tol = 1e-8);

// Full solve for a driver that is a plain process in (omega, t).
DrbsdeSolution solve_with_driver_process(const AdmissiblePair& pair,
                                         const std::vector<double>& g, TerminalKind kind,
                                         const CoupledParams& coupled_params = {});

struct DrbsdeSolveResult {
    DrbsdeSolution sol;
    PicardTrace trace;
};

// Picard wrapper for state-dependent drivers, mirroring the single
// obstacle solver: freeze g at the previous (Y, Z), run the coupled
// solve, repeat until the sup-norm step is below params.tol. Throws
// SolverError("NoConvergence") at the iteration cap and
// SolverError("MokobodzkiFailed") when the inner coupled iteration fails
// to converge.
DrbsdeSolveResult solve_drbsde(const AdmissiblePair& pair, const LipschitzDriver& driver,
                               TerminalKind kind, const PicardParams& params = {},
                               const std::vector<double>& y0 = {},
                               const std::vector<double>& z0 = {});

} // namespace snellforge
