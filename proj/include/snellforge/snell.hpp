#pragma once

#include "snellforge/laglad.hpp"
#include "snellforge/probspace.hpp"
#include "snellforge/splitstop.hpp"

#include <cstdint>
#include <vector>

namespace snellforge {

// A ladlag process together with its right-limit channel. On the grid
// the right limit at time t equals the left limit at t+1 (processes are
// constant on the open cells between grid points); at terminal nodes the
// right limit is set to the at value.
struct ValueProcesses {
    LadlagProcess v;
    std::vector<double> vplus;
};

// Mertens decomposition of a strong supermartingale X:
//   X_t   = X_0 + M_t - A_t - B_{t-1}
//   X_{t-} = X_0 + M_{t-1} - A_{t-1} - B_{t-1}
// with M a martingale (M_0 = 0), A a nondecreasing predictable process
// charging the left jumps across (t-1, t] (A_0 = 0, each increment known
// one step ahead), and B a nondecreasing optional process charging the
// right jumps at t (B_{0-} = 0, no increment at the horizon).
//
// All six arrays are node-indexed at-channel values: m/a/b are the
// cumulative path processes, dm/da/db the increments arriving at the
// node (dm[root] = da[root] = 0; db[leaf] = 0).
struct MertensDecomposition {
    std::vector<double> m, a, b;
    std::vector<double> dm, da, db;
};

// Where the reflection acts: increments of A and B may only charge nodes
// where the value sits on the obstacle (pre channel for A, at channel
// for B). The report carries the largest |increment * gap| per family
// and the node attaining it.
struct SkorokhodReport {
    double max_flat_a = 0.0;
    double max_flat_b = 0.0;
    int worst_a = -1;
    int worst_b = -1;
};

// One atom of the observation field with the optimal value over the
// admissible split stopping times and a witness attaining it (earliest
// in enumeration order).
struct AtomValue {
    FDeltaAtom atom;
    double value = 0.0;
    SplitStoppingTime best;
};

// Backward dynamic programming for the optimal-split-stopping value of
// the reward xi up to the horizon rhoT:
//   terminal: at = xi_at (horizon (empty,T)) or = xi_pre (horizon (omega,T))
//   pre(t+1) = max(xi_pre(t+1), E[at(t+1) | F_t]),  vplus(t) = pre(t+1)
//   at(t)    = max(xi_at(t), vplus(t))
// Throws ValidationError("UnsupportedTerminal") unless rhoT is one of
// the two horizon times of the space.
ValueProcesses snell_backward(const LadlagProcess& xi, const SplitStoppingTime& rhoT);
ValueProcesses snell_backward(const LadlagProcess& xi, TerminalKind kind);

// The right-limit process of vp in ladlag form: at(n) = vplus(n),
// pre(n) = vplus(parent(n)) (= vplus at the root).
LadlagProcess vplus_process(const ValueProcesses& vp);

// Decomposes a strong supermartingale given as ValueProcesses. Throws
// ValidationError("NotASupermartingale") when an increment of A or B
// would come out negative beyond tolerance.
MertensDecomposition mertens_decompose(const ValueProcesses& x);

// Rebuilds the value processes from x0 and a decomposition; inverse of
// mertens_decompose up to floating-point arithmetic.
ValueProcesses reconstruct_from_decomposition(const FiniteFilteredSpace& space, double x0,
                                              const MertensDecomposition& dec);

SkorokhodReport skorokhod_report(const ValueProcesses& vp, const MertensDecomposition& dec,
                                 const LadlagProcess& xi);

// Brute-force optimal values per observation atom: max over enumerated
// candidates rho with delta <= rho <= rhoT of E[xi_rho | atom]. The
// strict variant ranges over rho strictly later than delta (at the
// horizon the candidate set still contains rhoT itself, so on atoms
// where delta has already reached the horizon the value is the horizon
// payoff).
std::vector<AtomValue> value_brute(const LadlagProcess& xi, const SplitStoppingTime& delta,
                                   const SplitStoppingTime& rhoT,
                                   std::uint64_t cap = kDefaultEnumerationCap);
std::vector<AtomValue> strict_value_brute(const LadlagProcess& xi,
                                          const SplitStoppingTime& delta,
                                          const SplitStoppingTime& rhoT,
                                          std::uint64_t cap = kDefaultEnumerationCap);

// Multiplicative optimality window: with a nonnegative reward and
// lambda in (0,1), scan each path from theta for the first time the
// scaled value drops to the reward (checking the pre channel just
// before each grid point and the at channel on it); the decomposition
// must be free of A and B increments strictly inside the window. Returns
// the check verdict; *max_violation receives the largest increment seen
// inside a window. Throws ValidationError("LambdaOutOfRange") for
// lambda outside (0,1) and "NegativeObstacle" when the reward is not
// nonnegative.
bool martingale_interval_check(const LadlagProcess& xi, double lambda,
                               const std::vector<char>& theta_stop, TerminalKind kind,
                               double tol, double* max_violation = nullptr);

} // namespace snellforge
