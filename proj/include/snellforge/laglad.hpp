#pragma once

#include "snellforge/probspace.hpp"
#include "snellforge/splitstop.hpp"

#include <vector>

namespace snellforge {

// A process with two channels per node: `at[n]` is the value at the
// node's time, `pre[n]` the left limit just before it. Predictability of
// the pre channel means pre is constant across sibling blocks (it is
// decided one step earlier); at the root the two channels coincide
// because there is nothing before time 0.
//
// Plain aggregate; solvers fill instances directly. make_process is the
// validating entry point for external data.
struct LadlagProcess {
    const FiniteFilteredSpace* space = nullptr;
    std::vector<double> pre;
    std::vector<double> at;
};

// Validates channel sizes, sibling-constancy of pre, and pre(root) ==
// at(root). Throws ValidationError with codes "SpaceMismatch",
// "PreNotPredictable", "Pre0Mismatch".
LadlagProcess make_process(const FiniteFilteredSpace& space, std::vector<double> pre,
                           std::vector<double> at);

void validate_process(const LadlagProcess& x);

// The payoff of X read along a split stopping time, per sample point:
// pre(stop node) on the pre-marked part, at(stop node) elsewhere.
std::vector<double> eval_at_split(const LadlagProcess& x, const SplitStoppingTime& rho);

// E[X_rho]: expectation of the split payoff.
double expected_at_split(const LadlagProcess& x, const SplitStoppingTime& rho);

// Weighted norms over the grid, with weights e^{beta * t * dt} in real
// time. S2 is the expected weighted running max of the squared at
// channel over all grid times; H2 integrates the squared at channel over
// the left-open grid (times 0..N-1, each cell weighted by dt); M2 sums
// weighted squared increments, reading the at channel at times 1..N as
// the increment arriving at that node. Throws
// ValidationError("NegativeBeta") for beta < 0.
enum class NormKind { S2, H2, M2 };

double weighted_norm(const LadlagProcess& x, NormKind kind, double beta);

// Array-level versions used by the solvers (values indexed by node id).
double norm_s2(const FiniteFilteredSpace& space, const std::vector<double>& at_values,
               double beta);
double norm_h2(const FiniteFilteredSpace& space, const std::vector<double>& values,
               double beta);
double norm_m2(const FiniteFilteredSpace& space, const std::vector<double>& increments,
               double beta);

} // namespace snellforge
