#include "snellforge/laglad.hpp"

#include "snellforge/errors.hpp"

#include <cmath>
#include <string>

namespace snellforge {

namespace {

constexpr double kPredictabilityTolerance = 0.0;

void check_beta(double beta) {
    if (beta < 0.0 || !std::isfinite(beta)) {
        throw ValidationError("NegativeBeta",
                              "norm weight exponent must be >= 0, got " + std::to_string(beta));
    }
}

} // namespace

void validate_process(const LadlagProcess& x) {
    const auto& space = *x.space;
    const int n = space.node_count();
    if (static_cast<int>(x.pre.size()) != n || static_cast<int>(x.at.size()) != n) {
        throw ValidationError("SpaceMismatch", "channel arrays do not match the node count");
    }
    if (x.pre[0] != x.at[0]) {
        throw ValidationError("Pre0Mismatch",
                              "pre(root) = " + std::to_string(x.pre[0]) +
                                  " differs from at(root) = " + std::to_string(x.at[0]));
    }
    // pre at time t is decided at t-1, so it cannot distinguish siblings.
    for (int p = 0; p < space.level_begin(space.steps()); ++p) {
        const int c0 = space.first_child(p);
        for (int c = c0 + 1; c < c0 + space.child_count(p); ++c) {
            if (std::fabs(x.pre[c] - x.pre[c0]) > kPredictabilityTolerance) {
                throw ValidationError("PreNotPredictable",
                                      "pre channel differs across siblings " +
                                          std::to_string(c0) + " and " + std::to_string(c));
            }
        }
    }
}

LadlagProcess make_process(const FiniteFilteredSpace& space, std::vector<double> pre,
                           std::vector<double> at) {
    LadlagProcess x{&space, std::move(pre), std::move(at)};
    validate_process(x);
    return x;
}

std::vector<double> eval_at_split(const LadlagProcess& x, const SplitStoppingTime& rho) {
    if (x.space != &rho.space()) {
        throw ValidationError("SpaceMismatch",
                              "process and split stopping time live on different spaces");
    }
    const auto& space = *x.space;
    std::vector<double> payoff(space.leaf_count());
    for (int i = 0; i < space.leaf_count(); ++i) {
        const int node = rho.stop_node_of_leaf(i);
        payoff[i] = rho.pre_at_leaf(i) ? x.pre[node] : x.at[node];
    }
    return payoff;
}

double expected_at_split(const LadlagProcess& x, const SplitStoppingTime& rho) {
    return expectation(*x.space, eval_at_split(x, rho));
}

double norm_s2(const FiniteFilteredSpace& space, const std::vector<double>& at_values,
               double beta) {
    // E[max_t e^{beta t dt} X_t^2]: walk every path once, taking the max
    // along the ancestor chain.
    double acc = 0.0;
    for (int i = 0; i < space.leaf_count(); ++i) {
        double best = 0.0;
        bool first = true;
        for (int node = space.leaf_node(i); node >= 0; node = space.parent_of(node)) {
            const double w = std::exp(beta * space.time_of(node) * space.dt());
            const double v = w * at_values[node] * at_values[node];
            if (first || v > best) {
                best = v;
                first = false;
            }
        }
        acc += space.prob(space.leaf_node(i)) * best;
    }
    return acc;
}

double norm_h2(const FiniteFilteredSpace& space, const std::vector<double>& values,
               double beta) {
    double acc = 0.0;
    for (int node = 0; node < space.level_begin(space.steps()); ++node) {
        const double w = std::exp(beta * space.time_of(node) * space.dt());
        acc += space.prob(node) * w * values[node] * values[node] * space.dt();
    }
    return acc;
}

double norm_m2(const FiniteFilteredSpace& space, const std::vector<double>& increments,
               double beta) {
    double acc = 0.0;
    for (int node = 1; node < space.node_count(); ++node) {
        const double w = std::exp(beta * space.time_of(node) * space.dt());
        acc += space.prob(node) * w * increments[node] * increments[node];
    }
    return acc;
}

double weighted_norm(const LadlagProcess& x, NormKind kind, double beta) {
    check_beta(beta);
    switch (kind) {
        case NormKind::S2: return norm_s2(*x.space, x.at, beta);
        case NormKind::H2: return norm_h2(*x.space, x.at, beta);
        case NormKind::M2: return norm_m2(*x.space, x.at, beta);
    }
    return 0.0;
}

} // namespace snellforge
