#include "snellforge/drbsde.hpp"

#include "snellforge/errors.hpp"
#include "snellforge/martrep.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace snellforge {

namespace {

constexpr double kInvariantTolerance = 1e-10;

std::vector<double> path_integral(const FiniteFilteredSpace& space,
                                  const std::vector<double>& g) {
    std::vector<double> integral(space.node_count(), 0.0);
    for (int node = 1; node < space.node_count(); ++node) {
        const int p = space.parent_of(node);
        integral[node] = integral[p] + g[p] * space.dt();
    }
    return integral;
}

// Closes a martingale on the terminal values already stored at the leaf
// entries of `values`; fills every interior node with the one-step
// conditional expectation of its children.
void close_martingale(const FiniteFilteredSpace& space, std::vector<double>& values) {
    for (int node = space.level_begin(space.steps()) - 1; node >= 0; --node) {
        const int c0 = space.first_child(node);
        double acc = 0.0;
        for (int c = c0; c < c0 + space.child_count(node); ++c) {
            acc += space.edge_prob(c) * values[c];
        }
        values[node] = acc;
    }
}

LadlagProcess zero_process(const FiniteFilteredSpace& space) {
    LadlagProcess x;
    x.space = &space;
    x.pre.assign(space.node_count(), 0.0);
    x.at.assign(space.node_count(), 0.0);
    return x;
}

// (base + sign * add) with the at channel zeroed at the horizon; the pre
// channel reads T-, which the restriction to [0,T) keeps.
LadlagProcess restricted_sum(const LadlagProcess& base, const LadlagProcess& add,
                             double sign) {
    const auto& space = *base.space;
    LadlagProcess out = zero_process(space);
    for (int node = 0; node < space.node_count(); ++node) {
        out.at[node] = base.at[node] + sign * add.at[node];
        out.pre[node] = base.pre[node] + sign * add.pre[node];
    }
    for (int node = space.level_begin(space.steps()); node < space.level_end(space.steps());
         ++node) {
        out.at[node] = 0.0;
    }
    return out;
}

double sup_channel_diff(const LadlagProcess& a, const LadlagProcess& b) {
    double sup = 0.0;
    for (std::size_t i = 0; i < a.at.size(); ++i) {
        sup = std::max(sup, std::fabs(a.at[i] - b.at[i]));
        sup = std::max(sup, std::fabs(a.pre[i] - b.pre[i]));
    }
    return sup;
}

// Nonnegative strong supermartingale built from one signed half of the
// data: p_t = E[payoff^+ + kappa_T | F_t] - kappa_t with kappa the path
// integral of g^+. Returns the ladlag process and its right limits.
struct SupermartingaleShift {
    LadlagProcess p;
    std::vector<double> pplus;
};

SupermartingaleShift positive_part_shift(const FiniteFilteredSpace& space,
                                         const std::vector<double>& payoff_at_leaves,
                                         const std::vector<double>& g, double sign) {
    const int n = space.node_count();
    std::vector<double> gpos(n, 0.0);
    for (int node = 0; node < n; ++node) {
        gpos[node] = std::max(sign * g[node], 0.0);
    }
    const std::vector<double> kappa = path_integral(space, gpos);
    std::vector<double> pi(n, 0.0);
    for (int i = 0; i < space.leaf_count(); ++i) {
        const int leaf = space.leaf_node(i);
        pi[leaf] = std::max(sign * payoff_at_leaves[i], 0.0) + kappa[leaf];
    }
    close_martingale(space, pi);

    SupermartingaleShift out;
    out.p = zero_process(space);
    out.pplus.assign(n, 0.0);
    for (int node = 0; node < n; ++node) {
        out.p.at[node] = pi[node] - kappa[node];
        if (node == 0) {
            out.p.pre[node] = out.p.at[node];
        } else {
            const int parent = space.parent_of(node);
            out.p.pre[node] = pi[parent] - kappa[node];
        }
        if (space.time_of(node) == space.steps()) {
            out.pplus[node] = out.p.at[node];
        } else {
            out.pplus[node] = pi[node] - kappa[space.first_child(node)];
        }
    }
    return out;
}

std::vector<double> horizon_payoffs(const AdmissiblePair& pair, TerminalKind kind) {
    const auto& space = *pair.xi.space;
    std::vector<double> payoff(space.leaf_count(), 0.0);
    for (int i = 0; i < space.leaf_count(); ++i) {
        const int leaf = space.leaf_node(i);
        payoff[i] = kind == TerminalKind::Omega ? pair.xi.pre[leaf] : pair.xi.at[leaf];
    }
    return payoff;
}

[[noreturn]] void invariant_failure(const std::string& name, int node, double magnitude) {
    throw SolverError("InvariantViolation", name + " violated at node " +
                                                std::to_string(node) + " by " +
                                                std::to_string(magnitude));
}

} // namespace

void validate_admissible(const AdmissiblePair& pair, TerminalKind kind) {
    if (pair.xi.space == nullptr || pair.xi.space != pair.zeta.space) {
        throw ValidationError("SpaceMismatch", "obstacles live on different spaces");
    }
    validate_process(pair.xi);
    validate_process(pair.zeta);
    const auto& space = *pair.xi.space;
    for (int node = 0; node < space.node_count(); ++node) {
        if (pair.xi.at[node] > pair.zeta.at[node]) {
            throw ValidationError("ObstacleOrderViolated",
                                  "upper obstacle below lower at node " +
                                      std::to_string(node));
        }
        if (pair.xi.pre[node] > pair.zeta.pre[node]) {
            throw ValidationError("ObstacleOrderViolated",
                                  "upper obstacle below lower on the pre channel at node " +
                                      std::to_string(node));
        }
    }
    for (int node = space.level_begin(space.steps()); node < space.level_end(space.steps());
         ++node) {
        const bool equal = kind == TerminalKind::Omega
                               ? pair.xi.pre[node] == pair.zeta.pre[node]
                               : pair.xi.at[node] == pair.zeta.at[node];
        if (!equal) {
            throw ValidationError("TerminalMismatch",
                                  "obstacles disagree on the horizon channel at node " +
                                      std::to_string(node));
        }
    }
}

TildeObstacles tilde_obstacles(const AdmissiblePair& pair, const std::vector<double>& g,
                               TerminalKind kind) {
    validate_admissible(pair, kind);
    const auto& space = *pair.xi.space;
    const int n = space.node_count();
    if (static_cast<int>(g.size()) != n) {
        throw ValidationError("SpaceMismatch", "driver array does not match the node count");
    }
    const std::vector<double> integral = path_integral(space, g);

    TildeObstacles out;
    out.u.assign(n, 0.0);
    for (int i = 0; i < space.leaf_count(); ++i) {
        const int leaf = space.leaf_node(i);
        const double payoff =
            kind == TerminalKind::Omega ? pair.xi.pre[leaf] : pair.xi.at[leaf];
        out.u[leaf] = payoff + integral[leaf];
    }
    close_martingale(space, out.u);

    out.r = zero_process(space);
    for (int node = 0; node < n; ++node) {
        out.r.at[node] = out.u[node] - integral[node];
        if (node > 0) {
            out.r.pre[node] = out.u[space.parent_of(node)] - integral[node];
        }
    }
    // Assign the horizon channel directly: the subtraction above only
    // reproduces the payoff up to rounding, and the shifted obstacles
    // must vanish there exactly.
    for (int node = space.level_begin(space.steps()); node < space.level_end(space.steps());
         ++node) {
        if (kind == TerminalKind::Omega) {
            out.r.pre[node] = pair.xi.pre[node];
            out.r.at[node] = pair.xi.pre[node];
        } else {
            out.r.at[node] = pair.xi.at[node];
        }
    }
    out.r.pre[0] = out.r.at[0];

    out.xi = zero_process(space);
    out.zeta = zero_process(space);
    for (int node = 0; node < n; ++node) {
        out.xi.at[node] = pair.xi.at[node] - out.r.at[node];
        out.xi.pre[node] = pair.xi.pre[node] - out.r.pre[node];
        out.zeta.at[node] = pair.zeta.at[node] - out.r.at[node];
        out.zeta.pre[node] = pair.zeta.pre[node] - out.r.pre[node];
    }
    for (int node = space.level_begin(space.steps()); node < space.level_end(space.steps());
         ++node) {
        if (kind == TerminalKind::Omega) {
            out.xi.pre[node] = 0.0;
            out.zeta.pre[node] = 0.0;
        } else {
            out.xi.at[node] = 0.0;
            out.zeta.at[node] = 0.0;
        }
    }
    return out;
}

CoupledResult coupled_iterate(const LadlagProcess& xi_tilde, const LadlagProcess& zeta_tilde,
                              const CoupledParams& params) {
    if (xi_tilde.space == nullptr || xi_tilde.space != zeta_tilde.space) {
        throw ValidationError("SpaceMismatch", "shifted obstacles live on different spaces");
    }
    const auto& space = *xi_tilde.space;
    for (int node = 0; node < space.node_count(); ++node) {
        if (xi_tilde.at[node] > zeta_tilde.at[node] ||
            xi_tilde.pre[node] > zeta_tilde.pre[node]) {
            throw ValidationError("ObstacleOrderViolated",
                                  "shifted obstacles out of order at node " +
                                      std::to_string(node));
        }
    }

    CoupledResult res;
    res.j.v = zero_process(space);
    res.j.vplus.assign(space.node_count(), 0.0);
    res.jbar = res.j;

    int quiet_sweeps = 0;
    for (int sweep = 1; sweep <= params.max_iter; ++sweep) {
        ValueProcesses next_j =
            snell_backward(restricted_sum(res.jbar.v, xi_tilde, +1.0), TerminalKind::Empty);
        ValueProcesses next_jbar =
            snell_backward(restricted_sum(res.j.v, zeta_tilde, -1.0), TerminalKind::Empty);

        double sup_inc = 0.0;
        double min_inc = 0.0;
        for (int node = 0; node < space.node_count(); ++node) {
            for (double d : {next_j.v.at[node] - res.j.v.at[node],
                             next_j.v.pre[node] - res.j.v.pre[node],
                             next_jbar.v.at[node] - res.jbar.v.at[node],
                             next_jbar.v.pre[node] - res.jbar.v.pre[node]}) {
                sup_inc = std::max(sup_inc, std::fabs(d));
                min_inc = std::min(min_inc, d);
            }
        }
        res.j = std::move(next_j);
        res.jbar = std::move(next_jbar);
        res.trace.sup_increments.push_back(sup_inc);
        res.trace.min_increments.push_back(min_inc);
        res.trace.iterations = sweep;

        quiet_sweeps = sup_inc < params.tol ? quiet_sweeps + 1 : 0;
        if (quiet_sweeps >= 2) {
            return res;
        }
    }
    throw SolverError("NoConvergence",
                      "coupled iteration still moving by " +
                          std::to_string(res.trace.sup_increments.back()) + " after " +
                          std::to_string(params.max_iter) + " sweeps");
}

MokobodzkiReport mokobodzki_probe(const AdmissiblePair& pair, const std::vector<double>& g,
                                  TerminalKind kind, const CoupledParams& params) {
    const TildeObstacles tilde = tilde_obstacles(pair, g, kind);
    MokobodzkiReport report;

    CoupledResult coupled;
    try {
        coupled = coupled_iterate(tilde.xi, tilde.zeta, params);
    } catch (const SolverError&) {
        report.holds_at_tolerance = false;
        report.truncated = true;
        report.iterations = params.max_iter;
        report.note = "iteration budget exhausted before stagnation; on a finite tree with "
                      "bounded obstacles this signals truncation of the probe, not failure "
                      "of the separation property";
        return report;
    }
    report.iterations = coupled.trace.iterations;

    const auto& space = *pair.xi.space;
    const std::vector<double> payoff = horizon_payoffs(pair, kind);
    const SupermartingaleShift plus = positive_part_shift(space, payoff, g, +1.0);
    const SupermartingaleShift minus = positive_part_shift(space, payoff, g, -1.0);

    report.h = zero_process(space);
    report.hbar = zero_process(space);
    std::vector<double> hplus(space.node_count(), 0.0), hbarplus(space.node_count(), 0.0);
    for (int node = 0; node < space.node_count(); ++node) {
        report.h.at[node] = coupled.j.v.at[node] + plus.p.at[node];
        report.h.pre[node] = coupled.j.v.pre[node] + plus.p.pre[node];
        report.hbar.at[node] = coupled.jbar.v.at[node] + minus.p.at[node];
        report.hbar.pre[node] = coupled.jbar.v.pre[node] + minus.p.pre[node];
        hplus[node] = coupled.j.vplus[node] + plus.pplus[node];
        hbarplus[node] = coupled.jbar.vplus[node] + minus.pplus[node];
    }

    double worst_neg = 0.0, worst_super = 0.0, worst_sandwich = 0.0;
    for (int node = 0; node < space.node_count(); ++node) {
        for (double v : {report.h.at[node], report.h.pre[node], report.hbar.at[node],
                         report.hbar.pre[node]}) {
            worst_neg = std::max(worst_neg, -v);
        }
        worst_super = std::max(worst_super, hplus[node] - report.h.at[node]);
        worst_super = std::max(worst_super, hbarplus[node] - report.hbar.at[node]);
    }
    for (int t = 0; t < space.steps(); ++t) {
        for (int node = space.level_begin(t); node < space.level_end(t); ++node) {
            const int c0 = space.first_child(node);
            double cond_h = 0.0, cond_hbar = 0.0;
            for (int c = c0; c < c0 + space.child_count(node); ++c) {
                cond_h += space.edge_prob(c) * report.h.at[c];
                cond_hbar += space.edge_prob(c) * report.hbar.at[c];
            }
            worst_super = std::max(worst_super, cond_h - report.h.pre[c0]);
            worst_super = std::max(worst_super, cond_hbar - report.hbar.pre[c0]);
        }
    }
    const int horizon_begin = space.level_begin(space.steps());
    for (int node = 0; node < space.node_count(); ++node) {
        const bool terminal = node >= horizon_begin;
        if (!(terminal && kind == TerminalKind::Omega)) {
            const double gap_at = report.h.at[node] - report.hbar.at[node];
            worst_sandwich = std::max(worst_sandwich, pair.xi.at[node] - gap_at);
            worst_sandwich = std::max(worst_sandwich, gap_at - pair.zeta.at[node]);
        }
        const double gap_pre = report.h.pre[node] - report.hbar.pre[node];
        worst_sandwich = std::max(worst_sandwich, pair.xi.pre[node] - gap_pre);
        worst_sandwich = std::max(worst_sandwich, gap_pre - pair.zeta.pre[node]);
    }

    report.worst_nonnegativity = worst_neg;
    report.worst_supermartingale = worst_super;
    report.worst_sandwich = worst_sandwich;
    const double threshold = std::max(1e-9, 100.0 * params.tol);
    report.holds_at_tolerance =
        worst_neg <= threshold && worst_super <= threshold && worst_sandwich <= threshold;
    report.note = report.holds_at_tolerance
                      ? "witness verified nodewise"
                      : "witness checks exceeded tolerance; with a converged iteration this "
                        "indicates numerical trouble, not failure of the property";
    return report;
}

DrbsdeSolution assemble_solution(const CoupledResult& coupled, const AdmissiblePair& pair,
                                 const std::vector<double>& g, TerminalKind kind,
                                 double residual_tol) {
    const TildeObstacles tilde = tilde_obstacles(pair, g, kind);
    const auto& space = *pair.xi.space;
    if (coupled.j.v.space != &space || coupled.jbar.v.space != &space) {
        throw ValidationError("SpaceMismatch", "coupled pair lives on a different space");
    }
    const int n = space.node_count();

    // Fixed-point property of the coupled pair.
    const ValueProcesses chk_j =
        snell_backward(restricted_sum(coupled.jbar.v, tilde.xi, +1.0), TerminalKind::Empty);
    const ValueProcesses chk_jbar =
        snell_backward(restricted_sum(coupled.j.v, tilde.zeta, -1.0), TerminalKind::Empty);
    const double fp_residual = std::max(sup_channel_diff(chk_j.v, coupled.j.v),
                                        sup_channel_diff(chk_jbar.v, coupled.jbar.v));
    if (fp_residual > residual_tol) {
        throw SolverError("CoupledResidualTooLarge",
                          "fixed-point residual " + std::to_string(fp_residual) +
                              " exceeds " + std::to_string(residual_tol));
    }

    DrbsdeSolution sol;
    sol.j = coupled.j.v;
    sol.jbar = coupled.jbar.v;
    sol.r = tilde.r;
    sol.g = g;
    sol.integral = path_integral(space, g);
    sol.iterations = coupled.trace.iterations;
    sol.fixed_point_residual = fp_residual;

    sol.y = zero_process(space);
    sol.yplus.assign(n, 0.0);
    for (int node = 0; node < n; ++node) {
        sol.y.at[node] = (coupled.j.v.at[node] - coupled.jbar.v.at[node]) + sol.r.at[node];
        sol.y.pre[node] =
            (coupled.j.v.pre[node] - coupled.jbar.v.pre[node]) + sol.r.pre[node];
        sol.yplus[node] = (coupled.j.vplus[node] - coupled.jbar.vplus[node]) + sol.r.at[node];
    }

    const MertensDecomposition dec_j = mertens_decompose(coupled.j);
    const MertensDecomposition dec_jbar = mertens_decompose(coupled.jbar);

    sol.da.assign(n, 0.0);
    sol.daprime.assign(n, 0.0);
    sol.db.assign(n, 0.0);
    sol.dbprime.assign(n, 0.0);
    sol.dm.assign(n, 0.0);
    for (int node = 0; node < n; ++node) {
        const double net_b = dec_j.db[node] - dec_jbar.db[node];
        sol.db[node] = std::max(net_b, 0.0);
        sol.dbprime[node] = std::max(-net_b, 0.0);
        if (node > 0) {
            const double net_a = dec_j.da[node] - dec_jbar.da[node];
            sol.da[node] = std::max(net_a, 0.0);
            sol.daprime[node] = std::max(-net_a, 0.0);
            sol.dm[node] = (dec_j.dm[node] - dec_jbar.dm[node]) +
                           (tilde.u[node] - tilde.u[space.parent_of(node)]);
        }
    }
    sol.a.assign(n, 0.0);
    sol.aprime.assign(n, 0.0);
    sol.b.assign(n, 0.0);
    sol.bprime.assign(n, 0.0);
    sol.b[0] = sol.db[0];
    sol.bprime[0] = sol.dbprime[0];
    for (int node = 1; node < n; ++node) {
        const int p = space.parent_of(node);
        sol.a[node] = sol.a[p] + sol.da[node];
        sol.aprime[node] = sol.aprime[p] + sol.daprime[node];
        sol.b[node] = sol.b[p] + sol.db[node];
        sol.bprime[node] = sol.bprime[p] + sol.dbprime[node];
    }

    const MartingaleParts parts = orthogonal_decompose(space, sol.dm);
    sol.z = parts.z;
    sol.ortho = parts.ortho;

    // Solution invariants, nodewise.
    const int horizon_begin = space.level_begin(space.steps());
    for (int node = 0; node < n; ++node) {
        const bool skip_at = node >= horizon_begin && kind == TerminalKind::Omega;
        if (!skip_at) {
            const double lo = pair.xi.at[node] - sol.y.at[node];
            const double hi = sol.y.at[node] - pair.zeta.at[node];
            if (lo > kInvariantTolerance || hi > kInvariantTolerance) {
                invariant_failure("sandwich", node, std::max(lo, hi));
            }
            const double med =
                std::min(pair.zeta.at[node], std::max(sol.yplus[node], pair.xi.at[node]));
            if (std::fabs(sol.y.at[node] - med) > kInvariantTolerance) {
                invariant_failure("median", node, std::fabs(sol.y.at[node] - med));
            }
            const double gap = sol.yplus[node] - sol.y.at[node];
            if (std::fabs(sol.db[node] - std::max(-gap, 0.0)) > kInvariantTolerance ||
                std::fabs(sol.dbprime[node] - std::max(gap, 0.0)) > kInvariantTolerance) {
                invariant_failure("jump-identity", node, std::fabs(gap));
            }
            if (std::fabs(sol.db[node] * (sol.y.at[node] - pair.xi.at[node])) >
                    kInvariantTolerance ||
                std::fabs(sol.dbprime[node] * (sol.y.at[node] - pair.zeta.at[node])) >
                    kInvariantTolerance) {
                invariant_failure("skorokhod", node, sol.db[node] + sol.dbprime[node]);
            }
        }
        const double lo_pre = pair.xi.pre[node] - sol.y.pre[node];
        const double hi_pre = sol.y.pre[node] - pair.zeta.pre[node];
        if (lo_pre > kInvariantTolerance || hi_pre > kInvariantTolerance) {
            invariant_failure("sandwich", node, std::max(lo_pre, hi_pre));
        }
        if (std::fabs(sol.da[node] * (sol.y.pre[node] - pair.xi.pre[node])) >
                kInvariantTolerance ||
            std::fabs(sol.daprime[node] * (sol.y.pre[node] - pair.zeta.pre[node])) >
                kInvariantTolerance) {
            invariant_failure("skorokhod", node, sol.da[node] + sol.daprime[node]);
        }
        if (std::min(sol.da[node], sol.daprime[node]) != 0.0 ||
            std::min(sol.db[node], sol.dbprime[node]) != 0.0) {
            invariant_failure("mutual-singularity", node,
                              std::min(sol.da[node], sol.daprime[node]) +
                                  std::min(sol.db[node], sol.dbprime[node]));
        }
    }

    // Pathwise backward-equation defect, cumulative to the horizon.
    double worst = 0.0;
    for (int i = 0; i < space.leaf_count(); ++i) {
        std::vector<int> path(space.steps() + 1);
        int node = space.leaf_node(i);
        for (int t = space.steps(); t >= 0; --t) {
            path[t] = node;
            node = space.parent_of(node);
        }
        const int leaf = path[space.steps()];
        for (int t = 0; t <= space.steps(); ++t) {
            double rhs = sol.y.at[leaf];
            for (int s = t; s < space.steps(); ++s) {
                rhs += g[path[s]] * space.dt();
                rhs -= sol.z[path[s]] * space.edge_dw(path[s + 1]) + sol.ortho[path[s + 1]];
            }
            rhs += sol.a[leaf] - sol.a[path[t]];
            rhs -= sol.aprime[leaf] - sol.aprime[path[t]];
            const double b_before = t > 0 ? sol.b[path[t - 1]] : 0.0;
            const double bp_before = t > 0 ? sol.bprime[path[t - 1]] : 0.0;
            rhs += sol.b[leaf] - b_before;
            rhs -= sol.bprime[leaf] - bp_before;
            worst = std::max(worst, std::fabs(sol.y.at[path[t]] - rhs));
        }
    }
    sol.residual = worst;
    if (worst > kInvariantTolerance) {
        invariant_failure("backward-equation", -1, worst);
    }
    return sol;
}

DrbsdeSolution solve_with_driver_process(const AdmissiblePair& pair,
                                         const std::vector<double>& g, TerminalKind kind,
                                         const CoupledParams& coupled_params) {
    const TildeObstacles tilde = tilde_obstacles(pair, g, kind);
    const CoupledResult coupled = coupled_iterate(tilde.xi, tilde.zeta, coupled_params);
    return assemble_solution(coupled, pair, g, kind);
}

DrbsdeSolveResult solve_drbsde(const AdmissiblePair& pair, const LipschitzDriver& driver,
                               TerminalKind kind, const PicardParams& params,
                               const std::vector<double>& y0,
                               const std::vector<double>& z0) {
    if (!driver.eval) {
        throw ValidationError("MissingLipschitzBound", "driver has no evaluator");
    }
    if (!(driver.bound >= 0.0) || !std::isfinite(driver.bound)) {
        throw ValidationError("MissingLipschitzBound",
                              "Lipschitz drivers require a declared finite bound");
    }
    validate_admissible(pair, kind);
    const auto& space = *pair.xi.space;
    const int n = space.node_count();
    std::vector<double> y_prev = y0.empty() ? std::vector<double>(n, 0.0) : y0;
    std::vector<double> z_prev = z0.empty() ? std::vector<double>(n, 0.0) : z0;
    if (static_cast<int>(y_prev.size()) != n || static_cast<int>(z_prev.size()) != n) {
        throw ValidationError("SpaceMismatch", "initial iterate does not match the space");
    }
    CoupledParams coupled_params;
    coupled_params.tol = std::min(coupled_params.tol, 0.1 * params.tol);

    DrbsdeSolveResult out;
    PicardTrace& trace = out.trace;
    std::vector<double> g(n, 0.0);

    for (int k = 1; k <= params.max_iter; ++k) {
        for (int node = 0; node < n; ++node) {
            g[node] = driver.eval(node, y_prev[node], z_prev[node]);
        }
        DrbsdeSolution sol;
        try {
            sol = solve_with_driver_process(pair, g, kind, coupled_params);
        } catch (const SolverError& err) {
            if (std::string(err.code()) == "NoConvergence") {
                throw SolverError("MokobodzkiFailed",
                                  "coupled iteration failed to stagnate at outer sweep " +
                                      std::to_string(k) + ": " + err.what());
            }
            throw;
        }

        double sup = 0.0;
        std::vector<double> dy(n), dz(n);
        for (int node = 0; node < n; ++node) {
            dy[node] = sol.y.at[node] - y_prev[node];
            dz[node] = sol.z[node] - z_prev[node];
            sup = std::max(sup, std::max(std::fabs(dy[node]), std::fabs(dz[node])));
        }
        trace.sup_dist.push_back(sup);
        std::array<double, 3> k2{};
        for (std::size_t bi = 0; bi < kBetaSchedule.size(); ++bi) {
            k2[bi] = norm_s2(space, dy, kBetaSchedule[bi]) +
                     norm_h2(space, dz, kBetaSchedule[bi]);
        }
        trace.k2.push_back(k2);
        trace.iterations = k;

        y_prev = sol.y.at;
        z_prev = sol.z;
        if (sup <= params.tol) {
            trace.beta_used = params.beta >= 0.0 ? params.beta : contracting_beta(trace.k2);
            out.sol = std::move(sol);
            return out;
        }
    }
    throw SolverError("NoConvergence",
                      "Picard iteration did not reach tol " + std::to_string(params.tol) +
                          " after " + std::to_string(params.max_iter) +
                          " iterations; last step " +
                          std::to_string(trace.sup_dist.back()));
}

} // namespace snellforge
