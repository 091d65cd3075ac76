#include "snellforge/rbsde.hpp"

#include "snellforge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace snellforge {

namespace {

// Path integral of the driver: I[root] = 0, I[c] = I[parent] + g[parent]*dt.
// I has continuous paths in the cell embedding, so the pre channel at a
// node reads the same value.
std::vector<double> driver_integral(const FiniteFilteredSpace& space,
                                    const std::vector<double>& g) {
    std::vector<double> integral(space.node_count(), 0.0);
    for (int node = 1; node < space.node_count(); ++node) {
        const int p = space.parent_of(node);
        integral[node] = integral[p] + g[p] * space.dt();
    }
    return integral;
}

} // namespace

RbsdeSolution solve_with_driver_process(const LadlagProcess& xi, const std::vector<double>& g,
                                        TerminalKind kind) {
    const auto& space = *xi.space;
    if (static_cast<int>(g.size()) != space.node_count()) {
        throw ValidationError("SpaceMismatch", "driver array does not match the node count");
    }
    RbsdeSolution sol;
    sol.g = g;
    sol.integral = driver_integral(space, g);
    sol.y.space = &space;
    sol.y.pre.assign(space.node_count(), 0.0);
    sol.y.at.assign(space.node_count(), 0.0);
    sol.yplus.assign(space.node_count(), 0.0);

    // Backward recursion in obstacle coordinates (the drift enters at the
    // at-channel step). Working on Y directly, rather than on xi + I with
    // a final shift, keeps the floor and the Y = xi v Y+ identity exact.
    for (int node = space.level_begin(space.steps()); node < space.level_end(space.steps());
         ++node) {
        const double payoff = kind == TerminalKind::Omega ? xi.pre[node] : xi.at[node];
        sol.y.at[node] = payoff;
        sol.yplus[node] = payoff;
    }
    for (int t = space.steps() - 1; t >= 0; --t) {
        for (int node = space.level_begin(t); node < space.level_end(t); ++node) {
            const int c0 = space.first_child(node);
            double cond = 0.0;
            for (int c = c0; c < c0 + space.child_count(node); ++c) {
                cond += space.edge_prob(c) * sol.y.at[c];
            }
            const double pre_next = std::max(xi.pre[c0], cond);
            for (int c = c0; c < c0 + space.child_count(node); ++c) {
                sol.y.pre[c] = pre_next;
            }
            sol.yplus[node] = pre_next + g[node] * space.dt();
            sol.y.at[node] = std::max(xi.at[node], sol.yplus[node]);
        }
    }
    sol.y.pre[0] = sol.y.at[0];

    // Mertens parts of the shifted supermartingale Y + I, computed from
    // the Y arrays directly (the integral cancels inside every increment):
    //   dB_t   = Y_t - Y+_t
    //   dA_t+1 = Y_(t+1)- - E[Y_t+1 | F_t]
    //   dM_t+1 = Y_t+1 - E[Y_t+1 | F_t]
    const int n = space.node_count();
    auto& dec = sol.parts;
    dec.m.assign(n, 0.0);
    dec.a.assign(n, 0.0);
    dec.b.assign(n, 0.0);
    dec.dm.assign(n, 0.0);
    dec.da.assign(n, 0.0);
    dec.db.assign(n, 0.0);
    for (int t = 0; t < space.steps(); ++t) {
        for (int node = space.level_begin(t); node < space.level_end(t); ++node) {
            const int c0 = space.first_child(node);
            double cond = 0.0;
            for (int c = c0; c < c0 + space.child_count(node); ++c) {
                cond += space.edge_prob(c) * sol.y.at[c];
            }
            dec.db[node] = sol.y.at[node] - sol.yplus[node];
            for (int c = c0; c < c0 + space.child_count(node); ++c) {
                dec.da[c] = sol.y.pre[c] - cond;
                dec.dm[c] = sol.y.at[c] - cond;
                dec.m[c] = dec.m[node] + dec.dm[c];
                dec.a[c] = dec.a[node] + dec.da[c];
            }
        }
    }
    dec.b[0] = dec.db[0];
    for (int node = 1; node < n; ++node) {
        dec.b[node] = dec.b[space.parent_of(node)] + dec.db[node];
    }

    const MartingaleParts parts = orthogonal_decompose(space, dec.dm);
    sol.z = parts.z;
    sol.ortho = parts.ortho;

    // Pathwise residual of the cumulative backward equation, evaluated at
    // every (leaf, time) pair.
    double worst = 0.0;
    for (int i = 0; i < space.leaf_count(); ++i) {
        std::vector<int> path(space.steps() + 1);
        int node = space.leaf_node(i);
        for (int t = space.steps(); t >= 0; --t) {
            path[t] = node;
            node = space.parent_of(node);
        }
        const int leaf = path[space.steps()];
        const double terminal = sol.y.at[leaf];
        for (int t = 0; t <= space.steps(); ++t) {
            double rhs = terminal;
            for (int s = t; s < space.steps(); ++s) {
                rhs += g[path[s]] * space.dt();
                rhs -= sol.z[path[s]] * space.edge_dw(path[s + 1]) + sol.ortho[path[s + 1]];
            }
            rhs += dec.a[leaf] - dec.a[path[t]];
            const double b_before_t = t > 0 ? dec.b[path[t - 1]] : 0.0;
            const double b_before_T = dec.b[path[space.steps() - 1]];
            rhs += b_before_T - b_before_t;
            worst = std::max(worst, std::fabs(sol.y.at[path[t]] - rhs));
        }
    }
    sol.residual = worst;
    return sol;
}

LadlagProcess ref_operator(const LadlagProcess& xi, TerminalKind kind) {
    return solve_with_driver_process(xi, std::vector<double>(xi.space->node_count(), 0.0),
                                     kind)
        .y;
}

double contracting_beta(const std::vector<std::array<double, 3>>& k2) {
    for (std::size_t bi = 0; bi < kBetaSchedule.size(); ++bi) {
        bool contracting = true;
        for (std::size_t j = 1; j < k2.size(); ++j) {
            if (k2[j][bi] > 0.0 && k2[j - 1][bi] > 0.0 && k2[j][bi] >= k2[j - 1][bi]) {
                contracting = false;
                break;
            }
        }
        if (contracting) {
            return kBetaSchedule[bi];
        }
    }
    return kBetaSchedule.back();
}

LipschitzDriver affine_driver(double a, double b, double c) {
    LipschitzDriver d;
    d.eval = [a, b, c](int, double y, double z) { return a + b * y + c * z; };
    d.bound = std::max(std::fabs(b), std::fabs(c));
    return d;
}

LipschitzSolveResult solve_lipschitz(const LadlagProcess& xi, const LipschitzDriver& driver,
                                     TerminalKind kind, const PicardParams& params,
                                     const std::vector<double>& y0,
                                     const std::vector<double>& z0) {
    const auto& space = *xi.space;
    if (!driver.eval) {
        throw ValidationError("MissingLipschitzBound", "driver has no evaluator");
    }
    if (!(driver.bound >= 0.0) || !std::isfinite(driver.bound)) {
        throw ValidationError("MissingLipschitzBound",
                              "Lipschitz drivers require a declared finite bound");
    }
    const int n = space.node_count();
    std::vector<double> y_prev = y0.empty() ? std::vector<double>(n, 0.0) : y0;
    std::vector<double> z_prev = z0.empty() ? std::vector<double>(n, 0.0) : z0;
    if (static_cast<int>(y_prev.size()) != n || static_cast<int>(z_prev.size()) != n) {
        throw ValidationError("SpaceMismatch", "initial iterate does not match the space");
    }

    LipschitzSolveResult out;
    PicardTrace& trace = out.trace;
    std::vector<double> g(n, 0.0);

    for (int k = 1; k <= params.max_iter; ++k) {
        for (int node = 0; node < n; ++node) {
            g[node] = driver.eval(node, y_prev[node], z_prev[node]);
        }
        RbsdeSolution sol = solve_with_driver_process(xi, g, kind);

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

AprioriReport apriori_diagnostic(const RbsdeSolution& a, const RbsdeSolution& b,
                                 const std::vector<double>& ga, const std::vector<double>& gb,
                                 double beta, double eps) {
    const auto& space = *a.y.space;
    if (b.y.space != &space) {
        throw ValidationError("SpaceMismatch", "solutions live on different spaces");
    }
    const int n = space.node_count();
    std::vector<double> dz(n), dn(n), dy(n), dg(n);
    for (int node = 0; node < n; ++node) {
        dz[node] = a.z[node] - b.z[node];
        dn[node] = a.ortho[node] - b.ortho[node];
        dy[node] = a.y.at[node] - b.y.at[node];
        dg[node] = ga[node] - gb[node];
    }
    AprioriReport rep;
    rep.beta = beta;
    rep.eps = eps;
    rep.dz2 = norm_h2(space, dz, beta);
    rep.dn2 = norm_m2(space, dn, beta);
    rep.dy2 = norm_s2(space, dy, beta);
    rep.dg2 = norm_h2(space, dg, beta);
    if (rep.dg2 == 0.0) {
        rep.drivers_equal = true;
        return rep;
    }
    rep.r1 = (rep.dz2 + rep.dn2) / rep.dg2;
    rep.r2 = rep.dy2 / rep.dg2;
    rep.r1_within_eps2 = rep.r1 <= eps * eps;
    return rep;
}

} // namespace snellforge
