#include "snellforge/snell.hpp"

#include "snellforge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace snellforge {

namespace {

constexpr double kMonotonicityTolerance = 1e-9;

TerminalKind classify_terminal(const SplitStoppingTime& rhoT) {
    const auto& space = rhoT.space();
    bool all_pre = true;
    bool none_pre = true;
    for (int node = 0; node < space.node_count(); ++node) {
        const bool terminal = space.time_of(node) == space.steps();
        if (rhoT.stops_at(node) != terminal) {
            throw ValidationError("UnsupportedTerminal",
                                  "horizon must stop exactly at the last grid time");
        }
        if (terminal) {
            (rhoT.in_h(node) ? none_pre : all_pre) = false;
        }
    }
    if (all_pre) return TerminalKind::Omega;
    if (none_pre) return TerminalKind::Empty;
    throw ValidationError("UnsupportedTerminal",
                          "horizon must carry the pre mark everywhere or nowhere");
}

} // namespace

ValueProcesses snell_backward(const LadlagProcess& xi, TerminalKind kind) {
    const auto& space = *xi.space;
    ValueProcesses out;
    out.v.space = &space;
    out.v.pre.assign(space.node_count(), 0.0);
    out.v.at.assign(space.node_count(), 0.0);
    out.vplus.assign(space.node_count(), 0.0);

    for (int node = space.level_begin(space.steps()); node < space.level_end(space.steps());
         ++node) {
        const double payoff = kind == TerminalKind::Omega ? xi.pre[node] : xi.at[node];
        out.v.at[node] = payoff;
        out.vplus[node] = payoff;
    }
    for (int t = space.steps() - 1; t >= 0; --t) {
        for (int node = space.level_begin(t); node < space.level_end(t); ++node) {
            const int c0 = space.first_child(node);
            double cond = 0.0;
            for (int c = c0; c < c0 + space.child_count(node); ++c) {
                cond += space.edge_prob(c) * out.v.at[c];
            }
            const double pre_next = std::max(xi.pre[c0], cond);
            for (int c = c0; c < c0 + space.child_count(node); ++c) {
                out.v.pre[c] = pre_next;
            }
            out.vplus[node] = pre_next;
            out.v.at[node] = std::max(xi.at[node], pre_next);
        }
    }
    out.v.pre[0] = out.v.at[0];
    return out;
}

ValueProcesses snell_backward(const LadlagProcess& xi, const SplitStoppingTime& rhoT) {
    if (xi.space != &rhoT.space()) {
        throw ValidationError("SpaceMismatch",
                              "reward and horizon live on different spaces");
    }
    return snell_backward(xi, classify_terminal(rhoT));
}

LadlagProcess vplus_process(const ValueProcesses& vp) {
    const auto& space = *vp.v.space;
    LadlagProcess out;
    out.space = &space;
    out.at = vp.vplus;
    out.pre.assign(space.node_count(), 0.0);
    out.pre[0] = vp.vplus[0];
    for (int node = 1; node < space.node_count(); ++node) {
        out.pre[node] = vp.vplus[space.parent_of(node)];
    }
    return out;
}

MertensDecomposition mertens_decompose(const ValueProcesses& x) {
    const auto& space = *x.v.space;
    const int n = space.node_count();
    MertensDecomposition dec;
    dec.m.assign(n, 0.0);
    dec.a.assign(n, 0.0);
    dec.b.assign(n, 0.0);
    dec.dm.assign(n, 0.0);
    dec.da.assign(n, 0.0);
    dec.db.assign(n, 0.0);

    for (int node = 0; node < n; ++node) {
        const bool terminal = space.time_of(node) == space.steps();
        const double right = terminal ? x.v.at[node] : x.vplus[node];
        const double jump = x.v.at[node] - right;
        if (jump < -kMonotonicityTolerance) {
            throw ValidationError("NotASupermartingale",
                                  "right limit exceeds the value at node " +
                                      std::to_string(node));
        }
        dec.db[node] = terminal ? 0.0 : jump;
    }
    for (int t = 0; t < space.steps(); ++t) {
        for (int node = space.level_begin(t); node < space.level_end(t); ++node) {
            const int c0 = space.first_child(node);
            double cond = 0.0;
            for (int c = c0; c < c0 + space.child_count(node); ++c) {
                cond += space.edge_prob(c) * x.v.at[c];
            }
            const double drop = x.vplus[node] - cond;
            if (drop < -kMonotonicityTolerance) {
                throw ValidationError("NotASupermartingale",
                                      "conditional expectation exceeds the right limit at node " +
                                          std::to_string(node));
            }
            for (int c = c0; c < c0 + space.child_count(node); ++c) {
                // A charges the left jump, so its increment is read off the
                // pre channel (equal to the parent right limit for any
                // process that is constant on the open cells).
                const double charge = x.v.pre[c] - cond;
                if (charge < -kMonotonicityTolerance) {
                    throw ValidationError(
                        "NotASupermartingale",
                        "conditional expectation exceeds the left limit at node " +
                            std::to_string(c));
                }
                dec.da[c] = charge;
                dec.dm[c] = x.v.at[c] - cond;
                dec.m[c] = dec.m[node] + dec.dm[c];
                dec.a[c] = dec.a[node] + charge;
            }
        }
    }
    dec.b[0] = dec.db[0];
    for (int node = 1; node < n; ++node) {
        dec.b[node] = dec.b[space.parent_of(node)] + dec.db[node];
    }
    return dec;
}

ValueProcesses reconstruct_from_decomposition(const FiniteFilteredSpace& space, double x0,
                                              const MertensDecomposition& dec) {
    ValueProcesses out;
    out.v.space = &space;
    const int n = space.node_count();
    out.v.pre.assign(n, 0.0);
    out.v.at.assign(n, 0.0);
    out.vplus.assign(n, 0.0);
    for (int node = 0; node < n; ++node) {
        const int p = space.parent_of(node);
        const double b_prev = p >= 0 ? dec.b[p] : 0.0;
        out.v.at[node] = x0 + dec.m[node] - dec.a[node] - b_prev;
        out.v.pre[node] =
            p >= 0 ? x0 + dec.m[p] - dec.a[p] - dec.b[p] : out.v.at[node];
        out.vplus[node] = out.v.at[node] - dec.db[node];
    }
    return out;
}

SkorokhodReport skorokhod_report(const ValueProcesses& vp, const MertensDecomposition& dec,
                                 const LadlagProcess& xi) {
    const auto& space = *vp.v.space;
    SkorokhodReport rep;
    for (int node = 0; node < space.node_count(); ++node) {
        const double flat_b = std::fabs(dec.db[node] * (vp.v.at[node] - xi.at[node]));
        if (flat_b > rep.max_flat_b) {
            rep.max_flat_b = flat_b;
            rep.worst_b = node;
        }
        if (node > 0) {
            const double flat_a = std::fabs(dec.da[node] * (vp.v.pre[node] - xi.pre[node]));
            if (flat_a > rep.max_flat_a) {
                rep.max_flat_a = flat_a;
                rep.worst_a = node;
            }
        }
    }
    return rep;
}

namespace {

std::vector<AtomValue> brute_values(const LadlagProcess& xi, const SplitStoppingTime& delta,
                                    const SplitStoppingTime& rhoT, bool strict,
                                    std::uint64_t cap) {
    const auto& space = *xi.space;
    if (&space != &delta.space() || !delta.same_space_as(rhoT)) {
        throw ValidationError("SpaceMismatch", "operands live on different spaces");
    }
    auto cands = strict ? enumerate_splits_gt(space, delta, cap)
                        : enumerate_splits_geq(space, delta, cap);

    const auto atoms = atoms_of(delta);
    std::vector<AtomValue> out;
    bool fresh = true;
    for (const auto& cand : cands) {
        if (!split_le(cand, rhoT)) continue;
        const auto payoff = eval_at_split(xi, cand);
        std::size_t k = 0;
        for (const auto& atom : atoms) {
            double num = 0.0;
            for (int i = atom.leaf_lo; i < atom.leaf_hi; ++i) {
                num += space.prob(space.leaf_node(i)) * payoff[i];
            }
            const double val = num / atom.prob;
            if (fresh) {
                out.push_back({atom, val, cand});
            } else if (val > out[k].value) {
                out[k].value = val;
                out[k].best = cand;
            }
            ++k;
        }
        fresh = false;
    }
    if (fresh) {
        throw ValidationError("EmptyCandidateSet",
                              "no admissible split stopping time between the operands");
    }
    return out;
}

} // namespace

std::vector<AtomValue> value_brute(const LadlagProcess& xi, const SplitStoppingTime& delta,
                                   const SplitStoppingTime& rhoT, std::uint64_t cap) {
    return brute_values(xi, delta, rhoT, false, cap);
}

std::vector<AtomValue> strict_value_brute(const LadlagProcess& xi,
                                          const SplitStoppingTime& delta,
                                          const SplitStoppingTime& rhoT, std::uint64_t cap) {
    return brute_values(xi, delta, rhoT, true, cap);
}

bool martingale_interval_check(const LadlagProcess& xi, double lambda,
                               const std::vector<char>& theta_stop, TerminalKind kind,
                               double tol, double* max_violation) {
    if (!(lambda > 0.0 && lambda < 1.0)) {
        throw ValidationError("LambdaOutOfRange",
                              "lambda must lie strictly between 0 and 1, got " +
                                  std::to_string(lambda));
    }
    const auto& space = *xi.space;
    for (int node = 0; node < space.node_count(); ++node) {
        if (xi.at[node] < 0.0 || xi.pre[node] < 0.0) {
            throw ValidationError("NegativeObstacle",
                                  "multiplicative window requires a nonnegative reward");
        }
    }
    const SplitStoppingTime theta = lift(space, theta_stop, LiftMode::Optional);
    const ValueProcesses vp = snell_backward(xi, kind);
    const MertensDecomposition dec = mertens_decompose(vp);

    double worst = 0.0;
    for (int i = 0; i < space.leaf_count(); ++i) {
        // Path nodes from root to leaf, indexed by time.
        std::vector<int> path(space.steps() + 1);
        {
            int node = space.leaf_node(i);
            for (int t = space.steps(); t >= 0; --t) {
                path[t] = node;
                node = space.parent_of(node);
            }
        }
        const int start = space.time_of(theta.stop_node_of_leaf(i));

        // First time the scaled value touches the reward, checking the
        // left limit just before each grid point ahead of the point
        // itself. hit_pre records which channel fired. When the game ends
        // on the left limit, the reward the grid point itself pays is the
        // pre value, so that is what the horizon comparison reads.
        int hit = -1;
        bool hit_pre = false;
        for (int m = start; m <= space.steps(); ++m) {
            if (m > start && lambda * vp.v.pre[path[m]] <= xi.pre[path[m]]) {
                hit = m;
                hit_pre = true;
                break;
            }
            const double reward = (m == space.steps() && kind == TerminalKind::Omega)
                                      ? xi.pre[path[m]]
                                      : xi.at[path[m]];
            if (lambda * vp.v.at[path[m]] <= reward) {
                hit = m;
                break;
            }
        }
        if (hit < 0) return false; // cannot happen for nonnegative rewards

        // Between theta and the hit the envelope must behave like a
        // martingale: no A increment crossing a cell inside the window,
        // no B jump at a grid point strictly before the hit.
        const int last_a = hit_pre ? hit - 1 : hit;
        for (int s = start + 1; s <= last_a; ++s) {
            worst = std::max(worst, dec.da[path[s]]);
        }
        for (int s = start; s <= hit - 1; ++s) {
            worst = std::max(worst, dec.db[path[s]]);
        }
    }
    if (max_violation != nullptr) *max_violation = worst;
    return worst <= tol;
}

} // namespace snellforge
