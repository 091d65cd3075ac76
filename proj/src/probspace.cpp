#include "snellforge/probspace.hpp"

#include "snellforge/errors.hpp"

#include <cmath>
#include <cstddef>

namespace snellforge {

namespace {

constexpr double kMassTolerance = 1e-12;
constexpr double kCenterTolerance = 1e-12;

std::string node_tag(int node) { return "node " + std::to_string(node); }

} // namespace

std::vector<SpaceViolation> validate_space(const TreeSpec& spec) {
    std::vector<SpaceViolation> report;
    if (spec.steps < 1) {
        report.push_back({"BadTreeShape", -1,
                          "steps must be >= 1, got " + std::to_string(spec.steps)});
        return report;
    }
    if (!(spec.dt > 0.0) || !std::isfinite(spec.dt)) {
        report.push_back({"BadTreeShape", -1, "dt must be a positive finite real"});
        return report;
    }

    // Replay the breadth-first id assignment, consuming one branch list per
    // non-terminal node, and check each list as it is consumed.
    std::size_t next_branch = 0;
    int level_size = 1;
    int first_id_of_level = 0;
    for (int t = 0; t < spec.steps; ++t) {
        int next_level_size = 0;
        for (int k = 0; k < level_size; ++k) {
            const int node = first_id_of_level + k;
            if (next_branch >= spec.branches.size()) {
                report.push_back({"BadTreeShape", node,
                                  "missing branch list for non-terminal " + node_tag(node)});
                return report;
            }
            const auto& edges = spec.branches[next_branch++];
            if (edges.empty()) {
                report.push_back({"BadTreeShape", node,
                                  "empty branch list at " + node_tag(node)});
                continue;
            }
            double mass = 0.0;
            double mean_dw = 0.0;
            for (const auto& e : edges) {
                if (!(e.prob > 0.0) || !std::isfinite(e.prob)) {
                    report.push_back({"NonPositiveProbability", node,
                                      "edge probability " + std::to_string(e.prob) +
                                          " out of " + node_tag(node)});
                }
                mass += e.prob;
                mean_dw += e.prob * e.dw;
            }
            if (std::fabs(mass - 1.0) > kMassTolerance) {
                report.push_back({"ProbabilitySumMismatch", node,
                                  "edge probabilities out of " + node_tag(node) +
                                      " sum to " + std::to_string(mass)});
            }
            if (std::fabs(mean_dw) > kCenterTolerance) {
                report.push_back({"NoiseNotCentered", node,
                                  "E[dW] out of " + node_tag(node) + " is " +
                                      std::to_string(mean_dw)});
            }
            next_level_size += static_cast<int>(edges.size());
        }
        first_id_of_level += level_size;
        level_size = next_level_size;
    }
    if (next_branch != spec.branches.size()) {
        report.push_back({"BadTreeShape", -1,
                          std::to_string(spec.branches.size() - next_branch) +
                              " unused branch list(s) beyond the terminal level"});
    }
    return report;
}

FiniteFilteredSpace build_space(const TreeSpec& spec) {
    auto report = validate_space(spec);
    if (!report.empty()) {
        throw ValidationError(report.front().code, report.front().detail);
    }

    FiniteFilteredSpace s;
    s.steps_ = spec.steps;
    s.dt_ = spec.dt;
    s.level_begin_.assign(1, 0);

    // Breadth-first construction; children of a node get consecutive ids.
    s.time_.push_back(0);
    s.parent_.push_back(-1);
    s.edge_prob_.push_back(1.0);
    s.edge_dw_.push_back(0.0);
    s.prob_.push_back(1.0);

    std::size_t next_branch = 0;
    int level_begin = 0;
    for (int t = 0; t < spec.steps; ++t) {
        const int level_end = static_cast<int>(s.time_.size());
        s.level_begin_.push_back(level_end);
        for (int node = level_begin; node < level_end; ++node) {
            const auto& edges = spec.branches[next_branch++];
            for (const auto& e : edges) {
                s.time_.push_back(t + 1);
                s.parent_.push_back(node);
                s.edge_prob_.push_back(e.prob);
                s.edge_dw_.push_back(e.dw);
                s.prob_.push_back(s.prob_[node] * e.prob);
            }
        }
        level_begin = level_end;
    }
    s.level_begin_.push_back(static_cast<int>(s.time_.size()));

    const int n = static_cast<int>(s.time_.size());
    s.first_child_.assign(n, -1);
    s.child_count_.assign(n, 0);
    for (int node = 1; node < n; ++node) {
        const int p = s.parent_[node];
        if (s.first_child_[p] < 0) s.first_child_[p] = node;
        ++s.child_count_[p];
    }

    // Descendant leaf ranges, filled bottom-up (children have larger ids).
    s.leaf_lo_.assign(n, 0);
    s.leaf_hi_.assign(n, 0);
    const int first_leaf = s.level_begin_[s.steps_];
    for (int node = n - 1; node >= 0; --node) {
        if (s.time_[node] == s.steps_) {
            s.leaf_lo_[node] = node - first_leaf;
            s.leaf_hi_[node] = node - first_leaf + 1;
        } else {
            const int c0 = s.first_child_[node];
            const int c1 = c0 + s.child_count_[node] - 1;
            s.leaf_lo_[node] = s.leaf_lo_[c0];
            s.leaf_hi_[node] = s.leaf_hi_[c1];
        }
    }
    return s;
}

TreeSpec binomial_spec(int steps, double dt) {
    TreeSpec spec;
    spec.steps = steps;
    spec.dt = dt;
    const double root_dt = std::sqrt(dt);
    int non_terminal = 0;
    for (int t = 0, w = 1; t < steps; ++t, w *= 2) non_terminal += w;
    spec.branches.assign(non_terminal,
                         {{0.5, root_dt}, {0.5, -root_dt}});
    return spec;
}

FiniteFilteredSpace binomial_space(int steps, double dt) {
    return build_space(binomial_spec(steps, dt));
}

double FiniteFilteredSpace::cond_exp_on_atom(const std::vector<double>& leaf_values,
                                             int node) const {
    double num = 0.0;
    for (int i = leaf_lo_[node]; i < leaf_hi_[node]; ++i) {
        num += prob_[leaf_node(i)] * leaf_values[i];
    }
    return num / prob_[node];
}

std::vector<double> cond_exp_one_step(const FiniteFilteredSpace& space, int t,
                                      const std::vector<double>& values) {
    if (t < 0 || t >= space.steps()) {
        throw ValidationError("BadTreeShape",
                              "cond_exp_one_step time " + std::to_string(t) +
                                  " outside [0, steps)");
    }
    if (static_cast<int>(values.size()) != space.node_count()) {
        throw ValidationError("MissingNodeValue",
                              "value array has " + std::to_string(values.size()) +
                                  " entries, space has " +
                                  std::to_string(space.node_count()) + " nodes");
    }
    std::vector<double> out(space.node_count(), 0.0);
    for (int node = space.level_begin(t); node < space.level_end(t); ++node) {
        double acc = 0.0;
        const int c0 = space.first_child(node);
        for (int c = c0; c < c0 + space.child_count(node); ++c) {
            if (std::isnan(values[c])) {
                throw ValidationError("MissingNodeValue",
                                      "no value at " + node_tag(c));
            }
            acc += space.edge_prob(c) * values[c];
        }
        out[node] = acc;
    }
    return out;
}

std::vector<double> leaf_conditionals(const FiniteFilteredSpace& space,
                                      const std::vector<double>& leaf_values) {
    if (static_cast<int>(leaf_values.size()) != space.leaf_count()) {
        throw ValidationError("MissingNodeValue",
                              "leaf array has " + std::to_string(leaf_values.size()) +
                                  " entries, space has " +
                                  std::to_string(space.leaf_count()) + " leaves");
    }
    std::vector<double> out(space.node_count(), 0.0);
    for (int i = 0; i < space.leaf_count(); ++i) {
        out[space.leaf_node(i)] = leaf_values[i];
    }
    for (int node = space.level_begin(space.steps()) - 1; node >= 0; --node) {
        double acc = 0.0;
        const int c0 = space.first_child(node);
        for (int c = c0; c < c0 + space.child_count(node); ++c) {
            acc += space.edge_prob(c) * out[c];
        }
        out[node] = acc;
    }
    return out;
}

double expectation(const FiniteFilteredSpace& space,
                   const std::vector<double>& leaf_values) {
    double acc = 0.0;
    for (int i = 0; i < space.leaf_count(); ++i) {
        acc += space.prob(space.leaf_node(i)) * leaf_values[i];
    }
    return acc;
}

} // namespace snellforge
