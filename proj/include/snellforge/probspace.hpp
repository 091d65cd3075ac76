#pragma once

#include <string>
#include <vector>

namespace snellforge {

// One outgoing edge of a tree node: the transition probability and the
// driving-noise increment realised along that transition.
struct EdgeSpec {
    double prob = 0.0;
    double dw = 0.0;
};

// Raw tree description consumed by build_space / validate_space.
//
// Node ids are assigned breadth first: the root is node 0, and
// `branches[i]` lists the outgoing edges of the i-th non-terminal node in
// id order. Every node at time < steps must have at least one entry;
// nodes at time == steps are terminal and carry no entry. The number of
// branch lists must therefore equal the number of non-terminal nodes the
// lists themselves generate, which build_space checks.
struct TreeSpec {
    int steps = 0;
    double dt = 1.0;
    std::vector<std::vector<EdgeSpec>> branches;
};

// A single violated invariant found by validate_space. `node` is the id
// of the offending node (-1 when the problem is not attached to one).
struct SpaceViolation {
    std::string code;
    int node = -1;
    std::string detail;
};

// Finite filtered probability space over a time grid 0, 1, ..., steps.
//
// The space is a rooted tree: the nodes at depth t are the atoms of F_t,
// terminal nodes are the sample points, and the probability of a node is
// the product of edge probabilities along the path from the root. Two
// structural facts are relied on throughout the library:
//
//   * ids are breadth-first, so all nodes of one time form a contiguous
//     id range and the children of any node are contiguous;
//   * every leaf-index interval [leaf_lo(n), leaf_hi(n)) is exactly the
//     set of sample points contained in the atom n.
//
// Instances are immutable after construction; they are only created via
// build_space or the binomial convenience builder, both of which validate.
class FiniteFilteredSpace {
public:
    int steps() const { return steps_; }
    double dt() const { return dt_; }
    int node_count() const { return static_cast<int>(parent_.size()); }
    int leaf_count() const { return level_end(steps_) - level_begin(steps_); }

    int time_of(int node) const { return time_[node]; }
    int parent_of(int node) const { return parent_[node]; }
    int first_child(int node) const { return first_child_[node]; }
    int child_count(int node) const { return child_count_[node]; }

    // Unconditional probability of the atom `node`.
    double prob(int node) const { return prob_[node]; }
    // Transition probability / noise increment of the edge into `node`.
    // Undefined for the root.
    double edge_prob(int node) const { return edge_prob_[node]; }
    double edge_dw(int node) const { return edge_dw_[node]; }

    // Contiguous id range [level_begin(t), level_end(t)) of time-t nodes.
    int level_begin(int t) const { return level_begin_[t]; }
    int level_end(int t) const { return level_begin_[t + 1]; }

    // Leaf-index range [leaf_lo, leaf_hi) of the sample points in atom
    // `node`; leaf index i corresponds to node id leaf_node(i).
    int leaf_lo(int node) const { return leaf_lo_[node]; }
    int leaf_hi(int node) const { return leaf_hi_[node]; }
    int leaf_node(int leaf_index) const { return level_begin(steps_) + leaf_index; }
    int leaf_index(int node) const { return node - level_begin(steps_); }

    // Conditional expectation E[X | atom]: the probability-weighted
    // average of `leaf_values` (indexed by leaf index) over the atom.
    double cond_exp_on_atom(const std::vector<double>& leaf_values, int node) const;

private:
    friend FiniteFilteredSpace build_space(const TreeSpec& spec);

    FiniteFilteredSpace() = default;

    int steps_ = 0;
    double dt_ = 1.0;
    std::vector<int> time_, parent_, first_child_, child_count_;
    std::vector<double> edge_prob_, edge_dw_, prob_;
    std::vector<int> level_begin_;
    std::vector<int> leaf_lo_, leaf_hi_;
};

// Checks a raw tree description against the space invariants:
// strictly positive one-step probabilities, unit probability mass out of
// every non-terminal node, centered noise increments out of every
// non-terminal node, and structural consistency (positive step count,
// branch lists matching the generated node set). Returns one entry per
// violation; an empty report means build_space will succeed.
std::vector<SpaceViolation> validate_space(const TreeSpec& spec);

// Constructs the space, throwing ValidationError with the first
// violation's code ("NonPositiveProbability", "ProbabilitySumMismatch",
// "NoiseNotCentered", "BadTreeShape") if the description is invalid.
FiniteFilteredSpace build_space(const TreeSpec& spec);

// Recombining-style symmetric binomial description: every non-terminal
// node has two children with probability 1/2 and noise increments
// +sqrt(dt) / -sqrt(dt). (The tree itself is non-recombining; only the
// increments are.)
TreeSpec binomial_spec(int steps, double dt);
FiniteFilteredSpace binomial_space(int steps, double dt);

// One-step conditional expectation E[X_{t+1} | F_t].
//
// `values` is a full node-indexed array whose entries at time t+1 are
// read; the result is a full node-indexed array whose entries at time t
// are written (all other entries are zero). Throws ValidationError
// ("MissingNodeValue") if `values` has the wrong size or a required entry
// is NaN.
std::vector<double> cond_exp_one_step(const FiniteFilteredSpace& space, int t,
                                      const std::vector<double>& values);

// E[X | F] for every node at once: entry n of the result is the
// conditional expectation of the leaf-indexed payoff given the atom n.
// Terminal entries reproduce the payoff itself.
std::vector<double> leaf_conditionals(const FiniteFilteredSpace& space,
                                      const std::vector<double>& leaf_values);

// Expectation of a leaf-indexed payoff.
double expectation(const FiniteFilteredSpace& space,
                   const std::vector<double>& leaf_values);

} // namespace snellforge
