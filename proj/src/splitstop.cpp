#include "snellforge/splitstop.hpp"

#include "snellforge/errors.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace snellforge {

namespace {

std::string node_tag(int node) { return "node " + std::to_string(node); }

// Per-leaf order predicates. ge: tau_a >= tau_b on every path, and on
// paths with equal times a's pre mark implies b's (reading "just before"
// is the earlier of the two readings at equal times, so the later time
// may keep the mark only where the earlier one has it).
bool leafwise_ge(const SplitStoppingTime& a, const SplitStoppingTime& b) {
    const auto& space = a.space();
    for (int i = 0; i < space.leaf_count(); ++i) {
        const int ta = a.tau_of_leaf(i);
        const int tb = b.tau_of_leaf(i);
        if (ta < tb) return false;
        if (ta == tb && a.pre_at_leaf(i) && !b.pre_at_leaf(i)) return false;
    }
    return true;
}

// Strictly later: a time gap wherever b stops before the horizon. Where b
// already sits at the horizon no gap is possible; a must be there too and
// may only keep the pre mark where b has it, so the at reading stays the
// strict successor of the pre reading and of itself.
bool leafwise_gt(const SplitStoppingTime& a, const SplitStoppingTime& b) {
    const auto& space = a.space();
    const int horizon = space.steps();
    for (int i = 0; i < space.leaf_count(); ++i) {
        const int ta = a.tau_of_leaf(i);
        const int tb = b.tau_of_leaf(i);
        if (tb < horizon) {
            if (ta <= tb) return false;
        } else {
            if (ta < horizon) return false;
            if (a.pre_at_leaf(i) && !b.pre_at_leaf(i)) return false;
        }
    }
    return true;
}

void require_same_space(const SplitStoppingTime& a, const SplitStoppingTime& b) {
    if (!a.same_space_as(b)) {
        throw ValidationError("SpaceMismatch",
                              "split stopping times live on different spaces");
    }
}

} // namespace

SplitStoppingTime::SplitStoppingTime(const FiniteFilteredSpace& space,
                                     std::vector<char> stop, std::vector<char> h,
                                     bool trusted)
    : space_(&space), stop_(std::move(stop)), h_(std::move(h)) {
    if (!trusted) {
        const int n = space.node_count();
        if (static_cast<int>(stop_.size()) != n || static_cast<int>(h_.size()) != n) {
            throw ValidationError("SpaceMismatch",
                                  "mask size does not match the node count");
        }
        // Every root-to-leaf path must contain exactly one stop node.
        for (int i = 0; i < space.leaf_count(); ++i) {
            int hits = 0;
            for (int node = space.leaf_node(i); node >= 0; node = space.parent_of(node)) {
                hits += stop_[node] != 0;
            }
            if (hits != 1) {
                throw ValidationError(
                    "NotAStoppingTime",
                    "path to leaf " + std::to_string(i) + " contains " +
                        std::to_string(hits) + " stop nodes");
            }
        }
        for (int node = 0; node < n; ++node) {
            if (h_[node] && !stop_[node]) {
                throw ValidationError("HOutsideStopSet",
                                      node_tag(node) + " is pre-marked but not a stop node");
            }
        }
        // A pre mark at time t must be F_{t-1}-measurable: full sibling
        // blocks only. The root is its own block since F_{0-} = F_0.
        for (int node = 1; node < n; ++node) {
            if (!h_[node]) continue;
            const int p = space.parent_of(node);
            const int c0 = space.first_child(p);
            for (int c = c0; c < c0 + space.child_count(p); ++c) {
                if (!stop_[c] || !h_[c]) {
                    throw ValidationError(
                        "HNotPredictable",
                        "pre mark at " + node_tag(node) + " splits the sibling block of " +
                            node_tag(p));
                }
            }
        }
    }
    finalize();
}

void SplitStoppingTime::finalize() {
    const auto& space = *space_;
    leaf_stop_.assign(space.leaf_count(), -1);
    leaf_pre_.assign(space.leaf_count(), 0);
    for (int i = 0; i < space.leaf_count(); ++i) {
        for (int node = space.leaf_node(i); node >= 0; node = space.parent_of(node)) {
            if (stop_[node]) {
                leaf_stop_[i] = node;
                leaf_pre_[i] = h_[node];
                break;
            }
        }
    }
}

SplitStoppingTime SplitStoppingTime::make(const FiniteFilteredSpace& space,
                                          std::vector<char> stop, std::vector<char> h) {
    return SplitStoppingTime(space, std::move(stop), std::move(h), false);
}

int SplitStoppingTime::tau_of_leaf(int leaf) const {
    return space_->time_of(leaf_stop_[leaf]);
}

std::vector<int> SplitStoppingTime::stop_nodes() const {
    std::vector<int> out;
    for (int node = 0; node < space_->node_count(); ++node) {
        if (stop_[node]) out.push_back(node);
    }
    return out;
}

std::vector<int> SplitStoppingTime::pre_nodes() const {
    std::vector<int> out;
    for (int node = 0; node < space_->node_count(); ++node) {
        if (h_[node]) out.push_back(node);
    }
    return out;
}

std::vector<FDeltaAtom> atoms_of(const SplitStoppingTime& sst) {
    const auto& space = sst.space();
    std::vector<FDeltaAtom> atoms;

    if (sst.stops_at(0) && sst.in_h(0)) {
        atoms.push_back({0, true, 0, 0, space.leaf_count(), 1.0});
        return atoms;
    }
    // Pre blocks: parents whose children are all pre-marked stops (the
    // validator guarantees all-or-nothing per block, so testing the first
    // child suffices).
    for (int p = 0; p < space.level_begin(space.steps()); ++p) {
        const int c0 = space.first_child(p);
        if (c0 >= 0 && sst.stops_at(c0) && sst.in_h(c0)) {
            atoms.push_back({c0, true, p, space.leaf_lo(p), space.leaf_hi(p), space.prob(p)});
        }
    }
    // Plain stops read on the at channel.
    for (int node = 0; node < space.node_count(); ++node) {
        if (sst.stops_at(node) && !sst.in_h(node)) {
            atoms.push_back({node, false, -1, space.leaf_lo(node), space.leaf_hi(node),
                             space.prob(node)});
        }
    }
    std::sort(atoms.begin(), atoms.end(),
              [](const FDeltaAtom& a, const FDeltaAtom& b) { return a.leaf_lo < b.leaf_lo; });
    return atoms;
}

bool split_le(const SplitStoppingTime& a, const SplitStoppingTime& b) {
    require_same_space(a, b);
    return leafwise_ge(b, a);
}

bool split_lt(const SplitStoppingTime& a, const SplitStoppingTime& b) {
    require_same_space(a, b);
    return leafwise_gt(b, a);
}

Relation compare(const SplitStoppingTime& first, const SplitStoppingTime& second) {
    require_same_space(first, second);
    const bool ge = leafwise_ge(first, second);
    const bool le = leafwise_ge(second, first);
    if (ge && le) return Relation::Equal;
    if (ge) return leafwise_gt(first, second) ? Relation::Greater : Relation::GreaterOrEqual;
    if (le) return leafwise_gt(second, first) ? Relation::Less : Relation::LessOrEqual;
    return Relation::Incomparable;
}

SplitStoppingTime terminal_split(const FiniteFilteredSpace& space, TerminalKind kind) {
    std::vector<char> stop(space.node_count(), 0);
    std::vector<char> h(space.node_count(), 0);
    for (int node = space.level_begin(space.steps()); node < space.level_end(space.steps());
         ++node) {
        stop[node] = 1;
        h[node] = kind == TerminalKind::Omega ? 1 : 0;
    }
    return SplitStoppingTime::make(space, std::move(stop), std::move(h));
}

SplitStoppingTime lift(const FiniteFilteredSpace& space, const std::vector<char>& stop,
                       LiftMode mode) {
    std::vector<char> h(space.node_count(), 0);
    if (mode == LiftMode::Predictable) {
        if (static_cast<int>(stop.size()) != space.node_count()) {
            throw ValidationError("SpaceMismatch", "stop mask size does not match the space");
        }
        for (int node = 1; node < space.node_count(); ++node) {
            if (!stop[node]) continue;
            const int p = space.parent_of(node);
            const int c0 = space.first_child(p);
            for (int c = c0; c < c0 + space.child_count(p); ++c) {
                if (!stop[c]) {
                    throw ValidationError(
                        "NotPredictable",
                        "stop set is not predictable: sibling " + node_tag(c) +
                            " of stop " + node_tag(node) + " does not stop");
                }
            }
        }
        h = stop;
    }
    return SplitStoppingTime::make(space, stop, std::move(h));
}

namespace {

constexpr std::uint64_t kCountClamp = std::uint64_t{1} << 62;

std::uint64_t clamped_mul(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > kCountClamp / a) return kCountClamp;
    return a * b;
}

std::uint64_t subtree_count(const FiniteFilteredSpace& space, int node) {
    if (space.time_of(node) == space.steps()) return 1;
    std::uint64_t prod = 1;
    const int c0 = space.first_child(node);
    for (int c = c0; c < c0 + space.child_count(node); ++c) {
        prod = clamped_mul(prod, subtree_count(space, c));
    }
    return prod >= kCountClamp - 2 ? kCountClamp : prod + 2;
}

struct Behavior {
    std::vector<int> stops;
    std::vector<int> marks;
};

// All split-stopping behaviors on the subtree of `node`: stop at the node
// itself (mark ownership belongs to the parent's block), any product of
// child behaviors, and the all-children-stop variant with the block
// pre-marked.
std::vector<Behavior> subtree_behaviors(const FiniteFilteredSpace& space, int node) {
    std::vector<Behavior> out;
    out.push_back({{node}, {}});
    if (space.time_of(node) == space.steps()) return out;

    const int c0 = space.first_child(node);
    const int nc = space.child_count(node);
    std::vector<std::vector<Behavior>> child(nc);
    for (int k = 0; k < nc; ++k) child[k] = subtree_behaviors(space, c0 + k);

    std::vector<Behavior> combos = {{{}, {}}};
    for (int k = 0; k < nc; ++k) {
        std::vector<Behavior> next;
        next.reserve(combos.size() * child[k].size());
        for (const auto& base : combos) {
            for (const auto& ext : child[k]) {
                Behavior merged = base;
                merged.stops.insert(merged.stops.end(), ext.stops.begin(), ext.stops.end());
                merged.marks.insert(merged.marks.end(), ext.marks.begin(), ext.marks.end());
                next.push_back(std::move(merged));
            }
        }
        combos = std::move(next);
    }
    for (auto& b : combos) out.push_back(std::move(b));

    Behavior block;
    for (int c = c0; c < c0 + nc; ++c) {
        block.stops.push_back(c);
        block.marks.push_back(c);
    }
    out.push_back(std::move(block));
    return out;
}

} // namespace

std::uint64_t split_count(const FiniteFilteredSpace& space) {
    std::uint64_t prod = 1;
    const int c0 = space.first_child(0);
    if (space.steps() == 0 || c0 < 0) return 2;
    for (int c = c0; c < c0 + space.child_count(0); ++c) {
        prod = clamped_mul(prod, subtree_count(space, c));
    }
    return prod >= kCountClamp - 3 ? kCountClamp : prod + 3;
}

std::vector<SplitStoppingTime> enumerate_splits_impl(const FiniteFilteredSpace& space,
                                                     const SplitStoppingTime* ref, int mode,
                                                     std::uint64_t cap) {
    const std::uint64_t count = split_count(space);
    if (count > cap) {
        throw ValidationError("EnumerationCapExceeded",
                              "space admits " +
                                  (count >= kCountClamp ? std::string("more than 2^62")
                                                        : std::to_string(count)) +
                                  " split stopping times, cap is " + std::to_string(cap));
    }

    std::vector<Behavior> behaviors = subtree_behaviors(space, 0);
    // The root's own stop may additionally carry the pre mark: F_{0-} is
    // the trivial field, so both readings are admissible there.
    behaviors.push_back({{0}, {0}});

    std::vector<SplitStoppingTime> out;
    out.reserve(behaviors.size());
    for (const auto& b : behaviors) {
        std::vector<char> stop(space.node_count(), 0);
        std::vector<char> h(space.node_count(), 0);
        for (int n : b.stops) stop[n] = 1;
        for (int n : b.marks) h[n] = 1;
        SplitStoppingTime cand(space, std::move(stop), std::move(h), true);
        if (ref != nullptr) {
            if (mode > 0 && !leafwise_gt(cand, *ref)) continue;
            if (mode == 0 && !leafwise_ge(cand, *ref)) continue;
        }
        out.push_back(std::move(cand));
    }
    std::sort(out.begin(), out.end(),
              [](const SplitStoppingTime& a, const SplitStoppingTime& b) {
                  if (a.stop_mask() != b.stop_mask()) return a.stop_mask() < b.stop_mask();
                  return a.h_mask() < b.h_mask();
              });
    return out;
}

std::vector<SplitStoppingTime> enumerate_splits(const FiniteFilteredSpace& space,
                                                std::uint64_t cap) {
    return enumerate_splits_impl(space, nullptr, -1, cap);
}

std::vector<SplitStoppingTime> enumerate_splits_geq(const FiniteFilteredSpace& space,
                                                    const SplitStoppingTime& ref,
                                                    std::uint64_t cap) {
    return enumerate_splits_impl(space, &ref, 0, cap);
}

std::vector<SplitStoppingTime> enumerate_splits_gt(const FiniteFilteredSpace& space,
                                                   const SplitStoppingTime& ref,
                                                   std::uint64_t cap) {
    return enumerate_splits_impl(space, &ref, 1, cap);
}

SplitStoppingTime glue(const SplitStoppingTime& delta, const std::vector<char>& atom_mask,
                       const SplitStoppingTime& rho1, const SplitStoppingTime& rho2) {
    require_same_space(delta, rho1);
    require_same_space(delta, rho2);
    const auto& space = delta.space();
    if (static_cast<int>(atom_mask.size()) != space.leaf_count()) {
        throw ValidationError("SpaceMismatch", "atom mask size does not match the leaf count");
    }
    if (!split_le(delta, rho1) || !split_le(delta, rho2)) {
        throw ValidationError("GlueOperandsNotLater",
                              "glue requires both operands >= the observation time");
    }
    for (const auto& atom : atoms_of(delta)) {
        for (int i = atom.leaf_lo + 1; i < atom.leaf_hi; ++i) {
            if (atom_mask[i] != atom_mask[atom.leaf_lo]) {
                throw ValidationError("NotFDeltaMeasurable",
                                      "selection set splits the observation atom at leaf " +
                                          std::to_string(i));
            }
        }
    }
    std::vector<char> stop(space.node_count(), 0);
    std::vector<char> h(space.node_count(), 0);
    for (int i = 0; i < space.leaf_count(); ++i) {
        const SplitStoppingTime& src = atom_mask[i] ? rho1 : rho2;
        const int node = src.stop_node_of_leaf(i);
        stop[node] = 1;
        if (src.pre_at_leaf(i)) h[node] = 1;
    }
    return SplitStoppingTime::make(space, std::move(stop), std::move(h));
}

} // namespace snellforge
