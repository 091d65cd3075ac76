#pragma once

#include "snellforge/probspace.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace snellforge {

// Which terminal time the horizon uses: (empty, T) reads the terminal
// payoff itself, (omega, T) reads the left limit just before T.
enum class TerminalKind { Empty, Omega };

// A split stopping time (H, tau) on the tree.
//
// `stop` marks the nodes where tau stops; on every root-to-leaf path
// exactly one marked node appears. `h` marks the stop nodes whose payoff
// is read from the pre channel ("stop just before tau") instead of the at
// channel. Because the pre channel at time t is measurable with respect
// to F_{t-1}, H has to be a union of full sibling blocks: either every
// child of a parent is a marked pre-stop or none is. At the root,
// F_{0-} = F_0 is trivial, so the root can carry the pre mark on its own.
//
// Instances keep a pointer to the space they were built on; operations
// that combine two objects use it to reject cross-space mixes.
class SplitStoppingTime {
public:
    // Validating constructor. Throws ValidationError with code
    //   NotAStoppingTime  - stop set does not hit every path exactly once
    //   HOutsideStopSet   - h marks a node that is not a stop node
    //   HNotPredictable   - h splits a sibling block
    static SplitStoppingTime make(const FiniteFilteredSpace& space,
                                  std::vector<char> stop, std::vector<char> h);

    const FiniteFilteredSpace& space() const { return *space_; }
    const std::vector<char>& stop_mask() const { return stop_; }
    const std::vector<char>& h_mask() const { return h_; }

    bool stops_at(int node) const { return stop_[node] != 0; }
    bool in_h(int node) const { return h_[node] != 0; }

    // Per sample point: the node where the path stops, its time, and
    // whether the payoff is read on the pre channel there.
    int stop_node_of_leaf(int leaf) const { return leaf_stop_[leaf]; }
    int tau_of_leaf(int leaf) const;
    bool pre_at_leaf(int leaf) const { return leaf_pre_[leaf] != 0; }

    std::vector<int> stop_nodes() const;
    std::vector<int> pre_nodes() const;

    bool same_space_as(const SplitStoppingTime& other) const {
        return space_ == other.space_;
    }

private:
    friend std::vector<SplitStoppingTime> enumerate_splits_impl(
        const FiniteFilteredSpace&, const SplitStoppingTime*, int, std::uint64_t);

    SplitStoppingTime(const FiniteFilteredSpace& space, std::vector<char> stop,
                      std::vector<char> h, bool trusted);

    void finalize();

    const FiniteFilteredSpace* space_ = nullptr;
    std::vector<char> stop_, h_;
    std::vector<int> leaf_stop_;
    std::vector<char> leaf_pre_;
};

// An atom of the observation field F_delta of a split stopping time.
// When `pre_channel` is set, the atom is a full sibling block (spanned by
// `block_parent`) on which the payoff is the pre value at `rep_node`, a
// child of that block (at the root, rep_node == block_parent == 0).
// Otherwise the atom is the single stop node `rep_node` read on the at
// channel. `leaf_lo`/`leaf_hi` give the covered sample points, and the
// atoms of one split stopping time partition the leaf range.
struct FDeltaAtom {
    int rep_node = -1;
    bool pre_channel = false;
    int block_parent = -1;
    int leaf_lo = 0;
    int leaf_hi = 0;
    double prob = 0.0;
};

std::vector<FDeltaAtom> atoms_of(const SplitStoppingTime& sst);

// Ordering of split stopping times. a >= b requires tau_a >= tau_b on
// every path, and on paths where the times agree the pre mark of a must
// imply the pre mark of b (stopping "just before" is the later of the
// two readings at equal times). Strictly later additionally requires
// tau_a > tau_b wherever b stops before the horizon; at the horizon a
// strict step is possible only through the pre mark.
enum class Relation { Equal, Less, LessOrEqual, Greater, GreaterOrEqual, Incomparable };

// Relation of `first` to `second` (Greater means first > second, like a
// three-way compare). Throws ValidationError("SpaceMismatch") when the
// operands live on different spaces.
Relation compare(const SplitStoppingTime& first, const SplitStoppingTime& second);

bool split_le(const SplitStoppingTime& a, const SplitStoppingTime& b); // a <= b
bool split_lt(const SplitStoppingTime& a, const SplitStoppingTime& b); // a <  b

// The two horizon times rho^T = (empty, T) and (omega, T).
SplitStoppingTime terminal_split(const FiniteFilteredSpace& space, TerminalKind kind);

// Lift an ordinary stopping time (given by its stop mask) to a split
// stopping time: H = empty set for the optional reading, H = everything
// (all stop nodes pre-marked) for the predictable reading. The
// predictable mode throws ValidationError("NotPredictable") when some
// stop node's sibling is not a stop node, since the pre mark cannot cover
// a partial block.
enum class LiftMode { Optional, Predictable };
SplitStoppingTime lift(const FiniteFilteredSpace& space, const std::vector<char>& stop,
                       LiftMode mode);

// Number of split stopping times on the space, computed without
// enumeration: a leaf admits only the plain stop, an internal node n
// admits stop-at-n, pre-stop-at-n's children as a block, or any product
// of choices below, giving S(n) = 2 + prod_c S(c) with the root adding
// its own pre mark as a third global option.
std::uint64_t split_count(const FiniteFilteredSpace& space);

constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

// All split stopping times on the space, optionally restricted to those
// >= ref or > ref, in a deterministic order (lexicographic in the stop
// mask, then in the h mask). Throws
// ValidationError("EnumerationCapExceeded") when split_count exceeds the
// cap, before any materialisation.
std::vector<SplitStoppingTime> enumerate_splits(const FiniteFilteredSpace& space,
                                                std::uint64_t cap = kDefaultEnumerationCap);
std::vector<SplitStoppingTime> enumerate_splits_geq(const FiniteFilteredSpace& space,
                                                    const SplitStoppingTime& ref,
                                                    std::uint64_t cap = kDefaultEnumerationCap);
std::vector<SplitStoppingTime> enumerate_splits_gt(const FiniteFilteredSpace& space,
                                                   const SplitStoppingTime& ref,
                                                   std::uint64_t cap = kDefaultEnumerationCap);

// Glue a measurable selection: on the atoms of F_delta inside `mask`
// take rho1, elsewhere rho2. `mask` is leaf-indexed and must be a union
// of F_delta atoms (checked). The glued object is validated like any
// other split stopping time.
SplitStoppingTime glue(const SplitStoppingTime& delta, const std::vector<char>& atom_mask,
                       const SplitStoppingTime& rho1, const SplitStoppingTime& rho2);

} // namespace snellforge
