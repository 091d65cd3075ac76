#pragma once

#include "snellforge/scenario.hpp"

#include <cstdint>
#include <random>

namespace snellforge {

// Deterministic uniform source. Draws take the top 53 bits of an
// mt19937_64 word and scale explicitly, so streams reproduce bit-for-bit
// across standard libraries.
class RandomSource {
  public:
    explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Inclusive bounds.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(uniform01() * static_cast<double>(hi - lo + 1));
    }

    std::uint64_t raw() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

// Random admissible scenario document: irregular tree within the
// branching cap, obstacles uniform in [-5,5] with a nonnegative gap to
// the upper one, equal values on the horizon channel, centered noise,
// and a randomly chosen driver kind. Identical arguments give identical
// documents. Throws ValidationError("CapExceeded") for steps > 5 or
// branching > 3 (enumeration oracles stop being feasible beyond that).
OrderedJson gen_scenario_json(int steps, int branching, std::uint64_t seed);

} // namespace snellforge
