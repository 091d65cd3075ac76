#pragma once

#include "snellforge/probspace.hpp"

#include <vector>

namespace snellforge {

// Predictable representation of a martingale-difference family against
// the driving noise: dM = Z dW + dN with E[dN dW | F_t] = 0.
// z is indexed by the conditioning node (time < N), ortho by the node the
// increment arrives at (time >= 1).
struct MartingaleParts {
    std::vector<double> z;
    std::vector<double> ortho;
};

// increments[c] = M_c - M_parent(c); increments[root] must be 0 and each
// family must be conditionally centered, else
// ValidationError("NotAMartingale"). Nodes whose outgoing noise is
// degenerate (E[dW^2|F_t] = 0) get z = 0 and route everything to the
// orthogonal part.
MartingaleParts orthogonal_decompose(const FiniteFilteredSpace& space,
                                     const std::vector<double>& increments);

} // namespace snellforge
