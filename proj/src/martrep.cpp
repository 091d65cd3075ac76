#include "snellforge/martrep.hpp"

#include "snellforge/errors.hpp"

#include <cmath>
#include <string>

namespace snellforge {

namespace {
constexpr double kCenteredTolerance = 1e-9;
}

MartingaleParts orthogonal_decompose(const FiniteFilteredSpace& space,
                                     const std::vector<double>& increments) {
    if (static_cast<int>(increments.size()) != space.node_count()) {
        throw ValidationError("NotAMartingale",
                              "increment array does not match the node count");
    }
    if (increments[0] != 0.0) {
        throw ValidationError("NotAMartingale", "martingale increments must start at 0");
    }
    MartingaleParts parts;
    parts.z.assign(space.node_count(), 0.0);
    parts.ortho.assign(space.node_count(), 0.0);

    for (int node = 0; node < space.level_begin(space.steps()); ++node) {
        const int c0 = space.first_child(node);
        double mean = 0.0, cov = 0.0, var = 0.0;
        for (int c = c0; c < c0 + space.child_count(node); ++c) {
            mean += space.edge_prob(c) * increments[c];
            cov += space.edge_prob(c) * increments[c] * space.edge_dw(c);
            var += space.edge_prob(c) * space.edge_dw(c) * space.edge_dw(c);
        }
        if (std::fabs(mean) > kCenteredTolerance) {
            throw ValidationError("NotAMartingale",
                                  "increments out of node " + std::to_string(node) +
                                      " have conditional mean " + std::to_string(mean));
        }
        const double z = var > 0.0 ? cov / var : 0.0;
        parts.z[node] = z;
        if (var > 0.0 && space.child_count(node) == 2) {
            // A centered two-point noise spans the one-dimensional space of
            // centered two-point increments, so the orthogonal part is
            // identically zero; computing it as a difference would leave
            // rounding dust behind.
            continue;
        }
        for (int c = c0; c < c0 + space.child_count(node); ++c) {
            parts.ortho[c] = increments[c] - z * space.edge_dw(c);
        }
    }
    return parts;
}

} // namespace snellforge
