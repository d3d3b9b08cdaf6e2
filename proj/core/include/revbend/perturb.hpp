#pragma once

#include <optional>
#include <utility>

#include "revbend/capseg.hpp"
#include "revbend/profile.hpp"

namespace revbend {

// Smallest |theta| in the deterministic ladder {0, +-theta_max/50, ...}
// whose rotation is Morse and keeps the trace inside box intersect {x > 0}.
std::pair<ProfileCurve, PerturbationStep> rotate_to_morse(
    const ProfileCurve& curve, const SupportBox& box, double theta_max);

// Tunables for the pocket family construction. `concavity` is the curvature
// scale of the flattened quadratic f0; `shape` weights the interior
// convexity of f1 relative to it (larger = more oscillation per unit
// displacement, so smaller admissible mode numbers).
struct PocketParams {
  double concavity = 1.0;
  double shape = 50.0;
  int grid = 512;
};

// Replace every critical point by an exact parabola cap with C^2 blends and
// re-fit the monotone arcs as graphs x = R(z). The critical-point census
// (count and index sequence) is preserved; a failure to do so is an error,
// not a degraded result.
CapSegmentProfile cap_critical_points(
    const ProfileCurve& curve, double delta1_fraction, double delta2_fraction,
    std::optional<SupportBox> box = std::nullopt);

// Install the concave -> concave/convex/concave family R_t on a segment.
// The window [z0 - 3 delta2, z0 + 3 delta2] must sit strictly inside the
// segment's graph region. Returns a new profile; the input is not modified.
CapSegmentProfile insert_pocket(const CapSegmentProfile& profile,
                                int seg_index, double z0, double delta2,
                                double t, const PocketParams& params = {});

// Default pocket half-scale for a segment (delta2_fraction of its z-span).
double default_pocket_delta2(const CapSegmentProfile& profile, int seg_index,
                             double delta2_fraction);

}  // namespace revbend
