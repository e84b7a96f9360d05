#pragma once

#include "fiberplan/material.hpp"

namespace fiberplan {

// Doubles the resolution of a path: fits an interpolating cubic
// B-spline through the vertices (chord-length parameterization, clamped
// knot vector) and emits the original vertices plus one sample at each
// parameter midpoint, giving 2n-1 vertices with endpoints preserved
// exactly. Paths with fewer than 4 vertices fall back to linear
// midpoints.
FiberPath upsample(const FiberPath& path);

} // namespace fiberplan
