#pragma once

#include "fiberplan/extraction.hpp"
#include "fiberplan/planner.hpp"

namespace fiberplan {

// Geometry-only concentric rings: ring k sits d_min + (k - 0.5) * w_fiber
// from its wall. Each ring comes back as a closed FiberPath (last
// vertex repeats the first). Throws when every ring collapses.
FiberLayout concentric(const Domain& domain, OffsetSide side, int n_rings, double d_min,
                       double w_fiber);

// Regular lattice of unit orientation vectors over the domain.
struct OrientationField {
    Point2 origin;
    double spacing{1.0};
    int nx{0}, ny{0};
    std::vector<int> cell_of_node;   // nx*ny -> vector index or -1 (outside)
    std::vector<int> nearest_cell;   // nx*ny -> nearest in-domain vector index
    std::vector<Point2> centers;     // per vector
    std::vector<Point2> vectors;     // per vector; unit after optimization

    int index_at(Point2 p) const {
        const int i = std::clamp(static_cast<int>(std::floor((p.x - origin.x) / spacing)), 0, nx - 1);
        const int j = std::clamp(static_cast<int>(std::floor((p.y - origin.y) / spacing)), 0, ny - 1);
        return nearest_cell[static_cast<std::size_t>(j) * nx + i];
    }
    Point2 direction_at(Point2 p) const { return vectors[index_at(p)]; }
};

struct FieldWeights {
    double alpha_stress{1.0};
    double alpha_smooth{0.02};
};

// Builds the lattice over the domain bounding box; cells whose center
// lies inside the material carry a vector, initialized to the walk
// direction of the supplied per-cell stress.
OrientationField make_orientation_field(const Domain& domain, double spacing,
                                        const std::function<StressTensor2(Point2)>& stress_at);

// Alignment term: negative tension along the field direction,
// integrated over the cells.
double field_stress_term(const OrientationField& field, const std::vector<StressTensor2>& stress);

// Flip-invariant smoothness: forward differences to the +x and +y
// neighbors with the smaller of the two sign choices.
double field_smooth_term(const OrientationField& field);

// Minimizes alpha_stress * stress + alpha_smooth * smooth over the raw
// vectors (normalization inside the objective); quasi-Newton, 100
// iterations, gradient tolerance 1e-6. Returns the normalized field.
OrientationField optimize_field(OrientationField field, const std::vector<StressTensor2>& stress,
                                const FieldWeights& weights);

// Greedy baseline: the plan loop with all optimization skipped.
FiberLayout greedy_only(const Evaluator& evaluator, const PlanConfig& cfg);

// Field-smoothing baseline: per extracted path, optimize an orientation
// field on the current plastic-stress field and walk it (start sampling
// still uses the raw stress weights). With alpha_smooth == 0 the field
// optimum is the raw walk-direction field itself, so the walker reads
// directions at element granularity and reproduces the greedy baseline
// exactly.
FiberLayout field_opt_greedy(const Evaluator& evaluator, const PlanConfig& cfg,
                             const FieldWeights& weights, double field_spacing = 1.0);

} // namespace fiberplan
