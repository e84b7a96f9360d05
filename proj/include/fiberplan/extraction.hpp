#pragma once

#include "fiberplan/fem.hpp"
#include "fiberplan/geometry.hpp"
#include "fiberplan/material.hpp"
#include "fiberplan/objective.hpp"
#include "fiberplan/rng.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace fiberplan {

struct WalkConfig {
    double step{0.5};               // mm per walk step
    double clearance{1.3};          // mm to the domain boundary
    int max_retries{19};            // random-rotation retries per step
    double rotation_range{M_PI / 12.0};
    double max_length{400.0};       // mm, total walk length cap
    int restarts{10};               // weighted-random starting points
    int downsample_keep{20};        // keep 1 of every k vertices
    std::uint64_t rng_seed{0};

    void validate() const {
        if (step <= 0 || clearance < 0 || restarts < 1 || downsample_keep < 1 ||
            max_retries < 0 || max_length <= 0)
            throw Error("invalid walk configuration");
    }
};

// Dominant eigenvalue (largest magnitude, ties toward tension) and the
// direction to lay fiber along: the eigenvector itself under tension,
// its perpendicular under compression.
struct Principal {
    double lambda{0.0};
    Point2 walk_dir{1.0, 0.0}; // unit
};
Principal principal(const StressTensor2& st);

// Point-in-triangle element lookup over a uniform bin grid; nearest
// centroid fallback keeps queries total.
class ElementLocator {
public:
    explicit ElementLocator(const Mesh& mesh);
    std::size_t locate(Point2 p) const;

private:
    const Mesh* mesh_;
    Point2 origin_;
    double cell_{1.0};
    int nx_{0}, ny_{0};
    std::vector<std::vector<int>> bins_;
};

// Unnormalized fiber direction at a point; the walker sign-aligns it.
using DirectionProvider = std::function<Point2(Point2)>;

// Directions from the per-element stress field (piecewise constant).
DirectionProvider stress_direction_provider(const Mesh& mesh, const ElementLocator& locator,
                                            std::vector<StressTensor2> field);

// |lambda| * area per element, zeroed inside the clearance band. All
// weights zero falls back to uniform over the admissible elements.
std::vector<double> sampling_weights(const Mesh& mesh, const Domain& domain,
                                     const std::vector<StressTensor2>& plastic_stress,
                                     double clearance);

// Draws an element index proportional to the weights.
std::size_t sample_element(const std::vector<double>& weights, Rng& rng);

// Grows a path from `start` in both directions along the provider
// field. Steps that exit the clearance region retry with a uniform
// random rotation; a direction dies when retries are exhausted; the
// walk ends when both directions are dead or the length cap is hit.
FiberPath walk(const DirectionProvider& dir, const Domain& domain, const WalkConfig& cfg,
               Point2 start, Rng& rng);

// Keeps every keep-th vertex plus both endpoints.
FiberPath downsample(const FiberPath& path, int keep);

struct ExtractionResult {
    FiberPath path;        // downsampled, best-subsequence-selected
    FiberPath raw_walk;    // the winning restart's full walk
    double objective{0.0}; // objective with the path appended
};

// One round of greedy extraction against the current layout: `restarts`
// weighted-sampled walks, each downsampled and subsequence-trimmed; the
// objective-minimizing candidate wins (ties to the earlier restart).
// The direction provider defaults to the plastic-stress field averaged
// over load cases; field-based baselines pass their own.
ExtractionResult extract_candidate(const Evaluator& evaluator, const FiberLayout& layout,
                                   const WalkConfig& cfg, Rng& rng,
                                   const DirectionProvider* dir_override = nullptr,
                                   const std::vector<StressTensor2>* stress_override = nullptr);

} // namespace fiberplan
