#pragma once

#include "fiberplan/bfgs.hpp"
#include "fiberplan/extraction.hpp"
#include "fiberplan/objective.hpp"
#include "fiberplan/spline.hpp"

#include <string>
#include <vector>

namespace fiberplan {

struct PlanConfig {
    int n_paths{1};
    int max_iterations{500};            // optimizer budget in the extraction loop
    int per_round_iterations{100};      // optimizer budget per upsample round
    double gradient_tolerance{3e-9};    // infinity norm
    int upsample_rounds{1};
    // Infinity-norm bound on vertex motion per accepted optimizer
    // iterate, in mm; 0 picks half the fiber width. Keeps the search in
    // the smooth local regime around the greedy initialization.
    double max_vertex_step{0.0};
    WalkConfig walk;
    std::uint64_t rng_seed{0};

    void validate() const {
        if (n_paths < 0 || max_iterations < 0 || per_round_iterations < 0 || upsample_rounds < 0)
            throw Error("plan configuration counts must be non-negative");
        if (gradient_tolerance <= 0) throw Error("gradient tolerance must be positive");
        walk.validate();
    }
};

struct StageTiming {
    std::string stage;
    double seconds{0.0};
};

// Child-seed stream base for extraction rounds; shared with the
// baselines so equal scenario seeds draw equal walks.
inline constexpr std::uint64_t kExtractionStreamBase = 1000;

struct PlanReport {
    FiberLayout layout;
    std::vector<double> energy_per_case; // N*mm at the prescribed displacement
    double mean_energy{0.0};
    double equivalent_stiffness{0.0};    // N/mm; 2 * mean energy at 1 mm relative displacement
    double fiber_length{0.0};
    std::vector<std::vector<double>> objective_traces; // one per optimization
    std::vector<StageTiming> timings;
    double total_seconds{0.0};
    // Per extraction round: the winning raw walk and the layout right
    // after appending the selected candidate (before optimization).
    std::vector<FiberPath> raw_walks;
    std::vector<FiberLayout> pre_optimization_layouts;
    bool line_search_failure{false};
    bool extraction_failure{false};
};

// BFGS pass over every vertex coordinate, then (in the extraction loop)
// a best-subsequence re-selection of each path in turn. The
// coarse-to-fine rounds pass with_subsequence = false; plan() enforces
// the walk's max_length budget once at the end.
FiberLayout optimize_layout(const Evaluator& evaluator, FiberLayout layout, const PlanConfig& cfg,
                            int iteration_budget, bool with_subsequence,
                            std::vector<double>* trace = nullptr,
                            bool* line_search_failed = nullptr);

// Full pipeline: n_paths rounds of (solve, extract, append, optimize),
// then upsample_rounds of (upsample all, optimize). skip_optimize
// reduces plan to the greedy baseline while sharing the code path.
PlanReport plan(const Evaluator& evaluator, const PlanConfig& cfg, bool skip_optimize = false);

enum class AblationMode { NoLaplacian, SingleResolution };

struct AblationReport {
    PlanReport plan;
    double mean_squared_laplacian{0.0};
};

// no_laplacian: w_lap = 0, otherwise the standard pipeline.
// single_resolution: downsample factor 2, upsampling disabled, 400
// optimizer iterations; subsequence searches run under the evaluator's
// candidate budget (strided endpoints at this resolution). Temporarily
// mutates the evaluator's weights for the no_laplacian mode.
AblationReport run_ablation(Evaluator& evaluator, AblationMode mode, PlanConfig cfg);

} // namespace fiberplan
