#pragma once

#include "fiberplan/baselines.hpp"
#include "fiberplan/objective.hpp"
#include "fiberplan/planner.hpp"

#include <optional>
#include <string>

namespace fiberplan {

enum class StrategyKind { Optimized, Greedy, FieldOptGreedy, Concentric };

struct Strategy {
    StrategyKind kind{StrategyKind::Optimized};
    OffsetSide concentric_type{OffsetSide::Inner};
    int rings{1};

    std::string label() const;
};

// Parsed scenario file: shape, loads, material and run configuration.
// Parsing is strict (unknown keys rejected) and lossless under
// serialize/parse round trips.
struct ScenarioFile {
    std::string name;
    std::uint64_t seed{0};
    DomainSpec shape;
    MaterialParams material;
    std::vector<LoadCase> load_cases;
    ObjectiveWeights objective;
    Strategy strategy;
    PlanConfig plan;
    double mesh_target_edge{0.4};
    std::optional<double> subsequence_target_edge;
    std::size_t max_subsequence_candidates{10000};
    FieldWeights field;
    double field_spacing{1.0};
    std::string output_dir{"out"};

    void validate() const;
};

ScenarioFile parse_scenario(const std::string& json_text);
ScenarioFile load_scenario(const std::string& path);
std::string serialize_scenario(const ScenarioFile& scenario);

// Builds the evaluator (domain, meshes, FEM systems) for a scenario.
Evaluator make_evaluator(const ScenarioFile& scenario);

} // namespace fiberplan
