#pragma once

#include "fiberplan/scenario.hpp"

#include <string>
#include <vector>

namespace fiberplan {

// One row of report.csv.
struct ReportRow {
    std::string strategy;
    int n_paths{0};
    double fiber_length{0.0};
    std::vector<double> energy_per_case;
    double mean_energy{0.0};
    double stiffness{0.0};
    double wall_time_s{0.0};
};

void write_paths_json(const std::string& path, const FiberLayout& layout);
FiberLayout read_paths_json(const std::string& path);

void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_report_csv(const std::string& path);

// Part outline plus fiber paths; Dirichlet regions drawn dotted.
void render_svg(const std::string& path, const Domain& domain, const FiberLayout& layout,
                const std::vector<LoadCase>& loads);

// Per-element principal-direction glyphs scaled by |lambda|.
void stress_glyphs_svg(const std::string& path, const Domain& domain, const Mesh& mesh,
                       const std::vector<StressTensor2>& stress);

// Runs one strategy of a scenario, writing paths.json, report.csv and
// render.svg (plus stress_glyphs.svg when requested) into out_dir.
// Failures leave an error.json manifest behind and rethrow.
ReportRow run_scenario(const ScenarioFile& scenario, const Strategy& strategy,
                       const std::string& out_dir, bool glyphs = false);

// Pareto comparison under (maximize mean energy, minimize fiber
// length). Returns one flag per row: true = dominated.
std::vector<bool> dominance_labels(const std::vector<ReportRow>& rows);

// Reads report rows from the given CSVs, labels dominance, writes
// pareto.csv and pareto.svg into out_dir.
void compare_reports(const std::vector<std::string>& report_paths, const std::string& out_dir);

} // namespace fiberplan
