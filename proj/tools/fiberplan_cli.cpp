#include "fiberplan/artifacts.hpp"
#include "fiberplan/scenario.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace fiberplan;

namespace {

std::vector<Strategy> sweep_strategies(const ScenarioFile& scenario) {
    std::vector<Strategy> out;
    out.push_back({StrategyKind::Optimized, OffsetSide::Inner, 1});
    out.push_back({StrategyKind::Greedy, OffsetSide::Inner, 1});
    out.push_back({StrategyKind::FieldOptGreedy, OffsetSide::Inner, 1});
    for (OffsetSide side : {OffsetSide::Inner, OffsetSide::Outer, OffsetSide::AllWalls})
        out.push_back({StrategyKind::Concentric, side, scenario.strategy.rings});
    return out;
}

Strategy parse_strategy_flag(const std::string& name, const ScenarioFile& scenario) {
    Strategy s = scenario.strategy;
    if (name == "optimized") s = {StrategyKind::Optimized, OffsetSide::Inner, 1};
    else if (name == "greedy") s = {StrategyKind::Greedy, OffsetSide::Inner, 1};
    else if (name == "field_opt_greedy") s = {StrategyKind::FieldOptGreedy, OffsetSide::Inner, 1};
    else if (name == "concentric_inner") s = {StrategyKind::Concentric, OffsetSide::Inner, scenario.strategy.rings};
    else if (name == "concentric_outer") s = {StrategyKind::Concentric, OffsetSide::Outer, scenario.strategy.rings};
    else if (name == "concentric_all_walls") s = {StrategyKind::Concentric, OffsetSide::AllWalls, scenario.strategy.rings};
    else throw Error("unknown strategy '" + name + "'");
    return s;
}

int run_plan(const std::string& scenario_path, const std::string& out_override,
             std::optional<std::uint64_t> seed_override, const std::string& strategy_override,
             bool sweep, int jobs, bool glyphs) {
    ScenarioFile scenario = load_scenario(scenario_path);
    if (seed_override) {
        scenario.seed = *seed_override;
        scenario.plan.rng_seed = *seed_override;
        scenario.plan.walk.rng_seed = *seed_override;
    }
    const std::string out_dir = out_override.empty() ? scenario.output_dir : out_override;

    std::vector<Strategy> strategies;
    if (sweep)
        strategies = sweep_strategies(scenario);
    else if (!strategy_override.empty())
        strategies = {parse_strategy_flag(strategy_override, scenario)};
    else
        strategies = {scenario.strategy};

    if (strategies.size() == 1) {
        const ReportRow row = run_scenario(scenario, strategies[0], out_dir, glyphs);
        std::cout << row.strategy << ": length " << row.fiber_length << " mm, mean energy "
                  << row.mean_energy << " N*mm, stiffness " << row.stiffness << " N/mm ("
                  << row.wall_time_s << " s)\n";
        return 0;
    }

    // Sweep: every strategy runs in its own subdirectory; report.csv
    // aggregates in strategy order regardless of completion order.
    const int workers = std::max(1, jobs);
    std::vector<pid_t> pids(strategies.size(), -1);
    std::vector<bool> failed(strategies.size(), false);
    std::size_t next = 0, running = 0;
    const auto launch = [&](std::size_t idx) {
        const pid_t pid = fork();
        if (pid < 0) throw Error("fork failed");
        if (pid == 0) {
            try {
                run_scenario(scenario, strategies[idx],
                             (fs::path(out_dir) / strategies[idx].label()).string(), glyphs);
                _exit(0);
            } catch (const std::exception& e) {
                std::cerr << strategies[idx].label() << ": " << e.what() << "\n";
                _exit(1);
            }
        }
        pids[idx] = pid;
        ++running;
    };
    while (next < strategies.size() || running > 0) {
        while (next < strategies.size() && running < static_cast<std::size_t>(workers))
            launch(next++);
        int status = 0;
        const pid_t done = wait(&status);
        if (done < 0) break;
        --running;
        for (std::size_t i = 0; i < pids.size(); ++i)
            if (pids[i] == done && (!WIFEXITED(status) || WEXITSTATUS(status) != 0))
                failed[i] = true;
    }

    std::vector<ReportRow> rows;
    bool any_failed = false;
    for (std::size_t i = 0; i < strategies.size(); ++i) {
        if (failed[i]) {
            any_failed = true;
            continue;
        }
        const auto part =
            read_report_csv((fs::path(out_dir) / strategies[i].label() / "report.csv").string());
        rows.insert(rows.end(), part.begin(), part.end());
    }
    if (!rows.empty())
        write_report_csv((fs::path(out_dir) / "report.csv").string(), rows);
    for (const ReportRow& row : rows)
        std::cout << row.strategy << ": length " << row.fiber_length << " mm, mean energy "
                  << row.mean_energy << " N*mm (" << row.wall_time_s << " s)\n";
    return any_failed ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Continuous-fiber reinforcement path planner"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir, strategy;
    std::uint64_t seed = 0;
    bool seed_set = false, sweep = false, glyphs = false;
    int jobs = 1;
    auto* plan_cmd = app.add_subcommand("plan", "plan fiber paths for a scenario");
    plan_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();
    plan_cmd->add_option("--out", out_dir, "output directory (overrides the scenario)");
    plan_cmd->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
        seed_set = true;
    });
    plan_cmd->add_option("--strategy", strategy,
                         "strategy override: optimized|greedy|field_opt_greedy|"
                         "concentric_inner|concentric_outer|concentric_all_walls");
    plan_cmd->add_flag("--sweep", sweep, "run every strategy and aggregate one report.csv");
    plan_cmd->add_option("--jobs", jobs, "parallel strategy processes for --sweep");
    plan_cmd->add_flag("--glyphs", glyphs, "also write stress_glyphs.svg");

    std::vector<std::string> report_paths;
    std::string compare_out = "compare_out";
    auto* compare_cmd = app.add_subcommand("compare", "pareto-compare report files");
    compare_cmd->add_option("reports", report_paths, "report.csv files")->required();
    compare_cmd->add_option("--out", compare_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (plan_cmd->parsed())
            return run_plan(scenario_path, out_dir,
                            seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt, strategy,
                            sweep, jobs, glyphs);
        compare_reports(report_paths, compare_out);
        std::cout << "wrote " << compare_out << "/pareto.csv and pareto.svg\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
