// Acceptance suite: exercises the planner end to end against its
// quantitative targets, one pass/fail line per criterion. Exit code is
// the number of failed criteria.

#include "fiberplan/artifacts.hpp"
#include "fiberplan/baselines.hpp"
#include "fiberplan/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace fiberplan;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s — %s\n", pass ? "PASS" : "FAIL", index, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double now_seconds(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string scenario_path(const std::string& name) {
    const char* root = std::getenv("FIBERPLAN_SCENARIOS");
    return (root ? std::string(root) : std::string("scenarios")) + "/" + name;
}

// Shared acceptance configuration: coarse meshes keep the suite inside
// its runtime budgets on one core.
ScenarioFile two_holes_acceptance() {
    ScenarioFile s = load_scenario(scenario_path("two_holes.json"));
    s.mesh_target_edge = 0.8;
    s.subsequence_target_edge = 0.8;
    s.max_subsequence_candidates = 2000;
    return s;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------- 1
void criterion_adjoint_gradient() {
    const auto t0 = std::chrono::steady_clock::now();
    ScenarioFile s = two_holes_acceptance();
    s.subsequence_target_edge.reset();
    Evaluator ev = make_evaluator(s);

    FiberLayout layout;
    FiberPath p;
    for (int i = 0; i < 8; ++i) {
        const double t = i / 7.0;
        p.vertices.push_back({-14.0 + 28.0 * t, 9.0 + 3.0 * std::sin(M_PI * t)});
    }
    layout.paths.push_back(p);

    const Eigen::VectorXd g = ev.gradient(layout);
    Eigen::VectorXd fd(16);
    const double step = 1e-4;
    for (int i = 0; i < 16; ++i) {
        FiberLayout work = layout;
        Eigen::VectorXd x = flatten(layout);
        x[i] += step;
        unflatten(x, work);
        const double up = ev.evaluate(work).total;
        x[i] -= 2.0 * step;
        unflatten(x, work);
        const double dn = ev.evaluate(work).total;
        fd[i] = (up - dn) / (2.0 * step);
    }
    const double scale = fd.cwiseAbs().maxCoeff();
    double worst = 0.0;
    for (int i = 0; i < 16; ++i) {
        const double denom = std::max(std::abs(fd[i]), 1e-3 * scale);
        worst = std::max(worst, std::abs(g[i] - fd[i]) / denom);
    }
    const double elapsed = now_seconds(t0);
    char detail[160];
    std::snprintf(detail, sizeof detail,
                  "max relative deviation %.3g (tol 1e-4), %.1f s (budget 60 s)", worst, elapsed);
    report(1, "adjoint gradient matches finite differences", worst <= 1e-4 && elapsed < 60.0,
           detail);
}

// ---------------------------------------------------------------- 2
void criterion_patch_test() {
    const auto t0 = std::chrono::steady_clock::now();
    DomainSpec spec;
    spec.outer.kind = ShapePrimitive::Kind::Rectangle;
    spec.outer.width = 10.0;
    spec.outer.height = 10.0;
    const Domain d = build_domain(spec);
    const Mesh m = mesh(d, 2.0);
    MaterialParams params;
    FiberLayout empty;

    Eigen::Matrix2d A;
    A << 0.01, 0.003, 0.002, -0.005;
    LoadCase lc;
    for (const char* tag : {"outer.left", "outer.right", "outer.top", "outer.bottom"})
        lc.dirichlet.push_back({tag, {0.0, 0.0}, DofMask::Both, A});
    const SolveResult r = solve(m, empty, params, lc);

    const Eigen::Vector3d strain(A(0, 0), A(1, 1), A(0, 1) + A(1, 0));
    const double E = 1000.0 * modulus(empty, params, {0, 0});
    const double expect = 0.5 * strain.dot(constitutive_matrix(E, params.nu) * strain) * 100.0;
    const double rel = std::abs(r.strain_energy - expect) / expect;
    const double elapsed = now_seconds(t0);
    char detail[160];
    std::snprintf(detail, sizeof detail, "relative energy error %.3g (tol 1e-8), %.2f s", rel,
                  elapsed);
    report(2, "FEM patch test reproduces constant strain", rel <= 1e-8 && elapsed < 1.0, detail);
}

// ---------------------------------------------------------------- 3
void criterion_optimized_beats_greedy() {
    const auto t0 = std::chrono::steady_clock::now();
    ScenarioFile s = two_holes_acceptance();
    Evaluator ev = make_evaluator(s);

    const FiberLayout greedy = greedy_only(ev, s.plan);
    const double greedy_energy = ev.mean_energy(greedy);
    const double greedy_length = greedy.total_length();

    PlanReport optimized = plan(ev, s.plan);
    // Matched-length comparison: the optimized layout rides the fiber
    // budget, so trim it to the greedy length before comparing.
    FiberLayout trimmed = optimized.layout;
    for (std::size_t pi = 0; pi < trimmed.paths.size(); ++pi)
        if (trimmed.paths[pi].length() > greedy_length)
            trimmed.paths[pi] = ev.best_subsequence(trimmed, pi, greedy_length);
    const double opt_energy = ev.mean_energy(trimmed);
    const double opt_length = trimmed.total_length();

    const double elapsed = now_seconds(t0);
    const bool pass = opt_energy >= 1.05 * greedy_energy &&
                      opt_length <= greedy_length + 1e-9 && elapsed < 900.0;
    char detail[240];
    std::snprintf(detail, sizeof detail,
                  "greedy %.1f N*mm @ %.1f mm; optimized %.1f N*mm @ %.1f mm (+%.1f%%), %.0f s "
                  "(budget 900 s)",
                  greedy_energy, greedy_length, opt_energy, opt_length,
                  100.0 * (opt_energy / greedy_energy - 1.0), elapsed);
    report(3, "optimization beats greedy at matched length", pass, detail);
}

// ---------------------------------------------------------------- 4
void criterion_energy_ballpark_and_resolution() {
    ScenarioFile s = two_holes_acceptance();
    // Coarse-to-fine ablation configuration: one path, 100-iteration
    // stages, three upsample rounds, single-ring fiber budget.
    s.plan.walk.max_length = 95.0;
    s.plan.n_paths = 1;
    s.plan.max_iterations = 100;
    s.plan.per_round_iterations = 100;
    s.plan.upsample_rounds = 3;
    Evaluator ev = make_evaluator(s);

    PlanReport multi = plan(ev, s.plan);
    AblationReport single = run_ablation(ev, AblationMode::SingleResolution, s.plan);

    const double target = 195.8;
    const bool in_window = std::abs(multi.mean_energy - target) <= 0.30 * target;
    const double rel_gap =
        std::abs(multi.mean_energy - single.plan.mean_energy) / single.plan.mean_energy;
    const bool agree = rel_gap <= 0.05;
    const bool faster = multi.total_seconds < single.plan.total_seconds;
    char detail[240];
    std::snprintf(detail, sizeof detail,
                  "multi %.1f N*mm in %.0f s, single %.1f N*mm in %.0f s (gap %.1f%%, window "
                  "%.1f..%.1f)",
                  multi.mean_energy, multi.total_seconds, single.plan.mean_energy,
                  single.plan.total_seconds, 100.0 * rel_gap, 0.7 * target, 1.3 * target);
    report(4, "single-path energy ballpark; resolutions agree, multi-res faster",
           in_window && agree && faster, detail);
}

// ---------------------------------------------------------------- 5
void criterion_laplacian_ablation() {
    ScenarioFile s = two_holes_acceptance();
    s.plan.walk.max_length = 100.0;
    s.plan.n_paths = 1;
    s.plan.max_iterations = 100;
    s.plan.per_round_iterations = 100;
    s.plan.upsample_rounds = 1;
    Evaluator ev = make_evaluator(s);

    PlanReport regular = plan(ev, s.plan);
    const double msl_regular = mean_squared_vertex_laplacian(regular.layout);
    AblationReport nolap = run_ablation(ev, AblationMode::NoLaplacian, s.plan);

    const bool jagged = nolap.mean_squared_laplacian >= 5.0 * msl_regular;
    const bool clean = !regular.line_search_failure;
    char detail[200];
    std::snprintf(detail, sizeof detail,
                  "mean squared vertex Laplacian: w_lap=0 %.3g vs default %.3g (ratio %.1fx); "
                  "default run line-search failure: %s",
                  nolap.mean_squared_laplacian, msl_regular,
                  nolap.mean_squared_laplacian / std::max(msl_regular, 1e-300),
                  regular.line_search_failure ? "yes" : "no");
    report(5, "removing the Laplacian regularizer jags the upsampled path", jagged && clean,
           detail);
}

// ---------------------------------------------------------------- 6
void criterion_rectangle_reproduction() {
    const auto t0 = std::chrono::steady_clock::now();
    ScenarioFile s = load_scenario(scenario_path("rect.json"));
    s.mesh_target_edge = 0.8;
    s.subsequence_target_edge = 0.8;
    s.max_subsequence_candidates = 2000;
    Evaluator ev = make_evaluator(s);
    const PlanReport rep = plan(ev, s.plan);

    bool three = rep.layout.paths.size() == 3;
    double min_pair_dist = 1e300;
    if (three) {
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t b = a + 1; b < 3; ++b) {
                for (const Point2& v : rep.layout.paths[a].vertices)
                    min_pair_dist =
                        std::min(min_pair_dist, dist_point_to_path(rep.layout.paths[b], v));
                for (const Point2& v : rep.layout.paths[b].vertices)
                    min_pair_dist =
                        std::min(min_pair_dist, dist_point_to_path(rep.layout.paths[a], v));
            }
        }
    }
    double worst_horizontal = 1.0;
    for (const FiberPath& p : rep.layout.paths) {
        double aligned = 0.0, total = 0.0;
        for (std::size_t i = 1; i < p.size(); ++i) {
            const Point2 seg = p.vertices[i] - p.vertices[i - 1];
            const double len = seg.norm();
            const double angle = std::abs(std::atan2(std::abs(seg.y), std::abs(seg.x)));
            total += len;
            if (angle <= 15.0 * M_PI / 180.0) aligned += len;
        }
        if (total > 0.0) worst_horizontal = std::min(worst_horizontal, aligned / total);
    }

    const double elapsed = now_seconds(t0);
    const bool pass = three && min_pair_dist >= 0.9 && worst_horizontal >= 0.8 && elapsed < 600.0;
    char detail[240];
    std::snprintf(detail, sizeof detail,
                  "%zu paths, min pairwise distance %.2f mm (>= 0.9), worst horizontal share "
                  "%.0f%% (>= 80%%), %.0f s (budget 600 s)",
                  rep.layout.paths.size(), three ? min_pair_dist : 0.0, 100.0 * worst_horizontal,
                  elapsed);
    report(6, "three rectangle paths separate and stay near-horizontal", pass, detail);
}

// ---------------------------------------------------------------- 7
void criterion_field_optimizer() {
    ScenarioFile s = two_holes_acceptance();
    Evaluator ev = make_evaluator(s);
    FiberLayout empty;
    const auto results = ev.solve_all(empty);
    const auto stress = ev.mean_plastic_stress(empty, results);
    const ElementLocator locator(ev.optimization_mesh());
    const auto stress_at = [&](Point2 p) { return stress[locator.locate(p)]; };

    OrientationField init = make_orientation_field(ev.domain(), 1.0, stress_at);
    std::vector<StressTensor2> cell_stress;
    for (const Point2& c : init.centers) cell_stress.push_back(stress_at(c));

    // Exact flip invariance of both terms.
    OrientationField flipped = init;
    Rng rng(99);
    for (Point2& v : flipped.vectors)
        if (rng.next_double() < 0.5) v = v * -1.0;
    const bool flip_ok =
        field_stress_term(flipped, cell_stress) == field_stress_term(init, cell_stress) &&
        field_smooth_term(flipped) == field_smooth_term(init);

    const OrientationField opt = optimize_field(init, cell_stress, FieldWeights{});
    const bool smoother = field_smooth_term(opt) <= field_smooth_term(init) + 1e-12;

    char detail[200];
    std::snprintf(detail, sizeof detail,
                  "flip invariance %s; smoothness %.4f -> %.4f", flip_ok ? "exact" : "BROKEN",
                  field_smooth_term(init), field_smooth_term(opt));
    report(7, "field objective flip-invariant, optimization smooths", flip_ok && smoother, detail);
}

// ---------------------------------------------------------------- 8
void criterion_determinism() {
    ScenarioFile s = two_holes_acceptance();
    // Reduced budgets: determinism does not need converged runs.
    s.plan.n_paths = 1;
    s.plan.max_iterations = 20;
    s.plan.per_round_iterations = 10;
    s.plan.upsample_rounds = 1;
    s.plan.walk.max_length = 80.0;
    s.plan.walk.restarts = 3;

    const std::vector<Strategy> strategies = {
        {StrategyKind::Optimized, OffsetSide::Inner, 1},
        {StrategyKind::Greedy, OffsetSide::Inner, 1},
        {StrategyKind::FieldOptGreedy, OffsetSide::Inner, 1},
        {StrategyKind::Concentric, OffsetSide::Inner, 1},
    };
    const fs::path base = fs::temp_directory_path() / "fiberplan_acceptance";
    fs::remove_all(base);
    bool all_ok = true;
    std::string note;
    for (const Strategy& strategy : strategies) {
        const auto run = [&](const std::string& tag, const char* threads) {
            setenv("FIBERPLAN_THREADS", threads, 1);
            const std::string dir = (base / (strategy.label() + "_" + tag)).string();
            run_scenario(s, strategy, dir);
            unsetenv("FIBERPLAN_THREADS");
            return slurp(dir + "/paths.json");
        };
        const std::string serial_a = run("serial_a", "1");
        const std::string serial_b = run("serial_b", "1");
        const std::string parallel = run("parallel", "3");
        if (serial_a.empty() || serial_a != serial_b || serial_a != parallel) {
            all_ok = false;
            note += strategy.label() + " diverged; ";
        }
    }
    report(8, "every strategy is byte-deterministic, serial == parallel", all_ok,
           all_ok ? "4 strategies x {serial, serial, 3 threads} identical paths.json" : note);
}

// ---------------------------------------------------------------- 9
void criterion_pareto_fixtures() {
    const auto mk = [](double len, double e) {
        ReportRow r;
        r.fiber_length = len;
        r.mean_energy = e;
        return r;
    };
    struct Fixture {
        std::vector<ReportRow> rows;
        std::vector<bool> expect;
    };
    const std::vector<Fixture> fixtures = {
        {{mk(100, 50), mk(120, 40)}, {false, true}},
        {{mk(100, 50)}, {false}},
        {{mk(100, 50), mk(100, 50)}, {false, false}},
        {{mk(100, 50), mk(150, 70), mk(150, 60), mk(90, 55)}, {true, false, true, false}},
        {{mk(50, 10), mk(60, 20), mk(70, 30), mk(80, 25), mk(60, 15)},
         {false, false, false, true, true}},
    };
    bool all_ok = true;
    for (std::size_t f = 0; f < fixtures.size(); ++f) {
        const auto got = dominance_labels(fixtures[f].rows);
        if (got != fixtures[f].expect) all_ok = false;
    }
    report(9, "pareto dominance labels match hand-computed fixtures", all_ok,
           all_ok ? "5 fixtures exact" : "label mismatch");
}

} // namespace

int main() {
    std::printf("acceptance suite (single run, sequential)\n");
    criterion_adjoint_gradient();
    criterion_patch_test();
    criterion_optimized_beats_greedy();
    criterion_energy_ballpark_and_resolution();
    criterion_laplacian_ablation();
    criterion_rectangle_reproduction();
    criterion_field_optimizer();
    criterion_determinism();
    criterion_pareto_fixtures();
    std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures;
}
