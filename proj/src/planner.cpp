#include "fiberplan/planner.hpp"

#include <chrono>

namespace fiberplan {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

FiberLayout optimize_layout(const Evaluator& evaluator, FiberLayout layout, const PlanConfig& cfg,
                            int iteration_budget, bool with_subsequence,
                            std::vector<double>* trace, bool* line_search_failed) {
    if (layout.paths.empty()) throw Error("optimize_layout needs a non-empty layout");

    FiberLayout shape = layout; // vertex counts reused by unflatten
    const ObjectiveFn fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
        unflatten(x, shape);
        if (grad) *grad = evaluator.gradient(shape);
        return evaluator.evaluate(shape).total;
    };

    BfgsOptions opts;
    opts.max_iterations = iteration_budget;
    opts.gradient_tolerance = cfg.gradient_tolerance;
    // Keep accepted steps near the fiber-width feature scale so the
    // search refines the greedy basin instead of tunneling out of it.
    opts.max_step = cfg.max_vertex_step > 0.0 ? cfg.max_vertex_step
                                              : 0.5 * evaluator.params().w_fiber;
    BfgsResult res = bfgs_minimize(fn, flatten(layout), opts);
    unflatten(res.x, layout);
    if (trace) *trace = res.trace;
    if (line_search_failed && res.line_search_failed) *line_search_failed = true;

    if (with_subsequence) {
        for (std::size_t pi = 0; pi < layout.paths.size(); ++pi)
            layout.paths[pi] = evaluator.best_subsequence(layout, pi);
    }
    return layout;
}

PlanReport plan(const Evaluator& evaluator, const PlanConfig& cfg, bool skip_optimize) {
    cfg.validate();
    const auto run_start = std::chrono::steady_clock::now();
    PlanReport report;
    FiberLayout layout;
    const Rng seed_root(cfg.rng_seed);

    for (int round = 0; round < cfg.n_paths; ++round) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng round_rng = seed_root.split(kExtractionStreamBase + static_cast<std::uint64_t>(round));
        ExtractionResult extracted;
        try {
            extracted = extract_candidate(evaluator, layout, cfg.walk, round_rng);
        } catch (const Error&) {
            report.extraction_failure = true;
            break;
        }
        layout.paths.push_back(extracted.path);
        report.raw_walks.push_back(extracted.raw_walk);
        report.pre_optimization_layouts.push_back(layout);
        report.timings.push_back({"extract_" + std::to_string(round), seconds_since(t0)});

        if (!skip_optimize) {
            const auto t1 = std::chrono::steady_clock::now();
            std::vector<double> trace;
            layout = optimize_layout(evaluator, layout, cfg, cfg.max_iterations,
                                     /*with_subsequence=*/true, &trace,
                                     &report.line_search_failure);
            report.objective_traces.push_back(std::move(trace));
            report.timings.push_back({"optimize_" + std::to_string(round), seconds_since(t1)});
        }
    }

    if (!skip_optimize && !layout.paths.empty()) {
        for (int round = 0; round < cfg.upsample_rounds; ++round) {
            const auto t0 = std::chrono::steady_clock::now();
            for (FiberPath& p : layout.paths) p = upsample(p);
            std::vector<double> trace;
            layout = optimize_layout(evaluator, layout, cfg, cfg.per_round_iterations,
                                     /*with_subsequence=*/false, &trace,
                                     &report.line_search_failure);
            report.objective_traces.push_back(std::move(trace));
            report.timings.push_back({"upsample_" + std::to_string(round), seconds_since(t0)});
        }
    }

    // Fiber budget: gradient steps grow paths freely (extra fiber always
    // lowers the objective), so the walk's length cap is enforced once
    // here, after the upsampled vertices are dense enough for the
    // Laplacian to have kept the path smooth. Tiny overshoots (the
    // budget hinge settles slightly above the cap) are clipped off the
    // path ends; anything larger falls back to the subsequence search.
    if (!skip_optimize) {
        for (std::size_t pi = 0; pi < layout.paths.size(); ++pi) {
            FiberPath& p = layout.paths[pi];
            double excess = p.length() - cfg.walk.max_length;
            if (excess <= 0.0) continue;
            const double mean_chord =
                p.length() / static_cast<double>(std::max<std::size_t>(p.size() - 1, 1));
            if (excess <= 2.0 * mean_chord && p.size() >= 3) {
                for (int side = 0; side < 2 && excess > 0.0; ++side) {
                    const double want = side == 0 ? 0.5 * excess : excess;
                    Point2& end = side == 0 ? p.vertices.front() : p.vertices.back();
                    const Point2& next =
                        side == 0 ? p.vertices[1] : p.vertices[p.size() - 2];
                    const double seg = (end - next).norm();
                    const double cut = std::min(want, 0.9 * seg);
                    end = end + (next - end) * (cut / seg);
                    excess -= cut;
                }
            }
            if (p.length() > cfg.walk.max_length)
                p = evaluator.best_subsequence(layout, pi, cfg.walk.max_length);
        }
    }

    report.layout = std::move(layout);
    report.energy_per_case = evaluator.case_energies(report.layout);
    double sum = 0.0;
    for (double e : report.energy_per_case) sum += e;
    report.mean_energy = sum / static_cast<double>(report.energy_per_case.size());
    report.equivalent_stiffness = 2.0 * report.mean_energy;
    report.fiber_length = report.layout.total_length();
    report.total_seconds = seconds_since(run_start);
    return report;
}

AblationReport run_ablation(Evaluator& evaluator, AblationMode mode, PlanConfig cfg) {
    AblationReport out;
    if (mode == AblationMode::NoLaplacian) {
        const ObjectiveWeights saved = evaluator.weights();
        ObjectiveWeights w = saved;
        w.w_lap = 0.0;
        evaluator.set_weights(w);
        try {
            out.plan = plan(evaluator, cfg);
        } catch (...) {
            evaluator.set_weights(saved);
            throw;
        }
        evaluator.set_weights(saved);
    } else {
        cfg.walk.downsample_keep = 2;
        cfg.upsample_rounds = 0;
        cfg.max_iterations = 400;
        out.plan = plan(evaluator, cfg);
    }
    out.mean_squared_laplacian = mean_squared_vertex_laplacian(out.plan.layout);
    return out;
}

} // namespace fiberplan
