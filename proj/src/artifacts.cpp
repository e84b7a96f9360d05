#include "fiberplan/artifacts.hpp"

#include "fiberplan/svg.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace fiberplan {

using nlohmann::json;

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << content;
}

std::pair<Point2, Point2> domain_bbox(const Domain& domain) {
    Point2 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
    Point2 hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
    for (std::size_t li = 0; li < domain.loop_count(); ++li) {
        for (const Point2& v : domain.loop(li).vertices) {
            lo.x = std::min(lo.x, v.x);
            lo.y = std::min(lo.y, v.y);
            hi.x = std::max(hi.x, v.x);
            hi.y = std::max(hi.y, v.y);
        }
    }
    return {lo, hi};
}

const char* kPathColors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd",
                             "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

} // namespace

void write_paths_json(const std::string& path, const FiberLayout& layout) {
    json root;
    root["paths"] = json::array();
    for (const FiberPath& p : layout.paths) {
        json jp;
        jp["length_mm"] = p.length();
        jp["vertices"] = json::array();
        for (const Point2& v : p.vertices) jp["vertices"].push_back({v.x, v.y});
        root["paths"].push_back(std::move(jp));
    }
    write_file(path, root.dump(2) + "\n");
}

FiberLayout read_paths_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    json root;
    in >> root;
    FiberLayout layout;
    for (const json& jp : root.at("paths")) {
        FiberPath p;
        for (const json& jv : jp.at("vertices"))
            p.vertices.push_back({jv[0].get<double>(), jv[1].get<double>()});
        layout.paths.push_back(std::move(p));
    }
    return layout;
}

void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows) {
    if (rows.empty()) throw Error("report has no rows");
    const std::size_t n_cases = rows.front().energy_per_case.size();
    std::ostringstream out;
    out << "strategy,n_paths,fiber_length_mm";
    for (std::size_t c = 0; c < n_cases; ++c) out << ",energy_Nmm_case_" << c;
    out << ",mean_energy_Nmm,stiffness_N_per_mm,wall_time_s\n";
    for (const ReportRow& r : rows) {
        if (r.energy_per_case.size() != n_cases)
            throw Error("report rows disagree on the load-case count");
        out << r.strategy << "," << r.n_paths << "," << num(r.fiber_length);
        for (double e : r.energy_per_case) out << "," << num(e);
        out << "," << num(r.mean_energy) << "," << num(r.stiffness) << "," << num(r.wall_time_s)
            << "\n";
    }
    write_file(path, out.str());
}

std::vector<ReportRow> read_report_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw Error("empty report '" + path + "'");

    const auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(item);
        return out;
    };
    const auto header = split(line);
    std::size_t n_cases = 0;
    for (const std::string& col : header)
        if (col.rfind("energy_Nmm_case_", 0) == 0) ++n_cases;
    if (header.empty() || header[0] != "strategy")
        throw Error("'" + path + "' is not a report CSV");

    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != header.size()) throw Error("malformed report row in '" + path + "'");
        ReportRow r;
        std::size_t k = 0;
        r.strategy = f[k++];
        r.n_paths = std::stoi(f[k++]);
        r.fiber_length = std::stod(f[k++]);
        for (std::size_t c = 0; c < n_cases; ++c) r.energy_per_case.push_back(std::stod(f[k++]));
        r.mean_energy = std::stod(f[k++]);
        r.stiffness = std::stod(f[k++]);
        r.wall_time_s = std::stod(f[k++]);
        rows.push_back(std::move(r));
    }
    return rows;
}

void render_svg(const std::string& path, const Domain& domain, const FiberLayout& layout,
                const std::vector<LoadCase>& loads) {
    const auto [lo, hi] = domain_bbox(domain);
    SvgWriter svg(path, lo, hi);

    for (std::size_t li = 0; li < domain.loop_count(); ++li)
        svg.polyline(domain.loop(li).vertices, "#222222", 0.15, /*closed=*/true);

    // Dirichlet regions as dotted overlays.
    for (const LoadCase& lc : loads) {
        for (const DirichletRegion& region : lc.dirichlet) {
            const auto it = domain.boundary_tags.find(region.tag);
            if (it == domain.boundary_tags.end()) continue;
            for (const BoundaryRange& r : it->second) {
                const Loop& loop = domain.loop(r.loop_index);
                std::vector<Point2> run;
                for (std::size_t k = 0; k <= r.edge_count; ++k)
                    run.push_back(loop.vertex(r.first + k));
                svg.polyline(run, "#555555", 0.35, false, "6,4");
            }
        }
    }

    for (std::size_t pi = 0; pi < layout.paths.size(); ++pi)
        svg.polyline(layout.paths[pi].vertices,
                     kPathColors[pi % (sizeof kPathColors / sizeof *kPathColors)], 0.3);
    svg.close();
}

void stress_glyphs_svg(const std::string& path, const Domain& domain, const Mesh& mesh,
                       const std::vector<StressTensor2>& stress) {
    const auto [lo, hi] = domain_bbox(domain);
    SvgWriter svg(path, lo, hi);
    for (std::size_t li = 0; li < domain.loop_count(); ++li)
        svg.polyline(domain.loop(li).vertices, "#222222", 0.15, true);

    double max_lambda = 0.0;
    std::vector<Principal> principals(stress.size());
    for (std::size_t t = 0; t < stress.size(); ++t) {
        principals[t] = principal(stress[t]);
        max_lambda = std::max(max_lambda, std::abs(principals[t].lambda));
    }
    if (max_lambda <= 0.0) max_lambda = 1.0;
    const double glyph_scale = 0.9; // mm at the stress peak
    for (std::size_t t = 0; t < stress.size(); ++t) {
        const Point2 c = mesh.centroid(t);
        const double len = glyph_scale * std::abs(principals[t].lambda) / max_lambda;
        if (len < 0.02) continue;
        const Point2 d = principals[t].walk_dir * (0.5 * len);
        const bool tensile = principals[t].lambda >= 0.0;
        svg.line(c - d, c + d, tensile ? "#1f77b4" : "#d62728", 0.06);
    }
    svg.close();
}

ReportRow run_scenario(const ScenarioFile& scenario, const Strategy& strategy,
                       const std::string& out_dir, bool glyphs) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    try {
        const auto t0 = std::chrono::steady_clock::now();
        Evaluator evaluator = make_evaluator(scenario);

        FiberLayout layout;
        int n_paths = scenario.plan.n_paths;
        switch (strategy.kind) {
            case StrategyKind::Optimized:
                layout = plan(evaluator, scenario.plan).layout;
                break;
            case StrategyKind::Greedy:
                layout = greedy_only(evaluator, scenario.plan);
                break;
            case StrategyKind::FieldOptGreedy:
                layout = field_opt_greedy(evaluator, scenario.plan, scenario.field,
                                          scenario.field_spacing);
                break;
            case StrategyKind::Concentric:
                layout = concentric(evaluator.domain(), strategy.concentric_type, strategy.rings,
                                    scenario.material.d_min, scenario.material.w_fiber);
                n_paths = static_cast<int>(layout.paths.size());
                break;
        }

        ReportRow row;
        row.strategy = strategy.label();
        row.n_paths = strategy.kind == StrategyKind::Concentric
                          ? n_paths
                          : static_cast<int>(layout.paths.size());
        row.fiber_length = layout.total_length();
        row.energy_per_case = evaluator.case_energies(layout);
        double sum = 0.0;
        for (double e : row.energy_per_case) sum += e;
        row.mean_energy = sum / static_cast<double>(row.energy_per_case.size());
        row.stiffness = 2.0 * row.mean_energy;
        row.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        write_paths_json((fs::path(out_dir) / "paths.json").string(), layout);
        write_report_csv((fs::path(out_dir) / "report.csv").string(), {row});
        render_svg((fs::path(out_dir) / "render.svg").string(), evaluator.domain(), layout,
                   scenario.load_cases);
        if (glyphs) {
            const auto results = evaluator.solve_all(layout);
            const auto stress = evaluator.mean_plastic_stress(layout, results);
            stress_glyphs_svg((fs::path(out_dir) / "stress_glyphs.svg").string(),
                              evaluator.domain(), evaluator.optimization_mesh(), stress);
        }
        return row;
    } catch (const std::exception& e) {
        json manifest;
        manifest["error"] = e.what();
        manifest["strategy"] = strategy.label();
        manifest["scenario"] = scenario.name;
        write_file((fs::path(out_dir) / "error.json").string(), manifest.dump(2) + "\n");
        throw;
    }
}

std::vector<bool> dominance_labels(const std::vector<ReportRow>& rows) {
    std::vector<bool> dominated(rows.size(), false);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows.size(); ++j) {
            if (i == j) continue;
            const bool ge_energy = rows[j].mean_energy >= rows[i].mean_energy;
            const bool le_length = rows[j].fiber_length <= rows[i].fiber_length;
            const bool strict = rows[j].mean_energy > rows[i].mean_energy ||
                                rows[j].fiber_length < rows[i].fiber_length;
            if (ge_energy && le_length && strict) {
                dominated[i] = true;
                break;
            }
        }
    }
    return dominated;
}

void compare_reports(const std::vector<std::string>& report_paths, const std::string& out_dir) {
    std::vector<ReportRow> rows;
    for (const std::string& p : report_paths) {
        const auto part = read_report_csv(p);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    if (rows.empty()) throw Error("compare: no report rows");

    const auto dominated = dominance_labels(rows);
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    std::ostringstream out;
    out << "strategy,fiber_length_mm,mean_energy_Nmm,dominated\n";
    for (std::size_t i = 0; i < rows.size(); ++i)
        out << rows[i].strategy << "," << num(rows[i].fiber_length) << ","
            << num(rows[i].mean_energy) << "," << (dominated[i] ? 1 : 0) << "\n";
    write_file((fs::path(out_dir) / "pareto.csv").string(), out.str());

    // Scatter plot: energy against fiber length.
    double max_len = 0.0, max_e = 0.0;
    for (const ReportRow& r : rows) {
        max_len = std::max(max_len, r.fiber_length);
        max_e = std::max(max_e, r.mean_energy);
    }
    max_len = std::max(max_len, 1e-9);
    max_e = std::max(max_e, 1e-9);
    const double W = 120.0, H = 90.0;
    SvgWriter svg((fs::path(out_dir) / "pareto.svg").string(), {0, 0}, {W, H}, 14.0);
    svg.line({0, 0}, {W, 0}, "#000000", 0.2);
    svg.line({0, 0}, {0, H}, "#000000", 0.2);
    svg.text({W * 0.35, -8.0}, "fiber length (mm)");
    svg.text({-12.0, H * 0.35}, "energy (N*mm)");
    svg.text({W * 0.98, -5.0}, num(max_len));
    svg.text({-12.0, H * 0.98}, num(max_e));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Point2 at{rows[i].fiber_length / max_len * W, rows[i].mean_energy / max_e * H};
        svg.circle(at, 0.8, dominated[i] ? "#bbbbbb" : "#d62728");
        svg.text(at + Point2{1.5, 0.0}, rows[i].strategy, 2.5);
    }
    svg.close();
}

} // namespace fiberplan
