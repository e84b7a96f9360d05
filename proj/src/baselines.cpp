#include "fiberplan/baselines.hpp"

#include "fiberplan/bfgs.hpp"

#include <cmath>
#include <limits>

namespace fiberplan {

FiberLayout concentric(const Domain& domain, OffsetSide side, int n_rings, double d_min,
                       double w_fiber) {
    if (n_rings < 1) throw Error("concentric needs at least one ring");
    FiberLayout layout;
    for (int ring = 1; ring <= n_rings; ++ring) {
        for (const Loop& loop : offset_loops(domain, side, ring, d_min, w_fiber)) {
            FiberPath path;
            path.vertices = loop.vertices;
            path.vertices.push_back(loop.vertices.front()); // closed
            layout.paths.push_back(std::move(path));
        }
    }
    if (layout.paths.empty())
        throw Error("concentric rings collapsed: too many rings for this part");
    return layout;
}

OrientationField make_orientation_field(const Domain& domain, double spacing,
                                        const std::function<StressTensor2(Point2)>& stress_at) {
    if (spacing <= 0) throw Error("field spacing must be positive");
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
    OrientationField f;
    f.origin = lo;
    f.spacing = spacing;
    f.nx = std::max(1, static_cast<int>(std::ceil((hi.x - lo.x) / spacing)));
    f.ny = std::max(1, static_cast<int>(std::ceil((hi.y - lo.y) / spacing)));
    f.cell_of_node.assign(static_cast<std::size_t>(f.nx) * f.ny, -1);

    for (int j = 0; j < f.ny; ++j) {
        for (int i = 0; i < f.nx; ++i) {
            const Point2 c = f.origin + Point2{(i + 0.5) * spacing, (j + 0.5) * spacing};
            if (signed_distance(domain, c) <= 0.0) continue;
            f.cell_of_node[static_cast<std::size_t>(j) * f.nx + i] =
                static_cast<int>(f.centers.size());
            f.centers.push_back(c);
            f.vectors.push_back(principal(stress_at(c)).walk_dir);
        }
    }
    if (f.centers.empty()) throw Error("orientation field: no cells inside the domain");

    // Nearest in-domain cell per lattice node, for O(1) lookups.
    f.nearest_cell.assign(f.cell_of_node.size(), -1);
    for (int j = 0; j < f.ny; ++j) {
        for (int i = 0; i < f.nx; ++i) {
            const std::size_t node = static_cast<std::size_t>(j) * f.nx + i;
            if (f.cell_of_node[node] >= 0) {
                f.nearest_cell[node] = f.cell_of_node[node];
                continue;
            }
            const Point2 c = f.origin + Point2{(i + 0.5) * spacing, (j + 0.5) * spacing};
            double best = std::numeric_limits<double>::infinity();
            int best_cell = 0;
            for (std::size_t k = 0; k < f.centers.size(); ++k) {
                const double d = (f.centers[k] - c).squared_norm();
                if (d < best) {
                    best = d;
                    best_cell = static_cast<int>(k);
                }
            }
            f.nearest_cell[node] = best_cell;
        }
    }
    return f;
}

namespace {

// Neighbor pairs (cell, +x/+y neighbor) with both ends in the domain.
std::vector<std::pair<int, int>> field_pairs(const OrientationField& f) {
    std::vector<std::pair<int, int>> pairs;
    for (int j = 0; j < f.ny; ++j) {
        for (int i = 0; i < f.nx; ++i) {
            const int a = f.cell_of_node[static_cast<std::size_t>(j) * f.nx + i];
            if (a < 0) continue;
            if (i + 1 < f.nx) {
                const int b = f.cell_of_node[static_cast<std::size_t>(j) * f.nx + i + 1];
                if (b >= 0) pairs.emplace_back(a, b);
            }
            if (j + 1 < f.ny) {
                const int b = f.cell_of_node[(static_cast<std::size_t>(j) + 1) * f.nx + i];
                if (b >= 0) pairs.emplace_back(a, b);
            }
        }
    }
    return pairs;
}

double smooth_pair(Point2 a, Point2 b, double h) {
    const double minus = (b - a).squared_norm();
    const double plus = (b + a).squared_norm();
    return std::min(minus, plus) / (h * h);
}

} // namespace

double field_stress_term(const OrientationField& field, const std::vector<StressTensor2>& stress) {
    if (stress.size() != field.vectors.size()) throw Error("field stress size mismatch");
    const double area = field.spacing * field.spacing;
    double sum = 0.0;
    for (std::size_t k = 0; k < field.vectors.size(); ++k) {
        const Point2 v = field.vectors[k].normalized();
        const StressTensor2& s = stress[k];
        sum += v.x * (s.s11 * v.x + s.s12 * v.y) + v.y * (s.s12 * v.x + s.s22 * v.y);
    }
    return -sum * area;
}

double field_smooth_term(const OrientationField& field) {
    const double area = field.spacing * field.spacing;
    double sum = 0.0;
    for (const auto& [a, b] : field_pairs(field))
        sum += smooth_pair(field.vectors[a].normalized(), field.vectors[b].normalized(),
                           field.spacing);
    return sum * area;
}

OrientationField optimize_field(OrientationField field, const std::vector<StressTensor2>& stress,
                                const FieldWeights& weights) {
    if (stress.size() != field.vectors.size()) throw Error("field stress size mismatch");
    const auto pairs = field_pairs(field);
    const double area = field.spacing * field.spacing;
    const double h2 = field.spacing * field.spacing;
    const std::size_t n = field.vectors.size();

    const ObjectiveFn fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
        // Normalized copies plus the Jacobian factors of normalization.
        std::vector<Point2> unit(n);
        std::vector<double> inv_norm(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const Point2 v{x[2 * k], x[2 * k + 1]};
            const double norm = v.norm();
            if (norm > 1e-12) {
                unit[k] = v / norm;
                inv_norm[k] = 1.0 / norm;
            } else {
                unit[k] = field.vectors[k]; // degenerate: hold the last direction
            }
        }
        std::vector<Point2> g_unit(n, Point2{0.0, 0.0}); // d/d(unit vector)
        double value = 0.0;

        for (std::size_t k = 0; k < n; ++k) {
            const StressTensor2& s = stress[k];
            const Point2 sv{s.s11 * unit[k].x + s.s12 * unit[k].y,
                            s.s12 * unit[k].x + s.s22 * unit[k].y};
            value -= weights.alpha_stress * area * unit[k].dot(sv);
            g_unit[k] += sv * (-2.0 * weights.alpha_stress * area);
        }
        for (const auto& [a, b] : pairs) {
            const double minus = (unit[b] - unit[a]).squared_norm();
            const double plus = (unit[b] + unit[a]).squared_norm();
            const double c = weights.alpha_smooth * area / h2;
            if (minus <= plus) {
                value += weights.alpha_smooth * area * minus / h2;
                g_unit[a] += (unit[a] - unit[b]) * (2.0 * c);
                g_unit[b] += (unit[b] - unit[a]) * (2.0 * c);
            } else {
                value += weights.alpha_smooth * area * plus / h2;
                g_unit[a] += (unit[b] + unit[a]) * (2.0 * c);
                g_unit[b] += (unit[b] + unit[a]) * (2.0 * c);
            }
        }
        if (grad) {
            grad->resize(2 * n);
            for (std::size_t k = 0; k < n; ++k) {
                // Chain through v_hat = v / |v|: (I - v_hat v_hat^T) / |v|.
                const Point2 u = unit[k];
                const Point2 gu = g_unit[k];
                const double dot = u.dot(gu);
                const Point2 gv = (gu - u * dot) * inv_norm[k];
                (*grad)[2 * k] = gv.x;
                (*grad)[2 * k + 1] = gv.y;
            }
        }
        return value;
    };

    Eigen::VectorXd x0(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
        x0[2 * k] = field.vectors[k].x;
        x0[2 * k + 1] = field.vectors[k].y;
    }
    BfgsOptions opts;
    opts.max_iterations = 100;
    opts.gradient_tolerance = 1e-6;
    const BfgsResult res = bfgs_minimize(fn, x0, opts);

    for (std::size_t k = 0; k < n; ++k) {
        const Point2 v{res.x[2 * k], res.x[2 * k + 1]};
        if (v.norm() > 1e-12) field.vectors[k] = v.normalized();
    }
    return field;
}

FiberLayout greedy_only(const Evaluator& evaluator, const PlanConfig& cfg) {
    return plan(evaluator, cfg, /*skip_optimize=*/true).layout;
}

FiberLayout field_opt_greedy(const Evaluator& evaluator, const PlanConfig& cfg,
                             const FieldWeights& weights, double field_spacing) {
    cfg.validate();
    const Mesh& mesh = evaluator.optimization_mesh();
    const ElementLocator locator(mesh);
    const Rng seed_root(cfg.rng_seed);

    FiberLayout layout;
    for (int round = 0; round < cfg.n_paths; ++round) {
        const auto results = evaluator.solve_all(layout);
        const auto stress = evaluator.mean_plastic_stress(layout, results);

        Rng round_rng = seed_root.split(kExtractionStreamBase + static_cast<std::uint64_t>(round));
        if (weights.alpha_smooth == 0.0) {
            // Degenerate case: the optimal field equals the raw walk
            // directions, so walking the element-granular stress field
            // is exact and matches the greedy baseline bit for bit.
            const auto extracted =
                extract_candidate(evaluator, layout, cfg.walk, round_rng, nullptr, &stress);
            layout.paths.push_back(extracted.path);
            continue;
        }

        const auto stress_at = [&](Point2 p) { return stress[locator.locate(p)]; };
        OrientationField field = make_orientation_field(evaluator.domain(), field_spacing, stress_at);
        std::vector<StressTensor2> cell_stress;
        cell_stress.reserve(field.centers.size());
        for (const Point2& c : field.centers) cell_stress.push_back(stress_at(c));
        field = optimize_field(std::move(field), cell_stress, weights);

        const DirectionProvider dir = [&field](Point2 p) { return field.direction_at(p); };
        const auto extracted =
            extract_candidate(evaluator, layout, cfg.walk, round_rng, &dir, &stress);
        layout.paths.push_back(extracted.path);
    }
    return layout;
}

} // namespace fiberplan
