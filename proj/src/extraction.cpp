#include "fiberplan/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace fiberplan {

Principal principal(const StressTensor2& st) {
    const double m = 0.5 * (st.s11 + st.s22);
    const double h = 0.5 * (st.s11 - st.s22);
    const double r = std::hypot(h, st.s12);
    const double lp = m + r;
    const double lm = m - r;
    // Largest magnitude; ties break toward the tensile eigenvalue.
    const double lambda = std::abs(lp) >= std::abs(lm) ? lp : lm;

    Point2 v{1.0, 0.0};
    if (r > 1e-300) {
        const Point2 c1{st.s12, lambda - st.s11};
        const Point2 c2{lambda - st.s22, st.s12};
        v = (c1.squared_norm() >= c2.squared_norm() ? c1 : c2).normalized();
    }
    Principal out;
    out.lambda = lambda;
    out.walk_dir = lambda >= 0.0 ? v : v.perp();
    return out;
}

ElementLocator::ElementLocator(const Mesh& mesh) : mesh_(&mesh) {
    Point2 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
    Point2 hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
    double edge_sum = 0.0;
    for (const auto& tri : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            const Point2 p = mesh.nodes[tri[k]];
            lo.x = std::min(lo.x, p.x);
            lo.y = std::min(lo.y, p.y);
            hi.x = std::max(hi.x, p.x);
            hi.y = std::max(hi.y, p.y);
            edge_sum += (mesh.nodes[tri[(k + 1) % 3]] - p).norm();
        }
    }
    cell_ = std::max(1e-6, 2.0 * edge_sum / (3.0 * mesh.triangles.size()));
    origin_ = lo;
    nx_ = std::max(1, static_cast<int>(std::ceil((hi.x - lo.x) / cell_)));
    ny_ = std::max(1, static_cast<int>(std::ceil((hi.y - lo.y) / cell_)));
    bins_.resize(static_cast<std::size_t>(nx_) * ny_);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        Point2 tlo{1e300, 1e300}, thi{-1e300, -1e300};
        for (int k = 0; k < 3; ++k) {
            const Point2 p = mesh.nodes[mesh.triangles[t][k]];
            tlo.x = std::min(tlo.x, p.x);
            tlo.y = std::min(tlo.y, p.y);
            thi.x = std::max(thi.x, p.x);
            thi.y = std::max(thi.y, p.y);
        }
        const int i0 = std::clamp(static_cast<int>((tlo.x - origin_.x) / cell_), 0, nx_ - 1);
        const int i1 = std::clamp(static_cast<int>((thi.x - origin_.x) / cell_), 0, nx_ - 1);
        const int j0 = std::clamp(static_cast<int>((tlo.y - origin_.y) / cell_), 0, ny_ - 1);
        const int j1 = std::clamp(static_cast<int>((thi.y - origin_.y) / cell_), 0, ny_ - 1);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i)
                bins_[static_cast<std::size_t>(j) * nx_ + i].push_back(static_cast<int>(t));
    }
}

std::size_t ElementLocator::locate(Point2 p) const {
    const auto inside = [&](int t) {
        const auto& tri = mesh_->triangles[t];
        const Point2 a = mesh_->nodes[tri[0]];
        const Point2 b = mesh_->nodes[tri[1]];
        const Point2 c = mesh_->nodes[tri[2]];
        const double eps = -1e-12;
        return (b - a).cross(p - a) >= eps && (c - b).cross(p - b) >= eps &&
               (a - c).cross(p - c) >= eps;
    };
    const int ci = std::clamp(static_cast<int>((p.x - origin_.x) / cell_), 0, nx_ - 1);
    const int cj = std::clamp(static_cast<int>((p.y - origin_.y) / cell_), 0, ny_ - 1);
    for (int ring = 0; ring < std::max(nx_, ny_); ++ring) {
        double best_d = std::numeric_limits<double>::infinity();
        int best_t = -1;
        for (int j = std::max(0, cj - ring); j <= std::min(ny_ - 1, cj + ring); ++j) {
            for (int i = std::max(0, ci - ring); i <= std::min(nx_ - 1, ci + ring); ++i) {
                if (ring > 0 && std::abs(i - ci) != ring && std::abs(j - cj) != ring) continue;
                for (int t : bins_[static_cast<std::size_t>(j) * nx_ + i]) {
                    if (inside(t)) return static_cast<std::size_t>(t);
                    const double d = (mesh_->centroid(t) - p).squared_norm();
                    if (d < best_d) {
                        best_d = d;
                        best_t = t;
                    }
                }
            }
        }
        // No containing triangle in this ring: accept the nearest
        // centroid once a full ring produced candidates.
        if (best_t >= 0 && ring >= 1) return static_cast<std::size_t>(best_t);
    }
    throw Error("element lookup failed: empty mesh?");
}

DirectionProvider stress_direction_provider(const Mesh& mesh, const ElementLocator& locator,
                                            std::vector<StressTensor2> field) {
    if (field.size() != mesh.triangles.size()) throw Error("stress field size mismatch");
    return [&locator, field = std::move(field)](Point2 p) {
        return principal(field[locator.locate(p)]).walk_dir;
    };
}

std::vector<double> sampling_weights(const Mesh& mesh, const Domain& domain,
                                     const std::vector<StressTensor2>& plastic_stress,
                                     double clearance) {
    if (plastic_stress.size() != mesh.triangles.size()) throw Error("stress field size mismatch");
    std::vector<double> weights(mesh.triangles.size(), 0.0);
    bool any_admissible = false;
    double total = 0.0;
    for (std::size_t t = 0; t < weights.size(); ++t) {
        if (signed_distance(domain, mesh.centroid(t)) < clearance) continue;
        any_admissible = true;
        weights[t] = std::abs(principal(plastic_stress[t]).lambda) * mesh.triangle_area(t);
        total += weights[t];
    }
    if (!any_admissible) throw Error("no admissible starting elements outside the clearance band");
    if (total <= 0.0) {
        // Zero stress everywhere: uniform over admissible area.
        for (std::size_t t = 0; t < weights.size(); ++t)
            if (signed_distance(domain, mesh.centroid(t)) >= clearance)
                weights[t] = mesh.triangle_area(t);
    }
    return weights;
}

std::size_t sample_element(const std::vector<double>& weights, Rng& rng) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) throw Error("sampling weights are all zero");
    const double u = rng.next_double() * total;
    double acc = 0.0;
    for (std::size_t t = 0; t < weights.size(); ++t) {
        acc += weights[t];
        if (u < acc) return t;
    }
    return weights.size() - 1;
}

namespace {

Point2 rotate(Point2 v, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

} // namespace

FiberPath walk(const DirectionProvider& dir, const Domain& domain, const WalkConfig& cfg,
               Point2 start, Rng& rng) {
    cfg.validate();
    if (signed_distance(domain, start) < cfg.clearance)
        throw Error("walk start violates the clearance band");

    const Point2 v0 = dir(start).normalized();

    struct Side {
        Point2 pos;
        Point2 prev_dir;
        std::vector<Point2> vertices;
        bool alive{true};
    };
    Side fwd{start, v0, {}, true};
    Side bwd{start, v0 * -1.0, {}, true};
    double length = 0.0;

    const auto advance = [&](Side& side) {
        if (!side.alive) return;
        Point2 nominal = dir(side.pos).normalized();
        if (nominal.dot(side.prev_dir) < 0.0) nominal = nominal * -1.0;
        for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
            // Retries redraw an independent rotation of the nominal
            // direction; rotations never compound across steps.
            const Point2 d =
                attempt == 0 ? nominal
                             : rotate(nominal, rng.uniform(-cfg.rotation_range, cfg.rotation_range));
            if (d.dot(side.prev_dir) <= 0.0) continue; // would fold back
            const Point2 next = side.pos + d * cfg.step;
            if (signed_distance(domain, next) < cfg.clearance) continue;
            side.pos = next;
            side.prev_dir = d;
            side.vertices.push_back(next);
            length += cfg.step;
            return;
        }
        side.alive = false;
    };

    // Alternate one step per side until one dies, then drain the other.
    while ((fwd.alive || bwd.alive) && length < cfg.max_length) {
        advance(fwd);
        if (length >= cfg.max_length) break;
        advance(bwd);
    }

    FiberPath path;
    path.vertices.reserve(bwd.vertices.size() + 1 + fwd.vertices.size());
    for (auto it = bwd.vertices.rbegin(); it != bwd.vertices.rend(); ++it)
        path.vertices.push_back(*it);
    path.vertices.push_back(start);
    for (const Point2& p : fwd.vertices) path.vertices.push_back(p);
    return path;
}

FiberPath downsample(const FiberPath& path, int keep) {
    if (keep <= 1 || path.vertices.size() <= 2) return path;
    FiberPath out;
    const std::size_t n = path.vertices.size();
    for (std::size_t i = 0; i < n; i += keep) out.vertices.push_back(path.vertices[i]);
    if ((n - 1) % keep != 0) out.vertices.push_back(path.vertices[n - 1]);
    return out;
}

ExtractionResult extract_candidate(const Evaluator& evaluator, const FiberLayout& layout,
                                   const WalkConfig& cfg, Rng& rng,
                                   const DirectionProvider* dir_override,
                                   const std::vector<StressTensor2>* stress_override) {
    cfg.validate();
    const Mesh& mesh = evaluator.optimization_mesh();

    std::vector<StressTensor2> stress;
    if (stress_override) {
        stress = *stress_override;
    } else {
        const auto results = evaluator.solve_all(layout);
        stress = evaluator.mean_plastic_stress(layout, results);
    }
    const ElementLocator locator(mesh);
    DirectionProvider stress_dir = stress_direction_provider(mesh, locator, stress);
    const DirectionProvider& dir = dir_override ? *dir_override : stress_dir;

    const auto weights = sampling_weights(mesh, evaluator.domain(), stress, cfg.clearance);

    // Subsequence selection always runs at the standard stride so the
    // search cost and the selected window are independent of the output
    // resolution; the winner is re-materialized from the raw walk at
    // cfg.downsample_keep.
    const int selection_keep = std::max(cfg.downsample_keep, 20);

    bool have_best = false;
    ExtractionResult best;
    for (int r = 0; r < cfg.restarts; ++r) {
        Rng walk_rng = rng.split(static_cast<std::uint64_t>(r));
        const std::size_t element = sample_element(weights, walk_rng);
        const Point2 start = mesh.centroid(element);
        const FiberPath raw = walk(dir, evaluator.domain(), cfg, start, walk_rng);
        if (raw.size() < 2) continue;

        const FiberPath coarse = downsample(raw, selection_keep);
        if (coarse.size() < 2) continue;
        FiberLayout probe = layout;
        probe.paths.push_back(coarse);
        FiberPath trimmed = evaluator.best_subsequence(probe, probe.paths.size() - 1);

        // Map the selected window back onto the raw walk; coarse vertex
        // k sits at raw index k * selection_keep (the forced final
        // vertex at the raw end).
        const auto raw_index = [&](const Point2& v) -> std::size_t {
            for (std::size_t k = 0; k < coarse.size(); ++k) {
                if (coarse.vertices[k].x == v.x && coarse.vertices[k].y == v.y) {
                    const std::size_t idx = k * static_cast<std::size_t>(selection_keep);
                    return std::min(idx, raw.size() - 1);
                }
            }
            throw Error("internal: subsequence vertex not on the selection grid");
        };
        const std::size_t r0 = raw_index(trimmed.vertices.front());
        const std::size_t r1 = raw_index(trimmed.vertices.back());
        FiberPath window;
        window.vertices.assign(raw.vertices.begin() + r0, raw.vertices.begin() + r1 + 1);
        FiberPath resolved = downsample(window, cfg.downsample_keep);
        if (resolved.size() < 2) continue;

        probe.paths.back() = resolved;
        const double objective = evaluator.evaluate(probe, /*coarse=*/true).total;
        if (!have_best || objective < best.objective) {
            have_best = true;
            best.path = std::move(resolved);
            best.raw_walk = raw;
            best.objective = objective;
        }
    }
    if (!have_best) throw Error("extraction failed: every restart produced a degenerate walk");
    return best;
}

} // namespace fiberplan
