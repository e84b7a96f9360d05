#include "fiberplan/objective.hpp"

#include "fiberplan/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fiberplan {

double laplacian_reg(const FiberLayout& layout) {
    const double s = static_cast<double>(layout.total_segments());
    double sum = 0.0;
    for (const FiberPath& p : layout.paths) {
        for (std::size_t i = 1; i + 1 < p.vertices.size(); ++i) {
            const Point2 mid = (p.vertices[i - 1] + p.vertices[i + 1]) * 0.5;
            sum += (p.vertices[i] - mid).squared_norm();
        }
    }
    return s * s * s * sum;
}

double min_length_reg(const FiberPath& path, double l_min) {
    const double deficit = std::max(l_min - path.length(), 0.0);
    return deficit * deficit;
}

double boundary_reg(const FiberPath& path, const Domain& domain, double d_min) {
    double sum = 0.0;
    for (const Point2& v : path.vertices) {
        const double gap = std::max(d_min - signed_distance(domain, v), 0.0);
        sum += gap * gap;
    }
    return sum;
}

double mean_squared_vertex_laplacian(const FiberLayout& layout) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const FiberPath& p : layout.paths) {
        for (std::size_t i = 1; i + 1 < p.vertices.size(); ++i) {
            const Point2 mid = (p.vertices[i - 1] + p.vertices[i + 1]) * 0.5;
            sum += (p.vertices[i] - mid).squared_norm();
            ++count;
        }
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}

Eigen::VectorXd flatten(const FiberLayout& layout) {
    Eigen::VectorXd x(2 * layout.total_vertices());
    std::size_t k = 0;
    for (const FiberPath& p : layout.paths) {
        for (const Point2& v : p.vertices) {
            x[k++] = v.x;
            x[k++] = v.y;
        }
    }
    return x;
}

void unflatten(const Eigen::VectorXd& x, FiberLayout& layout) {
    std::size_t k = 0;
    for (FiberPath& p : layout.paths) {
        for (Point2& v : p.vertices) {
            v.x = x[k++];
            v.y = x[k++];
        }
    }
}

Evaluator::Evaluator(Domain domain, Mesh optimization_mesh, MaterialParams params,
                     std::vector<LoadCase> loads, ObjectiveWeights weights,
                     std::optional<Mesh> subsequence_mesh)
    : domain_(std::move(domain)),
      mesh_(std::make_unique<Mesh>(std::move(optimization_mesh))),
      params_(params),
      loads_(std::move(loads)),
      weights_(weights),
      eval_count_(std::make_unique<std::atomic<std::uint64_t>>(0)) {
    params_.validate();
    weights_.validate();
    if (loads_.empty()) throw Error("scenario needs at least one load case");
    if (subsequence_mesh) subseq_mesh_ = std::make_unique<Mesh>(std::move(*subsequence_mesh));
    systems_.reserve(loads_.size());
    for (const LoadCase& lc : loads_) systems_.emplace_back(*mesh_, params_, lc);
    if (subseq_mesh_) {
        subseq_systems_.reserve(loads_.size());
        for (const LoadCase& lc : loads_) subseq_systems_.emplace_back(*subseq_mesh_, params_, lc);
    }
}

ObjectiveBreakdown Evaluator::assemble(const FiberLayout& layout, double mean_energy) const {
    ObjectiveBreakdown b;
    b.neg_energy = -mean_energy;
    b.lap = laplacian_reg(layout);
    for (const FiberPath& p : layout.paths) {
        b.min_l += min_length_reg(p, params_.l_min) + length_budget_penalty(p);
        b.bdy += boundary_reg(p, domain_, params_.d_min);
    }
    b.total = b.neg_energy + weights_.w_lap * b.lap + weights_.w_min_l * b.min_l +
              weights_.w_bdy * b.bdy;
    return b;
}

ObjectiveBreakdown Evaluator::evaluate(const FiberLayout& layout, bool coarse) const {
    const auto& systems = (coarse && !subseq_systems_.empty()) ? subseq_systems_ : systems_;
    double energy = 0.0;
    for (const FemSystem& sys : systems) energy += sys.solve(layout).strain_energy;
    energy /= static_cast<double>(systems.size());
    eval_count_->fetch_add(1, std::memory_order_relaxed);
    return assemble(layout, energy);
}

std::vector<double> Evaluator::case_energies(const FiberLayout& layout) const {
    std::vector<double> energies;
    energies.reserve(systems_.size());
    for (const FemSystem& sys : systems_) energies.push_back(sys.solve(layout).strain_energy);
    return energies;
}

double Evaluator::mean_energy(const FiberLayout& layout) const {
    const auto e = case_energies(layout);
    double sum = 0.0;
    for (double v : e) sum += v;
    return sum / static_cast<double>(e.size());
}

std::vector<SolveResult> Evaluator::solve_all(const FiberLayout& layout) const {
    std::vector<SolveResult> results;
    results.reserve(systems_.size());
    for (const FemSystem& sys : systems_) results.push_back(sys.solve(layout));
    return results;
}

std::vector<StressTensor2> Evaluator::mean_plastic_stress(
    const FiberLayout& layout, const std::vector<SolveResult>& results) const {
    const std::size_t n = mesh_->triangles.size();
    std::vector<StressTensor2> mean(n);
    for (const SolveResult& r : results) {
        for (std::size_t t = 0; t < n; ++t) {
            const StressTensor2 sp = plastic_stress(r, *mesh_, layout, params_, t);
            mean[t].s11 += sp.s11;
            mean[t].s22 += sp.s22;
            mean[t].s12 += sp.s12;
        }
    }
    const double inv = 1.0 / static_cast<double>(results.size());
    for (StressTensor2& s : mean) {
        s.s11 *= inv;
        s.s22 *= inv;
        s.s12 *= inv;
    }
    return mean;
}

double Evaluator::length_budget_penalty(const FiberPath& path) const {
    if (!std::isfinite(length_budget)) return 0.0;
    const double excess = std::max(path.length() - length_budget, 0.0);
    return excess * excess;
}

Eigen::VectorXd Evaluator::gradient(const FiberLayout& layout) const {
    const std::size_t dim = 2 * layout.total_vertices();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);

    // Energy term: -dU/dP averaged over load cases, via the adjoint
    // identity on each solve.
    const double case_weight = 1.0 / static_cast<double>(systems_.size());
    for (const FemSystem& sys : systems_) {
        const SolveResult r = sys.solve(layout);
        const auto dU = stiffness_sensitivity(*mesh_, layout, params_, r);
        std::size_t offset = 0;
        for (std::size_t pi = 0; pi < layout.paths.size(); ++pi) {
            g.segment(offset, dU[pi].size()) -= case_weight * dU[pi];
            offset += dU[pi].size();
        }
    }

    // Laplacian regularizer: s^3 is constant w.r.t. coordinates.
    const double s = static_cast<double>(layout.total_segments());
    const double s3 = weights_.w_lap * s * s * s;
    std::size_t offset = 0;
    for (const FiberPath& p : layout.paths) {
        for (std::size_t i = 1; i + 1 < p.vertices.size(); ++i) {
            const Point2 r = p.vertices[i] - (p.vertices[i - 1] + p.vertices[i + 1]) * 0.5;
            const std::size_t vi = offset + 2 * i;
            g[vi] += s3 * 2.0 * r.x;
            g[vi + 1] += s3 * 2.0 * r.y;
            g[offset + 2 * (i - 1)] -= s3 * r.x;
            g[offset + 2 * (i - 1) + 1] -= s3 * r.y;
            g[offset + 2 * (i + 1)] -= s3 * r.x;
            g[offset + 2 * (i + 1) + 1] -= s3 * r.y;
        }
        offset += 2 * p.size();
    }

    // Length hinges: the minimum-length term grows short paths, the
    // budget term shrinks over-long ones; both one-sided at the kink.
    offset = 0;
    for (const FiberPath& p : layout.paths) {
        const double len = p.length();
        const double deficit = params_.l_min - len;
        const double excess =
            std::isfinite(length_budget) ? std::max(len - length_budget, 0.0) : 0.0;
        double c = 0.0;
        if (deficit > 0.0) c = -2.0 * weights_.w_min_l * deficit;
        if (excess > 0.0) c = 2.0 * weights_.w_min_l * excess;
        if (c != 0.0) {
            for (std::size_t i = 1; i < p.vertices.size(); ++i) {
                const Point2 u = (p.vertices[i] - p.vertices[i - 1]).normalized();
                g[offset + 2 * i] += c * u.x;
                g[offset + 2 * i + 1] += c * u.y;
                g[offset + 2 * (i - 1)] -= c * u.x;
                g[offset + 2 * (i - 1) + 1] -= c * u.y;
            }
        }
        offset += 2 * p.size();
    }

    // Boundary hinge via the signed-distance gradient.
    offset = 0;
    for (const FiberPath& p : layout.paths) {
        for (std::size_t i = 0; i < p.vertices.size(); ++i) {
            const SignedDistance sd = signed_distance_gradient(domain_, p.vertices[i]);
            const double gap = params_.d_min - sd.value;
            if (gap > 0.0) {
                const double c = -2.0 * weights_.w_bdy * gap;
                g[offset + 2 * i] += c * sd.grad.x;
                g[offset + 2 * i + 1] += c * sd.grad.y;
            }
        }
        offset += 2 * p.size();
    }
    return g;
}

FiberPath Evaluator::best_subsequence(const FiberLayout& layout, std::size_t path_index,
                                      double max_length) const {
    const FiberPath& path = layout.paths.at(path_index);
    const std::size_t n = path.size();
    if (n < 2) throw Error("best_subsequence needs at least 2 vertices");
    if (n == 2) return path;

    // Cumulative arc length for O(1) candidate-length checks.
    std::vector<double> arclen(n, 0.0);
    for (std::size_t i = 1; i < n; ++i)
        arclen[i] = arclen[i - 1] + (path.vertices[i] - path.vertices[i - 1]).norm();

    // Candidate endpoint grid; strided when the exhaustive search would
    // exceed the evaluation budget.
    std::vector<std::size_t> endpoints;
    const std::size_t full_count = n * (n - 1) / 2;
    if (full_count <= max_subsequence_candidates) {
        endpoints.resize(n);
        for (std::size_t i = 0; i < n; ++i) endpoints[i] = i;
    } else {
        const std::size_t stride = static_cast<std::size_t>(std::ceil(
            static_cast<double>(n) / std::sqrt(2.0 * static_cast<double>(max_subsequence_candidates))));
        for (std::size_t i = 0; i < n; i += stride) endpoints.push_back(i);
        if (endpoints.back() != n - 1) endpoints.push_back(n - 1);
    }

    struct Candidate {
        std::size_t first, last; // inclusive vertex range
    };
    std::vector<Candidate> candidates;
    Candidate shortest{0, n - 1};
    double shortest_len = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < endpoints.size(); ++a) {
        for (std::size_t b = a + 1; b < endpoints.size(); ++b) {
            const double len = arclen[endpoints[b]] - arclen[endpoints[a]];
            if (len < shortest_len) {
                shortest_len = len;
                shortest = {endpoints[a], endpoints[b]};
            }
            if (len > max_length) continue;
            candidates.push_back({endpoints[a], endpoints[b]});
        }
    }
    if (candidates.empty()) candidates.push_back(shortest);

    const bool coarse = !subseq_systems_.empty();
    const auto& systems = coarse ? subseq_systems_ : systems_;
    const Mesh& eval_mesh = coarse ? *subseq_mesh_ : *mesh_;

    // Fiber occupancy of the unchanged paths, computed once per centroid.
    std::vector<double> base_alpha(eval_mesh.triangles.size(), 0.0);
    for (std::size_t pi = 0; pi < layout.paths.size(); ++pi) {
        if (pi == path_index) continue;
        for (std::size_t t = 0; t < base_alpha.size(); ++t)
            base_alpha[t] += alpha_fiber_path(layout.paths[pi], params_, eval_mesh.centroid(t));
    }
    // Segment counts of the other paths, for the Laplacian multiplier.
    std::size_t other_segments = 0;
    for (std::size_t pi = 0; pi < layout.paths.size(); ++pi)
        if (pi != path_index) other_segments += layout.paths[pi].size() - 1;

    std::vector<double> scores(candidates.size());
    parallel_for(candidates.size(), [&](std::size_t k) {
        const auto [first, last] = candidates[k];
        FiberPath sub;
        sub.vertices.assign(path.vertices.begin() + first, path.vertices.begin() + last + 1);

        std::vector<double> moduli(base_alpha.size());
        for (std::size_t t = 0; t < moduli.size(); ++t)
            moduli[t] = modulus_from_alpha(
                base_alpha[t] + alpha_fiber_path(sub, params_, eval_mesh.centroid(t)), params_);

        double energy = 0.0;
        for (const FemSystem& sys : systems) energy += sys.solve_with_moduli(moduli).strain_energy;
        energy /= static_cast<double>(systems.size());
        eval_count_->fetch_add(1, std::memory_order_relaxed);

        // Regularizers with the candidate substituted.
        const double s = static_cast<double>(other_segments + sub.size() - 1);
        double lap = 0.0;
        for (std::size_t pi = 0; pi < layout.paths.size(); ++pi) {
            const FiberPath& q = pi == path_index ? sub : layout.paths[pi];
            for (std::size_t i = 1; i + 1 < q.vertices.size(); ++i) {
                const Point2 mid = (q.vertices[i - 1] + q.vertices[i + 1]) * 0.5;
                lap += (q.vertices[i] - mid).squared_norm();
            }
        }
        lap *= s * s * s;
        double min_l = 0.0, bdy = 0.0;
        for (std::size_t pi = 0; pi < layout.paths.size(); ++pi) {
            const FiberPath& q = pi == path_index ? sub : layout.paths[pi];
            min_l += min_length_reg(q, params_.l_min) + length_budget_penalty(q);
            bdy += boundary_reg(q, domain_, params_.d_min);
        }
        scores[k] = -energy + weights_.w_lap * lap + weights_.w_min_l * min_l +
                    weights_.w_bdy * bdy;
    });

    std::size_t best = 0;
    for (std::size_t k = 1; k < candidates.size(); ++k) {
        const auto len = [&](std::size_t i) { return candidates[i].last - candidates[i].first; };
        if (scores[k] < scores[best] ||
            (scores[k] == scores[best] &&
             (len(k) > len(best) ||
              (len(k) == len(best) && candidates[k].first < candidates[best].first))))
            best = k;
    }
    FiberPath out;
    out.vertices.assign(path.vertices.begin() + candidates[best].first,
                        path.vertices.begin() + candidates[best].last + 1);
    return out;
}

} // namespace fiberplan
