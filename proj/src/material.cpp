#include "fiberplan/material.hpp"

#include <limits>

namespace fiberplan {

double FiberPath::length() const {
    double l = 0.0;
    for (std::size_t i = 1; i < vertices.size(); ++i) l += (vertices[i] - vertices[i - 1]).norm();
    return l;
}

void FiberPath::validate() const {
    if (vertices.size() < 2) throw Error("fiber path needs at least 2 vertices");
    for (std::size_t i = 1; i < vertices.size(); ++i)
        if ((vertices[i] - vertices[i - 1]).norm() < 1e-12)
            throw Error("consecutive fiber vertices coincide");
}

std::size_t FiberLayout::total_vertices() const {
    std::size_t n = 0;
    for (const FiberPath& p : paths) n += p.size();
    return n;
}

std::size_t FiberLayout::total_segments() const {
    std::size_t n = 0;
    for (const FiberPath& p : paths) n += p.size() - 1;
    return n;
}

double FiberLayout::total_length() const {
    double l = 0.0;
    for (const FiberPath& p : paths) l += p.length();
    return l;
}

double dist_point_to_path(const FiberPath& path, Point2 x) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i)
        best = std::min(best, point_segment_distance(x, path.vertices[i], path.vertices[i + 1]));
    return best;
}

double alpha_fiber_path(const FiberPath& path, const MaterialParams& params, Point2 x) {
    const double d = dist_point_to_path(path, x);
    const double s = d / (params.w_fiber / 2.0);
    return std::exp(-s * s) * params.h_fiber;
}

double alpha_fiber(const FiberLayout& layout, const MaterialParams& params, Point2 x) {
    double a = 0.0;
    for (const FiberPath& p : layout.paths) a += alpha_fiber_path(p, params, x);
    return a;
}

double modulus(const FiberLayout& layout, const MaterialParams& params, Point2 x) {
    return modulus_from_alpha(alpha_fiber(layout, params, x), params);
}

ModulusGradient modulus_gradient(const FiberLayout& layout, const MaterialParams& params,
                                 Point2 x) {
    ModulusGradient grad;
    if (layout.paths.empty()) return grad;

    const double a_fiber = alpha_fiber(layout, params, x);
    // dE/d(alpha_fiber): the clamp removes the plastic term once
    // alpha_fiber exceeds h_fiber; at equality the left derivative
    // applies (unclamped).
    const double dE_da = params.E_fiber - (a_fiber <= params.h_fiber ? params.E_plastic : 0.0);

    const double half_w = params.w_fiber / 2.0;
    for (std::size_t pi = 0; pi < layout.paths.size(); ++pi) {
        const FiberPath& path = layout.paths[pi];
        // Nearest segment; ties go to the lower segment index.
        double best_d = std::numeric_limits<double>::infinity();
        std::size_t best_seg = 0;
        double best_t = 0.0;
        for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i) {
            double t;
            const double d = point_segment_distance(x, path.vertices[i], path.vertices[i + 1], &t);
            if (d < best_d) {
                best_d = d;
                best_seg = i;
                best_t = t;
            }
        }
        const double s = best_d / half_w;
        // d(alpha_path)/d(dist) vanishes at dist = 0, which also covers
        // the undefined distance direction there.
        const double da_dd = -2.0 * (best_d / (half_w * half_w)) * std::exp(-s * s) * params.h_fiber;
        if (best_d < 1e-12 || da_dd == 0.0) continue;

        const Point2 a = path.vertices[best_seg];
        const Point2 b = path.vertices[best_seg + 1];
        const Point2 closest = a + (b - a) * best_t;
        const Point2 dir = (closest - x) / best_d; // d(dist)/d(closest)
        const double scale = dE_da * da_dd;
        const Point2 ga = dir * ((1.0 - best_t) * scale);
        const Point2 gb = dir * (best_t * scale);
        if (ga.norm() > 0.0) grad.entries.push_back({pi, best_seg, ga});
        if (gb.norm() > 0.0) grad.entries.push_back({pi, best_seg + 1, gb});
    }
    return grad;
}

} // namespace fiberplan
