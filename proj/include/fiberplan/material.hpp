#pragma once

#include "fiberplan/geometry.hpp"

#include <vector>

namespace fiberplan {

// Calibrated laminate constants. Moduli are in GPa, lengths in mm.
// The modulus field returned by modulus() is thickness-integrated
// (GPa*mm), so downstream elasticity uses unit thickness.
struct MaterialParams {
    double E_plastic{0.40};
    double E_fiber{20.1};
    double nu{0.3};
    double w_fiber{0.9};
    double h_object{2.0};
    double h_fiber{0.5};
    double l_min{30.0};
    double d_min{1.3};

    void validate() const {
        if (E_plastic <= 0 || E_fiber <= 0 || w_fiber <= 0 || h_object <= 0 || h_fiber <= 0 ||
            l_min <= 0 || d_min <= 0)
            throw Error("material parameters must be positive");
        if (h_fiber > h_object) throw Error("h_fiber must not exceed h_object");
        if (nu <= 0.0 || nu >= 0.5) throw Error("nu must lie in (0, 0.5)");
    }
};

// Open polyline of fiber vertices.
struct FiberPath {
    std::vector<Point2> vertices;

    std::size_t size() const { return vertices.size(); }
    double length() const;
    void validate() const;
};

struct FiberLayout {
    std::vector<FiberPath> paths; // may be empty; paths may overlap

    std::size_t total_vertices() const;
    // Total segment count over all paths: sum(|p| - 1).
    std::size_t total_segments() const;
    double total_length() const;
};

// Minimum distance from x to the polyline.
double dist_point_to_path(const FiberPath& path, Point2 x);

// Gaussian fiber occupancy at x, in mm of fiber height; a sum over
// paths, deliberately uncapped (the cap applies to the plastic share).
double alpha_fiber(const FiberLayout& layout, const MaterialParams& params, Point2 x);

// Single-path contribution to alpha_fiber; lets callers cache the sum
// over an unchanging subset of paths.
double alpha_fiber_path(const FiberPath& path, const MaterialParams& params, Point2 x);

// Plastic share of the laminate thickness at the given fiber occupancy.
inline double alpha_plastic(double a_fiber, const MaterialParams& params) {
    return params.h_object - std::min(a_fiber, params.h_fiber);
}

// Thickness-integrated Young's modulus (GPa*mm) from a precomputed
// fiber occupancy.
inline double modulus_from_alpha(double a_fiber, const MaterialParams& params) {
    return params.E_plastic * alpha_plastic(a_fiber, params) + params.E_fiber * a_fiber;
}

// Thickness-integrated Young's modulus (GPa*mm) at x.
double modulus(const FiberLayout& layout, const MaterialParams& params, Point2 x);

// In-plane shear modulus from the isotropic relation.
inline double shear_modulus(double E, double nu) { return E / (2.0 * (1.0 + nu)); }

// Sparse gradient of modulus(x) with respect to fiber vertex
// coordinates. Entries address (path, vertex) pairs; only the two
// vertices of each path's nearest segment appear (ties resolved toward
// the lower segment index). The alpha_plastic clamp uses its left
// derivative, so alpha_fiber == h_fiber counts as unclamped.
struct ModulusGradient {
    struct Entry {
        std::size_t path;
        std::size_t vertex;
        Point2 d; // dE/d(vertex.x), dE/d(vertex.y)
    };
    std::vector<Entry> entries;
};

ModulusGradient modulus_gradient(const FiberLayout& layout, const MaterialParams& params, Point2 x);

} // namespace fiberplan
