#include <doctest.h>

#include "fiberplan/material.hpp"
#include "fiberplan/rng.hpp"

#include <cmath>

using namespace fiberplan;

namespace {

FiberPath make_path(std::initializer_list<Point2> pts) {
    FiberPath p;
    p.vertices = pts;
    return p;
}

// Central finite differences of modulus() with respect to every vertex
// coordinate; the independent oracle for modulus_gradient.
std::vector<Point2> fd_modulus_gradient(const FiberLayout& layout, const MaterialParams& params,
                                        Point2 x, std::size_t path, double step = 1e-6) {
    std::vector<Point2> grad(layout.paths[path].size());
    FiberLayout work = layout;
    for (std::size_t v = 0; v < grad.size(); ++v) {
        for (int c = 0; c < 2; ++c) {
            double& coord = c == 0 ? work.paths[path].vertices[v].x : work.paths[path].vertices[v].y;
            const double save = coord;
            coord = save + step;
            const double up = modulus(work, params, x);
            coord = save - step;
            const double dn = modulus(work, params, x);
            coord = save;
            (c == 0 ? grad[v].x : grad[v].y) = (up - dn) / (2.0 * step);
        }
    }
    return grad;
}

std::vector<Point2> dense_gradient(const ModulusGradient& g, std::size_t path, std::size_t n) {
    std::vector<Point2> out(n);
    for (const auto& e : g.entries)
        if (e.path == path) out[e.vertex] += e.d;
    return out;
}

} // namespace

TEST_CASE("dist_point_to_path basics") {
    const FiberPath p = make_path({{0, 0}, {10, 0}});
    CHECK(dist_point_to_path(p, {5, 3}) == doctest::Approx(3.0));
    CHECK(dist_point_to_path(p, {0, 0}) == doctest::Approx(0.0));
    CHECK(dist_point_to_path(p, {-4, 3}) == doctest::Approx(5.0));
}

TEST_CASE("alpha_fiber values") {
    MaterialParams params;
    params.h_fiber = 0.5;
    params.w_fiber = 0.9;
    FiberLayout layout;
    CHECK(alpha_fiber(layout, params, {1, 2}) == 0.0);

    layout.paths.push_back(make_path({{0, 0}, {10, 0}}));
    CHECK(alpha_fiber(layout, params, {5, 0}) == doctest::Approx(0.5));
    // e^-1 at one falloff length (w/2 = 0.45).
    CHECK(alpha_fiber(layout, params, {5, 0.45}) == doctest::Approx(0.5 * std::exp(-1.0)));
}

TEST_CASE("modulus values and overlap clamp") {
    MaterialParams params; // calibrated defaults: 0.40 / 20.1, h 2 / 0.5
    FiberLayout layout;
    CHECK(modulus(layout, params, {0, 0}) == doctest::Approx(0.80));

    layout.paths.push_back(make_path({{0, 0}, {10, 0}}));
    CHECK(modulus(layout, params, {5, 0}) == doctest::Approx(0.40 * 1.5 + 20.1 * 0.5));

    // Two overlapping paths: alpha_fiber = 1.0 > h_fiber, so only the
    // plastic share is clamped.
    layout.paths.push_back(make_path({{0, 0}, {10, 0}}));
    CHECK(alpha_fiber(layout, params, {5, 0}) == doctest::Approx(1.0));
    CHECK(modulus(layout, params, {5, 0}) == doctest::Approx(0.40 * 1.5 + 20.1 * 1.0));
}

TEST_CASE("modulus floor: fiber can only stiffen") {
    MaterialParams params;
    const double floor = params.E_plastic * (params.h_object - params.h_fiber);
    FiberLayout layout;
    layout.paths.push_back(make_path({{0, 0}, {3, 1}, {6, -2}}));
    layout.paths.push_back(make_path({{-5, 4}, {2, 4}}));
    Rng rng(3);
    for (int k = 0; k < 200; ++k) {
        const Point2 x{rng.uniform(-10, 10), rng.uniform(-10, 10)};
        CHECK(modulus(layout, params, x) >= floor - 1e-12);
    }
}

TEST_CASE("adding a path never decreases the modulus") {
    MaterialParams params;
    FiberLayout base;
    base.paths.push_back(make_path({{0, 0}, {5, 0}}));
    FiberLayout more = base;
    more.paths.push_back(make_path({{1, 1}, {4, 2}}));
    Rng rng(11);
    for (int k = 0; k < 200; ++k) {
        const Point2 x{rng.uniform(-5, 10), rng.uniform(-5, 5)};
        CHECK(modulus(more, params, x) >= modulus(base, params, x) - 1e-12);
    }
}

TEST_CASE("modulus_gradient: empty layout") {
    MaterialParams params;
    FiberLayout layout;
    CHECK(modulus_gradient(layout, params, {1, 1}).entries.empty());
}

TEST_CASE("modulus_gradient matches finite differences on a simple path") {
    MaterialParams params;
    FiberLayout layout;
    layout.paths.push_back(make_path({{0, 0}, {10, 0}}));
    const Point2 x{4.0, 0.3};
    const auto analytic = dense_gradient(modulus_gradient(layout, params, x), 0, 2);
    const auto fd = fd_modulus_gradient(layout, params, x, 0);
    for (std::size_t v = 0; v < 2; ++v) {
        CHECK(analytic[v].x == doctest::Approx(fd[v].x).epsilon(1e-5));
        CHECK(analytic[v].y == doctest::Approx(fd[v].y).epsilon(1e-5));
    }
}

TEST_CASE("modulus_gradient random configurations vs finite differences") {
    MaterialParams params;
    Rng rng(1234);
    int checked = 0;
    while (checked < 100) {
        FiberLayout layout;
        FiberPath p;
        const int n = 3 + static_cast<int>(rng.next_below(4));
        Point2 cur{rng.uniform(-5, 5), rng.uniform(-5, 5)};
        p.vertices.push_back(cur);
        for (int v = 1; v < n; ++v) {
            cur += Point2{rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0)};
            p.vertices.push_back(cur);
        }
        layout.paths.push_back(p);
        const Point2 x{rng.uniform(-6, 12), rng.uniform(-7, 7)};
        // Skip degenerate setups: near-zero distance, the deep Gaussian
        // tail (gradient below FD noise), or a near-tie between segments
        // where the subgradient choice is not the FD limit.
        const double d = dist_point_to_path(p, x);
        if (d < 0.05 || d > 1.5) continue;
        double best = 1e30, second = 1e30;
        for (std::size_t s = 0; s + 1 < p.vertices.size(); ++s) {
            const double ds = point_segment_distance(x, p.vertices[s], p.vertices[s + 1]);
            if (ds < best) {
                second = best;
                best = ds;
            } else {
                second = std::min(second, ds);
            }
        }
        if (second - best < 1e-3) continue;

        const auto analytic = dense_gradient(modulus_gradient(layout, params, x), 0, p.size());
        const auto fd = fd_modulus_gradient(layout, params, x, 0);
        double max_abs = 0.0;
        for (const Point2& g : fd) max_abs = std::max({max_abs, std::abs(g.x), std::abs(g.y)});
        // 1e-5 relative to the gradient scale, with a floor at the FD
        // roundoff level.
        const double tol = 1e-5 * max_abs + 1e-10;
        for (std::size_t v = 0; v < p.size(); ++v) {
            CHECK(std::abs(analytic[v].x - fd[v].x) <= tol);
            CHECK(std::abs(analytic[v].y - fd[v].y) <= tol);
        }
        ++checked;
    }
}

TEST_CASE("modulus_gradient tie-break goes to the lower segment index") {
    MaterialParams params;
    FiberLayout layout;
    // Symmetric tent: x is equidistant from both segments.
    layout.paths.push_back(make_path({{-2, 0}, {0, 1}, {2, 0}}));
    const Point2 x{0.0, -0.5};
    const auto g = modulus_gradient(layout, params, x);
    REQUIRE(!g.entries.empty());
    for (const auto& e : g.entries) CHECK(e.vertex <= 1);
}

TEST_CASE("modulus is continuous across the clamp kink") {
    MaterialParams params;
    FiberLayout layout;
    layout.paths.push_back(make_path({{0, 0}, {10, 0}}));
    layout.paths.push_back(make_path({{0, 0.2}, {10, 0.2}}));
    // Scan across y; alpha_fiber crosses h_fiber somewhere in between.
    double prev = modulus(layout, params, {5.0, -1.0});
    for (double y = -1.0; y <= 1.5; y += 0.01) {
        const double cur = modulus(layout, params, {5.0, y});
        CHECK(std::abs(cur - prev) < 0.5); // no jumps at 0.01 mm steps
        prev = cur;
    }
}
