#include <doctest.h>

#include "fiberplan/objective.hpp"
#include "fiberplan/rng.hpp"

#include <cmath>

using namespace fiberplan;

namespace {

FiberPath make_path(std::initializer_list<Point2> pts) {
    FiberPath p;
    p.vertices = pts;
    return p;
}

Domain square_domain(double side) {
    DomainSpec spec;
    spec.outer.kind = ShapePrimitive::Kind::Rectangle;
    spec.outer.width = side;
    spec.outer.height = side;
    return build_domain(spec);
}

LoadCase side_tension(double dx) {
    LoadCase lc;
    lc.dirichlet.push_back({"outer.left", {-dx, 0.0}, DofMask::Both});
    lc.dirichlet.push_back({"outer.right", {dx, 0.0}, DofMask::Both});
    return lc;
}

Evaluator square_evaluator(double side, double target_edge, MaterialParams params = {},
                           ObjectiveWeights weights = {}) {
    Domain d = square_domain(side);
    Mesh m = mesh(d, target_edge);
    return Evaluator(std::move(d), std::move(m), params, {side_tension(0.5)}, weights);
}

} // namespace

TEST_CASE("laplacian_reg closed forms") {
    FiberLayout layout;
    layout.paths.push_back(make_path({{0, 0}, {1, 0}, {2, 0}, {3, 0}}));
    CHECK(laplacian_reg(layout) == doctest::Approx(0.0));

    FiberLayout tent;
    tent.paths.push_back(make_path({{0, 0}, {1, 1}, {2, 0}}));
    CHECK(laplacian_reg(tent) == doctest::Approx(8.0));

    FiberLayout two = tent;
    two.paths.push_back(tent.paths[0]);
    // Doubling the segment count scales the multiplier 8x while the
    // deviation sum doubles: 16x in total.
    CHECK(laplacian_reg(two) == doctest::Approx(16.0 * laplacian_reg(tent)));
}

TEST_CASE("laplacian_reg is rigid-motion invariant") {
    Rng rng(21);
    FiberLayout layout;
    for (int p = 0; p < 2; ++p) {
        FiberPath path;
        Point2 cur{rng.uniform(-5, 5), rng.uniform(-5, 5)};
        path.vertices.push_back(cur);
        for (int i = 0; i < 6; ++i) {
            cur += Point2{rng.uniform(0.3, 1.0), rng.uniform(-0.5, 0.5)};
            path.vertices.push_back(cur);
        }
        layout.paths.push_back(path);
    }
    const double base = laplacian_reg(layout);
    const double angle = 0.7;
    const Point2 shift{3.2, -1.4};
    FiberLayout moved = layout;
    for (FiberPath& p : moved.paths) {
        for (Point2& v : p.vertices) {
            const Point2 r{v.x * std::cos(angle) - v.y * std::sin(angle),
                           v.x * std::sin(angle) + v.y * std::cos(angle)};
            v = r + shift;
        }
    }
    CHECK(laplacian_reg(moved) == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("min_length_reg hinge") {
    FiberPath long_path = make_path({{0, 0}, {100, 0}});
    CHECK(min_length_reg(long_path, 30.0) == 0.0);
    FiberPath short_path = make_path({{0, 0}, {20, 0}});
    CHECK(min_length_reg(short_path, 30.0) == doctest::Approx(100.0));
    FiberPath exact = make_path({{0, 0}, {30, 0}});
    CHECK(min_length_reg(exact, 30.0) == 0.0);
}

TEST_CASE("boundary_reg hinge") {
    const Domain d = square_domain(20.0); // boundary at +-10
    FiberPath inside = make_path({{-5, 0}, {5, 0}});
    CHECK(boundary_reg(inside, d, 1.3) == 0.0);
    FiberPath close = make_path({{0, 0}, {9.7, 0}}); // distance 0.3
    CHECK(boundary_reg(close, d, 1.3) == doctest::Approx(1.0));
    FiberPath outside = make_path({{0, 0}, {11, 0}}); // 1 mm outside
    CHECK(boundary_reg(outside, d, 1.3) == doctest::Approx(2.3 * 2.3));
}

TEST_CASE("evaluate: breakdown additivity and empty layout") {
    const Evaluator ev = square_evaluator(20.0, 4.0);
    FiberLayout empty;
    const ObjectiveBreakdown b = ev.evaluate(empty);
    CHECK(b.total == doctest::Approx(b.neg_energy));
    CHECK(b.neg_energy < 0.0);
    CHECK(b.lap == 0.0);
    CHECK(b.min_l == 0.0);
    CHECK(b.bdy == 0.0);

    FiberLayout layout;
    layout.paths.push_back(make_path({{-6, 0}, {0, 1}, {6, 0}}));
    const ObjectiveBreakdown f = ev.evaluate(layout);
    const ObjectiveWeights w = ev.weights();
    const double recomputed =
        f.neg_energy + w.w_lap * f.lap + w.w_min_l * f.min_l + w.w_bdy * f.bdy;
    CHECK(std::abs(f.total - recomputed) <= 1e-12 * std::abs(f.total));
}

TEST_CASE("evaluate: multi-load mean equals separate solves") {
    Domain d = square_domain(20.0);
    Mesh m = mesh(d, 4.0);
    MaterialParams params;
    std::vector<LoadCase> loads;
    loads.push_back(side_tension(0.5));
    {
        LoadCase vertical;
        vertical.dirichlet.push_back({"outer.bottom", {0.0, -0.3}, DofMask::Both});
        vertical.dirichlet.push_back({"outer.top", {0.0, 0.3}, DofMask::Both});
        loads.push_back(vertical);
    }
    Evaluator both(d, m, params, loads, ObjectiveWeights{});
    FiberLayout layout;
    layout.paths.push_back(make_path({{-6, -2}, {6, 2}}));

    Evaluator first(d, m, params, {loads[0]}, ObjectiveWeights{});
    Evaluator second(d, m, params, {loads[1]}, ObjectiveWeights{});
    const double mean = both.mean_energy(layout);
    const double expect = 0.5 * (first.mean_energy(layout) + second.mean_energy(layout));
    CHECK(mean == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("gradient: regularizers only, flat modulus") {
    // E_fiber == E_plastic makes the modulus field independent of the
    // path position (single path never exceeds h_fiber), zeroing the
    // energy term of the gradient.
    MaterialParams params;
    params.E_fiber = params.E_plastic;
    params.l_min = 40.0; // active hinge for a short path
    Evaluator ev = square_evaluator(20.0, 4.0, params);

    FiberLayout layout;
    layout.paths.push_back(make_path({{-6, -1}, {-2, 2}, {3, 1.2}, {6, -8.9}}));
    const Eigen::VectorXd g = ev.gradient(layout);

    Eigen::VectorXd fd(g.size());
    const double step = 1e-6;
    for (int i = 0; i < g.size(); ++i) {
        FiberLayout work = layout;
        Eigen::VectorXd x = flatten(layout);
        x[i] += step;
        unflatten(x, work);
        const double up = ev.evaluate(work).total;
        x[i] -= 2 * step;
        unflatten(x, work);
        const double dn = ev.evaluate(work).total;
        fd[i] = (up - dn) / (2 * step);
    }
    const double scale = fd.cwiseAbs().maxCoeff();
    for (int i = 0; i < g.size(); ++i) CHECK(std::abs(g[i] - fd[i]) <= 1e-7 * scale + 1e-12);
}

TEST_CASE("gradient: interior straight path reduces to the energy term") {
    // Collinear (zero Laplacian), longer than l_min, and clear of the
    // boundary band: every regularizer is zero with zero gradient.
    MaterialParams params;
    params.l_min = 10.0;
    Domain d = square_domain(30.0);
    Mesh m = mesh(d, 4.0);
    Evaluator ev(d, m, params, {side_tension(0.5)}, ObjectiveWeights{});
    FiberLayout layout;
    layout.paths.push_back(make_path({{-12, 0}, {0, 0}, {12, 0}}));

    const Eigen::VectorXd g = ev.gradient(layout);
    const auto results = ev.solve_all(layout);
    const auto dU = stiffness_sensitivity(m, layout, params, results[0]);
    for (int i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(-dU[0][i]).epsilon(1e-12));
}

TEST_CASE("best_subsequence basics") {
    Evaluator ev = square_evaluator(20.0, 4.0);
    SUBCASE("two-vertex path returns itself") {
        FiberLayout layout;
        layout.paths.push_back(make_path({{-5, 0}, {5, 0}}));
        const FiberPath out = ev.best_subsequence(layout, 0);
        CHECK(out.size() == 2);
        CHECK(out.vertices[0].x == -5.0);
    }
    SUBCASE("candidate evaluation count is n(n-1)/2") {
        FiberLayout layout;
        FiberPath p;
        for (int i = 0; i < 8; ++i) p.vertices.push_back({-7.0 + 2.0 * i, 0.0});
        layout.paths.push_back(p);
        ev.reset_evaluation_count();
        ev.best_subsequence(layout, 0);
        CHECK(ev.evaluation_count() == 8 * 7 / 2);
    }
}

TEST_CASE("best_subsequence trims a penalized dangling tail") {
    // Tail vertices dive into the boundary band where the penalty
    // dwarfs any energy gain; exhaustive scoring confirms the winner.
    MaterialParams params;
    params.l_min = 5.0;
    Domain d = square_domain(20.0);
    Mesh m = mesh(d, 4.0);
    Evaluator ev(d, m, params, {side_tension(0.5)}, ObjectiveWeights{});

    // The tail exits the part, where the boundary penalty dwarfs any
    // stiffness the escaped fiber can still contribute.
    FiberPath p = make_path({{-7, 0}, {-3, 0}, {1, 0}, {5, 0}, {8.5, -1}, {11.0, -4}, {13.0, -8}});
    FiberLayout layout;
    layout.paths.push_back(p);
    const FiberPath chosen = ev.best_subsequence(layout, 0);

    double best_score = 1e300;
    FiberPath best;
    for (std::size_t a = 0; a < p.size(); ++a) {
        for (std::size_t b = a + 1; b < p.size(); ++b) {
            FiberPath sub;
            sub.vertices.assign(p.vertices.begin() + a, p.vertices.begin() + b + 1);
            FiberLayout probe;
            probe.paths.push_back(sub);
            const double score = ev.evaluate(probe).total;
            if (score < best_score) {
                best_score = score;
                best = sub;
            }
        }
    }
    REQUIRE(chosen.size() == best.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        CHECK(chosen.vertices[i].x == doctest::Approx(best.vertices[i].x));
        CHECK(chosen.vertices[i].y == doctest::Approx(best.vertices[i].y));
    }
    // The dangling tail is gone.
    CHECK(chosen.vertices.back().y > -2.0);
}
