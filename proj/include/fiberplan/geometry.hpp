#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace fiberplan {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Point2 {
    double x{0.0};
    double y{0.0};

    Point2() = default;
    Point2(double px, double py) : x(px), y(py) {}

    Point2 operator+(Point2 o) const { return {x + o.x, y + o.y}; }
    Point2 operator-(Point2 o) const { return {x - o.x, y - o.y}; }
    Point2 operator*(double s) const { return {x * s, y * s}; }
    Point2 operator/(double s) const { return {x / s, y / s}; }
    Point2& operator+=(Point2 o) { x += o.x; y += o.y; return *this; }

    double dot(Point2 o) const { return x * o.x + y * o.y; }
    double cross(Point2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    double squared_norm() const { return x * x + y * y; }
    Point2 normalized() const {
        const double n = norm();
        return n > 0.0 ? Point2{x / n, y / n} : Point2{0.0, 0.0};
    }
    Point2 perp() const { return {-y, x}; }
};

inline Point2 operator*(double s, Point2 p) { return p * s; }

enum class LoopRole { Outer, Hole };

// Closed polyline; the last vertex implicitly connects back to the first.
// Outer loops run counter-clockwise, hole loops clockwise.
struct Loop {
    std::vector<Point2> vertices;
    LoopRole role{LoopRole::Outer};

    std::size_t size() const { return vertices.size(); }
    Point2 vertex(std::size_t i) const { return vertices[i % vertices.size()]; }
    double signed_area() const;
    double perimeter() const;
    void validate() const; // throws Error on invariant violation
};

// Tagged run of consecutive edges on one loop, starting at vertex
// `first`: edges (first, first+1) ... (first+edge_count-1, first+edge_count),
// indices mod loop size, so ranges may wrap around the loop seam.
struct BoundaryRange {
    std::size_t loop_index{0};
    std::size_t first{0};
    std::size_t edge_count{0};
};

struct Domain {
    Loop outer;
    std::vector<Loop> holes;
    std::map<std::string, std::vector<BoundaryRange>> boundary_tags;

    std::size_t loop_count() const { return 1 + holes.size(); }
    const Loop& loop(std::size_t i) const { return i == 0 ? outer : holes[i - 1]; }
    double area() const; // outer minus holes, by shoelace
    void validate() const;
};

// Shape primitives fed to build_domain. Arcs of radius corner_radius are
// substituted at every corner and discretized at chord length <= 0.2 mm.
struct ShapePrimitive {
    enum class Kind { Rectangle, Polygon, Trapezoid, Circle };
    Kind kind{Kind::Rectangle};

    Point2 center{0.0, 0.0};
    double width{0.0};   // rectangle
    double height{0.0};  // rectangle, trapezoid (extent along axis)
    double short_side{0.0};   // trapezoid parallel side at -axis end
    double long_side{0.0};    // trapezoid parallel side at +axis end
    Point2 axis{1.0, 0.0};    // trapezoid axis direction
    double radius{0.0};       // circle
    double corner_radius{0.0};
    std::vector<Point2> points; // polygon (CCW)
};

struct DomainSpec {
    ShapePrimitive outer;
    std::vector<ShapePrimitive> holes;
};

// Arc discretization chord used when rounding corners. Below the fiber
// width scale, so the geometric error is negligible downstream.
inline constexpr double kArcChord = 0.2;

// Builds the discretized polygon-with-holes domain. Boundary tags are
// generated per primitive: the outer primitive tags its sides as
// "outer.<side>", hole i as "hole<i>.<side>". Rectangle sides are
// left/right/top/bottom, trapezoids short/long/side1/side2, polygons
// edge0..edgeN-1, circles wall. Tags cover only the straight segment of
// a side; rounded-corner arcs stay untagged.
Domain build_domain(const DomainSpec& spec);

// Exact signed distance from p to the domain boundary: positive inside
// the material (holes count as outside), negative outside, zero on the
// boundary.
double signed_distance(const Domain& domain, Point2 p);

// Distance from p to the nearest segment of one loop (unsigned).
double loop_distance(const Loop& loop, Point2 p);

// Signed distance plus its spatial gradient (unit vector pointing away
// from the nearest boundary point; zero exactly on the boundary).
struct SignedDistance {
    double value{0.0};
    Point2 grad{0.0, 0.0};
};
SignedDistance signed_distance_gradient(const Domain& domain, Point2 p);

// True if p is inside the material region.
bool contains(const Domain& domain, Point2 p);

// Distance from point to segment [a, b], plus the clamped projection
// parameter (0 = a, 1 = b). Shared by geometry and material queries.
double point_segment_distance(Point2 p, Point2 a, Point2 b, double* t_out = nullptr);

struct Mesh {
    std::vector<Point2> nodes;
    std::vector<std::array<int, 3>> triangles; // positively oriented
    // Boundary edge (node pair) with the tag of the loop range it
    // discretizes; empty string means untagged.
    struct BoundaryEdge {
        int a{0};
        int b{0};
        std::string tag;
    };
    std::vector<BoundaryEdge> boundary_edges;

    double triangle_area(std::size_t t) const {
        const Point2 p0 = nodes[triangles[t][0]];
        const Point2 p1 = nodes[triangles[t][1]];
        const Point2 p2 = nodes[triangles[t][2]];
        return 0.5 * (p1 - p0).cross(p2 - p0);
    }
    Point2 centroid(std::size_t t) const {
        const Point2 p0 = nodes[triangles[t][0]];
        const Point2 p1 = nodes[triangles[t][1]];
        const Point2 p2 = nodes[triangles[t][2]];
        return (p0 + p1 + p2) / 3.0;
    }
    double total_area() const;
    double min_angle_deg() const;
    double max_edge_length() const;
};

// Conforming triangulation of the domain. Boundary edges inherit loop
// tags; max edge <= 1.5 * target_edge; min interior angle >= 15 deg.
Mesh mesh(const Domain& domain, double target_edge);

enum class OffsetSide { Inner, Outer, AllWalls };

// Concentric-ring offsets. Inner offsets every hole loop into the
// material, outer offsets the outer loop inward, all_walls is the union.
// Offset distance is d_min + (ring_index - 0.5) * w_fiber; loops that
// collapse at that distance are dropped.
std::vector<Loop> offset_loops(const Domain& domain, OffsetSide side, int ring_index,
                               double d_min, double w_fiber);

} // namespace fiberplan
