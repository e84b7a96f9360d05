#include "fiberplan/geometry.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

namespace fiberplan {

double point_segment_distance(Point2 p, Point2 a, Point2 b, double* t_out) {
    const Point2 ab = b - a;
    const double len2 = ab.squared_norm();
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    if (t_out) *t_out = t;
    return (p - (a + ab * t)).norm();
}

double Loop::signed_area() const {
    double a = 0.0;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) a += vertices[i].cross(vertices[(i + 1) % n]);
    return 0.5 * a;
}

double Loop::perimeter() const {
    double l = 0.0;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) l += (vertices[(i + 1) % n] - vertices[i]).norm();
    return l;
}

namespace {

bool segments_properly_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
    const auto orient = [](Point2 p, Point2 q, Point2 r) {
        const double v = (q - p).cross(r - p);
        if (v > 1e-12) return 1;
        if (v < -1e-12) return -1;
        return 0;
    };
    const int o1 = orient(a, b, c), o2 = orient(a, b, d);
    const int o3 = orient(c, d, a), o4 = orient(c, d, b);
    return o1 * o2 < 0 && o3 * o4 < 0;
}

} // namespace

void Loop::validate() const {
    const std::size_t n = vertices.size();
    if (n < 3) throw Error("loop needs at least 3 vertices");
    for (const Point2& v : vertices)
        if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw Error("non-finite loop vertex");
    for (std::size_t i = 0; i < n; ++i)
        if ((vertices[(i + 1) % n] - vertices[i]).norm() < 1e-12)
            throw Error("consecutive loop vertices coincide");
    // Simplicity: no two non-adjacent edges may cross.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue; // adjacent around the seam
            if (segments_properly_intersect(vertices[i], vertices[(i + 1) % n],
                                            vertices[j], vertices[(j + 1) % n]))
                throw Error("self-intersecting loop");
        }
    }
    const double a = signed_area();
    if (role == LoopRole::Outer && a <= 0.0) throw Error("outer loop must be counter-clockwise");
    if (role == LoopRole::Hole && a >= 0.0) throw Error("hole loop must be clockwise");
}

double Domain::area() const {
    double a = outer.signed_area();
    for (const Loop& h : holes) a += h.signed_area(); // holes are CW, negative area
    return a;
}

namespace {

// Even-odd ray cast over one loop (half-open rule).
bool point_in_loop(const Loop& loop, Point2 p) {
    bool inside = false;
    const std::size_t n = loop.vertices.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2 a = loop.vertices[i];
        const Point2 b = loop.vertices[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double xi = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (p.x < xi) inside = !inside;
        }
    }
    return inside;
}

} // namespace

bool contains(const Domain& domain, Point2 p) {
    if (!point_in_loop(domain.outer, p)) return false;
    for (const Loop& h : domain.holes)
        if (point_in_loop(h, p)) return false;
    return true;
}

double loop_distance(const Loop& loop, Point2 p) {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = loop.vertices.size();
    for (std::size_t i = 0; i < n; ++i)
        best = std::min(best, point_segment_distance(p, loop.vertices[i], loop.vertices[(i + 1) % n]));
    return best;
}

double signed_distance(const Domain& domain, Point2 p) {
    double d = loop_distance(domain.outer, p);
    for (const Loop& h : domain.holes) d = std::min(d, loop_distance(h, p));
    return contains(domain, p) ? d : -d;
}

SignedDistance signed_distance_gradient(const Domain& domain, Point2 p) {
    double best = std::numeric_limits<double>::infinity();
    Point2 closest;
    for (std::size_t li = 0; li < domain.loop_count(); ++li) {
        const Loop& loop = domain.loop(li);
        const std::size_t n = loop.vertices.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Point2 a = loop.vertices[i];
            const Point2 b = loop.vertices[(i + 1) % n];
            double t;
            const double d = point_segment_distance(p, a, b, &t);
            if (d < best) {
                best = d;
                closest = a + (b - a) * t;
            }
        }
    }
    SignedDistance out;
    const double sign = contains(domain, p) ? 1.0 : -1.0;
    out.value = sign * best;
    if (best > 1e-12) out.grad = (p - closest) * (sign / best);
    return out;
}

void Domain::validate() const {
    if (outer.role != LoopRole::Outer) throw Error("outer loop must have outer role");
    outer.validate();
    for (const Loop& h : holes) {
        if (h.role != LoopRole::Hole) throw Error("hole loop must have hole role");
        h.validate();
        for (const Point2& v : h.vertices)
            if (!point_in_loop(outer, v)) throw Error("hole outside outer loop");
    }
    // Holes pairwise disjoint.
    for (std::size_t i = 0; i < holes.size(); ++i) {
        for (std::size_t j = i + 1; j < holes.size(); ++j) {
            const Loop& a = holes[i];
            const Loop& b = holes[j];
            if (point_in_loop(a, b.vertices[0]) || point_in_loop(b, a.vertices[0]))
                throw Error("holes overlap");
            for (std::size_t ei = 0; ei < a.vertices.size(); ++ei)
                for (std::size_t ej = 0; ej < b.vertices.size(); ++ej)
                    if (segments_properly_intersect(
                            a.vertices[ei], a.vertices[(ei + 1) % a.vertices.size()],
                            b.vertices[ej], b.vertices[(ej + 1) % b.vertices.size()]))
                        throw Error("holes overlap");
        }
    }
    for (const auto& [tag, ranges] : boundary_tags) {
        for (const BoundaryRange& r : ranges) {
            if (r.loop_index >= loop_count()) throw Error("tag '" + tag + "' references missing loop");
            const std::size_t n = loop(r.loop_index).size();
            if (r.first >= n || r.edge_count > n) throw Error("tag '" + tag + "' range out of bounds");
        }
    }
}

namespace {

struct TaggedPolygon {
    std::vector<Point2> vertices; // CCW
    // Edge tag runs: name plus (first vertex, edge count) in CCW order.
    struct Run {
        std::string name;
        std::size_t first;
        std::size_t edge_count;
    };
    std::vector<Run> runs;
};

std::vector<Point2> arc_points(Point2 center, double radius, double a0, double a1) {
    // Sweep from angle a0 to a1 (signed), chord length <= kArcChord.
    const double sweep = a1 - a0;
    const double max_step = 2.0 * std::asin(std::min(1.0, kArcChord / (2.0 * radius)));
    const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(sweep) / max_step)));
    std::vector<Point2> pts;
    pts.reserve(steps + 1);
    for (int k = 0; k <= steps; ++k) {
        const double a = a0 + sweep * (static_cast<double>(k) / steps);
        pts.push_back(center + Point2{radius * std::cos(a), radius * std::sin(a)});
    }
    return pts;
}

// Rounds every corner of a CCW polygon with the given radius, attaching
// the per-edge names of the source polygon to the remaining straight
// segments. Radius 0 passes the polygon through unmodified.
TaggedPolygon round_corners(const std::vector<Point2>& poly,
                            const std::vector<std::string>& edge_names, double radius) {
    const std::size_t n = poly.size();
    TaggedPolygon out;
    if (radius <= 0.0) {
        out.vertices = poly;
        for (std::size_t i = 0; i < n; ++i) out.runs.push_back({edge_names[i], i, 1});
        return out;
    }
    // Corner i joins edge (i-1) and edge i.
    std::vector<std::vector<Point2>> corner_pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 prev = poly[(i + n - 1) % n];
        const Point2 cur = poly[i];
        const Point2 next = poly[(i + 1) % n];
        const Point2 e1 = (cur - prev).normalized();
        const Point2 e2 = (next - cur).normalized();
        const double turn = std::atan2(e1.cross(e2), e1.dot(e2));
        if (std::abs(turn) < 1e-9) {
            corner_pts[i] = {cur};
            continue;
        }
        const double tangent_len = radius * std::tan(std::abs(turn) / 2.0);
        const double len1 = (cur - prev).norm();
        const double len2 = (next - cur).norm();
        if (tangent_len > 0.5 * len1 + 1e-9 || tangent_len > 0.5 * len2 + 1e-9)
            throw Error("corner radius too large for adjacent edge");
        const Point2 t1 = cur - e1 * tangent_len;
        const Point2 t2 = cur + e2 * tangent_len;
        const double side = turn > 0.0 ? 1.0 : -1.0;
        const Point2 center = t1 + e1.perp() * (radius * side);
        const double a0 = std::atan2(t1.y - center.y, t1.x - center.x);
        double a1 = std::atan2(t2.y - center.y, t2.x - center.x);
        // Sweep in the turn direction by exactly |turn|.
        a1 = a0 + turn;
        corner_pts[i] = arc_points(center, radius, a0, a1);
    }
    std::vector<std::size_t> corner_start(n), corner_end(n);
    for (std::size_t i = 0; i < n; ++i) {
        corner_start[i] = out.vertices.size();
        out.vertices.insert(out.vertices.end(), corner_pts[i].begin(), corner_pts[i].end());
        corner_end[i] = out.vertices.size() - 1;
    }
    for (std::size_t i = 0; i < n; ++i)
        out.runs.push_back({edge_names[i], corner_end[i], 1});
    return out;
}

TaggedPolygon primitive_polygon(const ShapePrimitive& p) {
    switch (p.kind) {
        case ShapePrimitive::Kind::Rectangle: {
            if (p.width <= 0.0 || p.height <= 0.0) throw Error("rectangle needs positive width/height");
            const double hw = p.width / 2.0, hh = p.height / 2.0;
            std::vector<Point2> poly = {
                p.center + Point2{-hw, -hh}, p.center + Point2{hw, -hh},
                p.center + Point2{hw, hh}, p.center + Point2{-hw, hh}};
            return round_corners(poly, {"bottom", "right", "top", "left"}, p.corner_radius);
        }
        case ShapePrimitive::Kind::Trapezoid: {
            if (p.short_side <= 0.0 || p.long_side <= 0.0 || p.height <= 0.0)
                throw Error("trapezoid needs positive sides and height");
            const Point2 d = p.axis.normalized();
            if (d.norm() == 0.0) throw Error("trapezoid axis must be nonzero");
            const Point2 q = d.perp();
            const Point2 s_mid = p.center - d * (p.height / 2.0);
            const Point2 l_mid = p.center + d * (p.height / 2.0);
            std::vector<Point2> poly = {
                s_mid - q * (p.short_side / 2.0), l_mid - q * (p.long_side / 2.0),
                l_mid + q * (p.long_side / 2.0), s_mid + q * (p.short_side / 2.0)};
            // Axis pointing +x gives CCW order; otherwise the cross
            // products still keep it CCW since q = rot90(d).
            return round_corners(poly, {"side1", "long", "side2", "short"}, p.corner_radius);
        }
        case ShapePrimitive::Kind::Circle: {
            if (p.radius <= 0.0) throw Error("circle needs positive radius");
            TaggedPolygon out;
            const double max_step = 2.0 * std::asin(std::min(1.0, kArcChord / (2.0 * p.radius)));
            const int steps = std::max(8, static_cast<int>(std::ceil(2.0 * M_PI / max_step)));
            for (int k = 0; k < steps; ++k) {
                const double a = 2.0 * M_PI * k / steps;
                out.vertices.push_back(p.center + Point2{p.radius * std::cos(a), p.radius * std::sin(a)});
            }
            out.runs.push_back({"wall", 0, static_cast<std::size_t>(steps)});
            return out;
        }
        case ShapePrimitive::Kind::Polygon: {
            if (p.points.size() < 3) throw Error("polygon needs at least 3 points");
            std::vector<std::string> names;
            for (std::size_t i = 0; i < p.points.size(); ++i) names.push_back("edge" + std::to_string(i));
            std::vector<Point2> pts = p.points;
            if (p.center.x != 0.0 || p.center.y != 0.0)
                for (Point2& v : pts) v += p.center;
            return round_corners(pts, names, p.corner_radius);
        }
    }
    throw Error("unknown primitive kind");
}

// Reverses a CCW tagged polygon into CW order, remapping tag runs.
void reverse_polygon(TaggedPolygon& poly) {
    const std::size_t n = poly.vertices.size();
    std::reverse(poly.vertices.begin(), poly.vertices.end());
    for (auto& run : poly.runs) {
        // Old edge e = (e, e+1) maps to new edge n-2-e (mod n).
        const std::size_t last_old_edge = run.first + run.edge_count - 1;
        run.first = (2 * n - 2 - last_old_edge) % n;
    }
}

} // namespace

Domain build_domain(const DomainSpec& spec) {
    Domain domain;
    TaggedPolygon outer = primitive_polygon(spec.outer);
    domain.outer.vertices = outer.vertices;
    domain.outer.role = LoopRole::Outer;
    for (const auto& run : outer.runs)
        domain.boundary_tags["outer." + run.name].push_back({0, run.first, run.edge_count});

    for (std::size_t h = 0; h < spec.holes.size(); ++h) {
        TaggedPolygon hole = primitive_polygon(spec.holes[h]);
        reverse_polygon(hole);
        Loop loop;
        loop.vertices = hole.vertices;
        loop.role = LoopRole::Hole;
        domain.holes.push_back(std::move(loop));
        const std::string prefix = "hole" + std::to_string(h) + ".";
        for (const auto& run : hole.runs)
            domain.boundary_tags[prefix + run.name].push_back({h + 1, run.first, run.edge_count});
    }
    domain.validate();
    return domain;
}

double Mesh::total_area() const {
    double a = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) a += triangle_area(t);
    return a;
}

double Mesh::min_angle_deg() const {
    double worst = 180.0;
    for (const auto& tri : triangles) {
        for (int k = 0; k < 3; ++k) {
            const Point2 a = nodes[tri[k]];
            const Point2 b = nodes[tri[(k + 1) % 3]];
            const Point2 c = nodes[tri[(k + 2) % 3]];
            const Point2 u = (b - a).normalized();
            const Point2 v = (c - a).normalized();
            const double ang = std::atan2(std::abs(u.cross(v)), u.dot(v)) * 180.0 / M_PI;
            worst = std::min(worst, ang);
        }
    }
    return worst;
}

double Mesh::max_edge_length() const {
    double worst = 0.0;
    for (const auto& tri : triangles)
        for (int k = 0; k < 3; ++k)
            worst = std::max(worst, (nodes[tri[(k + 1) % 3]] - nodes[tri[k]]).norm());
    return worst;
}

} // namespace fiberplan
