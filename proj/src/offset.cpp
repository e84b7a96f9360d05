#include "fiberplan/geometry.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <unordered_map>

// Loop offsetting via level-set extraction: the offset curve at distance
// d from a source loop is the d-isocontour of the loop's unsigned
// distance field, restricted to the material side. Marching squares on a
// fine grid handles miters, fillets, topology changes, and collapse
// uniformly; loops that vanish at a given distance simply produce no
// contour.

namespace fiberplan {

namespace {

constexpr double kOffsetGrid = 0.05; // mm; interpolation error well under 0.05 mm

struct Grid {
    Point2 origin;
    int nx{0}, ny{0};
    std::vector<double> values; // distance to source loop, signed by side

    double at(int i, int j) const { return values[static_cast<std::size_t>(j) * nx + i]; }
    Point2 node(int i, int j) const {
        return {origin.x + i * kOffsetGrid, origin.y + j * kOffsetGrid};
    }
};

// Signed field: positive on the side of the loop being offset into.
// For hole loops the material is outside the hole; for the outer loop
// the material is inside it.
Grid build_field(const Loop& loop, double max_d, bool material_inside) {
    Point2 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
    Point2 hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
    for (const Point2& v : loop.vertices) {
        lo.x = std::min(lo.x, v.x);
        lo.y = std::min(lo.y, v.y);
        hi.x = std::max(hi.x, v.x);
        hi.y = std::max(hi.y, v.y);
    }
    const double pad = max_d + 4.0 * kOffsetGrid;
    lo = lo - Point2{pad, pad};
    hi = hi + Point2{pad, pad};

    Grid g;
    g.origin = lo;
    g.nx = static_cast<int>(std::ceil((hi.x - lo.x) / kOffsetGrid)) + 1;
    g.ny = static_cast<int>(std::ceil((hi.y - lo.y) / kOffsetGrid)) + 1;
    g.values.resize(static_cast<std::size_t>(g.nx) * g.ny);

    // Even-odd containment against the single loop.
    const auto in_loop = [&](Point2 p) {
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
    };

    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const Point2 p = g.node(i, j);
            const double d = loop_distance(loop, p);
            const bool mat = material_inside ? in_loop(p) : !in_loop(p);
            g.values[static_cast<std::size_t>(j) * g.nx + i] = mat ? d : -d;
        }
    }
    return g;
}

std::uint64_t corner_key(int i, int j, bool horizontal) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(j)) << 33) |
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 1) |
           (horizontal ? 1 : 0);
}

// Extracts the `level` isocontours of the grid as closed loops
// (marching squares with linear interpolation; no saddles ambiguity
// handling beyond the midpoint rule, adequate at this resolution).
std::vector<std::vector<Point2>> extract_contours(const Grid& g, double level) {
    // Edge id -> interpolated crossing point.
    std::unordered_map<std::uint64_t, Point2> cross;
    // Adjacency: edge id -> up to two linked edge ids.
    std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> links;

    const auto interp = [&](int i0, int j0, int i1, int j1) {
        const double v0 = g.at(i0, j0) - level;
        const double v1 = g.at(i1, j1) - level;
        const double t = v0 / (v0 - v1);
        const Point2 a = g.node(i0, j0);
        const Point2 b = g.node(i1, j1);
        return a + (b - a) * t;
    };

    for (int j = 0; j + 1 < g.ny; ++j) {
        for (int i = 0; i + 1 < g.nx; ++i) {
            const double v00 = g.at(i, j) - level;
            const double v10 = g.at(i + 1, j) - level;
            const double v01 = g.at(i, j + 1) - level;
            const double v11 = g.at(i + 1, j + 1) - level;
            std::vector<std::uint64_t> hits;
            if ((v00 > 0) != (v10 > 0)) {
                const auto k = corner_key(i, j, true);
                if (!cross.count(k)) cross[k] = interp(i, j, i + 1, j);
                hits.push_back(k);
            }
            if ((v10 > 0) != (v11 > 0)) {
                const auto k = corner_key(i + 1, j, false);
                if (!cross.count(k)) cross[k] = interp(i + 1, j, i + 1, j + 1);
                hits.push_back(k);
            }
            if ((v01 > 0) != (v11 > 0)) {
                const auto k = corner_key(i, j + 1, true);
                if (!cross.count(k)) cross[k] = interp(i, j + 1, i + 1, j + 1);
                hits.push_back(k);
            }
            if ((v00 > 0) != (v01 > 0)) {
                const auto k = corner_key(i, j, false);
                if (!cross.count(k)) cross[k] = interp(i, j, i, j + 1);
                hits.push_back(k);
            }
            if (hits.size() == 2) {
                links[hits[0]].push_back(hits[1]);
                links[hits[1]].push_back(hits[0]);
            } else if (hits.size() == 4) {
                // Saddle cell: resolve by the cell-center average.
                const double center = (v00 + v10 + v01 + v11) / 4.0;
                // hits order: bottom, right, top, left
                if ((center > 0) == (v00 > 0)) {
                    links[hits[0]].push_back(hits[1]);
                    links[hits[1]].push_back(hits[0]);
                    links[hits[2]].push_back(hits[3]);
                    links[hits[3]].push_back(hits[2]);
                } else {
                    links[hits[0]].push_back(hits[3]);
                    links[hits[3]].push_back(hits[0]);
                    links[hits[1]].push_back(hits[2]);
                    links[hits[2]].push_back(hits[1]);
                }
            }
        }
    }

    // Chain edges into closed loops. Deterministic order: start from the
    // smallest unvisited key.
    std::vector<std::vector<Point2>> out;
    std::map<std::uint64_t, bool> visited;
    for (const auto& [k, _] : cross) visited[k] = false;
    for (auto& [start, seen] : visited) {
        if (seen) continue;
        std::vector<Point2> contour;
        std::uint64_t cur = start;
        std::uint64_t prev = 0;
        bool has_prev = false;
        while (true) {
            visited[cur] = true;
            contour.push_back(cross[cur]);
            const auto& nbrs = links[cur];
            std::uint64_t next = 0;
            bool found = false;
            for (std::uint64_t nb : nbrs) {
                if (has_prev && nb == prev) continue;
                if (nb == start && contour.size() > 2) {
                    found = false; // closed
                    break;
                }
                if (!visited[nb]) {
                    next = nb;
                    found = true;
                    break;
                }
            }
            if (!found) break;
            prev = cur;
            has_prev = true;
            cur = next;
        }
        if (contour.size() >= 3) out.push_back(std::move(contour));
    }
    return out;
}

// Drops near-duplicate consecutive points, which marching squares can
// emit when a crossing lands on a grid node.
std::vector<Point2> dedupe(const std::vector<Point2>& pts) {
    std::vector<Point2> out;
    for (const Point2& p : pts)
        if (out.empty() || (p - out.back()).norm() > 1e-9) out.push_back(p);
    while (out.size() > 1 && (out.front() - out.back()).norm() <= 1e-9) out.pop_back();
    return out;
}

std::vector<Loop> offset_one(const Loop& source, double dist, bool material_inside) {
    const Grid g = build_field(source, dist, material_inside);
    std::vector<Loop> loops;
    for (auto& contour : extract_contours(g, dist)) {
        auto pts = dedupe(contour);
        if (pts.size() < 3) continue;
        Loop l;
        l.vertices = std::move(pts);
        l.role = LoopRole::Outer; // orientation is irrelevant for toolpaths
        if (l.signed_area() < 0.0) std::reverse(l.vertices.begin(), l.vertices.end());
        loops.push_back(std::move(l));
    }
    return loops;
}

} // namespace

std::vector<Loop> offset_loops(const Domain& domain, OffsetSide side, int ring_index,
                               double d_min, double w_fiber) {
    if (ring_index < 1) throw Error("ring_index must be >= 1");
    const double dist = d_min + (ring_index - 0.5) * w_fiber;

    std::vector<Loop> out;
    if (side == OffsetSide::Inner || side == OffsetSide::AllWalls) {
        for (const Loop& hole : domain.holes) {
            auto rings = offset_one(hole, dist, /*material_inside=*/false);
            out.insert(out.end(), rings.begin(), rings.end());
        }
    }
    if (side == OffsetSide::Outer || side == OffsetSide::AllWalls) {
        auto rings = offset_one(domain.outer, dist, /*material_inside=*/true);
        out.insert(out.end(), rings.begin(), rings.end());
    }
    // A ring that leaves the material region (an inner offset larger
    // than the wall it sits in, or an outer offset crossing a hole)
    // counts as collapsed.
    std::vector<Loop> inside;
    for (Loop& l : out) {
        bool ok = true;
        for (const Point2& v : l.vertices) {
            if (signed_distance(domain, v) < -1e-6) {
                ok = false;
                break;
            }
        }
        if (ok) inside.push_back(std::move(l));
    }
    return inside;
}

} // namespace fiberplan
