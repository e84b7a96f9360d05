#include "fiberplan/geometry.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <unordered_map>
#include <unordered_set>

// Conforming triangulation: Bowyer-Watson incremental Delaunay over the
// subdivided loop vertices plus a hexagonal interior lattice, followed by
// constrained-edge recovery via flips, parity classification against the
// loop constraints, circumcenter refinement of low-quality triangles, and
// validity-guarded Laplacian smoothing with Lawson flip repair.

namespace fiberplan {

namespace {

constexpr int kNone = -1;

struct Tri {
    int v[3];   // vertices, CCW
    int adj[3]; // adj[k] is the neighbor across edge (v[(k+1)%3], v[(k+2)%3])
    bool alive{true};
};

std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

double orient2d(Point2 a, Point2 b, Point2 c) { return (b - a).cross(c - a); }

// > 0 when d is strictly inside the circumcircle of CCW triangle abc.
double incircle(Point2 a, Point2 b, Point2 c, Point2 d) {
    const double adx = a.x - d.x, ady = a.y - d.y;
    const double bdx = b.x - d.x, bdy = b.y - d.y;
    const double cdx = c.x - d.x, cdy = c.y - d.y;
    const double ad = adx * adx + ady * ady;
    const double bd = bdx * bdx + bdy * bdy;
    const double cd = cdx * cdx + cdy * cdy;
    return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) +
           ad * (bdx * cdy - bdy * cdx);
}

bool segments_cross(Point2 a, Point2 b, Point2 c, Point2 d) {
    const double o1 = orient2d(a, b, c), o2 = orient2d(a, b, d);
    const double o3 = orient2d(c, d, a), o4 = orient2d(c, d, b);
    return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) &&
           o1 != 0.0 && o2 != 0.0 && o3 != 0.0 && o4 != 0.0;
}

class Triangulator {
public:
    std::vector<Point2> pts;
    std::vector<Tri> tris;
    std::unordered_map<std::uint64_t, std::string> constraint_tag;
    std::unordered_set<std::uint64_t> constraints;
    int last_alive{0};

    void init_super(Point2 lo, Point2 hi) {
        const Point2 c = (lo + hi) * 0.5;
        const double r = std::max(hi.x - lo.x, hi.y - lo.y) * 4.0 + 1.0;
        super_base_ = static_cast<int>(pts.size());
        pts.push_back(c + Point2{-3.0 * r, -2.0 * r});
        pts.push_back(c + Point2{3.0 * r, -2.0 * r});
        pts.push_back(c + Point2{0.0, 4.0 * r});
        Tri t;
        t.v[0] = super_base_;
        t.v[1] = super_base_ + 1;
        t.v[2] = super_base_ + 2;
        t.adj[0] = t.adj[1] = t.adj[2] = kNone;
        tris.push_back(t);
        last_alive = 0;
    }

    bool is_super(int v) const { return v >= super_base_ && v < super_base_ + 3; }

    int locate(Point2 p) const {
        int cur = tris[last_alive].alive ? last_alive : first_alive();
        int guard = 0;
        const int max_steps = static_cast<int>(tris.size()) * 4 + 64;
        while (guard++ < max_steps) {
            const Tri& t = tris[cur];
            int next = kNone;
            for (int k = 0; k < 3; ++k) {
                const Point2 a = pts[t.v[(k + 1) % 3]];
                const Point2 b = pts[t.v[(k + 2) % 3]];
                if (orient2d(a, b, p) < 0.0) {
                    next = t.adj[k];
                    break;
                }
            }
            if (next == kNone) return cur;
            cur = next;
        }
        throw Error("meshing failure: point location did not terminate");
    }

    // Inserts p, keeping the cavity from crossing constrained edges.
    int insert(Point2 p) {
        const int pi = static_cast<int>(pts.size());
        pts.push_back(p);
        const int t0 = locate(p);

        // Grow the cavity of circumcircle-violating triangles.
        std::vector<int> cavity;
        std::unordered_set<int> in_cavity;
        std::deque<int> queue{t0};
        in_cavity.insert(t0);
        while (!queue.empty()) {
            const int ti = queue.front();
            queue.pop_front();
            cavity.push_back(ti);
            const Tri& t = tris[ti];
            for (int k = 0; k < 3; ++k) {
                const int nb = t.adj[k];
                if (nb == kNone || in_cavity.count(nb)) continue;
                const int ea = t.v[(k + 1) % 3], eb = t.v[(k + 2) % 3];
                if (constraints.count(edge_key(ea, eb))) continue;
                const Tri& n = tris[nb];
                if (incircle(pts[n.v[0]], pts[n.v[1]], pts[n.v[2]], p) > 0.0) {
                    in_cavity.insert(nb);
                    queue.push_back(nb);
                }
            }
        }

        // Boundary edges of the cavity, with outer neighbors.
        struct BoundaryEdge {
            int a, b, outer;
        };
        std::vector<BoundaryEdge> boundary;
        for (int ti : cavity) {
            const Tri& t = tris[ti];
            for (int k = 0; k < 3; ++k) {
                const int nb = t.adj[k];
                if (nb != kNone && in_cavity.count(nb)) continue;
                boundary.push_back({t.v[(k + 1) % 3], t.v[(k + 2) % 3], nb});
            }
        }
        for (int ti : cavity) tris[ti].alive = false;

        // Fan new triangles from p to every boundary edge.
        std::unordered_map<std::uint64_t, std::pair<int, int>> open_edges; // key -> (tri, slot)
        int first_new = kNone;
        for (const auto& be : boundary) {
            Tri t;
            t.v[0] = pi;
            t.v[1] = be.a;
            t.v[2] = be.b;
            t.adj[0] = be.outer;
            t.adj[1] = kNone;
            t.adj[2] = kNone;
            const int ti = alloc(t);
            if (first_new == kNone) first_new = ti;
            if (be.outer != kNone) {
                Tri& o = tris[be.outer];
                for (int k = 0; k < 3; ++k) {
                    const int oa = o.v[(k + 1) % 3], ob = o.v[(k + 2) % 3];
                    if ((oa == be.b && ob == be.a) || (oa == be.a && ob == be.b)) o.adj[k] = ti;
                }
            }
            // Stitch the two fan edges (p, a) and (p, b) with siblings.
            for (int k = 1; k < 3; ++k) {
                const int ea = tris[ti].v[(k + 1) % 3], eb = tris[ti].v[(k + 2) % 3];
                const auto key = edge_key(ea, eb);
                auto it = open_edges.find(key);
                if (it == open_edges.end()) {
                    open_edges.emplace(key, std::make_pair(ti, k));
                } else {
                    tris[ti].adj[k] = it->second.first;
                    tris[it->second.first].adj[it->second.second] = ti;
                    open_edges.erase(it);
                }
            }
        }
        if (!open_edges.empty()) throw Error("meshing failure: cavity not closed");
        last_alive = first_new;
        return pi;
    }

    int alloc(const Tri& t) {
        tris.push_back(t);
        return static_cast<int>(tris.size()) - 1;
    }

    int first_alive() const {
        for (int i = static_cast<int>(tris.size()) - 1; i >= 0; --i)
            if (tris[i].alive) return i;
        throw Error("meshing failure: no triangles");
    }

    // Flips the shared edge of t and its neighbor across slot k.
    // Returns false when the surrounding quad is not convex.
    bool flip(int ti, int k) {
        const int nb = tris[ti].adj[k];
        if (nb == kNone) return false;
        Tri t = tris[ti];
        Tri n = tris[nb];
        const int a = t.v[k];               // apex of t
        const int b = t.v[(k + 1) % 3];     // shared edge
        const int c = t.v[(k + 2) % 3];     // shared edge
        int kn = -1;
        for (int m = 0; m < 3; ++m)
            if (n.v[m] != b && n.v[m] != c) kn = m;
        const int d = n.v[kn]; // apex of neighbor
        // Quad a-b-d-c must be strictly convex for the flip.
        if (orient2d(pts[a], pts[b], pts[d]) <= 0.0) return false;
        if (orient2d(pts[d], pts[c], pts[a]) <= 0.0) return false;

        const int t_ab = t.adj[(k + 2) % 3]; // across edge (a,b)
        const int t_ca = t.adj[(k + 1) % 3]; // across edge (c,a)
        int n_across_bd = kNone, n_across_dc = kNone;
        for (int m = 0; m < 3; ++m) {
            const int ea = n.v[(m + 1) % 3], eb = n.v[(m + 2) % 3];
            if ((ea == b && eb == d) || (ea == d && eb == b)) n_across_bd = n.adj[m];
            if ((ea == d && eb == c) || (ea == c && eb == d)) n_across_dc = n.adj[m];
        }

        Tri t1; // (a, b, d)
        t1.v[0] = a; t1.v[1] = b; t1.v[2] = d;
        t1.adj[0] = n_across_bd; t1.adj[1] = kNone; t1.adj[2] = t_ab;
        Tri t2; // (a, d, c)
        t2.v[0] = a; t2.v[1] = d; t2.v[2] = c;
        t2.adj[0] = n_across_dc; t2.adj[1] = t_ca; t2.adj[2] = kNone;
        tris[ti] = t1;
        tris[nb] = t2;
        tris[ti].adj[1] = nb;
        tris[nb].adj[2] = ti;
        fix_neighbor(t_ab, a, b, ti);
        fix_neighbor(n_across_bd, b, d, ti);
        fix_neighbor(t_ca, c, a, nb);
        fix_neighbor(n_across_dc, d, c, nb);
        last_alive = ti;
        return true;
    }

    void fix_neighbor(int ti, int ea, int eb, int new_nb) {
        if (ti == kNone) return;
        Tri& t = tris[ti];
        for (int k = 0; k < 3; ++k) {
            const int a = t.v[(k + 1) % 3], b = t.v[(k + 2) % 3];
            if ((a == ea && b == eb) || (a == eb && b == ea)) t.adj[k] = new_nb;
        }
    }

    std::unordered_set<std::uint64_t> alive_edge_set() const {
        std::unordered_set<std::uint64_t> set;
        for (const Tri& t : tris) {
            if (!t.alive) continue;
            for (int k = 0; k < 3; ++k) set.insert(edge_key(t.v[(k + 1) % 3], t.v[(k + 2) % 3]));
        }
        return set;
    }

    // Forces segment (a, b) into the triangulation by flipping edges
    // that cross it, then marks it constrained. `edges` is the caller's
    // cached alive-edge set, updated on change.
    void recover_constraint(int a, int b, const std::string& tag,
                            std::unordered_set<std::uint64_t>& edges) {
        const auto key = edge_key(a, b);
        int guard = 0;
        while (!edges.count(key)) {
            if (++guard > 10000) throw Error("meshing failure: constraint recovery stalled");
            bool flipped = false;
            for (std::size_t ti = 0; ti < tris.size() && !flipped; ++ti) {
                if (!tris[ti].alive) continue;
                const Tri& t = tris[ti];
                for (int k = 0; k < 3 && !flipped; ++k) {
                    const int ea = t.v[(k + 1) % 3], eb = t.v[(k + 2) % 3];
                    if (ea == a || ea == b || eb == a || eb == b) continue;
                    if (constraints.count(edge_key(ea, eb))) continue;
                    if (!segments_cross(pts[a], pts[b], pts[ea], pts[eb])) continue;
                    flipped = flip(static_cast<int>(ti), k);
                }
            }
            if (!flipped) throw Error("meshing failure: cannot recover constrained edge");
            edges = alive_edge_set();
        }
        constraints.insert(key);
        if (!tag.empty()) constraint_tag[key] = tag;
    }

private:
    int super_base_{0};
};

struct LoopSampling {
    std::vector<int> node_ids;               // triangulator point ids, loop order
    std::vector<std::string> segment_tags;   // per consecutive pair (wrapping)
};

double jitter(std::uint64_t ix, std::uint64_t iy, double scale) {
    std::uint64_t h = ix * 0x9e3779b97f4a7c15ULL + iy * 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 31;
    h *= 0x94d049bb133111ebULL;
    h ^= h >> 29;
    return (static_cast<double>(h >> 11) * 0x1.0p-53 - 0.5) * scale;
}

} // namespace

Mesh mesh(const Domain& domain, double target_edge) {
    if (target_edge <= 0.0) throw Error("target_edge must be positive");
    domain.validate();

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

    Triangulator tr;

    // Per-loop edge tags from the domain's named ranges.
    std::vector<std::unordered_map<std::size_t, std::string>> edge_tags(domain.loop_count());
    for (const auto& [tag, ranges] : domain.boundary_tags) {
        for (const BoundaryRange& r : ranges) {
            const std::size_t n = domain.loop(r.loop_index).size();
            for (std::size_t k = 0; k < r.edge_count; ++k)
                edge_tags[r.loop_index].emplace((r.first + k) % n, tag);
        }
    }

    // Subdivide loop edges at the target length; nodes stay on the loops.
    std::vector<LoopSampling> samplings(domain.loop_count());
    std::vector<Point2> boundary_pts;
    struct PendingSeg {
        std::size_t from, to; // indices into boundary_pts
        std::string tag;
    };
    std::vector<PendingSeg> pending;
    for (std::size_t li = 0; li < domain.loop_count(); ++li) {
        const Loop& loop = domain.loop(li);
        const std::size_t n = loop.size();
        std::vector<std::size_t> ids;
        std::vector<std::string> seg_tags;
        for (std::size_t e = 0; e < n; ++e) {
            const Point2 a = loop.vertices[e];
            const Point2 b = loop.vertices[(e + 1) % n];
            const int pieces = std::max(1, static_cast<int>(std::ceil((b - a).norm() / target_edge)));
            std::string tag;
            if (auto it = edge_tags[li].find(e); it != edge_tags[li].end()) tag = it->second;
            for (int k = 0; k < pieces; ++k) {
                const double t = static_cast<double>(k) / pieces;
                ids.push_back(boundary_pts.size());
                boundary_pts.push_back(a + (b - a) * t);
                seg_tags.push_back(tag);
            }
        }
        for (std::size_t k = 0; k < ids.size(); ++k)
            pending.push_back({ids[k], ids[(k + 1) % ids.size()], seg_tags[k]});
    }

    tr.init_super(lo - Point2{1.0, 1.0}, hi + Point2{1.0, 1.0});
    std::vector<int> boundary_node_ids(boundary_pts.size());
    for (std::size_t i = 0; i < boundary_pts.size(); ++i)
        boundary_node_ids[i] = tr.insert(boundary_pts[i]);

    // Hexagonal interior lattice, jittered to break cocircular ties.
    const double h = target_edge;
    const double row_dy = h * std::sqrt(3.0) / 2.0;
    std::uint64_t iy = 0;
    for (double y = lo.y + 0.5 * row_dy; y < hi.y; y += row_dy, ++iy) {
        std::uint64_t ix = 0;
        const double x0 = lo.x + ((iy % 2 == 0) ? 0.5 * h : h);
        for (double x = x0; x < hi.x; x += h, ++ix) {
            Point2 p{x + jitter(ix, iy * 2 + 1, h * 1e-4), y + jitter(ix, iy * 2, h * 1e-4)};
            if (signed_distance(domain, p) >= 0.5 * h) tr.insert(p);
        }
    }

    {
        auto edges = tr.alive_edge_set();
        for (const PendingSeg& s : pending)
            tr.recover_constraint(boundary_node_ids[s.from], boundary_node_ids[s.to], s.tag, edges);
    }

    // Parity classification: super-adjacent triangles are outside, and
    // crossing a constrained edge toggles material/void.
    auto classify = [&]() {
        std::vector<int> state(tr.tris.size(), -1); // 0 outside, 1 inside
        std::deque<int> queue;
        for (std::size_t ti = 0; ti < tr.tris.size(); ++ti) {
            if (!tr.tris[ti].alive) continue;
            const Tri& t = tr.tris[ti];
            if (tr.is_super(t.v[0]) || tr.is_super(t.v[1]) || tr.is_super(t.v[2])) {
                if (state[ti] == -1) {
                    state[ti] = 0;
                    queue.push_back(static_cast<int>(ti));
                }
            }
        }
        while (!queue.empty()) {
            const int ti = queue.front();
            queue.pop_front();
            const Tri& t = tr.tris[ti];
            for (int k = 0; k < 3; ++k) {
                const int nb = t.adj[k];
                if (nb == kNone || !tr.tris[nb].alive || state[nb] != -1) continue;
                const bool crossing =
                    tr.constraints.count(edge_key(t.v[(k + 1) % 3], t.v[(k + 2) % 3])) > 0;
                state[nb] = crossing ? 1 - state[ti] : state[ti];
                queue.push_back(nb);
            }
        }
        return state;
    };

    auto tri_min_angle = [&](const Tri& t) {
        double worst = 180.0;
        for (int k = 0; k < 3; ++k) {
            const Point2 a = tr.pts[t.v[k]];
            const Point2 b = tr.pts[t.v[(k + 1) % 3]];
            const Point2 c = tr.pts[t.v[(k + 2) % 3]];
            const Point2 u = (b - a).normalized();
            const Point2 v = (c - a).normalized();
            worst = std::min(worst, std::atan2(std::abs(u.cross(v)), u.dot(v)) * 180.0 / M_PI);
        }
        return worst;
    };
    auto tri_max_edge = [&](const Tri& t) {
        double worst = 0.0;
        for (int k = 0; k < 3; ++k)
            worst = std::max(worst, (tr.pts[t.v[(k + 1) % 3]] - tr.pts[t.v[k]]).norm());
        return worst;
    };

    // Refine low-quality or oversized interior triangles by inserting
    // circumcenters (centroid fallback near the boundary).
    auto refine_pass = [&](int max_rounds) {
        for (int round = 0; round < max_rounds; ++round) {
            const auto state = classify();
            int worst_tri = kNone;
            double worst_angle = 15.0;
            double worst_edge = 1.5 * target_edge;
            for (std::size_t ti = 0; ti < tr.tris.size(); ++ti) {
                if (!tr.tris[ti].alive || state[ti] != 1) continue;
                const Tri& t = tr.tris[ti];
                const double ang = tri_min_angle(t);
                const double edge = tri_max_edge(t);
                if (ang < worst_angle) {
                    worst_tri = static_cast<int>(ti);
                    worst_angle = ang;
                } else if (worst_angle >= 15.0 && edge > worst_edge) {
                    worst_tri = static_cast<int>(ti);
                    worst_edge = edge;
                }
            }
            if (worst_tri == kNone) return true;
            const Tri& t = tr.tris[worst_tri];
            const Point2 a = tr.pts[t.v[0]], b = tr.pts[t.v[1]], c = tr.pts[t.v[2]];
            const double d = 2.0 * ((b - a).cross(c - a));
            const Point2 ab = b - a, ac = c - a;
            const double ab2 = ab.squared_norm(), ac2 = ac.squared_norm();
            const Point2 cc = a + Point2{ac.y * ab2 - ab.y * ac2, ab.x * ac2 - ac.x * ab2} / d;
            if (signed_distance(domain, cc) >= 0.35 * target_edge) {
                tr.insert(cc);
            } else {
                const Point2 g = (a + b + c) / 3.0;
                if (signed_distance(domain, g) >= 0.3 * target_edge)
                    tr.insert(g);
                else
                    return false; // degenerate pocket; give up on it
            }
        }
        return false;
    };
    refine_pass(200);

    // Smoothing: move interior nodes toward the average of their
    // neighbors, rejecting moves that invert an incident triangle,
    // then restore the Delaunay criterion with Lawson flips.
    std::unordered_set<int> boundary_set(boundary_node_ids.begin(), boundary_node_ids.end());
    for (int round = 0; round < 4; ++round) {
        std::unordered_map<int, std::pair<Point2, int>> accum;
        std::unordered_map<int, std::vector<int>> incident;
        for (std::size_t ti = 0; ti < tr.tris.size(); ++ti) {
            const Tri& t = tr.tris[ti];
            if (!t.alive) continue;
            for (int k = 0; k < 3; ++k) {
                const int v = t.v[k];
                if (tr.is_super(v) || boundary_set.count(v)) continue;
                auto& [sum, cnt] = accum[v];
                sum += tr.pts[t.v[(k + 1) % 3]];
                sum += tr.pts[t.v[(k + 2) % 3]];
                cnt += 2;
                incident[v].push_back(static_cast<int>(ti));
            }
        }
        for (const auto& [v, sc] : accum) {
            const Point2 target = sc.first / static_cast<double>(sc.second);
            const Point2 old = tr.pts[v];
            tr.pts[v] = target;
            bool ok = signed_distance(domain, target) > 0.0;
            if (ok) {
                for (const int ti : incident[v]) {
                    const Tri& t = tr.tris[ti];
                    if (orient2d(tr.pts[t.v[0]], tr.pts[t.v[1]], tr.pts[t.v[2]]) <= 0.0) {
                        ok = false;
                        break;
                    }
                }
            }
            if (!ok) tr.pts[v] = old;
        }
        // Lawson pass: flip non-constrained edges violating Delaunay.
        for (int pass = 0; pass < 8; ++pass) {
            bool any = false;
            for (std::size_t ti = 0; ti < tr.tris.size(); ++ti) {
                if (!tr.tris[ti].alive) continue;
                for (int k = 0; k < 3; ++k) {
                    const Tri& t = tr.tris[ti];
                    const int nb = t.adj[k];
                    if (nb == kNone || !tr.tris[nb].alive) continue;
                    const int ea = t.v[(k + 1) % 3], eb = t.v[(k + 2) % 3];
                    if (tr.constraints.count(edge_key(ea, eb))) continue;
                    const Tri& n = tr.tris[nb];
                    int d = -1;
                    for (int m = 0; m < 3; ++m)
                        if (n.v[m] != ea && n.v[m] != eb) d = n.v[m];
                    if (incircle(tr.pts[t.v[0]], tr.pts[t.v[1]], tr.pts[t.v[2]], tr.pts[d]) > 0.0)
                        any |= tr.flip(static_cast<int>(ti), k);
                }
            }
            if (!any) break;
        }
    }

    // Smoothing can spoil an angle near the clearance band; clean up.
    refine_pass(100);

    // Emit the interior triangles, renumbering used nodes.
    const auto state = classify();
    Mesh out;
    std::vector<int> remap(tr.pts.size(), kNone);
    for (std::size_t ti = 0; ti < tr.tris.size(); ++ti) {
        if (!tr.tris[ti].alive || state[ti] != 1) continue;
        const Tri& t = tr.tris[ti];
        std::array<int, 3> tri;
        for (int k = 0; k < 3; ++k) {
            const int v = t.v[k];
            if (remap[v] == kNone) {
                remap[v] = static_cast<int>(out.nodes.size());
                out.nodes.push_back(tr.pts[v]);
            }
            tri[k] = remap[v];
        }
        const Point2 a = out.nodes[tri[0]], b = out.nodes[tri[1]], c = out.nodes[tri[2]];
        if (orient2d(a, b, c) < 0.0) std::swap(tri[1], tri[2]);
        out.triangles.push_back(tri);
    }
    for (const PendingSeg& s : pending) {
        int a = remap[boundary_node_ids[s.from]];
        int b = remap[boundary_node_ids[s.to]];
        if (a == kNone || b == kNone) throw Error("meshing failure: boundary node dropped");
        out.boundary_edges.push_back({a, b, s.tag});
    }

    if (out.triangles.empty()) throw Error("meshing failure: empty triangulation");
    const double relerr = std::abs(out.total_area() - domain.area()) / domain.area();
    if (relerr > 1e-6) throw Error("meshing failure: area mismatch");
    return out;
}

} // namespace fiberplan
