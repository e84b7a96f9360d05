#include "fiberplan/spline.hpp"

#include <Eigen/Dense>

#include <vector>

// Global cubic B-spline interpolation: chord-length parameters, knot
// vector by parameter averaging (clamped ends), control points from the
// banded collocation system, evaluation by de Boor recursion.

namespace fiberplan {

namespace {

constexpr int kDegree = 3;

// B-spline basis functions N_{i,p}(u) for the knot span containing u;
// returns the first index and p+1 values.
void basis_functions(const std::vector<double>& knots, double u, int span,
                     double out[kDegree + 1]) {
    double left[kDegree + 1], right[kDegree + 1];
    out[0] = 1.0;
    for (int j = 1; j <= kDegree; ++j) {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double tmp = out[r] / (right[r + 1] + left[j - r]);
            out[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        out[j] = saved;
    }
}

int find_span(const std::vector<double>& knots, int n_ctrl, double u) {
    if (u >= knots[n_ctrl]) return n_ctrl - 1;
    int lo = kDegree, hi = n_ctrl;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (u < knots[mid])
            hi = mid;
        else
            lo = mid;
    }
    return lo;
}

} // namespace

FiberPath upsample(const FiberPath& input) {
    if (input.vertices.size() < 2) throw Error("upsample needs at least 2 vertices");
    // The optimizer parks vertices nearly on top of each other when it
    // sheds path length; a cubic forced through such a pair between
    // ordinary chords overshoots wildly. Merge chords far below the
    // mean before fitting (the interior vertex of the pair carries no
    // geometry). Endpoints always survive.
    double mean_chord = 0.0;
    for (std::size_t i = 1; i < input.vertices.size(); ++i)
        mean_chord += (input.vertices[i] - input.vertices[i - 1]).norm();
    mean_chord /= static_cast<double>(input.vertices.size() - 1);
    const double merge_below = std::max(1e-9, 0.05 * mean_chord);

    FiberPath path;
    for (std::size_t i = 0; i < input.vertices.size(); ++i) {
        const Point2& v = input.vertices[i];
        if (path.vertices.empty() || (v - path.vertices.back()).norm() >= merge_below ||
            i + 1 == input.vertices.size())
            path.vertices.push_back(v);
    }
    if (path.vertices.size() >= 2 &&
        (path.vertices.back() - path.vertices[path.vertices.size() - 2]).norm() < 1e-9)
        path.vertices.erase(path.vertices.end() - 2);
    const std::size_t n = path.vertices.size();
    if (n < 2) throw Error("upsample needs at least 2 distinct vertices");

    FiberPath out;
    if (n < 4) {
        // Linear midpoints.
        for (std::size_t i = 0; i < n; ++i) {
            out.vertices.push_back(path.vertices[i]);
            if (i + 1 < n)
                out.vertices.push_back((path.vertices[i] + path.vertices[i + 1]) * 0.5);
        }
        return out;
    }

    // Chord-length parameters in [0, 1], with a floor per chord so
    // near-coincident vertices cannot collapse the parameterization.
    std::vector<double> t(n, 0.0);
    double raw_total = 0.0;
    for (std::size_t i = 1; i < n; ++i)
        raw_total += (path.vertices[i] - path.vertices[i - 1]).norm();
    const double floor = 1e-4 * raw_total / static_cast<double>(n);
    for (std::size_t i = 1; i < n; ++i)
        t[i] = t[i - 1] +
               std::max((path.vertices[i] - path.vertices[i - 1]).norm(), floor);
    const double total = t.back();
    for (double& v : t) v /= total;

    // Clamped knot vector by parameter averaging.
    std::vector<double> knots(n + kDegree + 1);
    for (int i = 0; i <= kDegree; ++i) {
        knots[i] = 0.0;
        knots[n + i] = 1.0;
    }
    for (std::size_t j = 1; j + kDegree < n; ++j) {
        double sum = 0.0;
        for (std::size_t i = j; i < j + kDegree; ++i) sum += t[i];
        knots[j + kDegree] = sum / kDegree;
    }

    // Collocation system N * C = Q.
    Eigen::MatrixXd N = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        const int span = find_span(knots, static_cast<int>(n), t[r]);
        double vals[kDegree + 1];
        basis_functions(knots, t[r], span, vals);
        for (int k = 0; k <= kDegree; ++k) N(r, span - kDegree + k) = vals[k];
    }
    Eigen::MatrixXd Q(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        Q(i, 0) = path.vertices[i].x;
        Q(i, 1) = path.vertices[i].y;
    }
    const Eigen::MatrixXd C = N.partialPivLu().solve(Q);

    const auto eval = [&](double u) {
        const int span = find_span(knots, static_cast<int>(n), u);
        double vals[kDegree + 1];
        basis_functions(knots, u, span, vals);
        Point2 p{0.0, 0.0};
        for (int k = 0; k <= kDegree; ++k) {
            const int ci = span - kDegree + k;
            p += Point2{C(ci, 0), C(ci, 1)} * vals[k];
        }
        return p;
    };

    for (std::size_t i = 0; i < n; ++i) {
        out.vertices.push_back(path.vertices[i]); // originals kept exactly
        if (i + 1 < n) out.vertices.push_back(eval((t[i] + t[i + 1]) * 0.5));
    }
    return out;
}

} // namespace fiberplan
