#include "fiberplan/bfgs.hpp"

#include <cmath>
#include <limits>

// Quasi-Newton minimizer: inverse-Hessian BFGS update with a
// bracketing/zoom strong-Wolfe line search (Nocedal & Wright alg. 3.5/3.6).

namespace fiberplan {

namespace {

struct LinePoint {
    double a;  // step
    double f;  // value
    double g;  // directional derivative
};

class LineSearch {
public:
    LineSearch(const ObjectiveFn& fn, const Eigen::VectorXd& x, const Eigen::VectorXd& dir,
               double f0, double g0, double c1, double c2, double max_step)
        : fn_(fn), x_(x), dir_(dir), f0_(f0), g0_(g0), c1_(c1), c2_(c2) {
        g_trial_.resize(x.size()); // objectives may write elementwise
        const double dir_inf = dir.lpNorm<Eigen::Infinity>();
        if (std::isfinite(max_step) && dir_inf > 0.0) a_cap_ = max_step / dir_inf;
    }

    // Returns the accepted step, or 0 on failure. Fills f/grad/x at the
    // accepted point.
    double run(double& f_out, Eigen::VectorXd& g_out, Eigen::VectorXd& x_out) {
        double a_prev = 0.0, f_prev = f0_, g_prev = g0_;
        double a = std::min(1.0, a_cap_);
        for (int iter = 0; iter < 25; ++iter) {
            const LinePoint p = eval(a);
            if (p.f > f0_ + c1_ * a * g0_ || (iter > 0 && p.f >= f_prev)) {
                return zoom({a_prev, f_prev, g_prev}, p, f_out, g_out, x_out);
            }
            if (std::abs(p.g) <= -c2_ * g0_) {
                accept(p, f_out, g_out, x_out);
                return p.a;
            }
            if (p.g >= 0.0) {
                return zoom(p, {a_prev, f_prev, g_prev}, f_out, g_out, x_out);
            }
            if (a >= a_cap_ * (1.0 - 1e-12)) {
                // Step cap reached with sufficient decrease: accept.
                accept(p, f_out, g_out, x_out);
                return p.a;
            }
            a_prev = p.a;
            f_prev = p.f;
            g_prev = p.g;
            a = std::min(a * 2.0, a_cap_);
        }
        return 0.0;
    }

private:
    LinePoint eval(double a) {
        x_trial_ = x_ + a * dir_;
        const double f = fn_(x_trial_, &g_trial_);
        return {a, f, g_trial_.dot(dir_)};
    }

    void accept(const LinePoint& p, double& f_out, Eigen::VectorXd& g_out,
                Eigen::VectorXd& x_out) {
        x_trial_ = x_ + p.a * dir_;
        f_out = fn_(x_trial_, &g_trial_);
        g_out = g_trial_;
        x_out = x_trial_;
    }

    double zoom(LinePoint lo, LinePoint hi, double& f_out, Eigen::VectorXd& g_out,
                Eigen::VectorXd& x_out) {
        for (int iter = 0; iter < 30; ++iter) {
            if (std::abs(hi.a - lo.a) < 1e-14 * std::max(1.0, std::abs(lo.a))) break;
            // Bisection with a quadratic-interpolation bias.
            double a = 0.5 * (lo.a + hi.a);
            const double denom = 2.0 * (hi.f - lo.f - lo.g * (hi.a - lo.a));
            if (std::abs(denom) > 1e-300) {
                const double quad = lo.a - lo.g * (hi.a - lo.a) * (hi.a - lo.a) / denom;
                const double span = std::abs(hi.a - lo.a);
                if (std::isfinite(quad) && quad > std::min(lo.a, hi.a) + 0.1 * span &&
                    quad < std::max(lo.a, hi.a) - 0.1 * span)
                    a = quad;
            }
            const LinePoint p = eval(a);
            if (p.f > f0_ + c1_ * a * g0_ || p.f >= lo.f) {
                hi = p;
            } else {
                if (std::abs(p.g) <= -c2_ * g0_) {
                    accept(p, f_out, g_out, x_out);
                    return p.a;
                }
                if (p.g * (hi.a - lo.a) >= 0.0) hi = lo;
                lo = p;
            }
        }
        // Fall back to the best sufficient-decrease point found.
        if (lo.a > 0.0 && lo.f <= f0_ + c1_ * lo.a * g0_) {
            accept(lo, f_out, g_out, x_out);
            return lo.a;
        }
        return 0.0;
    }

    const ObjectiveFn& fn_;
    const Eigen::VectorXd& x_;
    const Eigen::VectorXd& dir_;
    Eigen::VectorXd x_trial_, g_trial_;
    double f0_, g0_, c1_, c2_;
    double a_cap_{std::numeric_limits<double>::infinity()};
};

} // namespace

BfgsResult bfgs_minimize(const ObjectiveFn& fn, Eigen::VectorXd x0, const BfgsOptions& opts) {
    const auto dim = x0.size();
    BfgsResult res;
    res.x = std::move(x0);

    Eigen::VectorXd grad(dim);
    res.value = fn(res.x, &grad);
    res.trace.push_back(res.value);

    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(dim, dim);
    bool first_update = true;

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        if (grad.lpNorm<Eigen::Infinity>() <= opts.gradient_tolerance) {
            res.converged = true;
            break;
        }
        Eigen::VectorXd dir = -(H * grad);
        double slope = dir.dot(grad);
        if (!(slope < 0.0)) {
            // Reset a corrupted Hessian approximation.
            H.setIdentity();
            dir = -grad;
            slope = dir.dot(grad);
            if (!(slope < 0.0)) break;
        }

        double f_new = 0.0;
        Eigen::VectorXd g_new(dim), x_new(dim);
        LineSearch ls(fn, res.x, dir, res.value, slope, opts.c1, opts.c2, opts.max_step);
        const double step = ls.run(f_new, g_new, x_new);
        if (step <= 0.0) {
            res.line_search_failed = true;
            break;
        }

        const Eigen::VectorXd s = x_new - res.x;
        const Eigen::VectorXd y = g_new - grad;
        const double sy = s.dot(y);
        if (sy > 1e-14 * s.norm() * y.norm()) {
            if (first_update) {
                H *= sy / y.squaredNorm();
                first_update = false;
            }
            // Rank-two inverse update, kept at O(n^2).
            const Eigen::VectorXd Hy = H * y;
            const double yHy = y.dot(Hy);
            H.noalias() += ((sy + yHy) / (sy * sy)) * (s * s.transpose());
            H.noalias() -= (Hy * s.transpose() + s * Hy.transpose()) / sy;
        }

        res.x = x_new;
        res.value = f_new;
        grad = g_new;
        res.trace.push_back(res.value);
        res.iterations = iter + 1;
    }
    if (grad.lpNorm<Eigen::Infinity>() <= opts.gradient_tolerance) res.converged = true;
    return res;
}

} // namespace fiberplan
