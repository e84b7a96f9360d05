#pragma once

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <vector>

namespace fiberplan {

// Dense BFGS with strong-Wolfe line search. Accepted iterates are
// non-increasing in objective value; terminates on the gradient
// infinity norm, the iteration cap, or line-search failure (in which
// case the best iterate so far is returned, flagged).
struct BfgsOptions {
    int max_iterations{500};
    double gradient_tolerance{3e-9}; // infinity norm
    double c1{1e-4};
    double c2{0.9};
    // Infinity-norm cap on the displacement of a single accepted
    // iterate. Objectives whose landscape has a short feature scale
    // (the fiber-width Gaussian) need steps bounded near that scale or
    // the line search tunnels out of the local basin. At the cap the
    // curvature condition is waived; sufficient decrease still holds.
    double max_step{std::numeric_limits<double>::infinity()};
};

struct BfgsResult {
    Eigen::VectorXd x;
    double value{0.0};
    int iterations{0};
    bool converged{false};
    bool line_search_failed{false};
    std::vector<double> trace; // accepted objective values, including f(x0)
};

using ObjectiveFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd* grad)>;

BfgsResult bfgs_minimize(const ObjectiveFn& fn, Eigen::VectorXd x0, const BfgsOptions& opts);

} // namespace fiberplan
