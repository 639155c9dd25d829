#pragma once

#include <functional>

#include <Eigen/Core>

namespace spinlets {

/// Value and gradient of the function being maximized.
using ObjectiveFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& gradient)>;

struct LbfgsOptions {
    int memory = 100;
    int max_iters = 1000;
    double grad_tol = 1e-8;
    /// Armijo sufficient-increase constant.
    double armijo = 1e-4;
    int max_backtracks = 50;
    /// A unit step is extended by doubling while the new slope along the direction
    /// exceeds this fraction of the initial slope.
    double expand_slope = 0.1;
    /// Optional initial inverse-curvature map r -> H0 r (H0 approximates the inverse
    /// Hessian of the negated objective). Defaults to a scaled identity.
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> precondition;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double value = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;           // gradient norm below tolerance
    bool line_search_failed = false;  // no step gave sufficient increase
};

/// Limited-memory BFGS ascent with backtracking; a step is accepted only when it
/// increases the objective, so the returned value is never below the initial one.
LbfgsResult lbfgs_maximize(const ObjectiveFn& objective, Eigen::VectorXd init, const LbfgsOptions& options = {});

}  // namespace spinlets
